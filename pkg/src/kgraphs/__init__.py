"""Finite higher-rank graphs, measures on their path spaces, and checked representations."""

from .errors import KGraphError
from .inductive import (
    GaugePoint,
    InductiveModel,
    direct_sum_nonzero_check,
    gauge_check,
    prefixing_map_agreement,
    shift_tail_intertwiner,
    verify_ck_inductive,
)
from .kgraph import (
    Degree,
    Edge,
    InfinitePathSpec,
    KGraph,
    Path,
    Square,
    compose,
    infinite_path,
    lambda_min,
    normal_form,
    path_from_edges,
    path_prefix,
    paths_of_degree,
    product_graph,
    structural_flags,
    validate_kgraph,
    vertex_matrix,
)
from .l2rep import L2Representation, StepFunction, verify_ck_l2
from .library import standard_library
from .measures import (
    GammaSequence,
    KakutaniMeasure,
    MarkovMeasure,
    PFMeasure,
    StarMarkovMeasure,
    StarProductMeasure,
    check_kolmogorov,
    equivalence_verdict,
    hellinger_profile,
    measure_from_spec,
    pf_data,
    rn_at_point,
)
from .sbfs import (
    GeometricSBFS,
    Region,
    load_sbfs,
    product_sbfs,
    rn_derivative_geometric,
    validate_sbfs_conditions,
)

__all__ = [
    "Degree",
    "Edge",
    "GammaSequence",
    "GaugePoint",
    "GeometricSBFS",
    "InductiveModel",
    "InfinitePathSpec",
    "KGraph",
    "KGraphError",
    "KakutaniMeasure",
    "L2Representation",
    "MarkovMeasure",
    "PFMeasure",
    "Path",
    "Region",
    "Square",
    "StarMarkovMeasure",
    "StarProductMeasure",
    "StepFunction",
    "check_kolmogorov",
    "compose",
    "direct_sum_nonzero_check",
    "equivalence_verdict",
    "gauge_check",
    "hellinger_profile",
    "infinite_path",
    "lambda_min",
    "load_sbfs",
    "measure_from_spec",
    "normal_form",
    "path_from_edges",
    "path_prefix",
    "paths_of_degree",
    "pf_data",
    "prefixing_map_agreement",
    "product_graph",
    "product_sbfs",
    "rn_at_point",
    "rn_derivative_geometric",
    "shift_tail_intertwiner",
    "standard_library",
    "structural_flags",
    "validate_kgraph",
    "validate_sbfs_conditions",
    "verify_ck_inductive",
    "verify_ck_l2",
    "vertex_matrix",
]
