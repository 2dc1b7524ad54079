"""Exception hierarchy shared by every module."""

from __future__ import annotations


class KGraphError(ValueError):
    """Base class; subclasses carry a stable ``code`` used in reports."""

    code = "KGraphError"


def _make(name: str, doc: str) -> type:
    return type(name, (KGraphError,), {"code": name, "__doc__": doc})


DanglingReference = _make("DanglingReference", "An edge or square cites an unknown id.")
DuplicateSquare = _make("DuplicateSquare", "Two squares share a side.")
IncompleteBijection = _make("IncompleteBijection", "Some composable pair has no square.")
MalformedGraph = _make("MalformedGraph", "Graph data is structurally invalid.")
ColorOutOfRange = _make("ColorOutOfRange", "Color index outside 1..k.")
NotComposable = _make("NotComposable", "Source and range do not match.")
InvalidPermutation = _make("InvalidPermutation", "Parameter is not a permutation.")
UnknownLibraryGraph = _make("UnknownLibraryGraph", "No library entry with that name.")
NotStronglyConnected = _make("NotStronglyConnected", "Graph is not strongly connected.")
NoCommonEigenvector = _make("NoCommonEigenvector", "Perron vector fails for some color.")
UnsupportedGraphForKind = _make("UnsupportedGraphForKind", "Measure kind not defined on this graph.")
PathNotInGraph = _make("PathNotInGraph", "Path does not belong to the graph.")
ZeroMassBase = _make("ZeroMassBase", "Base cylinder has zero mass.")
RangeMismatch = _make("RangeMismatch", "Range of point does not match source of path.")
GraphMismatch = _make("GraphMismatch", "Objects live on different graphs.")
InvalidMeasure = _make("InvalidMeasure", "Measure parameters violate their invariants.")
LevelDecrease = _make("LevelDecrease", "Refinement target is coarser than the input.")
UnsupportedMeasure = _make("UnsupportedMeasure", "Measure cannot drive the operators.")
SourceMismatch = _make("SourceMismatch", "Path source differs from the stage vertex.")
NotUnimodular = _make("NotUnimodular", "Gauge point has an entry off the unit circle.")
TailMismatch = _make("TailMismatch", "Shifted tails of the two points differ.")
BadChoice = _make("BadChoice", "Chosen point does not start at its vertex.")
OnBoundary = _make("OnBoundary", "Point is not interior to a piece.")
DegeneratePiece = _make("DegeneratePiece", "Derivative vanishes on a piece.")
MalformedRegion = _make("MalformedRegion", "Region or map data is invalid.")
InvalidInput = _make("InvalidInput", "Input system failed validation.")
