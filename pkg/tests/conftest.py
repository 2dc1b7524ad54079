import pytest

from kgraphs import standard_library


@pytest.fixture(scope="session")
def fefe():
    return standard_library("one_vertex_fefe")


@pytest.fixture(scope="session")
def lattice():
    return standard_library("three_vertex_eight_edge")


@pytest.fixture(scope="session")
def star():
    return standard_library("lambda_2N", {"N": 1, "perm": [2, 1]})


@pytest.fixture(scope="session")
def star4():
    return standard_library("lambda_2N", {"N": 2, "perm": [2, 3, 1, 4]})


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, tuple[str, bool, float]] = {}


@pytest.fixture
def record_criterion():
    def record(number: int, title: str, passed: bool, seconds: float) -> None:
        ACCEPTANCE[number] = (title, passed, seconds)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, secs = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title} ({secs:.1f}s)")
