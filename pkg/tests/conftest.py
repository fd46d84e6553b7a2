import pytest

from chipletdse.catalog import Composition, InterposerSpec, load_catalog
from chipletdse.optimizer.problem import Problem
from chipletdse.workload import load_workload

BASELINE_SURFACE = (2, 27, 2, 27, 15)  # 400 mm2, 1813 TOPS


@pytest.fixture(scope="session")
def catalog():
    return load_catalog()


@pytest.fixture(scope="session")
def tiny_problem():
    """2x2 glass Mesh with two chiplet types and the 3-layer workload."""
    cat = load_catalog().subset(["Standard", "Adder"])
    return Problem(cat, load_workload("wl_tiny"), InterposerSpec.preset("Glass", 4.0), "Mesh", 2, 2)


@pytest.fixture(scope="session")
def tiny_alpha():
    return Composition.of([2, 2])


# acceptance verdicts, printed once at the end of the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
