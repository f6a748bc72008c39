import numpy as np
import pytest

from scale_equate.ingest import ItemDef, ResponseMatrix, ScaleDefinition
from scale_equate.simulate import SimSpec, simulate_responses

FIES_CODES = ("WORRIED", "HEALTHY", "FEWFOOD", "SKIPPED",
              "ATELESS", "RUNOUT", "HUNGRY", "WHLDAY")


@pytest.fixture
def fies_scale():
    return ScaleDefinition("FIES", tuple(ItemDef(c, unique_a_priori=(c == "WHLDAY"))
                                         for c in FIES_CODES))


@pytest.fixture(scope="session")
def sim8():
    """8 items evenly spaced in [-2, 2], N = 5000, seed 11."""
    b = np.linspace(-2, 2, 8)
    return b, simulate_responses(SimSpec(b, 5000, seed=11))


def matrix(rows, weights=None, codes=None):
    rows = np.asarray(rows, dtype=float)
    codes = codes or tuple(f"I{j}" for j in range(rows.shape[1]))
    w = np.ones(rows.shape[0]) if weights is None else weights
    return ResponseMatrix(codes, rows, w)


# -- acceptance summary: one PASS/FAIL line per criterion -----------------

_acceptance: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        outcome = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _acceptance[name] = outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance.items():
        terminalreporter.write_line(f"[{outcome}] {name}")
