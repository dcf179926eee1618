import numpy as np
import pytest

from isodrums import CoefficientField, FormSpec, ReferenceTriangle, builtin_layout, glued_problem, refine_uniform

SKEW = np.array([[2.0, 1.0], [0.0, 1.5]])


@pytest.fixture(scope="session")
def tri():
    return ReferenceTriangle()


@pytest.fixture(scope="session")
def layouts():
    return builtin_layout("omega1"), builtin_layout("omega2")


@pytest.fixture(scope="session")
def mesh2(tri):
    return refine_uniform(tri, 2)


@pytest.fixture(scope="session")
def skew():
    return CoefficientField(SKEW)


@pytest.fixture(scope="session")
def problems(tri, layouts):
    """Cache of glued pencils keyed by (bc, beta, coeff name, level)."""
    cache = {}

    def get(bc="neumann", level=2, beta=0.0, coeff="I"):
        key = (bc, beta, coeff, level)
        if key not in cache:
            coef = CoefficientField.identity() if coeff == "I" else CoefficientField(SKEW)
            fs = FormSpec(bc, beta, coef)
            cache[key] = tuple(glued_problem(lay, tri, level, fs) for lay in layouts)
        return cache[key]

    return get


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
