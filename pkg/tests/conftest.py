import numpy as np
import pytest
from hypothesis import settings

from icl.distributions import StepCdf
from icl.space import FiniteSpace, Preorder

settings.register_profile("repo", max_examples=60, deadline=None)
settings.load_profile("repo")


@pytest.fixture
def chain3():
    """Three atoms in a chain, uniform, with y2 < y1 < y3."""
    return FiniteSpace.uniform(3), Preorder.chain(3), np.array([1.0, 0.0, 2.0])


@pytest.fixture
def vee3():
    """Atom 0 below atoms 1 and 2, which are incomparable."""
    return FiniteSpace.uniform(3), Preorder.from_edges(3, [(0, 1), (0, 2)]), np.array([2.0, 0.0, 1.0])


def half_half(a=0.0, b=1.0):
    return StepCdf.from_masses([a, b], [0.5, 0.5])


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion and assert it."""

    def record(number: int, title: str, ok: bool, detail: str = ""):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else "")
        _VERDICTS.append((number, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_VERDICTS):
            terminalreporter.write_line(line)
