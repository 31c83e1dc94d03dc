import os

import numpy as np
import pytest
from hypothesis import strategies as st

from tribody.core import Masses, PhaseState, parse_state_literal
from tribody.orbits import read_library

DATA = os.path.join(os.path.dirname(__file__), "data")

ST1_LITERAL = "1 1 1 / 1 0 0 1 -1 -1 / 1 1 -0.2 -1.4 -0.8 0.4"


@pytest.fixture
def st1():
    """Hand-checkable feasible state: I=4, K=4.8, L=0, sum q.p=0."""
    return parse_state_literal(ST1_LITERAL)


@pytest.fixture
def st2():
    """Same positions as ST-1 with all momenta parallel to (1, 1)."""
    m = Masses(1, 1, 1)
    return m, PhaseState(0.0, [[1, 0], [0, 1], [-1, -1]], [[1, 1], [1, 1], [-2, -2]])


@pytest.fixture(scope="session")
def orbit_library():
    recs = read_library(os.path.join(DATA, "orbits.txt"))
    return {r.alpha: r for r in recs}


def freefall_state():
    m = Masses(1, 1, 1)
    q = np.array([[1.0, 0.0], [-0.3, 0.8], [-0.5, -0.6]])
    q -= q.mean(axis=0)
    return m, PhaseState(0.0, q, np.zeros((3, 2)))


masses_st = st.tuples(*[st.floats(0.1, 10.0)] * 3).map(Masses.of)
seeds = st.integers(0, 2**32 - 1)
