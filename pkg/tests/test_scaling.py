import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings

from tribody.core import (
    PhaseState, derived_quantities, feasible_state, project_constraints, random_state, wedge,
)
from tribody.dynamics import integrate
from tribody.errors import HypothesisViolated, NotDualTriplet, TripleCollision
from tribody.geometry import max_abs
from tribody.potential import PAIRS, PotentialSpec
from tribody.scaling import (
    congruent_triangles, general_area_residual, scale_state, scaled_similarity_report,
)

from conftest import freefall_state, masses_st, seeds


@pytest.fixture(scope="module")
def freefall():
    m, s = freefall_state()
    return integrate(s, PotentialSpec(-1.0, m), (0.0, 3.0))


def test_st1_scaled_state(st1):
    m, s = st1
    sc = scale_state(s, m)
    npt.assert_allclose(sc.qt, s.q / 2, rtol=1e-15)
    npt.assert_allclose(sc.vt, s.p / 2, rtol=1e-15)
    npt.assert_allclose(sc.Kt, 1.2, rtol=1e-15)
    assert max_abs(scaled_similarity_report(sc, m)) < 1e-12


def test_st1_general_area_identity(st1):
    m, s = st1
    for pair in PAIRS:
        assert abs(general_area_residual(s, m, pair)) < 1e-14


def test_freefall_initial_instant_is_degenerate():
    m, s = freefall_state()
    sc = scale_state(s, m)
    assert np.all(sc.vt == 0)
    with pytest.raises(NotDualTriplet):
        scaled_similarity_report(sc, m)


def test_scaling_undefined_at_triple_collision():
    m, _ = freefall_state()
    with pytest.raises(TripleCollision, match="triple collision"):
        scale_state(PhaseState(0, np.zeros((3, 2)), np.ones((3, 2))), m)


def test_area_identity_requires_zero_angular_momentum(st1):
    m, s = st1
    p = s.p + np.array([[0, 1], [0, -1], [0, 0]])
    with pytest.raises(HypothesisViolated, match="zero angular momentum required"):
        general_area_residual(PhaseState(0, s.q, p), m, (0, 1))


def test_freefall_scaled_identities(freefall):
    m = freefall.masses
    for t in np.linspace(0.03, freefall.t_end, 100):
        s = freefall.state_at(t)
        sc = scale_state(s, m)
        assert max(abs(general_area_residual(s, m, pair, relative=True)) for pair in PAIRS) < 1e-9
        assert max_abs(scaled_similarity_report(sc, m, hyp_tol=1e-9)) < 1e-9


def test_scaled_invariants_at_integrator_nodes(freefall):
    # the scaled outer sum is L / I exactly, so it carries the integrator's L drift
    m = freefall.masses
    for s in freefall.samples[1:]:
        inv = scale_state(s, m).invariant_residuals(m)
        d = derived_quantities(s, m)
        npt.assert_allclose(inv.pop("outer"), d.L / d.I, rtol=1e-3, atol=1e-14)
        assert max(abs(v) for v in inv.values()) < 1e-11


@settings(max_examples=200, deadline=None)
@given(seeds, masses_st)
def test_scaled_invariants_on_zero_angular_momentum_states(seed, masses):
    s = project_constraints(random_state(seed, masses), masses, zero_dIdt=False)
    inv = scale_state(s, masses).invariant_residuals(masses)
    assert max(abs(v) for v in inv.values()) < 1e-11


@settings(max_examples=100, deadline=None)
@given(seeds, masses_st)
def test_constant_moment_reduces_to_area_relation(seed, masses):
    s = feasible_state(seed, masses)
    d = derived_quantities(s, masses)
    v = s.p / masses.array[:, None]
    for i, j in PAIRS:
        reduced = d.K * d.I * (wedge(s.q[i], s.q[j]) / d.I + wedge(v[i], v[j]) / d.K)
        npt.assert_allclose(general_area_residual(s, masses, (i, j)), reduced, atol=1e-12 * d.K * d.I)


@settings(max_examples=100, deadline=None)
@given(seeds, masses_st)
def test_stationary_moment_gives_plain_velocity(seed, masses):
    s = feasible_state(seed, masses)
    sc = scale_state(s, masses)
    I = derived_quantities(s, masses).I
    npt.assert_allclose(sc.vt, s.p / masses.array[:, None] / np.sqrt(I), atol=1e-12 * np.abs(sc.vt).max())


def test_scaled_triangles_are_congruent(freefall):
    m = freefall.masses
    sc = scale_state(freefall.state_at(1.5), m)
    a, b = congruent_triangles(sc, m)
    side = lambda x: np.sort([np.hypot(*(x[i] - x[j])) for i, j in PAIRS])  # noqa: E731
    npt.assert_allclose(side(a), side(b), rtol=1e-9)
    area = lambda x: wedge(x[1] - x[0], x[2] - x[0])  # noqa: E731
    assert area(a) * area(b) < 0
