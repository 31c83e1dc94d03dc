import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st

from tribody.core import Masses, PhaseState, derived_quantities, random_state
from tribody.dynamics import (
    CSV_COLUMNS, DEFAULT_RTOL, Trajectory, integrate, sample_bounded_state, virial_state,
)
from tribody.errors import CollisionSingularity
from tribody.potential import PotentialSpec, acceleration, potential_energy

from conftest import freefall_state, masses_st, seeds

alphas = st.sampled_from([-2.0, -1.0, -0.5, 0.0, 1.0, 2.0, 3.0])


def test_st1_harmonic_acceleration(st1):
    m, s = st1
    a = acceleration(s.q, m, 2.0)
    npt.assert_allclose(a, [[-3, 0], [0, -3], [3, 3]], atol=1e-15)


def test_two_body_newtonian_limit():
    m = Masses(1.0, 2.0, 1e-3)
    q = np.array([[0.0, 0.0], [1.0, 0.0], [1e6, 0.0]])
    a = acceleration(q, m, -1.0)
    npt.assert_allclose(a[0], [2.0, 0.0], rtol=1e-10)
    npt.assert_allclose(a[1], [-1.0, 0.0], rtol=1e-10)


@given(alpha=alphas)
def test_equilateral_points_at_centroid(alpha):
    ang = 2 * np.pi * np.arange(3) / 3
    q = np.column_stack([np.cos(ang), np.sin(ang)])
    a = acceleration(q, Masses(1, 1, 1), alpha)
    mags = np.hypot(*a.T)
    npt.assert_allclose(mags, mags[0], rtol=1e-14)
    npt.assert_allclose(np.sum(a * q, axis=1), -mags, rtol=1e-14)


def test_coincident_bodies_raise():
    q = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(CollisionSingularity):
        acceleration(q, Masses(1, 1, 1), -1.0)
    acceleration(q, Masses(1, 1, 1), 2.0)


@settings(max_examples=100, deadline=None)
@given(seed=seeds, masses=masses_st, alpha=alphas)
def test_total_force_vanishes(seed, masses, alpha):
    s = random_state(seed, masses)
    a = acceleration(s.q, masses, alpha)
    f = masses.array[:, None] * a
    assert np.linalg.norm(f.sum(axis=0)) < 1e-13 * np.abs(f).sum()


@settings(max_examples=100, deadline=None)
@given(seed=seeds, masses=masses_st, alpha=alphas)
def test_force_is_minus_gradient(seed, masses, alpha):
    # central finite differences on V as an independent oracle
    s = random_state(seed, masses)
    m = masses.array
    h = 1e-6
    grad = np.zeros((3, 2))
    for i in range(3):
        for c in range(2):
            dq = np.zeros((3, 2))
            dq[i, c] = h
            grad[i, c] = (potential_energy(s.q + dq, m, alpha) - potential_energy(s.q - dq, m, alpha)) / (2 * h)
    f = m[:, None] * acceleration(s.q, m, alpha)
    npt.assert_allclose(f, -grad, rtol=1e-6, atol=1e-6 * np.abs(grad).max())


@settings(max_examples=100, deadline=None)
@given(seed=seeds, masses=masses_st, alpha=alphas)
def test_jacobi_lagrange_pointwise(seed, masses, alpha):
    s = random_state(seed, masses)
    m = masses.array
    d = derived_quantities(s, masses, alpha)
    qa = np.sum(m * np.sum(s.q * acceleration(s.q, m, alpha), axis=1))
    lhs = 2 * qa + 2 * d.K
    if alpha == 0:
        rhs = 2 * (d.K - (m[0] * m[1] + m[1] * m[2] + m[2] * m[0]))
    else:
        rhs = 2 * (d.K - alpha * d.V)
    assert abs(lhs - rhs) < 1e-11 * (abs(2 * qa) + 2 * d.K)


def test_kepler_period():
    # circular binary, third body far away and light
    m = Masses(1.0, 1.0, 1e-12)
    r = 1.0
    w = np.sqrt(2.0 / r**3)  # G M_pair / r^3
    q = np.array([[-0.5, 0.0], [0.5, 0.0], [1e8, 0.0]])
    v = np.array([[0.0, -0.5 * w * r], [0.0, 0.5 * w * r], [0.0, 0.0]])
    pot = PotentialSpec(-1.0, m)
    T = 2 * np.pi / w
    traj = integrate(PhaseState(0, q, m.array[:, None] * v), pot, (0, T))
    npt.assert_allclose(traj.q[-1, :2], q[:2], atol=1e-8)


def test_st1_harmonic_conservation(st1):
    m, s = st1
    traj = integrate(s, PotentialSpec(2.0, m), (0, 10))
    sc = traj.scalars()
    assert traj.meta.termination == "span end"
    assert np.max(np.abs(sc["E"] - sc["E"][0])) / abs(sc["E"][0]) < 1e-9
    assert np.max(np.abs(sc["L"])) < 1e-10


def test_harmonic_exact_solution(st1):
    # alpha = 2 decouples into oscillators of angular frequency sqrt(M) about the centroid
    m, s = st1
    traj = integrate(s, PotentialSpec(2.0, m), (0, 3))
    w = np.sqrt(m.total)
    t = 3.0
    v0 = s.velocities(m)
    exact = s.q * np.cos(w * t) + v0 / w * np.sin(w * t)
    npt.assert_allclose(traj.q[-1], exact, atol=1e-9)


def test_freefall_angular_momentum():
    m, s = freefall_state()
    traj = integrate(s, PotentialSpec(-1.0, m), (0, 3))
    assert traj.meta.termination in ("span end", "collision approach")
    assert np.max(np.abs(traj.scalars()["L"])) < 1e-11


def test_isosceles_freefall_stops_at_collision():
    m = Masses(1, 1, 1)
    q = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, 1.5]])
    q -= q.mean(axis=0)
    traj = integrate(PhaseState(0, q, np.zeros((3, 2))), PotentialSpec(-1.0, m), (0, 50))
    assert traj.meta.termination == "collision approach"
    assert traj.t_end < 50
    assert traj.meta.r_min < 1e-5


def test_time_reversal(st1):
    m, s = st1
    pot = PotentialSpec(-1.0, m)
    fwd = integrate(s, pot, (0, 2))
    end = fwd.state(len(fwd) - 1)
    back = integrate(end.replace(p=-end.p), pot, (0, 2))
    npt.assert_allclose(back.q[-1], s.q, atol=1e-7)
    npt.assert_allclose(-back.p[-1], s.p, atol=1e-7)


def test_backward_span_is_increasing(st1):
    m, s = st1
    traj = integrate(s, PotentialSpec(2.0, m), (0, -1))
    assert np.all(np.diff(traj.t) > 0)
    assert traj.t_start == -1.0 and traj.t_end == 0.0
    npt.assert_allclose(traj.q[-1], s.q, atol=1e-15)


def test_dense_output_and_imax(st1):
    m, s = st1
    traj = integrate(s, PotentialSpec(-1.0, m), (0, 2))
    q, v = traj.evaluate(traj.t[3])
    npt.assert_allclose(q, traj.q[3], atol=1e-12)
    qs, _ = traj.evaluate(np.linspace(0, 2, 400))
    I = np.sum(m.array * np.sum(qs**2, axis=-1), axis=-1)
    assert traj.meta.I_max >= I.max() - 1e-9 * I.max()


def test_csv_roundtrip(tmp_path, st1):
    m, s = st1
    pot = PotentialSpec(-1.0, m)
    traj = integrate(s, pot, (0, 1))
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    with open(path) as fh:
        assert fh.readline().strip().split(",") == CSV_COLUMNS
    back = Trajectory.from_csv(path, pot)
    npt.assert_array_equal(back.t, traj.t)
    npt.assert_array_equal(back.q, traj.q)
    npt.assert_allclose(back.p, traj.p, rtol=1e-15)
    tm = 0.5 * (traj.t[4] + traj.t[5])
    npt.assert_allclose(back.evaluate(tm)[0], traj.evaluate(tm)[0], atol=1e-5)


def test_trajectory_requires_increasing_times():
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.0], np.zeros((2, 3, 2)), np.zeros((2, 3, 2)), None)


def _relative_energy_drift(traj):
    sc = traj.scalars()
    K = sc["K"]
    scale = 0.5 * K[0] + abs(sc["E"][0] - 0.5 * K[0])
    return np.max(np.abs(sc["E"] - sc["E"][0])) / scale


@pytest.mark.parametrize("alpha", [
    pytest.param(-1.0, marks=pytest.mark.xfail(
        strict=True, reason="Newtonian close passages accumulate about 60 rtol over 10 characteristic times")),
    0.0, 1.0, 2.0,
])
def test_energy_drift_within_ten_rtol(alpha):
    rng = np.random.default_rng(1)
    pot = PotentialSpec(alpha, Masses.of(rng.uniform(0.5, 2.0, 3)))
    _, traj = sample_bounded_state(rng, pot)
    assert _relative_energy_drift(traj) <= 10 * DEFAULT_RTOL


def test_energy_drift_scales_with_rtol():
    rng = np.random.default_rng(1)
    pot = PotentialSpec(-1.0, Masses.of(rng.uniform(0.5, 2.0, 3)))
    s, traj = sample_bounded_state(rng, pot)
    tight = integrate(s, pot, (0, traj.t_end), rtol=1e-12, atol=1e-14)
    assert _relative_energy_drift(tight) < 1e-9
    assert _relative_energy_drift(tight) < 0.1 * _relative_energy_drift(traj)


def test_virial_state_constant_moment_for_strong_force():
    m = Masses(1, 2, 3)
    pot = PotentialSpec(-2.0, m)
    s = virial_state(np.random.default_rng(1), pot)
    d = derived_quantities(s, m, pot)
    assert abs(d.E) < 1e-12 * abs(d.V)
    traj = integrate(s, pot, (0, 0.05))
    I = traj.scalars()["I"]
    assert np.ptp(I) < 1e-9 * I[0]
