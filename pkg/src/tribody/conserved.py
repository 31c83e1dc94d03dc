"""Energy partition and the momentum constant on constant-I, zero angular momentum orbits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Masses, constraint_residuals, dot, wedge
from .errors import HypothesisViolated, StationaryBody
from .geometry import AlgebraicTriplet
from .potential import CYCLIC, acceleration, pair_distances, pair_weights, potential_energy


def homogeneous_constant(state, masses, alpha):
    """``sum_cyc m_i m_j |p_k|**alpha`` (``log |p_k|`` for alpha = 0).

    Constant along constant-I, zero angular momentum solutions of the
    matching potential.
    """
    m = Masses.of(masses).array
    pn = np.hypot(state.p[:, 0], state.p[:, 1])
    if alpha <= 0 and np.any(pn == 0):
        raise StationaryBody("stationary body, constant undefined")
    total = 0.0
    for i, j, k in CYCLIC:
        total += m[i] * m[j] * (np.log(pn[k]) if alpha == 0 else pn[k] ** alpha)
    return float(total)


def constant_prediction(state, masses, alpha):
    """Value the momentum constant must take on such an orbit, from K, I (and E for alpha = 0).

    ``K (m1 m2 m3 K / (M I))**(alpha/2)``; for alpha = -2 this is
    ``M I / (m1 m2 m3)``.
    """
    masses = Masses.of(masses)
    m = masses.array
    v = state.p / m[:, None]
    I = float(np.sum(m * dot(state.q, state.q)))
    K = float(np.sum(m * dot(v, v)))
    ratio = masses.product * K / (masses.total * I)
    if alpha == 0:
        E = 0.5 * K + potential_energy(state.q, m, 0.0)
        return E + 0.5 * K * np.log(ratio)
    if alpha == -2:
        return masses.total * I / masses.product
    return K * ratio ** (alpha / 2.0)


@dataclass(frozen=True)
class ConstantReport:
    alpha: float
    t: np.ndarray
    values: np.ndarray
    reference: float
    drift: float
    reference_error: float

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.t, self.values]), fmt="%.17g", delimiter=",",
                   header="t,constant", comments="")


def constant_report(traj, alpha=None):
    """Series of the momentum constant along a trajectory.

    ``drift`` is ``(max - min) / |mean|``.  For alpha = -2 ``reference`` is
    ``M I / (m1 m2 m3)`` at the mean I and ``reference_error`` the largest
    relative deviation of the series from it; otherwise both are NaN.
    """
    alpha = traj.alpha if alpha is None else alpha
    masses = traj.masses
    vals = np.array([homogeneous_constant(s, masses, alpha) for s in traj.samples])
    drift = float((vals.max() - vals.min()) / abs(vals.mean()))
    ref = err = float("nan")
    if alpha == -2:
        I = traj.scalars()["I"]
        ref = masses.total * float(np.mean(I)) / masses.product
        err = float(np.max(np.abs(vals - ref)) / ref)
    return ConstantReport(alpha, traj.t.copy(), vals, ref, drift, err)


def require_constant_moment(traj, tol=1e-9):
    """Raise unless L = 0, dI/dt = 0 and d2I/dt2 = 0 hold (relatively) at every sample."""
    m = traj.masses.array
    alpha = traj.alpha
    worst = {"angular": 0.0, "dIdt": 0.0, "d2Idt2": 0.0}
    for k, s in enumerate(traj.samples):
        res = constraint_residuals(s, m)
        worst["angular"] = max(worst["angular"], res["angular"])
        worst["dIdt"] = max(worst["dIdt"], res["dIdt"])
        v = traj.v[k]
        a = acceleration(s.q, m, alpha)
        K = float(np.sum(m * dot(v, v)))
        qa = float(np.sum(m * dot(s.q, a)))
        worst["d2Idt2"] = max(worst["d2Idt2"], abs(K + qa) / (K + abs(qa)))
    if worst["angular"] > tol:
        raise HypothesisViolated(f"hypotheses violated: zero angular momentum residual {worst['angular']:.3e}")
    if worst["dIdt"] > tol or worst["d2Idt2"] > tol:
        raise HypothesisViolated(
            f"hypothesis I=const violated: dI/dt {worst['dIdt']:.3e}, d2I/dt2 {worst['d2Idt2']:.3e}")
    return worst


def energy_partition_check(traj, alpha=None, hyp_tol=1e-9):
    """Energy balance on a constant-I, zero angular momentum trajectory.

    Returns a dict of maximum relative residuals over the samples:

    * alpha = -2: ``virial`` ``|K + 2V| / K`` and ``energy`` ``|E| / (K/2)``.
    * alpha = 0: ``virial`` ``|K - sum m_i m_j| / K``, ``energy_relation``
      ``|sum m_i m_j - 2 (E - V)| / sum m_i m_j`` and the ``K_drift`` /
      ``V_drift`` constancy spreads.
    * otherwise: ``virial`` ``|K - sum m_i m_j r_ij**alpha| / K``,
      ``energy_relation`` ``|K - 2 alpha E / (2 + alpha)| / K``, and the
      ``K_drift`` / ``V_drift`` spreads.

    Raises
    ------
    HypothesisViolated
        I is not constant (or L is not zero) along ``traj``.
    """
    alpha = traj.alpha if alpha is None else alpha
    require_constant_moment(traj, hyp_tol)
    m = traj.masses.array
    s = traj.scalars()
    K, E = s["K"], s["E"]
    V = E - 0.5 * K
    r = pair_distances(traj.q)
    mm = m[[0, 1, 2]] * m[[1, 2, 0]]
    spread = lambda x: float((x.max() - x.min()) / max(abs(x.mean()), 1e-300))  # noqa: E731
    if alpha == -2:
        return {"virial": float(np.max(np.abs(K + 2 * V) / K)), "energy": float(np.max(np.abs(E) / (0.5 * K)))}
    if alpha == 0:
        summ = mm.sum()
        return {
            "virial": float(np.max(np.abs(K - summ) / K)),
            "energy_relation": float(np.max(np.abs(summ - 2 * (E - V)) / summ)),
            "K_drift": spread(K), "V_drift": spread(V),
        }
    W = np.sum(mm * r**alpha, axis=-1)
    return {
        "virial": float(np.max(np.abs(K - W) / K)),
        "energy_relation": float(np.max(np.abs(K - 2 * alpha * E / (2 + alpha)) / K)),
        "K_drift": spread(K), "V_drift": spread(V),
    }


@dataclass(frozen=True)
class MomentumForceResult:
    inner: float
    outer: float
    triplet: AlgebraicTriplet


def momentum_force_residuals(state, masses, alpha):
    """Weighted sums ``sum_cyc m_i m_j r_ij**(alpha-2) p_k . f_k`` and ``... p_k ^ f_k``.

    ``f_k = m_k a_k`` is the force on body k.  Both sums are returned
    relative to ``sum_cyc m_i m_j r_ij**(alpha-2) |p_k| |f_k|``.  The outer
    sum vanishes whenever L = 0; the inner one only along constant-I
    orbits.  The triplet uses weights ``mu_k = 1 / (m_i m_j r_ij**(alpha-2))``
    with ``xi = p / mu`` and ``xibar = f / mu``.
    """
    m = Masses.of(masses).array
    q, p = state.q, state.p
    f = m[:, None] * acceleration(q, m, alpha)
    wts = pair_weights(pair_distances(q), alpha)
    w = np.empty(3)
    for n, (i, j, k) in enumerate(CYCLIC):
        w[k] = m[i] * m[j] * wts[n]
    scale = float(np.sum(w * np.hypot(*p.T) * np.hypot(*f.T))) or 1.0
    inner = float(np.sum(w * dot(p, f))) / scale
    outer = float(np.sum(w * wedge(p, f))) / scale
    mu = 1.0 / w
    return MomentumForceResult(inner, outer, AlgebraicTriplet(mu, p / mu[:, None], f / mu[:, None]))
