"""Oriented-area dynamics, zero detection and the zero-gap certificate.

For zero angular momentum motion under ``V_alpha`` with ``alpha <= 2``,
``S = Delta / sqrt(I)`` obeys ``S'' = -omega**2 S`` with ``omega**2``
bounded below by ``omega0**2 = M (m_min**2 / (M I_max))**((2 - alpha)/2)``,
so consecutive zeros of the area are less than ``pi / omega0`` apart.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.optimize import brentq

from .core import dot, oriented_area, wedge
from .potential import CYCLIC, PAIRS, acceleration, pair_distances, pair_weights

COLLISION_TOL = 1e-6
TRIPLE_TOL = 1e-12


def lambdas(q):
    """``(q1 ^ q2, q2 ^ q3, q3 ^ q1)``; their sum is twice the oriented area."""
    q = np.asarray(q, dtype=float)
    return np.stack([wedge(q[..., i, :], q[..., j, :]) for i, j in PAIRS], axis=-1)


@dataclass(frozen=True)
class DeltaSeries:
    t: np.ndarray
    Delta: np.ndarray
    S: np.ndarray


def _sample_times(traj, per_step=4, max_dt=None):
    t = traj.t
    if len(t) < 2:
        return t.copy()
    pieces = []
    for a, b in zip(t[:-1], t[1:]):
        n = per_step
        if max_dt is not None:
            n = max(n, int(np.ceil((b - a) / max_dt)))
        pieces.append(a + (b - a) * np.arange(n) / n)
    pieces.append(t[-1:])
    return np.concatenate(pieces)


def delta_series(traj, bound=None, per_step=4):
    """Oriented area and ``S = Delta / sqrt(I)`` sampled from the dense output.

    Every integration step is split into ``per_step`` pieces, and further
    so that no spacing exceeds ``T0 / 8`` when an :class:`OscillationBound`
    is given.
    """
    max_dt = None if bound is None else bound.T0 / 8.0
    if traj.dense is None:
        tt, q = traj.t.copy(), traj.q
    else:
        tt = _sample_times(traj, per_step, max_dt)
        q, _ = traj.evaluate(tt)
    m = traj.masses.array
    D = oriented_area(q)
    I = np.sum(m * dot(q, q), axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        S = D / np.sqrt(I)
    return DeltaSeries(tt, D, S)


def delta_derivatives(q, v, masses, alpha):
    """``(Delta, dDelta/dt, d2Delta/dt2)`` from positions, velocities and the force law."""
    a = acceleration(q, masses, alpha)
    D = oriented_area(q)
    d1 = 0.0
    d2 = 0.0
    for i, j in PAIRS:
        d1 += wedge(v[i], q[j]) + wedge(q[i], v[j])
        d2 += 2.0 * wedge(v[i], v[j]) + wedge(a[i], q[j]) + wedge(q[i], a[j])
    return float(D), 0.5 * float(d1), 0.5 * float(d2)


def delta_ode_residual_state(q, v, masses, alpha, relative=True):
    """Residual of ``Delta'' + (2K/I + sum (m_k+m_l) r_kl**(alpha-2)) Delta - (I'/I) Delta'``.

    ``Delta''`` comes from the accelerations, not from the identity, so
    this checks the area equation against the equations of motion.  With
    ``relative=True`` the residual is divided by the summed magnitudes of
    every term entering it.  Assumes zero angular momentum.
    """
    m = np.asarray(masses.array if hasattr(masses, "array") else masses, dtype=float)
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    a = acceleration(q, m, alpha)
    I = float(np.sum(m * dot(q, q)))
    K = float(np.sum(m * dot(v, v)))
    dI = 2.0 * float(np.sum(m * dot(q, v)))
    D, d1, _ = delta_derivatives(q, v, m, alpha)
    pieces = []
    for i, j in PAIRS:
        pieces += [wedge(v[i], v[j]), 0.5 * wedge(a[i], q[j]), 0.5 * wedge(q[i], a[j])]
    d2 = float(np.sum(pieces))
    wts = pair_weights(pair_distances(q), alpha)
    coef = 2.0 * K / I + float(sum((m[i] + m[j]) * wts[n] for n, (i, j) in enumerate(PAIRS)))
    res = d2 + coef * D - dI / I * d1
    if not relative:
        return res
    scale = float(np.sum(np.abs(pieces))) + abs(coef * D) + abs(dI / I * d1)
    return res / scale if scale > 0 else 0.0


def delta_ode_residual(traj, t, relative=True):
    """Area-equation residual at time ``t`` of a trajectory (see :func:`delta_ode_residual_state`)."""
    q, v = traj.evaluate(float(t))
    return delta_ode_residual_state(q, v, traj.masses, traj.alpha, relative)


def omega_squared(q, v, masses, alpha):
    """Restoring coefficient of ``S``: ``(M/I) sum m_k q_k^2 r_ij**(alpha-2) + 3K/I - 3 I'^2 / (4 I^2)``.

    Works on stacked arrays of shape (..., 3, 2).
    """
    m = np.asarray(masses.array if hasattr(masses, "array") else masses, dtype=float)
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    M = m.sum()
    I = np.sum(m * dot(q, q), axis=-1)
    K = np.sum(m * dot(v, v), axis=-1)
    dI = 2.0 * np.sum(m * dot(q, v), axis=-1)
    wts = pair_weights(pair_distances(q), alpha)
    s = 0.0
    for n, (i, j, k) in enumerate(CYCLIC):
        s = s + m[k] * dot(q[..., k, :], q[..., k, :]) * wts[..., n]
    return M / I * s + 3.0 * K / I - 0.75 * dI**2 / I**2


@dataclass(frozen=True)
class OscillationBound:
    omega0_sq: float
    T0: float
    I_max: float
    m_min: float
    alpha: float
    t: np.ndarray = field(repr=False, default=None)
    omega_sq: np.ndarray = field(repr=False, default=None)

    @property
    def min_margin(self):
        """``min omega**2(t) - omega0**2`` over the samples (NaN without samples)."""
        if self.omega_sq is None or len(self.omega_sq) == 0:
            return float("nan")
        return float(np.min(self.omega_sq) - self.omega0_sq)

    @property
    def holds(self):
        return bool(self.min_margin >= 0)


def omega0_squared(masses, I_max, alpha):
    M = masses.total
    return M * (masses.min**2 / (M * I_max)) ** ((2.0 - alpha) / 2.0)


def omega_bound(traj, alpha=None, I_max=None):
    """Lower bound on the restoring coefficient and its pointwise values along ``traj``.

    ``I_max`` defaults to the trajectory's observed maximum of I.
    """
    alpha = traj.alpha if alpha is None else alpha
    if alpha > 2:
        raise ValueError("bound requires alpha <= 2")
    masses = traj.masses
    if I_max is None:
        I_max = traj.meta.I_max if traj.meta is not None else float(np.max(traj.scalars()["I"]))
    w0 = omega0_squared(masses, I_max, alpha)
    w2 = omega_squared(traj.q, traj.v, masses, alpha)
    return OscillationBound(w0, np.pi / np.sqrt(w0), float(I_max), masses.min, alpha, traj.t.copy(), w2)


@dataclass(frozen=True)
class SyzygyEvent:
    """A zero of the oriented area.

    ``kind`` is ``"syzygy"``, ``"pair_collision"`` or ``"triple_collision"``;
    ``detail`` is the 0-based index of the middle body for a syzygy, the
    colliding pair for a pair collision, and ``None`` otherwise.
    """

    t: float
    kind: str
    detail: Optional[Union[int, tuple]] = None

    @property
    def detail_label(self):
        if self.kind == "syzygy":
            return str(self.detail + 1)
        if self.kind == "pair_collision":
            return f"{self.detail[0] + 1}{self.detail[1] + 1}"
        return ""


def middle_body(q):
    """Body whose projection on the line through the configuration is the median."""
    q = np.asarray(q, dtype=float)
    r = pair_distances(q)
    i, j = PAIRS[int(np.argmax(r))]
    u = (q[j] - q[i]) / r[int(np.argmax(r))]
    proj = q @ u
    return int(np.argsort(proj)[1])


def classify(q, masses, length_scale, I_ref, collision_tol=COLLISION_TOL, triple_tol=TRIPLE_TOL):
    """Kind and detail of an area zero at positions ``q``."""
    m = masses.array
    I = float(np.sum(m * dot(q, q)))
    if I < triple_tol * I_ref:
        return "triple_collision", None
    r = pair_distances(q)
    if np.min(r) < collision_tol * length_scale:
        return "pair_collision", PAIRS[int(np.argmin(r))]
    return "syzygy", middle_body(q)


def detect_events(traj, t_tol=1e-12, collision_tol=COLLISION_TOL, triple_tol=TRIPLE_TOL,
                  bound=None, per_step=4):
    """Zeros of the oriented area along ``traj``, refined and classified.

    Sign changes on a dense sampling are bracketed and refined with
    Brent's method to ``t_tol``.  A (numerically) collinear start is an
    event at the first time.  When the integration stopped on a close
    approach, the final event is the matching collision.
    """
    masses = traj.masses
    q0 = traj.q[0]
    length = float(np.max(pair_distances(q0)))
    I0 = float(np.sum(masses.array * dot(q0, q0)))
    series = delta_series(traj, bound, per_step)
    tt, D = series.t, series.Delta
    zero_tol = 1e-12 * length**2

    def area(t):
        q, _ = traj.evaluate(t)
        return float(oriented_area(q))

    def make(t, q):
        kind, detail = classify(q, masses, length, I0, collision_tol, triple_tol)
        return SyzygyEvent(float(t), kind, detail)

    events = []
    if abs(D[0]) <= zero_tol:
        events.append(make(tt[0], traj.q[0]))
    for n in range(len(tt) - 1):
        a, b = D[n], D[n + 1]
        if n > 0 and a == 0.0:
            events.append(make(tt[n], traj.evaluate(tt[n])[0]))
            continue
        if a * b < 0:
            root = brentq(area, tt[n], tt[n + 1], xtol=t_tol, rtol=4 * np.finfo(float).eps)
            events.append(make(root, traj.evaluate(root)[0]))

    if traj.meta is not None and traj.meta.termination == "collision approach":
        q_end = traj.q[-1]
        I_end = float(np.sum(masses.array * dot(q_end, q_end)))
        if I_end < triple_tol * I0:
            final = SyzygyEvent(traj.t_end, "triple_collision", None)
        else:
            final = SyzygyEvent(traj.t_end, "pair_collision", PAIRS[int(np.argmin(pair_distances(q_end)))])
        if events and traj.t_end - events[-1].t <= 1e-9 * max(traj.t_end - traj.t_start, 1.0):
            events[-1] = final
        else:
            events.append(final)
    return events


@dataclass(frozen=True)
class GapCertificate:
    T0: float
    gaps: list
    first_ok: bool
    tail_ok: bool

    @property
    def passed(self):
        return self.first_ok and self.tail_ok and all(ok for *_, ok in self.gaps)

    @property
    def max_gap(self):
        return max((g for _, _, g, _ in self.gaps), default=float("nan"))

    def summary(self):
        n_fail = sum(1 for *_, ok in self.gaps if not ok)
        status = "PASS" if self.passed else "FAIL"
        return (f"gap-certificate T0={self.T0:.17g} gaps={len(self.gaps)} failed={n_fail} "
                f"max_gap={self.max_gap:.17g} first_ok={self.first_ok} tail_ok={self.tail_ok} status={status}")


def gap_certificate(events, bound, t_start, t_end, eps=0.0):
    """Check that no zero-free stretch of the span is ``T0`` or longer.

    Each consecutive gap must satisfy ``gap < T0 + eps``; so must the
    stretch before the first event and after the last one.  A span
    shorter than ``T0`` with no events passes vacuously.
    """
    T0 = bound.T0
    times = [e.t for e in events]
    gaps = [(a, b, b - a, (b - a) < T0 + eps) for a, b in zip(times[:-1], times[1:])]
    if times:
        first_ok = times[0] - t_start < T0 + eps
        tail_ok = t_end - times[-1] < T0 + eps
    else:
        first_ok = tail_ok = (t_end - t_start) < T0 + eps
    return GapCertificate(T0, gaps, first_ok, tail_ok)


def events_to_csv(events, path):
    with open(path, "w") as fh:
        fh.write("t,kind,detail\n")
        for e in events:
            fh.write(f"{e.t:.17g},{e.kind},{e.detail_label}\n")
