"""Tangent/normal concurrency, the circumcircle diameter and triangle similarity.

All residuals returned here are dimensionless so a single tolerance can
be applied regardless of units.  Per-pair residual arrays are indexed by
cyclic pair ``n``: ``(i, j) = PAIRS[n]`` and ``k`` is the remaining body.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Masses, constraint_residuals, dot, rot90, wedge
from .errors import (
    CollisionSingularity, DegenerateCircumcircle, DiameterUndefined, HypothesisViolated,
    NotDualTriplet, UndefinedTangent,
)
from .potential import CYCLIC, PAIRS, pair_distances

HYPOTHESIS_TOL = 1e-10
PARALLEL_TOL = 1e-10
STATIONARY_TOL = 1e-12

_CONSTRAINT_NAMES = {
    "linear": "zero linear momentum",
    "angular": "zero angular momentum",
    "dIdt": "I=const (sum q.p = 0)",
}


def check_hypotheses(state, masses, required, tol=HYPOTHESIS_TOL):
    """Raise :class:`HypothesisViolated` naming the first failing constraint."""
    res = constraint_residuals(state, masses)
    for key in required:
        if res[key] > tol:
            if key == "dIdt":
                raise HypothesisViolated(f"hypothesis I=const violated: |sum q.p| residual {res[key]:.3e} > {tol:.1e}")
            raise HypothesisViolated(
                f"hypotheses violated: {_CONSTRAINT_NAMES[key]} residual {res[key]:.3e} > {tol:.1e}"
            )
    return res


@dataclass(frozen=True)
class Concurrency:
    """Where three lines through the bodies meet.

    ``kind`` is ``"point"`` (with ``point``) or ``"parallel"`` (with a unit
    ``direction``).  ``residual`` is the relative distance of the third
    line from the point, or the largest pairwise direction wedge for the
    parallel kind.  ``lines`` names the two bodies whose lines were
    intersected.
    """

    kind: str
    point: Optional[np.ndarray]
    direction: Optional[np.ndarray]
    residual: float
    lines: tuple = ()


def concurrency(points, directions, parallel_tol=PARALLEL_TOL):
    """Concurrency of the lines ``points[k] + s * directions[k]``."""
    points = np.asarray(points, dtype=float)
    d = np.asarray(directions, dtype=float)
    u = d / np.hypot(d[:, 0], d[:, 1])[:, None]
    w = np.array([wedge(u[i], u[j]) for i, j in PAIRS])
    if np.max(np.abs(w)) < parallel_tol:
        return Concurrency("parallel", None, u[0].copy(), float(np.max(np.abs(w))))
    n = int(np.argmax(np.abs(w)))
    i, j = PAIRS[n]
    k = 3 - i - j
    # C ^ u = q ^ u for both lines
    A = np.array([[u[i, 1], -u[i, 0]], [u[j, 1], -u[j, 0]]])
    c = np.linalg.solve(A, [wedge(points[i], u[i]), wedge(points[j], u[j])])
    scale = max(float(np.hypot(*c)), float(np.max(np.hypot(points[:, 0], points[:, 1]))))
    resid = abs(float(wedge(points[k] - c, u[k]))) / scale
    return Concurrency("point", c, None, resid, (i, j))


def _check_moving(state, masses):
    m = Masses.of(masses).array
    pn = np.hypot(state.p[:, 0], state.p[:, 1])
    K = float(np.sum(pn**2 / m))
    eps = STATIONARY_TOL * np.sqrt(K * m.mean())
    if np.any(pn <= eps):
        k = int(np.argmin(pn))
        raise UndefinedTangent(f"undefined tangent (stationary body {k + 1})")


def centre_of_tangents(state, masses, hyp_tol=HYPOTHESIS_TOL):
    """Common point (or direction) of the three momentum lines.

    Requires zero linear and zero angular momentum.
    """
    check_hypotheses(state, masses, ("linear", "angular"), hyp_tol)
    _check_moving(state, masses)
    return concurrency(state.q, state.p)


def centre_of_normals(state, masses, hyp_tol=HYPOTHESIS_TOL):
    """Common point (or direction) of the lines through each body normal to its momentum.

    Requires zero linear momentum and ``sum q.p = 0``.
    """
    check_hypotheses(state, masses, ("linear", "dIdt"), hyp_tol)
    _check_moving(state, masses)
    return concurrency(state.q, rot90(state.p))


@dataclass(frozen=True)
class Circumdata:
    center: np.ndarray
    radius: float


def circumcircle(q):
    """Circle through the three bodies, from bisectors of the two longest sides."""
    q = np.asarray(q, dtype=float)
    r = pair_distances(q)
    area2 = abs(wedge(q[1] - q[0], q[2] - q[0]))
    if area2 <= 1e-12 * np.max(r) ** 2:
        raise DegenerateCircumcircle("degenerate circumcircle: bodies are collinear")
    order = np.argsort(r)[::-1]
    rows, rhs = [], []
    for n in order[:2]:
        i, j = PAIRS[n]
        rows.append(2.0 * (q[j] - q[i]))
        rhs.append(dot(q[j], q[j]) - dot(q[i], q[i]))
    c = np.linalg.solve(np.array(rows), np.array(rhs))
    radius = float(np.mean(np.hypot(*(q - c).T)))
    return Circumdata(c, radius)


@dataclass(frozen=True)
class CircumcircleReport:
    circ: Circumdata
    ct: np.ndarray
    cn: np.ndarray
    residuals: dict


def circumcircle_check(state, masses, hyp_tol=HYPOTHESIS_TOL):
    """Check that the centres of tangents and normals are ends of a circumcircle diameter.

    Residuals (relative to the radius): ``midpoint``, ``ct_radius``,
    ``cn_radius``, ``vertices`` and ``right_angles`` (the cosine of the
    angle ``C_t - q_i - C_n`` at each body).
    """
    check_hypotheses(state, masses, ("linear", "angular", "dIdt"), hyp_tol)
    circ = circumcircle(state.q)
    tan = centre_of_tangents(state, masses, hyp_tol)
    nor = centre_of_normals(state, masses, hyp_tol)
    if tan.kind != "point" or nor.kind != "point":
        raise DiameterUndefined("diameter undefined: tangents or normals are parallel")
    ct, cn, c, R = tan.point, nor.point, circ.center, circ.radius
    dist = lambda x: float(np.hypot(*(x - c)))  # noqa: E731
    legs_t = ct - state.q
    legs_n = cn - state.q
    cosines = dot(legs_t, legs_n) / np.maximum(
        np.hypot(*legs_t.T) * np.hypot(*legs_n.T), 1e-300)
    residuals = {
        "midpoint": dist(0.5 * (ct + cn)) / R,
        "ct_radius": abs(dist(ct) - R) / R,
        "cn_radius": abs(dist(cn) - R) / R,
        "vertices": float(np.max(np.abs(np.hypot(*(state.q - c).T) - R))) / R,
        "right_angles": float(np.max(np.abs(np.where(
            np.hypot(*legs_t.T) * np.hypot(*legs_n.T) > 1e-12 * R * R, cosines, 0.0)))),
    }
    return CircumcircleReport(circ, ct, cn, residuals)


def similarity_report(state, masses, hyp_tol=HYPOTHESIS_TOL):
    """Residuals of the kinematic equalities between the position triangle and momentum triangle.

    Needs zero linear momentum, zero angular momentum and ``sum q.p = 0``.

    Returns
    -------
    dict of str -> ndarray, shape (3,)
        ``ratio``: ``(|p_k| / r_ij - kappa) / kappa``;
        ``side_speed``: ``m_i m_j r_ij^2 / (M I) - m_k v_k^2 / K``;
        ``speed_side``: ``m_i m_j |v_i - v_j|^2 / (M K) - m_k q_k^2 / I``;
        ``perimeter_sum``: ``m_k q_k^2 / I + m_k v_k^2 / K - (m_i + m_j) / M``;
        ``area``: ``q_i ^ q_j / I + v_i ^ v_j / K``.
    """
    masses = Masses.of(masses)
    r = pair_distances(state.q)
    if np.any(r == 0):
        raise CollisionSingularity("collision singularity: coincident bodies")
    check_hypotheses(state, masses, ("linear", "angular", "dIdt"), hyp_tol)
    m = masses.array
    M = masses.total
    q, p = state.q, state.p
    v = p / m[:, None]
    I = float(np.sum(m * dot(q, q)))
    K = float(np.sum(m * dot(v, v)))
    if K == 0:
        raise HypothesisViolated("hypotheses violated: all bodies at rest, momentum triangle degenerate")
    kappa = np.sqrt(masses.product * K / (M * I))
    out = {name: np.empty(3) for name in ("ratio", "side_speed", "speed_side", "perimeter_sum", "area")}
    for n, (i, j, k) in enumerate(CYCLIC):
        pk = np.hypot(*p[k])
        vv = v[i] - v[j]
        out["ratio"][n] = (pk / r[n] - kappa) / kappa
        out["side_speed"][n] = m[i] * m[j] * r[n] ** 2 / (M * I) - m[k] * dot(v[k], v[k]) / K
        out["speed_side"][n] = m[i] * m[j] * dot(vv, vv) / (M * K) - m[k] * dot(q[k], q[k]) / I
        out["perimeter_sum"][n] = m[k] * dot(q[k], q[k]) / I + m[k] * dot(v[k], v[k]) / K - (m[i] + m[j]) / M
        out["area"][n] = wedge(q[i], q[j]) / I + wedge(v[i], v[j]) / K
    return out


def max_abs(report):
    """Largest absolute value across a residual dict."""
    return max(float(np.max(np.abs(v))) for v in report.values())


# -- dual vector triplets ----------------------------------------------------

@dataclass(frozen=True)
class AlgebraicTriplet:
    """Weights ``mu`` and two vector triplets tied by four bilinear constraints.

    ``sum mu xi = sum mu xibar = 0`` and ``sum mu xi ^ xibar = sum mu xi . xibar = 0``.
    """

    mu: np.ndarray
    xi: np.ndarray
    xibar: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).reshape(3)
        if np.any(mu <= 0):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "xi", np.array(self.xi, dtype=float).reshape(3, 2))
        object.__setattr__(self, "xibar", np.array(self.xibar, dtype=float).reshape(3, 2))

    def moment(self, eta):
        return float(np.sum(self.mu * dot(eta, eta)))

    def hypothesis_residuals(self):
        """Relative residuals of the four constraints."""
        mu, x, y = self.mu, self.xi, self.xibar
        nx = np.hypot(x[:, 0], x[:, 1])
        ny = np.hypot(y[:, 0], y[:, 1])
        sxy = float(np.sum(mu * nx * ny)) or 1.0
        return {
            "sum_xi": float(np.hypot(*(mu @ x))) / (float(np.sum(mu * nx)) or 1.0),
            "sum_xibar": float(np.hypot(*(mu @ y))) / (float(np.sum(mu * ny)) or 1.0),
            "outer": abs(float(np.sum(mu * wedge(x, y)))) / sxy,
            "inner": abs(float(np.sum(mu * dot(x, y)))) / sxy,
        }


def verify_triplet(triplet, hyp_tol=HYPOTHESIS_TOL):
    """Residuals of the similarity equalities implied by a dual triplet.

    Returns
    -------
    dict of str -> ndarray, shape (3,)
        ``vertex_side``: ``mu_k xi_k^2/I(xi) - mu_i mu_j |xibar_i - xibar_j|^2 / (S I(xibar))``;
        ``side_vertex``: the same with the roles of xi and xibar exchanged;
        ``sum``: deviation of either side-sum from ``(mu_i + mu_j)/S``;
        ``area``: ``xi_i ^ xi_j / I(xi) + xibar_i ^ xibar_j / I(xibar)``;
        where ``S = mu_1 + mu_2 + mu_3``.

    Raises
    ------
    NotDualTriplet
        A constraint residual exceeds ``hyp_tol`` or a moment vanishes.
    """
    res = triplet.hypothesis_residuals()
    bad = {k: v for k, v in res.items() if v > hyp_tol}
    if bad:
        worst = max(bad, key=bad.get)
        raise NotDualTriplet(f"not a dual-triplet instance: {worst} residual {bad[worst]:.3e}")
    mu, x, y = triplet.mu, triplet.xi, triplet.xibar
    Ix, Iy = triplet.moment(x), triplet.moment(y)
    if Ix == 0 or Iy == 0:
        raise NotDualTriplet("not a dual-triplet instance: a vector triplet is identically zero")
    S = mu.sum()
    out = {name: np.empty(3) for name in ("vertex_side", "side_vertex", "sum", "area")}
    for n, (i, j, k) in enumerate(CYCLIC):
        dx, dy = x[i] - x[j], y[i] - y[j]
        a = mu[k] * dot(x[k], x[k]) / Ix
        abar = mu[k] * dot(y[k], y[k]) / Iy
        sx = mu[i] * mu[j] * dot(dx, dx) / (S * Ix)
        sy = mu[i] * mu[j] * dot(dy, dy) / (S * Iy)
        target = (mu[i] + mu[j]) / S
        out["vertex_side"][n] = a - sy
        out["side_vertex"][n] = sx - abar
        out["sum"][n] = max(abs(a + abar - target), abs(sx + sy - target))
        out["area"][n] = wedge(x[i], x[j]) / Ix + wedge(y[i], y[j]) / Iy
    return out


def _jacobi_factors(mu):
    mu = np.asarray(mu, dtype=float)
    m12 = mu[0] + mu[1]
    rho = np.sqrt(m12 * mu.sum() / mu[2])
    sigma = np.sqrt(mu[0] * mu[1] / m12)
    return rho, sigma


def jacobi_coordinates(mu, xi):
    """Mass-normalised Jacobi vectors ``(a, b)`` of a centred triplet; ``|a|^2 + |b|^2 = I(xi)``."""
    mu = np.asarray(mu, dtype=float)
    xi = np.asarray(xi, dtype=float)
    rho, sigma = _jacobi_factors(mu)
    a = rho * (mu[0] * xi[0] + mu[1] * xi[1]) / (mu[0] + mu[1])
    b = sigma * (xi[0] - xi[1])
    return a, b


def from_jacobi(mu, a, b):
    """Centred triplet with Jacobi vectors ``(a, b)``."""
    mu = np.asarray(mu, dtype=float)
    rho, sigma = _jacobi_factors(mu)
    m12 = mu[0] + mu[1]
    a = np.asarray(a, dtype=float) / rho
    b = np.asarray(b, dtype=float) / sigma
    return np.array([a + mu[1] / m12 * b, a - mu[0] / m12 * b, -m12 / mu[2] * a])


def dual_partner(a, b, abar):
    """The ``bbar`` completing ``a ^ abar + b ^ bbar = 0`` and ``a . abar + b . bbar = 0``.

    ``|bbar| = |a| |abar| / |b|`` and its polar angle is
    ``angle(abar) - angle(a) + angle(b) + pi``.
    """
    a, b, abar = (np.asarray(x, dtype=float) for x in (a, b, abar))
    nb = np.hypot(*b)
    if nb == 0:
        raise ValueError("b must be nonzero")
    size = np.hypot(*a) * np.hypot(*abar) / nb
    ang = np.arctan2(abar[1], abar[0]) - np.arctan2(a[1], a[0]) + np.arctan2(b[1], b[0]) + np.pi
    return size * np.array([np.cos(ang), np.sin(ang)])


def sample_triplet(seed, mu_range=(0.1, 10.0), min_norm=1e-8):
    """Draw a random dual triplet.

    Weights are log-uniform in ``mu_range``; the Jacobi vectors ``a``,
    ``b`` and ``abar`` are standard normal (redrawn if shorter than
    ``min_norm``) and ``bbar`` follows from :func:`dual_partner`.
    ``seed`` is anything :func:`numpy.random.default_rng` accepts.
    """
    rng = np.random.default_rng(seed)
    lo, hi = np.log(mu_range[0]), np.log(mu_range[1])
    mu = np.exp(rng.uniform(lo, hi, size=3))
    while True:
        a, b, abar = rng.normal(size=(3, 2))
        if min(np.hypot(*a), np.hypot(*b), np.hypot(*abar)) >= min_norm:
            break
    bbar = dual_partner(a, b, abar)
    return AlgebraicTriplet(mu, from_jacobi(mu, a, b), from_jacobi(mu, abar, bbar))
