"""Planar three-body states, derived scalars and constraint projection.

Vectors are plain numpy arrays: a body vector has shape (2,), a triplet
has shape (3, 2).  Body indices are 0-based throughout the package.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CentroidNotRemoved, RankDeficient, TripleCollision
from .potential import CYCLIC, PotentialSpec, pair_distances, potential_energy

ABS_TOL = 1e-12
REL_TOL = 1e-10


def wedge(u, w):
    """Planar outer product ``u_x w_y - u_y w_x`` over the last axis."""
    u = np.asarray(u)
    w = np.asarray(w)
    return u[..., 0] * w[..., 1] - u[..., 1] * w[..., 0]


def dot(u, w):
    u = np.asarray(u)
    w = np.asarray(w)
    return u[..., 0] * w[..., 0] + u[..., 1] * w[..., 1]


def rot90(u):
    """Rotate vectors by +90 degrees."""
    u = np.asarray(u, dtype=float)
    return np.stack([-u[..., 1], u[..., 0]], axis=-1)


def _triplet(x, name):
    arr = np.array(x, dtype=float).reshape(3, 2)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Masses:
    m1: float
    m2: float
    m3: float

    def __post_init__(self):
        for name in ("m1", "m2", "m3"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"mass {name} must be a positive finite number, got {v!r}")

    @classmethod
    def of(cls, m):
        if isinstance(m, Masses):
            return m
        m1, m2, m3 = (float(x) for x in m)
        return cls(m1, m2, m3)

    @property
    def array(self):
        return np.array([self.m1, self.m2, self.m3])

    @property
    def total(self):
        return self.m1 + self.m2 + self.m3

    @property
    def min(self):
        return min(self.m1, self.m2, self.m3)

    @property
    def product(self):
        return self.m1 * self.m2 * self.m3


@dataclass(frozen=True)
class PhaseState:
    """Time, positions and momenta of the three bodies.

    ``q`` and ``p`` are read-only arrays of shape (3, 2).  Constraint
    residuals are never assumed; use :func:`derived_quantities` or
    :func:`constraint_residuals`.
    """

    t: float
    q: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not np.isfinite(self.t):
            raise ValueError("time must be finite")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "q", _triplet(self.q, "q"))
        object.__setattr__(self, "p", _triplet(self.p, "p"))

    def __repr__(self):
        return f"PhaseState(t={self.t!r}, q={self.q.tolist()!r}, p={self.p.tolist()!r})"

    def velocities(self, masses):
        return self.p / Masses.of(masses).array[:, None]

    def replace(self, **changes):
        kw = {"t": self.t, "q": self.q, "p": self.p}
        kw.update(changes)
        return PhaseState(**kw)


@dataclass(frozen=True)
class DerivedQuantities:
    M: float
    I: float
    K: float
    L: float
    dIdt: float
    V: float
    E: float
    kappa: float
    Delta: float
    r: tuple


def moment_of_inertia(q, masses):
    m = Masses.of(masses).array
    return float(np.sum(m * dot(q, q)))


def oriented_area(q):
    """``(1/2)(q2 - q1) ^ (q3 - q1)``; works on stacked (..., 3, 2) arrays."""
    q = np.asarray(q, dtype=float)
    return 0.5 * wedge(q[..., 1, :] - q[..., 0, :], q[..., 2, :] - q[..., 0, :])


def derived_quantities(state, masses, potential=None):
    """Scalars of a phase state: M, I, K, L, dI/dt, V, E, kappa, Delta, r.

    Parameters
    ----------
    state : PhaseState
    masses : Masses
    potential : PotentialSpec or float, optional
        Exponent for ``V``; when omitted ``V`` and ``E`` are NaN.

    Raises
    ------
    CollisionSingularity
        Two bodies coincide and ``alpha < 2``.
    TripleCollision
        ``I == 0``, so the ratio of magnification is undefined.
    """
    masses = Masses.of(masses)
    m = masses.array
    q, p = state.q, state.p
    v = p / m[:, None]
    M = masses.total
    I = float(np.sum(m * dot(q, q)))
    K = float(np.sum(m * dot(v, v)))
    L = float(np.sum(wedge(q, p)))
    dIdt = float(2.0 * np.sum(dot(q, p)))
    r = pair_distances(q)
    if potential is None:
        V = float("nan")
    else:
        alpha = potential.alpha if isinstance(potential, PotentialSpec) else float(potential)
        V = potential_energy(q, m, alpha)
    if I == 0.0:
        raise TripleCollision("triple collision: I = 0, ratio of magnification undefined")
    kappa = float(np.sqrt(masses.product * K / (M * I)))
    return DerivedQuantities(
        M=M, I=I, K=K, L=L, dIdt=dIdt, V=V, E=0.5 * K + V, kappa=kappa,
        Delta=float(oriented_area(q)), r=tuple(float(x) for x in r),
    )


def constraint_residuals(state, masses):
    """Relative residuals of the four linear constraints.

    Returns a dict with ``centroid``, ``linear``, ``angular`` and ``dIdt``,
    each scaled by the matching sum of magnitudes so the values are
    dimensionless.
    """
    m = Masses.of(masses).array
    q, p = state.q, state.p
    qn = np.hypot(q[:, 0], q[:, 1])
    pn = np.hypot(p[:, 0], p[:, 1])
    qp = float(np.sum(qn * pn)) or 1.0
    return {
        "centroid": float(np.linalg.norm(m @ q) / (np.sum(m * qn) or 1.0)),
        "linear": float(np.linalg.norm(p.sum(axis=0)) / (np.sum(pn) or 1.0)),
        "angular": abs(float(np.sum(wedge(q, p)))) / qp,
        "dIdt": abs(float(np.sum(dot(q, p)))) / qp,
    }


def recentre(q, masses):
    m = Masses.of(masses).array
    q = np.asarray(q, dtype=float)
    return q - (m @ q) / m.sum()


def _constraint_rows(q, zero_linear, zero_angular, zero_dIdt):
    # rows act on p flattened as (p1x, p1y, p2x, p2y, p3x, p3y)
    rows = []
    if zero_linear:
        rows.append(np.tile([1.0, 0.0], 3))
        rows.append(np.tile([0.0, 1.0], 3))
    if zero_angular:
        rows.append(np.column_stack([-q[:, 1], q[:, 0]]).ravel())
    if zero_dIdt:
        rows.append(q.ravel())
    return np.array(rows)


def project_constraints(state, masses, zero_linear=True, zero_angular=True, zero_dIdt=True):
    """Recentre positions and correct momenta onto the requested constraints.

    The momentum correction is the smallest one in the kinetic metric,
    ``sum |dp_k|^2 / m_k``, so feasible states are fixed points.

    Raises
    ------
    RankDeficient
        The requested constraints are linearly dependent at these positions
        (for example all bodies at the centre of mass).
    """
    if not (zero_linear or zero_angular or zero_dIdt):
        raise ValueError("request at least one constraint")
    masses = Masses.of(masses)
    m = masses.array
    q = recentre(state.q, m)
    C = _constraint_rows(q, zero_linear, zero_angular, zero_dIdt)
    winv = np.repeat(m, 2)  # inverse metric diag(m_k) per component
    G = (C * winv) @ C.T
    s = np.linalg.svd(G, compute_uv=False)
    if s[-1] <= 1e-12 * max(s[0], 1e-300):
        raise RankDeficient("rank deficient: momentum constraints are degenerate at these positions")
    p = state.p.ravel().copy()
    for _ in range(2):  # second pass removes round-off left by the first
        lam = np.linalg.solve(G, C @ p)
        p -= winv * (C.T @ lam)
    return PhaseState(state.t, q, p.reshape(3, 2))


def lagrange_identity_residual(eta, masses, k):
    """LHS - RHS of ``m_i m_j |eta_i - eta_j|^2 + M m_k |eta_k|^2 = (m_i + m_j) sum m_l |eta_l|^2``.

    ``(i, j)`` are the two bodies other than ``k``.  The identity needs
    ``sum m_l eta_l = 0``.
    """
    m = Masses.of(masses).array
    eta = np.asarray(eta, dtype=float).reshape(3, 2)
    i, j = [n for n in range(3) if n != k]
    scale = float(np.sum(m * np.hypot(eta[:, 0], eta[:, 1])))
    if np.linalg.norm(m @ eta) > ABS_TOL * max(scale, 1.0):
        raise CentroidNotRemoved("centroid not removed: sum m_l eta_l != 0")
    d = eta[i] - eta[j]
    lhs = m[i] * m[j] * dot(d, d) + m.sum() * m[k] * dot(eta[k], eta[k])
    rhs = (m[i] + m[j]) * np.sum(m * dot(eta, eta))
    return float(lhs - rhs)


def random_state(rng, masses, momentum_scale=1.0):
    """Gaussian positions and momenta, recentred, with zero total momentum."""
    rng = np.random.default_rng(rng)
    masses = Masses.of(masses)
    q = recentre(rng.normal(size=(3, 2)), masses)
    p = momentum_scale * rng.normal(size=(3, 2))
    p -= masses.array[:, None] * p.sum(axis=0) / masses.total
    return PhaseState(0.0, q, p)


def feasible_state(rng, masses):
    """Random state with zero linear momentum, zero angular momentum and dI/dt = 0."""
    return project_constraints(random_state(rng, masses), masses)


# state literal: "m1 m2 m3 / q1x q1y q2x q2y q3x q3y / p1x p1y p2x p2y p3x p3y"

def parse_state_literal(text, t=0.0):
    """Parse a state literal into ``(Masses, PhaseState)``."""
    parts = text.strip().split("/")
    if len(parts) != 3:
        raise ValueError(f"state literal needs 3 '/'-separated groups, got {len(parts)}")
    try:
        groups = [[float(tok) for tok in part.split()] for part in parts]
    except ValueError as exc:
        raise ValueError(f"bad number in state literal: {exc}") from None
    if [len(g) for g in groups] != [3, 6, 6]:
        raise ValueError("state literal groups must hold 3, 6 and 6 numbers")
    return Masses.of(groups[0]), PhaseState(t, np.reshape(groups[1], (3, 2)), np.reshape(groups[2], (3, 2)))


def format_state_literal(masses, state):
    masses = Masses.of(masses)
    fmt = lambda xs: " ".join(repr(float(x)) for x in xs)  # noqa: E731
    return f"{fmt(masses.array)} / {fmt(state.q.ravel())} / {fmt(state.p.ravel())}"


__all__ = [
    "ABS_TOL", "REL_TOL", "CYCLIC", "Masses", "PhaseState", "DerivedQuantities",
    "wedge", "dot", "rot90", "moment_of_inertia", "oriented_area", "derived_quantities",
    "constraint_residuals", "recentre", "project_constraints", "lagrange_identity_residual",
    "random_state", "feasible_state", "parse_state_literal", "format_state_literal",
]
