"""Equations of motion, adaptive integration and trajectory export."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .core import Masses, PhaseState, dot, oriented_area, wedge
from .potential import PotentialSpec, acceleration, pair_distances, potential_energy

__all__ = [
    "PotentialSpec", "acceleration", "Trajectory", "TrajectoryMeta", "integrate",
    "characteristic_time", "trajectory_scalars", "CSV_COLUMNS",
]

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
CLOSE_APPROACH = 1e-6
"""Close-approach stop radius, relative to the initial largest separation."""

CSV_COLUMNS = (
    ["t"]
    + [f"q{k}{c}" for k in (1, 2, 3) for c in "xy"]
    + [f"p{k}{c}" for k in (1, 2, 3) for c in "xy"]
    + ["I", "K", "L", "E", "Delta"]
)


@dataclass(frozen=True)
class TrajectoryMeta:
    alpha: float
    rtol: float
    atol: float
    termination: str
    I_max: float
    r_min: float
    E_drift: float
    L_drift: float
    nsteps: int


def trajectory_scalars(q, v, masses, alpha):
    """I, K, L, E and Delta for stacked positions/velocities of shape (n, 3, 2)."""
    m = Masses.of(masses).array
    I = np.sum(m * dot(q, q), axis=-1)
    K = np.sum(m * dot(v, v), axis=-1)
    L = np.sum(m * wedge(q, v), axis=-1)
    E = 0.5 * K + potential_energy(q, m, alpha)
    return {"I": I, "K": K, "L": L, "E": E, "Delta": oriented_area(q)}


def characteristic_time(state, potential):
    """Period of small oscillations set by the potential at the state's size.

    Uses ``2 pi / sqrt(M l**(alpha-2))`` with ``l`` the mass-weighted rms
    mutual distance; exact for the harmonic case alpha = 2.
    """
    m = potential.masses.array
    M = m.sum()
    I = float(np.sum(m * dot(state.q, state.q)))
    mm = m[0] * m[1] + m[1] * m[2] + m[2] * m[0]
    ell = np.sqrt(M * I / mm)
    return 2 * np.pi / np.sqrt(M * ell ** (potential.alpha - 2.0))


class _HermiteDense:
    """Dense output rebuilt from samples: cubic Hermite on q (with v) and v (with a)."""

    def __init__(self, t, q, v, a):
        n = len(t)
        self._q = CubicHermiteSpline(t, q.reshape(n, 6), v.reshape(n, 6))
        self._v = CubicHermiteSpline(t, v.reshape(n, 6), a.reshape(n, 6))

    def __call__(self, t):
        return np.concatenate([self._q(t).T, self._v(t).T], axis=0)


class Trajectory:
    """Sampled orbit with dense output.

    Attributes
    ----------
    t : ndarray, shape (n,)
        Accepted step times, strictly increasing.
    q, v : ndarray, shape (n, 3, 2)
        Positions and velocities at ``t``.
    potential : PotentialSpec
    dense : callable or None
        ``dense(t)`` returns the stacked state ``[q.ravel(), v.ravel()]``
        of shape (12,) or (12, len(t)).
    meta : TrajectoryMeta or None
    """

    def __init__(self, t, q, v, potential, dense=None, meta=None):
        t = np.asarray(t, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("trajectory needs at least one sample")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        self.t = t
        self.q = np.asarray(q, dtype=float).reshape(len(t), 3, 2)
        self.v = np.asarray(v, dtype=float).reshape(len(t), 3, 2)
        self.potential = potential
        self.dense = dense
        self.meta = meta

    @classmethod
    def from_states(cls, states, potential):
        """Trajectory from a list of phase states; dense output only if n >= 2."""
        m = potential.masses.array
        t = np.array([s.t for s in states])
        q = np.array([s.q for s in states])
        v = np.array([s.p for s in states]) / m[None, :, None]
        dense = None
        if len(states) >= 2:
            dense = _HermiteDense(t, q, v, acceleration(q, m, potential.alpha))
        return cls(t, q, v, potential, dense=dense)

    @property
    def masses(self):
        return self.potential.masses

    @property
    def alpha(self):
        return self.potential.alpha

    @property
    def p(self):
        return self.v * self.masses.array[None, :, None]

    @property
    def t_start(self):
        return float(self.t[0])

    @property
    def t_end(self):
        return float(self.t[-1])

    def __len__(self):
        return len(self.t)

    @property
    def samples(self):
        return [self.state(k) for k in range(len(self.t))]

    def state(self, k):
        """Sample ``k`` as a :class:`PhaseState`."""
        return PhaseState(self.t[k], self.q[k], self.p[k])

    def evaluate(self, t):
        """Positions and velocities from the dense output.

        Returns arrays of shape (3, 2) for scalar ``t`` and (n, 3, 2) for
        an array of times.
        """
        if self.dense is None:
            raise ValueError("trajectory has no dense output")
        scalar = np.ndim(t) == 0
        y = np.asarray(self.dense(np.atleast_1d(np.asarray(t, dtype=float))))
        y = y.T.reshape(-1, 2, 3, 2)
        q, v = y[:, 0], y[:, 1]
        return (q[0], v[0]) if scalar else (q, v)

    def state_at(self, t):
        q, v = self.evaluate(float(t))
        return PhaseState(t, q, v * self.masses.array[:, None])

    def scalars(self):
        return trajectory_scalars(self.q, self.v, self.masses, self.alpha)

    def to_csv(self, path):
        """Write one row per sample, 17 significant digits."""
        s = self.scalars()
        n = len(self.t)
        table = np.column_stack([
            self.t, self.q.reshape(n, 6), self.p.reshape(n, 6),
            s["I"], s["K"], s["L"], s["E"], s["Delta"],
        ])
        np.savetxt(path, table, fmt="%.17g", delimiter=",", header=",".join(CSV_COLUMNS), comments="")

    @classmethod
    def from_csv(cls, path, potential):
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        with open(path) as fh:
            header = fh.readline().strip().split(",")
        if header != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected CSV header")
        states = [PhaseState(row[0], row[1:7].reshape(3, 2), row[7:13].reshape(3, 2)) for row in table]
        return cls.from_states(states, potential)


def _rhs(masses, alpha):
    m = masses.array

    def f(t, y):
        q = y[:6].reshape(3, 2)
        return np.concatenate([y[6:], acceleration(q, m, alpha).ravel()])

    return f


def _interior_I_max(sol_dense, t, m, per_step=8):
    if len(t) < 2:
        return -np.inf
    frac = (np.arange(1, per_step + 1) / (per_step + 1))[None, :]
    tt = (t[:-1, None] + frac * np.diff(t)[:, None]).ravel()
    y = sol_dense(tt)
    q = y[:6].T.reshape(-1, 3, 2)
    return float(np.max(np.sum(m * dot(q, q), axis=-1)))


def integrate(initial, potential, span, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
              stop_on_close_approach=True, stop_radius=None, max_step=np.inf):
    """Integrate the three-body flow from ``initial`` over ``span``.

    Uses the DOP853 embedded pair with dense output.  The state is
    propagated as (q, v); momenta are exposed as ``m v``.

    Parameters
    ----------
    initial : PhaseState
    potential : PotentialSpec
    span : (float, float)
        Start and end time; a decreasing span integrates backwards and the
        returned samples are still ordered by increasing time.
    rtol, atol : float
    stop_on_close_approach : bool
        For ``alpha < 2`` stop once a mutual distance falls below
        ``stop_radius`` (default ``1e-6`` times the initial largest
        separation).

    Returns
    -------
    Trajectory
        ``meta.termination`` is ``"span end"``, ``"collision approach"`` or
        ``"step underflow"``.
    """
    masses = potential.masses
    m = masses.array
    alpha = potential.alpha
    t0, t1 = float(span[0]), float(span[1])
    if t0 != initial.t:
        initial = initial.replace(t=t0)
    v0 = initial.p / m[:, None]
    # raises CollisionSingularity for coincident bodies
    acceleration(initial.q, m, alpha)
    y0 = np.concatenate([initial.q.ravel(), v0.ravel()])

    events = None
    if stop_on_close_approach and alpha < 2:
        if stop_radius is None:
            stop_radius = CLOSE_APPROACH * float(np.max(pair_distances(initial.q)))

        def close_approach(t, y):
            return float(np.min(pair_distances(y[:6].reshape(3, 2)))) - stop_radius

        close_approach.terminal = True
        close_approach.direction = -1
        events = [close_approach]

    sol = solve_ivp(_rhs(masses, alpha), (t0, t1), y0, method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True, events=events, max_step=max_step)

    t = sol.t
    y = sol.y.T
    if t1 < t0:
        t, y = t[::-1], y[::-1]
    keep = np.concatenate([[True], np.diff(t) > 0])
    t, y = t[keep], y[keep]
    q = y[:, :6].reshape(-1, 3, 2)
    v = y[:, 6:].reshape(-1, 3, 2)

    r_min = float(np.min(pair_distances(q)))
    if sol.status == 1:
        termination = "collision approach"
    elif sol.status == 0:
        termination = "span end"
    else:
        scale = float(np.max(pair_distances(initial.q)))
        termination = "collision approach" if r_min < 1e-3 * scale else "step underflow"

    s = trajectory_scalars(q, v, m, alpha)
    I_max = max(float(np.max(s["I"])), _interior_I_max(sol.sol, t, m))
    meta = TrajectoryMeta(
        alpha=alpha, rtol=rtol, atol=atol, termination=termination, I_max=I_max, r_min=r_min,
        E_drift=float(np.max(np.abs(s["E"] - s["E"][0 if t1 >= t0 else -1]))),
        L_drift=float(np.max(np.abs(s["L"] - s["L"][0 if t1 >= t0 else -1]))),
        nsteps=len(t) - 1,
    )
    return Trajectory(t, q, v, potential, dense=sol.sol, meta=meta)


def virial_state(rng, potential, zero_angular=False):
    """Random state with ``K = alpha V`` (``K = sum m_i m_j`` when alpha = 0).

    Momenta are projected onto zero linear momentum and ``dI/dt = 0``
    (and zero angular momentum when asked), then rescaled so that
    ``d2I/dt2 = 2(K - alpha V)`` vanishes initially.  For alpha = -2 this
    is the zero-energy, constant-I family.
    """
    from .core import project_constraints, random_state

    masses = potential.masses
    m = masses.array
    alpha = potential.alpha
    state = project_constraints(random_state(rng, masses), masses, zero_linear=True,
                                zero_angular=zero_angular, zero_dIdt=True)
    mm = m[0] * m[1] + m[1] * m[2] + m[2] * m[0]
    target = mm if alpha == 0 else alpha * potential_energy(state.q, m, alpha)
    K = float(np.sum(dot(state.p, state.p) / m))
    return state.replace(p=state.p * np.sqrt(target / K))


def sample_bounded_state(seed, potential, horizon=10.0, min_separation=0.05, max_growth=4.0,
                         max_tries=200, **kw):
    """Draw virial states until one stays well separated and bounded.

    A draw is accepted when, over ``horizon`` characteristic times, no
    mutual distance drops below ``min_separation`` times the initial
    largest one and I stays within a factor ``max_growth`` of its start.

    Returns
    -------
    (PhaseState, Trajectory)
        The accepted state and its trajectory over the horizon.
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        state = virial_state(rng, potential, **kw)
        T = horizon * characteristic_time(state, potential)
        scale = float(np.max(pair_distances(state.q)))
        traj = integrate(state, potential, (0.0, T), stop_radius=min_separation * scale)
        if traj.meta.termination != "span end":
            continue
        I = traj.scalars()["I"]
        if I.max() <= max_growth * I[0] and I.min() >= I[0] / max_growth:
            return state, traj
    raise RuntimeError(f"no bounded state in {max_tries} draws")
