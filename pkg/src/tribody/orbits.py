"""Symmetry-reduced shooting for figure-eight orbits and their certification.

Equal masses only.  The orbit starts in an Euler configuration,
``q1 = -q2 = x``, ``q3 = 0``, ``v1 = v2 = -w/2``, ``v3 = w``, which has
zero linear and angular momentum by construction.  A quarter period later
the configuration is isosceles with body 3 on the symmetry axis:

    q3 . v3 = 0,   (q1 - q2) . q3 = 0,   (v1 - v2) ^ q3 = 0.

Rotations and the scaling symmetry of the homogeneous potential are
fixed by mapping ``x`` onto the unit vector ``(1, 0)``; the remaining
unknowns are ``w`` and the quarter period.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares

from .conserved import (
    constant_report, energy_partition_check, momentum_force_residuals,
)
from .core import Masses, PhaseState, dot, format_state_literal, parse_state_literal, wedge
from .dynamics import integrate
from .errors import ShootingCollision, ShootingError, ThreeBodyError
from .geometry import circumcircle, max_abs, similarity_report
from .potential import PotentialSpec, potential_energy
from .scaling import scale_state, scaled_similarity_report
from .syzygy import detect_events

SHOOT_RTOL = 1e-12
SHOOT_ATOL = 1e-14
CONVERGED = 1e-9


@dataclass(frozen=True)
class OrbitRecord:
    """A periodic orbit with its certification residuals and provenance.

    ``residuals`` holds ``periodicity``, ``L_drift``, ``E`` and
    ``I_drift``, all relative.  ``provenance`` holds ``source``,
    ``iterations``, ``rtol`` and ``atol``.
    """

    alpha: float
    masses: Masses
    initial: PhaseState
    period: float
    residuals: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def potential(self):
        return PotentialSpec(self.alpha, self.masses)


def euler_state(x, w, masses, t=0.0):
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    m = Masses.of(masses).array
    q = np.array([x, -x, [0.0, 0.0]])
    v = np.array([-0.5 * w, -0.5 * w, w])
    return PhaseState(t, q, m[:, None] * v)


def euler_parameters(state, masses):
    """``(x, w)`` of a state near an Euler configuration with body 3 in the middle."""
    v = state.velocities(masses)
    return 0.5 * (state.q[0] - state.q[1]), v[2].copy()


def _rot(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _energy_zero_speed(w_dir, masses, alpha):
    # |w| giving E = 0 at x = (1, 0); only alpha < 0 has V < 0 there
    m = masses.array
    q = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 0.0]])
    V = potential_energy(q, m, alpha)
    v = np.array([-0.5 * w_dir, -0.5 * w_dir, w_dir])
    K1 = float(np.sum(m * dot(v, v)))
    return np.sqrt(-2.0 * V / K1)


def symmetry_residuals(q, v):
    """Scaled residuals of the three isosceles conditions at a quarter period."""
    lq = float(np.max(np.hypot(q[:, 0], q[:, 1])))
    lv = float(np.max(np.hypot(v[:, 0], v[:, 1])))
    return np.array([
        dot(q[2], v[2]) / (lq * lv),
        dot(q[0] - q[1], q[2]) / lq**2,
        wedge(v[0] - v[1], q[2]) / (lq * lv),
    ])


def _quarter(w, tau, potential, rtol, atol):
    state = euler_state([1.0, 0.0], w, potential.masses)
    if not (np.isfinite(tau) and tau > 0):
        raise ShootingError("quarter period left the positive axis")
    traj = integrate(state, potential, (0.0, tau), rtol=rtol, atol=atol)
    if traj.meta.termination != "span end":
        raise ShootingCollision("collision during shooting")
    return traj


def shoot_periodic(guess, potential, rtol=SHOOT_RTOL, atol=SHOOT_ATOL, tol=CONVERGED,
                   max_nfev=200, source="guess"):
    """Refine a figure-eight guess by shooting on the quarter-period map.

    Parameters
    ----------
    guess : OrbitRecord or (PhaseState, float)
        Initial state near an Euler configuration and a period estimate.
    potential : PotentialSpec
        Equal masses are required.  For ``alpha = -2`` the speed is tied
        to ``E = 0`` at every evaluation and only the direction of ``w``
        is free.
    tol : float
        Convergence threshold on the norm of the symmetry residuals.

    Returns
    -------
    OrbitRecord
        Expressed in the rotation and scale of the guess.

    Raises
    ------
    ShootingError
        No convergence, or convergence onto a non-minimal symmetric
        instant (more than one syzygy inside the quarter period).
    ShootingCollision
        A shooting integration ran into a close approach.
    """
    masses = potential.masses
    alpha = potential.alpha
    m = masses.array
    if np.ptp(m) > 1e-14 * m.max():
        raise ValueError("figure-eight shooting needs equal masses")
    if isinstance(guess, OrbitRecord):
        state, period = guess.initial, guess.period
    else:
        state, period = guess
    x, w = euler_parameters(state, masses)
    ell = float(np.hypot(*x))
    theta = float(np.arctan2(x[1], x[0]))
    # canonical gauge: x -> (1, 0), q scales by 1/ell
    w_c = _rot(-theta) @ w * ell ** (-alpha / 2.0)
    tau_c = 0.25 * period * ell ** (-(1.0 - alpha / 2.0))
    fixed_energy = alpha == -2

    if fixed_energy:
        z0 = np.array([np.arctan2(w_c[1], w_c[0]), tau_c])
    else:
        z0 = np.array([w_c[0], w_c[1], tau_c])

    def unpack(z):
        if fixed_energy:
            d = np.array([np.cos(z[0]), np.sin(z[0])])
            return d * _energy_zero_speed(d, masses, alpha), z[1]
        return z[:2], z[2]

    best = {"res": np.inf, "n": 0}

    def residual(z):
        best["n"] += 1
        wz, tau = unpack(z)
        traj = _quarter(wz, tau, potential, rtol, atol)
        r = symmetry_residuals(traj.q[-1], traj.v[-1])
        nr = float(np.linalg.norm(r))
        if nr < best["res"]:
            best["res"] = nr
        return r

    try:
        sol = least_squares(residual, z0, method="lm", x_scale="jac", diff_step=1e-7,
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
    except ShootingCollision as exc:
        raise ShootingCollision("collision during shooting", best["res"], best["n"]) from exc
    except ShootingError as exc:
        raise ShootingError("quarter period left the positive axis", best["res"], best["n"]) from exc
    res = float(np.linalg.norm(sol.fun))
    if not res < tol:
        raise ShootingError("shooting did not converge", best["res"], best["n"])
    wz, tau = unpack(sol.x)
    quarter = _quarter(wz, tau, potential, rtol, atol)
    n_zero = sum(1 for e in detect_events(quarter) if 0.0 < e.t < tau * (1 - 1e-9))
    if n_zero != 1:
        raise ShootingError(f"converged onto a non-minimal symmetric instant ({n_zero} syzygies "
                            f"inside the quarter period)", res, best["n"])

    # back to the guess frame
    R = _rot(theta)
    x_out = ell * (R @ np.array([1.0, 0.0]))
    w_out = (R @ wz) * ell ** (alpha / 2.0)
    T = 4.0 * tau * ell ** (1.0 - alpha / 2.0)
    initial = euler_state(x_out, w_out, masses)
    record = OrbitRecord(alpha, masses, initial, float(T), {},
                         {"source": source, "iterations": int(sol.nfev), "rtol": rtol, "atol": atol})
    return replace(record, residuals=orbit_residuals(record, rtol, atol)[0])


def periodicity_residual(initial, final):
    """``max(|dq| / max|q|, |dp| / max|p|)`` between two states."""
    lq = float(np.max(np.hypot(initial.q[:, 0], initial.q[:, 1])))
    lp = float(np.max(np.hypot(initial.p[:, 0], initial.p[:, 1])))
    return max(float(np.max(np.abs(final.q - initial.q))) / lq,
               float(np.max(np.abs(final.p - initial.p))) / lp)


def orbit_residuals(record, rtol=SHOOT_RTOL, atol=SHOOT_ATOL):
    """Integrate one period and return ``(residuals, trajectory)``."""
    traj = integrate(record.initial, record.potential, (0.0, record.period), rtol=rtol, atol=atol)
    s = traj.scalars()
    q, p = traj.q, traj.p
    qp = np.sum(np.hypot(q[..., 0], q[..., 1]) * np.hypot(p[..., 0], p[..., 1]), axis=-1)
    K = s["K"]
    V = s["E"] - 0.5 * K
    Escale = 0.5 * K + np.abs(V)
    res = {
        "periodicity": periodicity_residual(record.initial, traj.state(len(traj) - 1))
        if traj.meta.termination == "span end" else float("inf"),
        "L_drift": float(np.max(np.abs(s["L"]) / qp)),
        "E": float(np.max(np.abs(s["E"]) / Escale)) if record.alpha == -2
        else float(np.max(np.abs(s["E"] - s["E"][0]) / Escale)),
        "I_drift": float(np.ptp(s["I"]) / np.mean(s["I"])),
    }
    return res, traj


@dataclass
class OrbitCertificate:
    """Result of :func:`verify_orbit`; ``failures`` lists every failed check."""

    values: dict
    tolerances: dict
    failures: list
    loci: np.ndarray = None
    syzygies: list = None
    trajectory: object = None

    @property
    def passed(self):
        return not self.failures


TOLERANCES = {
    "periodicity": 1e-8,
    "L_drift": 1e-11,
    "E": 1e-8,
    "I_drift": 1e-7,
    "kappa": 1e-6,
    "similarity": 1e-6,
    "constant_drift": 1e-7,
    "constant_reference": 1e-6,
    "virial": 1e-8,
    "inner": 1e-7,
    "outer": 1e-7,
    "scaled_similarity": 1e-9,
}


def _locus_row(state, masses, hyp_tol):
    from .geometry import centre_of_normals, centre_of_tangents
    row = np.full(6, np.nan)
    try:
        ct = centre_of_tangents(state, masses, hyp_tol=hyp_tol)
        cn = centre_of_normals(state, masses, hyp_tol=hyp_tol)
        if ct.kind == "point":
            row[0:2] = ct.point
        if cn.kind == "point":
            row[2:4] = cn.point
        row[4:6] = circumcircle(state.q).center
    except ThreeBodyError:
        pass
    return row


def verify_orbit(record, rtol=1e-13, atol=1e-15, n_samples=240, hyp_tol=1e-8):
    """Re-integrate a record at tightened tolerance and certify it.

    Always reports periodicity, L, E and I drift and the syzygy count on
    ``[0, T)``.  For ``alpha = -2`` it also runs the similarity report,
    the homogeneous constant, the energy partition and the
    momentum/force identities at ``n_samples`` uniform times, and exports
    the ``C_t``, ``C_n``, ``C_o`` loci.  For other exponents the similarity
    report is expected to fail its constant-I hypothesis while the scaled
    report passes; both outcomes are recorded.
    """
    res, traj = orbit_residuals(record, rtol, atol)
    values = dict(res)
    tols = {k: TOLERANCES[k] for k in res}
    if record.alpha != -2:
        # I is not expected to be constant; reported, not checked
        del tols["I_drift"]
    masses = record.masses
    T = record.period
    events = [e for e in detect_events(traj) if e.t < T * (1 - 1e-9)]
    values["syzygies"] = len(events)
    ts = (np.arange(n_samples) + 0.5) * T / n_samples
    states = [traj.state_at(t) for t in ts]

    loci = None
    if record.alpha == -2:
        kap = sim = inner = outer = 0.0
        rows = []
        for st in states:
            rep = similarity_report(st, masses, hyp_tol=hyp_tol)
            kap = max(kap, float(np.max(np.abs(rep["ratio"]))))
            sim = max(sim, max_abs(rep))
            mf = momentum_force_residuals(st, masses, record.alpha)
            inner = max(inner, abs(mf.inner))
            outer = max(outer, abs(mf.outer))
            rows.append(np.concatenate([[st.t], _locus_row(st, masses, hyp_tol)]))
        loci = np.array(rows)
        cr = constant_report(traj)
        part = energy_partition_check(traj)
        values.update(kappa=kap, similarity=sim, inner=inner, outer=outer,
                      constant_drift=cr.drift, constant_reference=cr.reference_error,
                      virial=part["virial"])
        for k in ("kappa", "similarity", "inner", "outer", "constant_drift",
                  "constant_reference", "virial"):
            tols[k] = TOLERANCES[k]
        values["min_momentum"] = float(np.min(np.hypot(traj.p[..., 0], traj.p[..., 1])))
    else:
        rejected = 0
        scaled = 0.0
        for st in states:
            try:
                similarity_report(st, masses, hyp_tol=hyp_tol)
            except ThreeBodyError:
                rejected += 1
            sc = scale_state(st, masses)
            scaled = max(scaled, max_abs(scaled_similarity_report(sc, masses)))
        values["similarity_rejected"] = rejected
        values["scaled_similarity"] = scaled
        tols["scaled_similarity"] = TOLERANCES["scaled_similarity"]

    failures = [f"{k}={values[k]:.3g} exceeds {tol:.1g}" for k, tol in tols.items()
                if not values[k] < tol]
    return OrbitCertificate(values, tols, failures, loci, events, traj)


# orbit library: "<state literal> | key=value ... | crc32=<hex>"

_FIELDS = ("alpha", "period", "periodicity", "L_drift", "E", "I_drift", "iterations", "rtol", "atol", "source")


def format_record(record):
    vals = {"alpha": record.alpha, "period": record.period, **record.residuals, **record.provenance}
    parts = []
    for k in _FIELDS:
        if k in vals:
            v = vals[k]
            parts.append(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}")
    body = f"{format_state_literal(record.masses, record.initial)} | {' '.join(parts)}"
    return f"{body} | crc32={zlib.crc32(body.encode()):08x}"


def parse_record(line):
    """Parse one orbit-library line; raises ValueError on a bad checksum."""
    parts = [s.strip() for s in line.strip().split("|")]
    if len(parts) != 3 or not parts[2].startswith("crc32="):
        raise ValueError("orbit record needs '<state> | <fields> | crc32=<hex>'")
    body = line.strip().rsplit("|", 1)[0].rstrip()
    if f"{zlib.crc32(body.encode()):08x}" != parts[2][6:]:
        raise ValueError("orbit record checksum mismatch")
    masses, state = parse_state_literal(parts[0])
    kv = dict(tok.split("=", 1) for tok in parts[1].split())
    residuals = {k: float(kv[k]) for k in ("periodicity", "L_drift", "E", "I_drift") if k in kv}
    prov = {}
    if "source" in kv:
        prov["source"] = kv["source"]
    if "iterations" in kv:
        prov["iterations"] = int(kv["iterations"])
    for k in ("rtol", "atol"):
        if k in kv:
            prov[k] = float(kv[k])
    return OrbitRecord(float(kv["alpha"]), masses, state, float(kv["period"]), residuals, prov)


def read_library(path):
    """Records of a library file; blank lines and ``#`` comments are skipped."""
    out = []
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                out.append(parse_record(line))
            except (ValueError, KeyError) as exc:
                raise ValueError(f"{path}:{n}: {exc}") from None
    return out


def append_record(path, record):
    with open(path, "a") as fh:
        fh.write(format_record(record) + "\n")


def read_guesses(path, alpha=None):
    """Guess records (same line format, checksum included); optionally filtered by exponent."""
    recs = read_library(path)
    return [r for r in recs if alpha is None or r.alpha == alpha]


def default_guesses_path():
    from importlib.resources import files
    return str(files("tribody") / "data" / "guesses.txt")
