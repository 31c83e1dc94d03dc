"""Command-line driver: simulate, verify, syzygy, find-orbit, theorem5-fuzz.

Runs are configured by an INI-style file::

    [potential]
    alpha = -1
    [initial]
    state = 1 1 1 / 1 0 0 1 -1 -1 / 1 1 -0.2 -1.4 -0.8 0.4
    [integration]
    t_end = 10

Every check prints one line
``theorem=<id> pair=<ij> residual=<value> tol=<value> status=PASS|FAIL``
and the exit status is 0 only when every check passes.
"""
from __future__ import annotations

import argparse
import configparser
import os
import re
import sys
from dataclasses import dataclass

import numpy as np

from .conserved import constant_report, energy_partition_check, momentum_force_residuals
from .core import Masses, PhaseState, parse_state_literal, project_constraints
from .dynamics import DEFAULT_ATOL, DEFAULT_RTOL, Trajectory, integrate
from .errors import ConfigError, ShootingError, ThreeBodyError
from .geometry import (
    centre_of_normals, centre_of_tangents, circumcircle_check, sample_triplet,
    similarity_report, verify_triplet,
)
from .orbits import (
    SHOOT_ATOL, SHOOT_RTOL, append_record, default_guesses_path, read_guesses, read_library, shoot_periodic, verify_orbit,
)
from .potential import PAIRS, PotentialSpec
from .scaling import congruent_triangles, general_area_residual, scale_state, scaled_similarity_report
from .syzygy import delta_ode_residual, detect_events, events_to_csv, gap_certificate, omega_bound

PAIR_LABELS = ("12", "23", "31")  # cyclic slot n holds the pair (i, j) of CYCLIC[n]

DEFAULT_TOLS = {
    "identity": 1e-10,
    "trajectory": 1e-9,
    "drift": 1e-8,
    "constant_drift": 1e-7,
    "constant_reference": 1e-6,
    "virial": 1e-8,
    "momentum_force": 1e-7,
}


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "yes", "true", "on"):
        return True
    if v in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


SCHEMA = {
    "potential": {"alpha": float, "masses": str},
    "initial": {"state": str, "orbit": str, "orbit_index": int, "project": str},
    "input": {"trajectory": str},
    "integration": {"t_start": float, "t_end": float, "rtol": float, "atol": float,
                    "stop_on_close_approach": _bool},
    "verify": {"hypothesis_tol": float, "tol": float, "samples": int},
    "output": {"dir": str, "seed": int},
}

PROJECT_FLAGS = ("linear", "angular", "dIdt")


@dataclass
class RunConfig:
    path: str
    alpha: float = None
    masses: Masses = None
    initial: PhaseState = None
    orbit: object = None
    trajectory: str = None
    t_start: float = 0.0
    t_end: float = None
    rtol: float = None
    atol: float = None
    stop_on_close_approach: bool = True
    hypothesis_tol: float = 1e-10
    tol: float = None
    samples: int = 100
    out_dir: str = None
    seed: int = 0

    @property
    def potential(self):
        return PotentialSpec(self.alpha, self.masses)

    def tolerance(self, family):
        return self.tol if self.tol is not None else DEFAULT_TOLS[family]


def _key_lines(text):
    lines = {}
    section = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"\[(.+)\]$", line)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, None), n)
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip().lower()), n)
    return lines


def load_config(path):
    """Parse and validate a run configuration.

    Raises
    ------
    ConfigError
        Syntax errors, unknown sections or keys, bad values; the message
        carries the offending line number.
    """
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    cp = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#",))
    try:
        cp.read_string(text, source=path)
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any section", exc.lineno) from None
    except configparser.ParsingError as exc:
        raise ConfigError(f"cannot parse {exc.errors[0][1]!r}", exc.errors[0][0]) from None
    where = _key_lines(text)
    base = os.path.dirname(os.path.abspath(path))
    cfg = RunConfig(path=path)
    values = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", where.get((section, None)))
        for key, raw in cp.items(section):
            line = where.get((section, key))
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", line)
            try:
                values[(section, key)] = (SCHEMA[section][key](raw), line)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}", line) from None

    def get(section, key, default=None):
        return values.get((section, key), (default, None))

    def path_of(v):
        return v if v is None or os.path.isabs(v) else os.path.join(base, v)

    alpha, _ = get("potential", "alpha")
    cfg.alpha = alpha
    masses_text, mline = get("potential", "masses")
    if masses_text is not None:
        try:
            cfg.masses = Masses.of(float(tok) for tok in masses_text.split())
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad masses: {exc}", mline) from None

    state_text, sline = get("initial", "state")
    orbit_path, oline = get("initial", "orbit")
    if state_text is not None and orbit_path is not None:
        raise ConfigError("give either an initial state or an orbit, not both", oline)
    if state_text is not None:
        try:
            masses, state = parse_state_literal(state_text)
        except ValueError as exc:
            raise ConfigError(f"bad state: {exc}", sline) from None
        if cfg.masses is not None and cfg.masses != masses:
            raise ConfigError("state masses disagree with [potential] masses", sline)
        cfg.masses, cfg.initial = masses, state
    if orbit_path is not None:
        index, iline = get("initial", "orbit_index", 0)
        try:
            records = read_library(path_of(orbit_path))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read orbit library: {exc}", oline) from None
        if not 0 <= index < len(records):
            raise ConfigError(f"orbit_index {index} out of range ({len(records)} records)", iline or oline)
        rec = records[index]
        if cfg.alpha is not None and cfg.alpha != rec.alpha:
            raise ConfigError(f"orbit has alpha={rec.alpha}, config says {cfg.alpha}", oline)
        cfg.orbit, cfg.alpha, cfg.masses, cfg.initial = rec, rec.alpha, rec.masses, rec.initial

    project, pline = get("initial", "project", "none")
    flags = [f.strip() for f in project.split(",") if f.strip()]
    if flags == ["all"]:
        flags = list(PROJECT_FLAGS)
    elif flags == ["none"]:
        flags = []
    bad = [f for f in flags if f not in PROJECT_FLAGS]
    if bad:
        raise ConfigError(f"unknown projection flag {bad[0]!r} (use all, none or {', '.join(PROJECT_FLAGS)})", pline)
    if flags and cfg.initial is not None:
        try:
            cfg.initial = project_constraints(cfg.initial, cfg.masses, *(f in flags for f in PROJECT_FLAGS))
        except ThreeBodyError as exc:
            raise ConfigError(str(exc), pline) from None

    cfg.trajectory = path_of(get("input", "trajectory")[0])
    for key in ("t_start", "t_end", "rtol", "atol", "stop_on_close_approach"):
        v, line = get("integration", key)
        if v is not None:
            if key in ("rtol", "atol") and not v > 0:
                raise ConfigError(f"{key} must be positive", line)
            setattr(cfg, key, v)
    for key in ("hypothesis_tol", "tol", "samples"):
        v, line = get("verify", key)
        if v is not None:
            if not v > 0:
                raise ConfigError(f"{key} must be positive", line)
            setattr(cfg, key, v)
    cfg.out_dir = path_of(get("output", "dir")[0])
    cfg.seed = get("output", "seed", 0)[0]
    if cfg.t_end is not None and cfg.t_end == cfg.t_start:
        raise ConfigError("empty integration span", get("integration", "t_end")[1])
    return cfg


# -- reporting ---------------------------------------------------------------

class Report:
    """Collects check lines and the overall status."""

    def __init__(self, stream=None):
        self.stream = stream or sys.stdout
        self.failed = 0
        self.count = 0

    def check(self, theorem, pair, residual, tol, passed=None):
        residual = float(residual)
        if passed is None:
            passed = bool(abs(residual) < tol)
        self.count += 1
        self.failed += not passed
        status = "PASS" if passed else "FAIL"
        print(f"theorem={theorem} pair={pair} residual={residual:.3e} tol={tol:.1e} status={status}",
              file=self.stream)

    def error(self, theorem, exc, tol=float("nan")):
        self.check(theorem, "all", float("nan"), tol, passed=False)
        self.note(f"{theorem}: {exc}")

    def note(self, text):
        print(f"# {text}", file=self.stream)

    @property
    def status(self):
        return 0 if self.failed == 0 else 1


def _require(cfg, *names):
    for name in names:
        if getattr(cfg, name) is None:
            hint = {"alpha": "[potential] alpha", "initial": "[initial] state or orbit",
                    "t_end": "[integration] t_end"}[name]
            raise ConfigError(f"{hint} is required for this command")


def _trajectory(cfg):
    """Trajectory from ``[input] trajectory`` or by integrating the initial state."""
    _require(cfg, "alpha")
    if cfg.trajectory is not None:
        if cfg.masses is None:
            raise ConfigError("[potential] masses (or an initial state) is required to read a trajectory")
        try:
            return Trajectory.from_csv(cfg.trajectory, cfg.potential)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read trajectory: {exc}") from None
    _require(cfg, "initial")
    if cfg.t_end is None and cfg.orbit is not None:
        cfg.t_end = cfg.t_start + cfg.orbit.period
    _require(cfg, "t_end")
    # stored orbits are only periodic to shooting accuracy, so replay them at it
    rtol = cfg.rtol or (SHOOT_RTOL if cfg.orbit is not None else DEFAULT_RTOL)
    atol = cfg.atol or (SHOOT_ATOL if cfg.orbit is not None else DEFAULT_ATOL)
    return integrate(cfg.initial.replace(t=cfg.t_start), cfg.potential, (cfg.t_start, cfg.t_end),
                     rtol=rtol, atol=atol, stop_on_close_approach=cfg.stop_on_close_approach)


def _out(cfg, name):
    if cfg.out_dir is None:
        return None
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def _sample_times(traj, n):
    # midpoints avoid the first instant, where a start from rest is degenerate
    return traj.t_start + (np.arange(n) + 0.5) * (traj.t_end - traj.t_start) / n


# -- subcommands -------------------------------------------------------------

def cmd_simulate(cfg, rep):
    traj = _trajectory(cfg)
    s = traj.scalars()
    K = s["K"]
    V = s["E"] - 0.5 * K
    e_scale = float(0.5 * K[0] + abs(V[0]))
    q, p = traj.q, traj.p
    l_scale = float(np.sum(np.hypot(*q[0].T) * np.hypot(*p[0].T))) or 1.0
    rep.note(f"termination={traj.meta.termination} steps={traj.meta.nsteps} t_end={traj.t_end:.17g}")
    tol = cfg.tolerance("drift")
    rep.check("energy-drift", "all", np.max(np.abs(s["E"] - s["E"][0])) / e_scale, tol)
    rep.check("angular-momentum-drift", "all", np.max(np.abs(s["L"] - s["L"][0])) / l_scale, tol)
    rep.check("integration", "all", 0.0, tol, passed=traj.meta.termination != "step underflow")
    path = _out(cfg, "trajectory.csv")
    if path:
        traj.to_csv(path)
        rep.note(f"wrote {path}")


def _verify_state(cfg, rep):
    state, masses = cfg.initial, cfg.masses
    tol, htol = cfg.tolerance("identity"), cfg.hypothesis_tol
    for name, fn in (("tangents", centre_of_tangents), ("normals", centre_of_normals)):
        try:
            c = fn(state, masses, htol)
            rep.check(name, "all", c.residual, tol)
            where = f"point={c.point.tolist()}" if c.kind == "point" else f"direction={c.direction.tolist()}"
            rep.note(f"{name}: kind={c.kind} {where}")
        except ThreeBodyError as exc:
            rep.error(name, exc, tol)
    try:
        cc = circumcircle_check(state, masses, htol)
        for key, val in cc.residuals.items():
            rep.check(f"diameter-{key.replace('_', '-')}", "all", val, tol)
        rep.note(f"circumcircle: center={cc.circ.center.tolist()} radius={cc.circ.radius!r} "
                 f"ct={cc.ct.tolist()} cn={cc.cn.tolist()}")
    except ThreeBodyError as exc:
        rep.error("diameter", exc, tol)
    try:
        report = similarity_report(state, masses, htol)
        for key, vals in report.items():
            for n, val in enumerate(vals):
                rep.check(f"similarity-{key.replace('_', '-')}", PAIR_LABELS[n], val, tol)
    except ThreeBodyError as exc:
        rep.error("similarity", exc, tol)


def _verify_orbit(cfg, rep):
    cert = verify_orbit(cfg.orbit, hyp_tol=max(cfg.hypothesis_tol, 1e-8))
    for key, tol in cert.tolerances.items():
        rep.check(f"orbit-{key.replace('_', '-')}", "all", cert.values[key], tol)
    for key, val in cert.values.items():
        if key not in cert.tolerances:
            rep.note(f"{key}={val}")
    path = _out(cfg, "orbit.csv")
    if path:
        cert.trajectory.to_csv(path)
        rep.note(f"wrote {path}")
    path = _out(cfg, "loci.csv")
    if path and cert.loci is not None:
        np.savetxt(path, cert.loci, fmt="%.17g", delimiter=",",
                   header="t,ct_x,ct_y,cn_x,cn_y,co_x,co_y", comments="")
        rep.note(f"wrote {path}")


def _verify_scaled(cfg, rep):
    traj = _trajectory(cfg)
    masses = cfg.masses
    tol = cfg.tolerance("trajectory")
    worst = {}
    area = np.zeros(3)
    ode = 0.0
    rows = []
    failures = []
    for t in _sample_times(traj, cfg.samples):
        st = traj.state_at(t)
        sc = scale_state(st, masses)
        for key, val in sc.invariant_residuals(masses).items():
            worst[("invariant-" + key, "all")] = max(worst.get(("invariant-" + key, "all"), 0.0), abs(val))
        try:
            report = scaled_similarity_report(sc, masses, cfg.hypothesis_tol * 10)
        except ThreeBodyError as exc:
            failures.append(f"t={t:.17g}: {exc}")
            continue
        for key, vals in report.items():
            for n, val in enumerate(vals):
                k = (key.replace("_", "-"), PAIR_LABELS[n])
                worst[k] = max(worst.get(k, 0.0), abs(val))
        for n, pair in enumerate(PAIRS):
            area[n] = max(area[n], abs(general_area_residual(st, masses, pair, relative=True,
                                                             hyp_tol=cfg.hypothesis_tol * 10)))
        ode = max(ode, abs(delta_ode_residual(traj, t)))
        qt, tri = congruent_triangles(sc, masses)
        rows.append(np.concatenate([[t], qt.ravel(), tri.ravel()]))
    for (key, pair), val in worst.items():
        rep.check(f"scaled-{key}", pair, val, tol)
    for n in range(3):
        rep.check("area-identity", PAIR_LABELS[n], area[n], tol)
    rep.check("area-equation", "all", ode, tol)
    rep.check("scaled-samples", "all", len(failures), 1.0)
    for f in failures[:5]:
        rep.note(f)
    path = _out(cfg, "scaled_triangles.csv")
    if path:
        header = ",".join([f"qt{k}{c}" for k in (1, 2, 3) for c in "xy"]
                          + [f"w{k}{c}" for k in (1, 2, 3) for c in "xy"])
        np.savetxt(path, np.array(rows).reshape(-1, 13), fmt="%.17g", delimiter=",",
                   header="t," + header, comments="")
        rep.note(f"wrote {path}")


def _verify_constants(cfg, rep):
    traj = _trajectory(cfg)
    masses, alpha = cfg.masses, cfg.alpha
    try:
        cr = constant_report(traj)
        rep.check("constant-drift", "all", cr.drift, cfg.tolerance("constant_drift"))
        if alpha == -2:
            rep.check("constant-reference", "all", cr.reference_error, cfg.tolerance("constant_reference"))
        path = _out(cfg, "constants.csv")
        if path:
            cr.to_csv(path)
            rep.note(f"wrote {path}")
    except ThreeBodyError as exc:
        rep.error("constant-drift", exc)
    I_const = True
    try:
        part = energy_partition_check(traj)
        for key, val in part.items():
            rep.check(f"energy-partition-{key.replace('_', '-')}", "all", val, cfg.tolerance("virial"))
    except ThreeBodyError as exc:
        I_const = False
        rep.error("energy-partition", exc, cfg.tolerance("virial"))
    inner = outer = 0.0
    for st in traj.samples:
        mf = momentum_force_residuals(st, masses, alpha)
        inner, outer = max(inner, abs(mf.inner)), max(outer, abs(mf.outer))
    tol = cfg.tolerance("momentum_force")
    rep.check("momentum-force-outer", "all", outer, tol)
    if I_const:
        rep.check("momentum-force-inner", "all", inner, tol)
    else:
        rep.note(f"momentum-force-inner={inner:.3e} not checked: I is not constant")


def cmd_verify(cfg, rep, mode):
    if mode == "scaled":
        _verify_scaled(cfg, rep)
    elif mode == "constants":
        _verify_constants(cfg, rep)
    elif cfg.orbit is not None:
        _verify_orbit(cfg, rep)
    else:
        _require(cfg, "initial")
        _verify_state(cfg, rep)


def cmd_syzygy(cfg, rep):
    traj = _trajectory(cfg)
    if traj.alpha > 2:
        raise ConfigError("the zero-gap bound requires alpha <= 2")
    bound = omega_bound(traj)
    events = detect_events(traj, bound=bound)
    print("t,kind,detail", file=rep.stream)
    for e in events:
        print(f"{e.t:.17g},{e.kind},{e.detail_label}", file=rep.stream)
    path = _out(cfg, "events.csv")
    if path:
        events_to_csv(events, path)
    rep.check("omega-bound", "all", -bound.min_margin / bound.omega0_sq, 0.0, passed=bound.holds)
    cert = gap_certificate(events, bound, traj.t_start, traj.t_end)
    for n, (a, b, gap, ok) in enumerate(cert.gaps):
        rep.check("zero-gap", str(n + 1), gap, cert.T0, passed=ok)
    first = events[0].t - traj.t_start if events else traj.t_end - traj.t_start
    rep.check("zero-gap-first", "all", first, cert.T0, passed=cert.first_ok)
    last = traj.t_end - events[-1].t if events else traj.t_end - traj.t_start
    rep.check("zero-gap-tail", "all", last, cert.T0, passed=cert.tail_ok)
    rep.note(cert.summary())
    rep.note(f"events={len(events)} termination={traj.meta.termination if traj.meta else 'csv input'}")


def cmd_find_orbit(args, rep):
    path = args.guess or default_guesses_path()
    try:
        guesses = read_guesses(path, args.alpha)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read guesses: {exc}") from None
    if not guesses:
        raise ConfigError(f"no guess with alpha={args.alpha} in {path}")
    for n, g in enumerate(guesses):
        try:
            rec = shoot_periodic(g, g.potential, source=os.path.basename(path))
        except ShootingError as exc:
            rep.error("orbit-shooting", exc, 1e-9)
            continue
        cert = verify_orbit(rec)
        for key, tol in cert.tolerances.items():
            rep.check(f"orbit-{key.replace('_', '-')}", str(n + 1), cert.values[key], tol)
        rep.note(f"period={rec.period!r} syzygies={cert.values['syzygies']} iterations={rec.provenance['iterations']}")
        if cert.passed and args.library:
            append_record(args.library, rec)
            rep.note(f"appended to {args.library}")


def cmd_fuzz(args, rep, out_dir=None):
    children = np.random.SeedSequence(args.seed).spawn(args.n)
    tol = 1e-10
    worst = {}
    per_sample = np.empty(args.n)
    failed = 0
    for n, child in enumerate(children):
        try:
            res = verify_triplet(sample_triplet(child))
        except ThreeBodyError:
            failed += 1
            per_sample[n] = np.nan
            continue
        per_sample[n] = max(float(np.max(np.abs(v))) for v in res.values())
        failed += not per_sample[n] < tol
        for key, vals in res.items():
            worst[key] = max(worst.get(key, 0.0), float(np.max(np.abs(vals))))
    for key in sorted(worst):
        rep.check(f"dual-triplet-{key.replace('_', '-')}", "all", worst[key], tol)
    rep.check("dual-triplet-roundtrip", "all", failed, 1.0)
    rep.note(f"passed={args.n - failed}/{args.n} seed={args.seed}")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "theorem5_fuzz.csv")
        np.savetxt(path, np.column_stack([np.arange(args.n), per_sample]), fmt=["%d", "%.17g"],
                   delimiter=",", header="index,max_residual", comments="")
        rep.note(f"wrote {path}")


def build_parser():
    ap = argparse.ArgumentParser(prog="tribody", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", help="integrate an initial state and export the trajectory")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p = sub.add_parser("verify", help="check the kinematic identities")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--scaled", action="store_true", help="scaled-variable identities along a trajectory")
    g.add_argument("--constants", action="store_true", help="momentum constant and energy partition")
    p = sub.add_parser("syzygy", help="detect area zeros and certify their gaps")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p = sub.add_parser("find-orbit", help="refine figure-eight guesses by shooting")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--guess")
    p.add_argument("--library")
    p = sub.add_parser("theorem5-fuzz", help="random dual triplets through the similarity checker")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    return ap


def main(argv=None, stream=None):
    args = build_parser().parse_args(argv)
    rep = Report(stream)
    try:
        if args.command == "find-orbit":
            cmd_find_orbit(args, rep)
        elif args.command == "theorem5-fuzz":
            if args.n <= 0:
                raise ConfigError("--n must be positive")
            cmd_fuzz(args, rep, args.out)
        else:
            cfg = load_config(args.config)
            if args.out:
                cfg.out_dir = args.out
            if args.command == "simulate":
                cmd_simulate(cfg, rep)
            elif args.command == "verify":
                mode = "scaled" if args.scaled else "constants" if args.constants else None
                cmd_verify(cfg, rep, mode)
            else:
                cmd_syzygy(cfg, rep)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ThreeBodyError as exc:
        rep.error(args.command, exc)
    if rep.count == 0:
        return 1
    return rep.status


if __name__ == "__main__":
    sys.exit(main())
