import os
from dataclasses import replace

import numpy as np
import numpy.testing as npt
import pytest

from tribody.core import PhaseState
from tribody.errors import ShootingError
from tribody.orbits import (
    OrbitRecord, append_record, default_guesses_path, euler_parameters, euler_state,
    format_record, parse_record, read_guesses, read_library, shoot_periodic, verify_orbit,
)
from tribody.syzygy import detect_events


def _rotated(state, theta):
    R = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    return PhaseState(state.t, state.q @ R.T, state.p @ R.T)


@pytest.fixture(scope="module")
def guesses():
    return {g.alpha: g for g in read_guesses(default_guesses_path())}


@pytest.fixture(scope="module")
def strong_eight(guesses):
    g = guesses[-2.0]
    return shoot_periodic(g, g.potential)


def test_packaged_guesses_are_uncertified(guesses):
    assert set(guesses) == {-1.0, -2.0}
    for g in guesses.values():
        assert g.provenance["source"] == "rounded"
        assert g.residuals == {}


def test_newtonian_guess_converges(guesses, orbit_library):
    g = guesses[-1.0]
    rec = shoot_periodic(g, g.potential)
    assert rec.residuals["periodicity"] < 1e-8
    assert rec.residuals["L_drift"] < 1e-11
    npt.assert_allclose(rec.period, orbit_library[-1.0].period, rtol=1e-9)


def test_strong_force_guess_converges(strong_eight):
    r = strong_eight.residuals
    assert r["periodicity"] < 1e-8
    assert r["I_drift"] < 1e-7
    assert r["E"] < 1e-8
    assert strong_eight.provenance["iterations"] > 0


def test_euler_parametrisation_roundtrip():
    s = euler_state([0.9, -0.2], [-0.7, -1.0], [1, 1, 1])
    x, w = euler_parameters(s, [1, 1, 1])
    npt.assert_allclose(x, [0.9, -0.2])
    npt.assert_allclose(w, [-0.7, -1.0])
    npt.assert_allclose(s.p.sum(axis=0), 0.0, atol=1e-15)


def test_solution_is_rotation_equivariant(guesses, strong_eight):
    g = guesses[-2.0]
    theta = 0.7
    rec = shoot_periodic(replace(g, initial=_rotated(g.initial, theta)), g.potential)
    back = _rotated(rec.initial, -theta)
    npt.assert_allclose(back.q, strong_eight.initial.q, atol=1e-9)
    npt.assert_allclose(back.p, strong_eight.initial.p, atol=1e-9)
    npt.assert_allclose(rec.period, strong_eight.period, rtol=1e-9)


def test_huge_period_guess_is_rejected(guesses):
    g = guesses[-1.0]
    with pytest.raises(ShootingError, match="non-minimal") as info:
        shoot_periodic(replace(g, period=5 * g.period), g.potential)
    assert info.value.best_residual is not None and info.value.iterations > 0


def test_iteration_budget_exhausted(guesses):
    g = guesses[-1.0]
    with pytest.raises(ShootingError, match="did not converge.*best residual"):
        shoot_periodic(g, g.potential, max_nfev=2)


def test_unequal_masses_rejected(guesses):
    g = guesses[-1.0]
    pot = replace(g, masses=type(g.masses)(1.0, 2.0, 1.0)).potential
    with pytest.raises(ValueError):
        shoot_periodic(g, pot)


def test_strong_force_certificate(orbit_library):
    cert = verify_orbit(orbit_library[-2.0])
    assert cert.passed, cert.failures
    assert cert.values["kappa"] < 1e-7
    assert cert.values["constant_drift"] < 1e-7
    assert len([e for e in cert.syzygies if e.t < orbit_library[-2.0].period * (1 - 1e-9)]) == 6
    assert cert.loci.shape[1] == 7  # t and the three centres


def test_newtonian_certificate_separates_regimes(orbit_library):
    cert = verify_orbit(orbit_library[-1.0], n_samples=60)
    assert cert.passed, cert.failures
    assert cert.values["similarity_rejected"] == 60
    assert cert.values["scaled_similarity"] < 1e-9


def test_tampered_period_fails(orbit_library):
    rec = orbit_library[-1.0]
    cert = verify_orbit(replace(rec, period=1.01 * rec.period), n_samples=12)
    assert not cert.passed
    assert any("periodicity" in f for f in cert.failures)


def test_full_period_has_six_syzygies(orbit_library):
    from tribody.dynamics import integrate
    rec = orbit_library[-1.0]
    traj = integrate(rec.initial, rec.potential, (0.0, rec.period), rtol=1e-12, atol=1e-14)
    events = [e for e in detect_events(traj) if e.t < rec.period * (1 - 1e-9)]
    assert len(events) == 6


def test_library_roundtrip(tmp_path, orbit_library):
    path = tmp_path / "lib.txt"
    for rec in orbit_library.values():
        append_record(path, rec)
    again = read_library(path)
    for a in again:
        b = orbit_library[a.alpha]
        assert a.period == b.period
        npt.assert_array_equal(a.initial.q, b.initial.q)
        assert a.residuals == b.residuals and a.provenance == b.provenance


def test_checksum_detects_tampering(orbit_library, tmp_path):
    line = format_record(orbit_library[-1.0])
    parse_record(line)
    bad = line.replace("alpha=-1.0", "alpha=-1.5")
    with pytest.raises(ValueError, match="checksum"):
        parse_record(bad)
    path = tmp_path / "lib.txt"
    path.write_text("# header\n\n" + bad + "\n")
    with pytest.raises(ValueError, match=f"{os.path.basename(path)}:3"):
        read_library(path)


def test_record_potential(orbit_library):
    rec = orbit_library[-2.0]
    assert isinstance(rec, OrbitRecord)
    assert rec.potential.alpha == -2.0
