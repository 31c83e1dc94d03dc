import io
import os
import re
import subprocess
import sys

import pytest

from tribody.cli import load_config, main
from tribody.errors import ConfigError

from conftest import DATA

LINE = re.compile(r"^theorem=\S+ pair=\S+ residual=\S+ tol=\S+ status=(PASS|FAIL)$")


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), stream=out)
    return code, out.getvalue()


def checks(text):
    rows = [ln for ln in text.splitlines() if not ln.startswith("#")]
    assert rows and all(LINE.match(ln) for ln in rows), text
    return rows


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_verify_st1_passes(tmp_path):
    code, text = run("verify", "--config", os.path.join(DATA, "st1.cfg"), "--out", str(tmp_path))
    rows = checks(text)
    assert code == 0
    ids = {ln.split()[0] for ln in rows}
    assert {"theorem=tangents", "theorem=normals"} <= ids
    assert any(i.startswith("theorem=similarity-") for i in ids)
    assert any(i.startswith("theorem=diameter-") for i in ids)


def test_fuzz_all_pass(tmp_path):
    code, text = run("theorem5-fuzz", "--n", "1000", "--seed", "42", "--out", str(tmp_path))
    assert code == 0
    assert "passed=1000/1000 seed=42" in text
    assert (tmp_path / "theorem5_fuzz.csv").exists()


@pytest.mark.parametrize("body, line, pattern", [
    ("[potential]\nalpha = -1\nmasses = 1 -1 1\n", 3, "bad masses"),
    ("[potential]\nalpha = -1\n\n[integration]\nspeed = 3\n", 5, "unknown key"),
    ("[potential]\nalpha = minus one\n", 2, "bad value"),
    ("alpha = -1\n", 1, "outside of any section"),
    ("[potential]\nalpha = -1\n[orbits]\n", 3, "unknown section"),
])
def test_malformed_config_rejected_with_line(tmp_path, capsys, body, line, pattern):
    path = write(tmp_path, body)
    with pytest.raises(ConfigError, match=f"line {line}: .*{pattern}"):
        load_config(path)
    assert main(["simulate", "--config", path], stream=io.StringIO()) == 2
    assert f"line {line}" in capsys.readouterr().err


def test_negative_mass_in_state_literal(tmp_path):
    path = write(tmp_path, "[potential]\nalpha = -1\n[initial]\nstate = 1 -2 1 / 1 0 0 1 -1 -1 / 0 0 0 0 0 0\n")
    with pytest.raises(ConfigError, match="line 4"):
        load_config(path)


def _simulate_twice(tmp_path, cfg):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        code, _ = run("simulate", "--config", cfg, "--out", str(d))
        assert code == 0
        outs.append(d)
    return outs


def test_simulate_is_byte_identical(tmp_path):
    a, b = _simulate_twice(tmp_path, os.path.join(DATA, "freefall.cfg"))
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()


def test_syzygy_reports_events_and_gaps(tmp_path):
    code, text = run("syzygy", "--config", os.path.join(DATA, "freefall.cfg"), "--out", str(tmp_path))
    assert code == 0
    body = [ln for ln in text.splitlines() if not ln.startswith(("theorem=", "#"))]
    assert body[0] == "t,kind,detail" and len(body) > 2
    assert "theorem=zero-gap-tail" in text and "theorem=omega-bound" in text
    assert (tmp_path / "events.csv").read_text().splitlines()[0] == "t,kind,detail"


def test_verify_scaled_on_freefall(tmp_path):
    code, text = run("verify", "--scaled", "--config", os.path.join(DATA, "freefall.cfg"), "--out", str(tmp_path))
    assert code == 0, text
    assert (tmp_path / "scaled_triangles.csv").exists()


def test_verify_constants_on_orbit(tmp_path):
    cfg = write(tmp_path, f"[initial]\norbit = {os.path.join(DATA, 'orbits.txt')}\norbit_index = 1\n")
    code, text = run("verify", "--constants", "--config", cfg, "--out", str(tmp_path / "o"))
    assert code == 0, text
    assert (tmp_path / "o" / "constants.csv").exists()


def test_constants_fail_off_orbit(tmp_path):
    code, text = run("verify", "--constants", "--config", os.path.join(DATA, "freefall.cfg"),
                     "--out", str(tmp_path))
    assert code == 1
    assert "status=FAIL" in text


def test_orbit_index_out_of_range(tmp_path):
    cfg = write(tmp_path, f"[initial]\norbit = {os.path.join(DATA, 'orbits.txt')}\norbit_index = 7\n")
    with pytest.raises(ConfigError, match="line 3: orbit_index 7 out of range"):
        load_config(cfg)


def test_find_orbit_appends_certified_record(tmp_path):
    lib = tmp_path / "lib.txt"
    code, text = run("find-orbit", "--alpha", "-2", "--library", str(lib))
    assert code == 0, text
    assert len(lib.read_text().splitlines()) == 1


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "tribody.cli", "theorem5-fuzz", "--n", "5"],
                         capture_output=True, text=True, check=False)
    assert out.returncode == 0 and "passed=5/5" in out.stdout
