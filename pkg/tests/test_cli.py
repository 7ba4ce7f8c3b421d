import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fiberlift import cli
from fiberlift import io as fio
from fiberlift.errors import CapabilityError
from fiberlift.render import annulus_mask, render_attractor
from fiberlift.systems import make_system, solenoid_system

ULAM = """\
[system]
name = doubling

[pipeline]
name = ulam

[numeric]
m = 64
"""

UNIQUENESS = """\
[system]
name = solenoid
lam = 0.4

[pipeline]
name = uniqueness

[numeric]
atoms = 2001
tol = 1e-3
sections = center; rim
"""

BAD_SOLENOID = """\
[system]
name = solenoid
lam = 0.9
radius = 0.5

[pipeline]
name = lift
"""


def run(tmp_path, text, *extra, name="run.ini"):
    cfg = tmp_path / name
    cfg.write_text(text, encoding="utf-8")
    out = tmp_path / ("out_" + name)
    code = cli.main(["--config", str(cfg), "--out", str(out), *extra])
    return code, out


def envelope(out):
    return json.loads((out / "result.json").read_text(encoding="utf-8"))


def test_ulam_config(tmp_path):
    code, out = run(tmp_path, ULAM)
    assert code == 0
    env = envelope(out)
    assert env["passed"]
    assert abs(env["results"]["leading_eigenvalue"] - 1.0) <= 1e-6
    assert env["config_hash"] == fio.git_blob_sha1(ULAM)
    assert env["files"]["operator.csv"] == fio.file_sha1(out / "operator.csv")
    assert (out / "timings.json").exists()


def test_uniqueness_config(tmp_path):
    code, out = run(tmp_path, UNIQUENESS)
    assert code == 0
    assert envelope(out)["assertions"]["unique"]


def test_domain_violation_exit_1(tmp_path, capsys):
    code, out = run(tmp_path, BAD_SOLENOID)
    assert code == 1
    err = capsys.readouterr().err
    assert "0.9" in err and "0.5" in err
    assert "error" in envelope(out)


def test_assertion_failure_exit_2(tmp_path):
    text = """\
[system]
name = skew
fiber = identity

[pipeline]
name = lift

[numeric]
atoms = 101
n_max = 5
"""
    code, out = run(tmp_path, text)
    assert code == 2
    env = envelope(out)
    assert env["passed"] is False and env["assertions"]["converged"] is False


@pytest.mark.parametrize("text,needle", [
    ("[system]\nname = doubling\nthis is junk\n", "line 3"),
    ("[system]\nname = doubling\n[pipeline]\nname = ulam\n[numeric]\nbogus = 1\n", "bogus"),
    ("[system]\nname = doubling\nwidth = 3\n[pipeline]\nname = ulam\n", "width"),
    ("[system]\nname = doubling\n[pipeline]\nname = fly\n", "fly"),
    ("[system]\nname = doubling\n[pipeline]\nname = ulam\n[numeric]\nm = 1\n", "outside"),
    ("[system]\nname = doubling\n[pipeline]\nname = corr\n", "seed is required"),
    ("[system]\nname = doubling\n[pipeline]\nname = ulam\n[extra]\n", "unknown section"),
])
def test_config_errors(tmp_path, capsys, text, needle):
    code, _ = run(tmp_path, text)
    assert code == 1
    assert needle in capsys.readouterr().err


def test_seed_flag_overrides(tmp_path):
    text = "[system]\nname = doubling\n[pipeline]\nname = corr\n[numeric]\norbit_length = 300000\n"
    code, out = run(tmp_path, text, "--seed", "5")
    assert code == 0
    assert envelope(out)["config"]["numeric"]["seed"] == 5


def test_env_default_output(tmp_path, monkeypatch):
    cfg = tmp_path / "u.ini"
    cfg.write_text(ULAM)
    monkeypatch.setenv(cli.ENV_OUT, str(tmp_path / "envout"))
    assert cli.main(["--config", str(cfg)]) == 0
    assert (tmp_path / "envout" / "result.json").exists()


CORR = """\
[system]
name = solenoid
lam = 0.4

[pipeline]
name = corr

[numeric]
seed = 11
observable = z1
observable2 = y
lags = 8
orbit_length = 50000
"""


@pytest.mark.parametrize("text", [CORR, UNIQUENESS])
def test_byte_identical_across_threads(tmp_path, text):
    _, a = run(tmp_path, text, "--threads", "1", name="a.ini")
    _, b = run(tmp_path, text, "--threads", "8", name="b.ini")
    names = sorted(p.name for p in a.iterdir() if p.name != "timings.json")
    assert names == sorted(p.name for p in b.iterdir() if p.name != "timings.json")
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_csv_format(tmp_path):
    _, out = run(tmp_path, CORR)
    raw = (out / "correlations.csv").read_bytes()
    assert b"\r" not in raw
    header, rows = fio.read_csv(out / "correlations.csv")
    assert header == ["n", "cov", "stderr"] and len(rows) == 9


def test_console_script_entry_point(tmp_path):
    cfg = tmp_path / "u.ini"
    cfg.write_text(ULAM)
    env = dict(os.environ)
    r = subprocess.run([sys.executable, "-m", "fiberlift.cli", "--config", str(cfg), "--out",
                        str(tmp_path / "o")], capture_output=True, text=True, env=env)
    assert r.returncode == 0, r.stderr


# ---------------------------------------------------------------------------
# rendering


def test_render_solenoid_nested():
    r = render_attractor(solenoid_system(0.4), n_iter=8, size=96)
    assert r.final.any()
    assert not np.any(r.final & ~annulus_mask(96))
    assert r.nesting_violations() == [0] * 8


def test_render_n0_full_band():
    r = render_attractor(solenoid_system(0.4), n_iter=0, size=64)
    # the sampling grid lights almost every pixel well inside the annulus
    inner = annulus_mask(64, 0.55, 1.45)
    assert r.final[inner].mean() >= 0.99
    assert not np.any(r.final & ~annulus_mask(64))


def test_render_identity_keeps_band():
    r = render_attractor(make_system("skew", fiber="identity"), n_iter=4, size=64)
    for lit in r.rasters[1:]:
        assert np.array_equal(lit, r.rasters[0])


def test_render_needs_fiber():
    with pytest.raises(CapabilityError):
        render_attractor(make_system("doubling"))


def test_ppm_roundtrip(tmp_path):
    lit = np.zeros((5, 7), dtype=bool)
    lit[1, 2] = True
    p = fio.write_ppm(tmp_path / "x.ppm", lit)
    img = fio.read_ppm(p)
    assert img.shape == (5, 7, 3)
    assert np.array_equal(img[..., 0] == 0, lit)


def test_measure_csv_roundtrip(tmp_path):
    from fiberlift.measures import EmpiricalMeasure

    mu = EmpiricalMeasure(np.random.default_rng(0).random((10, 3)))
    fio.measure_to_csv(mu, tmp_path / "m.csv")
    back = fio.measure_from_csv(tmp_path / "m.csv")
    assert np.array_equal(back.points, mu.points)


# ---------------------------------------------------------------------------
# backend selection


def test_pure_python_fallback_selected():
    code = "import fiberlift._backend as b; print(b.BACKEND)"
    env = dict(os.environ, FIBERLIFT_PURE="1")
    r = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
    assert r.stdout.strip() == "python"


def test_compiled_backend_default():
    pytest.importorskip("fiberlift._kernels")
    env = {k: v for k, v in os.environ.items() if k != "FIBERLIFT_PURE"}
    r = subprocess.run([sys.executable, "-c", "import fiberlift; print(fiberlift.BACKEND)"],
                       capture_output=True, text=True, env=env)
    assert r.stdout.strip() == "cython"
