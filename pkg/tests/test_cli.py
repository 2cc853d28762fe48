import json

import numpy as np
import pytest

from orthowall import cli
from orthowall.integrate import read_profile_csv


def write_config(path, **kw):
    cfg = {"epsilon": 0.1, "g": 1.5}
    cfg.update(kw)
    path.write_text(json.dumps(cfg))
    return str(path)


@pytest.fixture(scope="module")
def solve_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("solve")
    rc = cli.main(["solve", "--out", str(out), "--epsilon", "0.1",
                   "--g", "1.5", "--quiet"])
    assert rc == 0
    return out


def test_solve_outputs(solve_dir):
    for name in ("profile.csv", "report.json", "manifest.json"):
        assert (solve_dir / name).exists()
    report = json.loads((solve_dir / "report.json").read_text())
    assert abs(report["b0_at_zero"] - (1.5) ** -0.5) < 1e-10
    assert report["sup_w"] < 1e-8
    manifest = json.loads((solve_dir / "manifest.json").read_text())
    assert manifest["tool"] == "orthowall"
    assert "profile.csv" in manifest["outputs"]


def test_csv_round_trip_exact(solve_dir):
    x, states, w = read_profile_csv(str(solve_dir / "profile.csv"))
    x2, states2, w2 = read_profile_csv(str(solve_dir / "profile.csv"))
    assert np.array_equal(x, x2) and np.array_equal(states, states2)
    assert x.size >= 1000


def test_config_error_bad_g(tmp_path, capsys):
    cfgp = write_config(tmp_path / "c.json", g=3.0)
    rc = cli.main(["solve", "--config", cfgp, "--out", str(tmp_path / "o")])
    assert rc == 1
    assert "(10/9, 2]" in capsys.readouterr().err


def test_missing_parent_dir(tmp_path):
    rc = cli.main(["solve", "--out", str(tmp_path / "a" / "b" / "c"),
                   "--epsilon", "0.1", "--g", "1.5"])
    assert rc == 1


def test_creates_out_dir_when_parent_exists(tmp_path):
    out = tmp_path / "fresh"
    rc = cli.main(["inner", "--out", str(out), "--a-plus", "1.0",
                   "--a-minus", "1.0", "--quiet"])
    assert rc == 0
    assert (out / "inner.csv").exists()


def test_inner_zero_data(tmp_path):
    out = tmp_path / "inner0"
    rc = cli.main(["inner", "--out", str(out), "--a-plus", "1.0",
                   "--a-minus", "1.0", "--x10", "0", "--x20", "0", "--quiet"])
    assert rc == 0
    data = np.loadtxt(out / "inner.csv", delimiter=",", skiprows=1)
    assert np.abs(data[:, 1:]).max() == 0.0
    report = json.loads((out / "inner_report.json").read_text())
    assert report["residual"] == 0.0


def test_sweep_with_fault_injection(tmp_path):
    cfgp = write_config(tmp_path / "c.json",
                        epsilon_list=[0.2, 0.1, 0.05, 0.025, 0.26])
    out = tmp_path / "sweep"
    rc = cli.main(["sweep", "--config", cfgp, "--out", str(out), "--quiet"])
    assert rc == 0
    scaling = json.loads((out / "scaling.json").read_text())
    assert len(scaling["rows"]) == 4
    assert len(scaling["excluded"]) == 1
    assert scaling["excluded"][0]["epsilon"] == 0.26
    assert abs(scaling["slope_a0"] - 0.40) <= 0.08
    assert abs(scaling["slope_width"] + 0.20) <= 0.05
    assert (out / "eps_0.1" / "profile.csv").exists()


def test_sweep_too_few_points(tmp_path):
    cfgp = write_config(tmp_path / "c.json", epsilon_list=[0.1])
    rc = cli.main(["sweep", "--config", cfgp, "--out", str(tmp_path / "s")])
    assert rc == 1


def test_spectrum_command(tmp_path, solve_dir):
    out = tmp_path / "spec"
    rc = cli.main(["spectrum", "--out", str(out), "--quiet",
                   str(solve_dir / "profile.csv")])
    assert rc == 0
    spec = json.loads((out / "spectrum.json").read_text())
    assert spec["kernel_angle"] < 1e-3
    assert spec["separation"] > 1e4
    assert spec["essential_edges"]["L_plus"] == 0.0


def test_verify_command_pass(tmp_path, solve_dir):
    out = tmp_path / "ver"
    rc = cli.main(["verify", "--out", str(out), "--quiet",
                   str(solve_dir / "profile.csv")])
    assert rc == 0
    rep = json.loads((out / "verify.json").read_text())
    assert rep["passed"] is True


def test_verify_command_tampered(tmp_path, solve_dir):
    x, states, w = read_profile_csv(str(solve_dir / "profile.csv"))
    n = x.size
    states = states.copy()
    states[n // 2:n // 2 + 40, 4] = states[n // 2, 4] - 1e-3  # force a dip
    from orthowall.integrate import write_profile_csv
    bad = tmp_path / "bad"
    bad.mkdir()
    write_profile_csv(str(bad / "profile.csv"), x, states, w)
    (bad / "report.json").write_text(
        (solve_dir / "report.json").read_text())
    out = tmp_path / "ver2"
    rc = cli.main(["verify", "--out", str(out), "--quiet",
                   str(bad / "profile.csv")])
    assert rc == 2
    rep = json.loads((out / "verify.json").read_text())
    names = {e["name"]: e["passed"] for e in rep["checks"]}
    assert names["b_monotone"] is False


def test_missing_profile(tmp_path):
    rc = cli.main(["verify", "--out", str(tmp_path / "v"),
                   str(tmp_path / "nope.csv")])
    assert rc == 1
