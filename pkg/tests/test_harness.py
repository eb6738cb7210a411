import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from odtexpand.harness.cli import main
from odtexpand.harness.config import KEYS, RunConfig, dump_config, load_config, parse_assignments
from odtexpand.harness.figures import fig5_columns
from odtexpand.harness.output import RunManifest, csv_text, format_value, read_csv, write_csv
from odtexpand.harness.runner import (Scenario, SweepPointError, log_tf_grid, run_point, run_scenario,
                                      safe_point, sweep_parallel, worker_budget)

FAST = RunConfig(tf_s=1e-3, steps_per_period=60)


def test_config_round_trip(tmp_path):
    cfg = RunConfig(waist_m=10e-6, protocol="fast-adiabatic", allow_repulsive=True, n=2, dt_s=1e-7)
    path = tmp_path / "run.cfg"
    path.write_text("# comment line\n" + dump_config(cfg))
    assert load_config(path) == cfg
    assert load_config(path, ["state.n=4"]).n == 4
    assert set(cfg.as_dotted()) == set(KEYS)


@given(st.floats(1e-6, 1e-4), st.integers(0, 9), st.booleans())
def test_override_parsing(w, n, flag):
    vals = parse_assignments([f"beam.waist_m = {w!r}", f"state.n={n}", f"protocol.allow_repulsive={flag}"])
    assert vals == {"waist_m": w, "n": n, "allow_repulsive": flag}


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(tf_s=-1.0)
    with pytest.raises(ValueError):
        RunConfig(axis="x")
    with pytest.raises(ValueError):
        parse_assignments(["bogus.key = 1"])
    with pytest.raises(ValueError):
        parse_assignments(["no equals sign"])


def test_format_value():
    assert format_value(0.1 + 0.2) == "0.3"
    assert format_value(math.nan) == "nan"
    assert format_value(np.int64(3)) == "3"
    with pytest.raises(TypeError):
        format_value(1j)


def test_csv_round_trip(tmp_path):
    m = RunManifest("t", {"a": 1.0})
    p = write_csv(tmp_path / "x.csv", ("a", "b"), [(1.5, "ok"), (2.0, "x")], {"units": "SI"}, m)
    meta, cols, rows = read_csv(p)
    assert meta == {"units": "SI", "manifest_sha256": m.sha256}
    assert cols == ["a", "b"] and rows == [[1.5, "ok"], [2.0, "x"]]
    with pytest.raises(ValueError):
        csv_text(("a",), [(1, 2)], {})


def test_manifest_hash_is_canonical():
    a = RunManifest("t", {"x": 0.1 + 0.2, "y": [1, 2]})
    b = RunManifest("t", {"y": [1, 2], "x": 0.3})
    assert a.sha256 == b.sha256
    assert RunManifest("t", {"x": 0.31}).sha256 != a.sha256


def test_run_point_diagnostics():
    res = run_point(FAST)
    assert res.ok and res.fidelity > 0.999
    assert abs(res.final_norm - 1.0) <= 1e-7
    assert res.max_leakage < 1e-6
    assert res.n_steps > 0 and res.nz >= 1024


def test_safe_point_turns_domain_errors_into_rows():
    res = safe_point(FAST.with_(tf_s=0.2e-3))
    assert res.status == "AttractivityError" and math.isnan(res.fidelity)


def test_worker_budget(monkeypatch):
    monkeypatch.delenv("ODTEXPAND_WORKERS", raising=False)
    assert worker_budget() == 1
    monkeypatch.setenv("ODTEXPAND_WORKERS", "3")
    assert worker_budget() == 3
    monkeypatch.setenv("ODTEXPAND_WORKERS", "0")
    with pytest.raises(ValueError):
        worker_budget()


def _fidelity_of(cfg):
    return run_point(cfg).fidelity


def _explode(x):
    raise RuntimeError("boom")


def test_sweep_is_identical_for_any_worker_count():
    pts = [FAST.with_(tf_s=t) for t in (0.8e-3, 1.2e-3, 1.6e-3)]
    one = sweep_parallel(_fidelity_of, pts, workers=1)
    two = sweep_parallel(_fidelity_of, pts, workers=2)
    assert one == two
    with pytest.raises(SweepPointError):
        sweep_parallel(_explode, [1], workers=1)


def test_scenario_points_and_manifest():
    s = Scenario("s", FAST, (3e-6,), (0,), (0.2e-3, 1e-3))
    results, manifest = run_scenario(s, workers=1)
    assert [r.status for r in results] == ["AttractivityError", "ok"]
    assert manifest.points[1]["config"]["protocol.tf_s"] == 1e-3
    with pytest.raises(ValueError):
        Scenario("bad", FAST, tf_grid=(2e-3, 1e-3))


def test_log_tf_grid():
    g = log_tf_grid(0.2e-3, 3e-3, 5)
    assert g[0] == pytest.approx(0.2e-3) and g[-1] == pytest.approx(3e-3)
    assert np.allclose(np.diff(np.log(g)), np.log(15) / 4)


def test_fig5_columns_agree_at_start():
    cols = fig5_columns(n_samples=11)
    assert cols["omega_R_sq_actual"][0] == pytest.approx(cols["omega_R_sq_ideal_inverse"][0], rel=1e-12)
    assert cols["omega_R_sq_fast_adiabatic"][0] == pytest.approx(cols["omega_R_sq_actual"][0], rel=1e-12)


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["protocol", "--samples", "5"]) == 0
    assert "omega_z_rad_s" in capsys.readouterr().out
    assert main(["expand-z", "--set", "protocol.tf_s=0.2e-3"]) == 2
    assert main(["no-such-command"]) == 1
    assert main(["expand-z", "--set", "bogus=1"]) == 1
    assert main(["bounds", "--levels", "2", "--set", "trap.ffz_hz=25", "--set", "protocol.tf_s=2.5e-3",
                 "--out", str(tmp_path / "b.csv")]) == 0
    _, cols, rows = read_csv(tmp_path / "b.csv")
    assert cols[0] == "n" and len(rows) == 2
    assert main(["check", "--only", "attractivity"]) == 0


def test_cli_expand_is_deterministic(tmp_path):
    args = ["expand-z", "--set", "grid.steps_per_period=60"]
    main(args + ["--out", str(tmp_path / "a.csv")])
    main(args + ["--out", str(tmp_path / "b.csv"), "--dump-wavefunction", str(tmp_path / "psi.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    _, cols, rows = read_csv(tmp_path / "psi.csv")
    assert cols[0] == "x" and len(rows) >= 1024
