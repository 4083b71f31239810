"""CLI commands and file schemas: key-value parsing, quaternion
serialization, JSON round trips, CSV headers, exit codes, determinism."""
import csv
import json
import os

import numpy as np
import pytest

from cc_ik import cli
from cc_ik import liegroup as lg
from cc_ik.cli import (
    TRIALS_CSV_COLUMNS,
    WORKSPACE_CSV_COLUMNS,
    main,
    quaternion_from_rotation,
    read_key_value_file,
    rotation_from_quaternion,
)


def random_rotation(rng):
    w = rng.normal(size=3)
    w *= rng.uniform(0, np.pi - 0.05) / np.linalg.norm(w)
    return lg.exp_se3(np.concatenate([w, np.zeros(3)])).R


def test_quaternion_round_trip():
    rng = np.random.default_rng(40)
    for _ in range(200):
        R = random_rotation(rng)
        q = quaternion_from_rotation(R)
        assert q[0] >= 0
        assert np.isclose(np.linalg.norm(q), 1.0)
        assert np.allclose(rotation_from_quaternion(q), R, atol=1e-12)
    assert np.allclose(quaternion_from_rotation(np.eye(3)), [1, 0, 0, 0])


def test_quaternion_rejects_garbage():
    with pytest.raises(ValueError):
        rotation_from_quaternion([0.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        rotation_from_quaternion([1.0, 0.0])


def test_read_key_value_file(tmp_path):
    p = tmp_path / "cfg.kv"
    p.write_text("# comment\n a = 1 \nb= two # trailing\n\nc =3\na=4\n")
    assert read_key_value_file(str(p)) == {"a": "4", "b": "two", "c": "3"}
    bad = tmp_path / "bad.kv"
    bad.write_text("just words\n")
    with pytest.raises(ValueError):
        read_key_value_file(str(bad))


def test_solve_command_configuration_target(tmp_path):
    case = tmp_path / "case.kv"
    case.write_text("kappa = 0.9, 0.4\nphi = 0.2, 1.1\n")
    code = main(["solve", "--input", str(case), "--out-dir", str(tmp_path),
                 "--method", "vvl", "--trajectory"])
    assert code == 0
    result = json.loads((tmp_path / "result.json").read_text())
    assert result["converged"] is True
    assert result["method"] == "vvl"
    traj = json.loads((tmp_path / "trajectory.json").read_text())
    assert len(traj["points"]) == traj["iterations"] + 1
    assert traj["samples_per_segment"] >= 2


def test_solve_command_pose_target(tmp_path):
    # serialize a reachable pose (the FK of a known configuration)
    from cc_ik import cc_model as cm
    from cc_ik.cc_model import ManipulatorState
    pose = cm.forward_kinematics(
        ManipulatorState.from_arrays([0.9, 0.4], [0.2, 1.1], [1.0, 1.0]))
    q = quaternion_from_rotation(pose.R)
    case = tmp_path / "pose.kv"
    case.write_text(
        "segments = 2\n"
        "quaternion = " + " ".join(repr(float(v)) for v in q) + "\n"
        "translation = " + " ".join(repr(float(v)) for v in pose.p) + "\n")
    code = main(["solve", "--input", str(case), "--out-dir", str(tmp_path)])
    assert code == 0
    result = json.loads((tmp_path / "result.json").read_text())
    assert result["converged"] is True
    assert np.allclose(result["target"]["translation"], pose.p)


def test_solve_result_round_trip_exact(tmp_path):
    case = tmp_path / "case.kv"
    case.write_text("kappa = 1.0, 0.3, 0.8\nphi = 0.0, 2.0, 4.0\n")
    assert main(["solve", "--input", str(case),
                 "--out-dir", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "result.json").read_text())
    # json floats survive a rewrite bit-exactly (shortest round-trip reprs)
    assert json.loads(json.dumps(d)) == d


def test_solve_command_flag_overrides_config_key(tmp_path):
    case = tmp_path / "case.kv"
    case.write_text("kappa = 0.9\nphi = 0.2\nmethod = jacobian\n"
                    "max_iter = 7\n")
    assert main(["solve", "--input", str(case), "--out-dir", str(tmp_path),
                 "--method", "dls"]) == 0
    d = json.loads((tmp_path / "result.json").read_text())
    assert d["method"] == "dls"
    assert d["max_iter"] == 7


def test_solve_command_bad_input(tmp_path, capsys):
    case = tmp_path / "bad.kv"
    case.write_text("kappa = 1.0\nphi = 0.1, 0.2\n")
    assert main(["solve", "--input", str(case),
                 "--out-dir", str(tmp_path)]) == 2
    assert "invalid input" in capsys.readouterr().err


def test_solve_command_missing_file(tmp_path):
    assert main(["solve", "--input", str(tmp_path / "nope.kv"),
                 "--out-dir", str(tmp_path)]) == 2


def test_demo_command(tmp_path, capsys):
    assert main(["demo", "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "rest-jacobian" in out and "rest-vvl" in out
    for name in ("rest-jacobian", "adverse-jacobian", "rest-vvl"):
        traj = json.loads((tmp_path / f"trajectory-{name}.json").read_text())
        assert traj["points"], name
        first = traj["points"][0]["centerline"]
        assert len(first[0]) == 3


def test_bench_command_schema(tmp_path):
    assert main(["bench", "--segments", "2", "--trials", "10",
                 "--out-dir", str(tmp_path)]) == 0
    with open(tmp_path / "trials.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == TRIALS_CSV_COLUMNS
    assert len(rows) == 1 + 3 * 10  # three methods
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert len(summary) == 3
    assert set(summary[0]) == {"method", "n_segments", "iter_limit",
                               "tolerance", "trial_count", "success_rate",
                               "mean_iter_converged", "mean_iter_paired",
                               "deadlock_rate"}


def test_bench_determinism_excluding_wall_time(tmp_path):
    def rows(out):
        d = tmp_path / out
        d.mkdir()
        assert main(["bench", "--segments", "2,3", "--trials", "8",
                     "--seed", "9", "--out-dir", str(d)]) == 0
        with open(d / "trials.csv") as fh:
            raw = list(csv.reader(fh))
        i = raw[0].index("wall_time_us")
        return [[c for j, c in enumerate(r) if j != i] for r in raw]

    assert rows("a") == rows("b")


def test_bench_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "bench.kv"
    cfg.write_text("segments = 2\ntrials = 5\nmethod = jacobian\nseed = 3\n")
    assert main(["bench", "--config", str(cfg), "--trials", "6",
                 "--out-dir", str(tmp_path)]) == 0
    with open(tmp_path / "trials.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 1 + 6
    assert all(r[1] == "jacobian" for r in rows[1:])


def test_workspace_command(tmp_path):
    assert main(["workspace", "--segments", "2", "--trials", "40",
                 "--method", "jacobian", "--out-dir", str(tmp_path)]) == 0
    with open(tmp_path / "workspace.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == WORKSPACE_CSV_COLUMNS
    reachable = [r for r in rows[1:] if r[0] == "reachable"]
    failed = [r for r in rows[1:] if r[0] == "failed"]
    assert len(reachable) == 40
    assert len(reachable) + len(failed) == len(rows) - 1
    for r in rows[1:]:
        xyz = np.array([float(r[3]), float(r[4]), float(r[5])])
        assert np.linalg.norm(xyz) <= 2.0 + 1e-9


def test_atomic_write_no_temp_left_behind(tmp_path):
    cli._atomic_write(str(tmp_path / "x.json"), "{}\n")
    assert (tmp_path / "x.json").read_text() == "{}\n"
    leftovers = [f for f in os.listdir(tmp_path) if f.startswith(".tmp-")]
    assert leftovers == []
