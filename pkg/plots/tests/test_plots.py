"""Figure rendering from golden cc-ik output fixtures: all four kinds,
curve/snapshot counts, schema rejection, CLI exit codes."""
import json
import os

import pytest

from cc_ik_plots import FigureJob, SchemaError, render
from cc_ik_plots.cli import main
from cc_ik_plots.figures import (
    plot_success_bars,
    plot_success_curves,
    plot_trajectory,
    plot_workspace,
)

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
TRAJECTORY = os.path.join(FIXTURES, "trajectory.json")
WORKSPACE = os.path.join(FIXTURES, "workspace.csv")
SUMMARY = os.path.join(FIXTURES, "summary.json")


def job(kind, input_path, out, stride=6):
    return FigureJob(kind=kind, input=input_path, out=str(out),
                     stride=stride)


@pytest.mark.parametrize("kind,path", [
    ("trajectory3d", TRAJECTORY),
    ("workspace", WORKSPACE),
    ("success_curves", SUMMARY),
    ("success_bars", SUMMARY),
])
def test_all_kinds_render(tmp_path, kind, path):
    out = tmp_path / f"{kind}.png"
    render(job(kind, path, out))
    assert out.stat().st_size > 0


def test_trajectory_snapshot_count(tmp_path):
    data = json.loads(open(TRAJECTORY).read())
    fig = plot_trajectory(job("trajectory3d", TRAJECTORY, tmp_path / "t.png"))
    try:
        ax = fig.axes[0]
        # one curve per stride-th iterate plus the final shape overlay
        expected = len(data["points"][::6]) + 1
        assert len(ax.lines) == expected
    finally:
        import matplotlib.pyplot as plt
        plt.close(fig)


def test_trajectory_stride_one(tmp_path):
    data = json.loads(open(TRAJECTORY).read())
    fig = plot_trajectory(job("trajectory3d", TRAJECTORY, tmp_path / "t.png",
                              stride=1))
    try:
        assert len(fig.axes[0].lines) == len(data["points"]) + 1
    finally:
        import matplotlib.pyplot as plt
        plt.close(fig)


def test_success_curves_nine_for_three_by_three(tmp_path):
    fig = plot_success_curves(job("success_curves", SUMMARY,
                                  tmp_path / "c.png"))
    try:
        assert len(fig.axes[0].lines) == 9
    finally:
        import matplotlib.pyplot as plt
        plt.close(fig)


def test_workspace_two_point_classes(tmp_path):
    fig = plot_workspace(job("workspace", WORKSPACE, tmp_path / "w.png"))
    try:
        labels = {t.get_text() for ax in fig.axes
                  for t in ax.get_legend().get_texts()}
        assert {"reachable", "failed"} <= labels
    finally:
        import matplotlib.pyplot as plt
        plt.close(fig)


def test_workspace_without_failures(tmp_path):
    lines = open(WORKSPACE).read().splitlines()
    trimmed = tmp_path / "reachable-only.csv"
    trimmed.write_text("\n".join(
        [lines[0]] + [l for l in lines[1:] if l.startswith("reachable")])
        + "\n")
    out = tmp_path / "w.png"
    render(job("workspace", str(trimmed), out))
    assert out.stat().st_size > 0


def test_schema_rejection(tmp_path):
    bad_csv = tmp_path / "bad.csv"
    bad_csv.write_text("foo,bar\n1,2\n")
    with pytest.raises(SchemaError):
        render(job("workspace", str(bad_csv), tmp_path / "x.png"))

    bad_summary = tmp_path / "bad.json"
    bad_summary.write_text(json.dumps([{"method": "vvl"}]))
    with pytest.raises(SchemaError):
        render(job("success_curves", str(bad_summary), tmp_path / "x.png"))


def test_empty_trajectory_no_file(tmp_path):
    data = json.loads(open(TRAJECTORY).read())
    data["points"] = []
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps(data))
    out = tmp_path / "t.png"
    with pytest.raises(SchemaError):
        render(job("trajectory3d", str(empty), out))
    assert not out.exists()


def test_job_validation(tmp_path):
    with pytest.raises(ValueError):
        FigureJob(kind="piechart", input=TRAJECTORY, out="x.png")
    with pytest.raises(ValueError):
        FigureJob(kind="trajectory3d", input=TRAJECTORY, out="x.png",
                  stride=0)


def test_cli_round_trip_and_exit_codes(tmp_path, capsys):
    out = tmp_path / "fig.png"
    assert main(["--input", SUMMARY, "--out", str(out),
                 "--kind", "success_bars"]) == 0
    assert out.stat().st_size > 0

    bad = tmp_path / "bad.csv"
    bad.write_text("nope\n")
    assert main(["--input", str(bad), "--out", str(tmp_path / "y.png"),
                 "--kind", "workspace"]) == 2
    assert "invalid input" in capsys.readouterr().err
    assert main(["--input", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "z.png"),
                 "--kind", "trajectory3d"]) == 2


def test_rendering_is_deterministic(tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render(job("success_curves", SUMMARY, a))
    render(job("success_curves", SUMMARY, b))
    assert a.read_bytes() == b.read_bytes()
