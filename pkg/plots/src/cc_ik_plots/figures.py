"""Render cc-ik output files (trajectory.json, workspace.csv,
summary.json) into static figures.

Every plot is a pure file-to-file transformation; inputs are validated
against the producing CLI's documented schemas before any drawing
happens, and figure layout is fully determined by the input data.
"""
import csv
import json
import warnings
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
from mpl_toolkits.mplot3d import Axes3D  # noqa: F401,E402
import numpy as np  # noqa: E402

KINDS = ("trajectory3d", "workspace", "success_curves", "success_bars")

WORKSPACE_COLUMNS = ("label", "method", "n_segments", "x", "y", "z")
SUMMARY_KEYS = frozenset({
    "method", "n_segments", "iter_limit", "tolerance", "trial_count",
    "success_rate", "mean_iter_converged", "mean_iter_paired",
    "deadlock_rate"})
TRAJECTORY_KEYS = frozenset({
    "method", "tolerance", "converged", "iterations", "final_error",
    "samples_per_segment", "target", "points"})
POINT_KEYS = frozenset({"iteration", "error", "kappa", "phi", "l",
                        "centerline"})

REACHABLE_COLOR = "tab:blue"
FAILED_COLOR = "tab:red"
METHOD_MARKERS = {"jacobian": "o", "dls": "v", "vvl": "d"}


class SchemaError(ValueError):
    """Input file does not match the documented cc-ik schema."""


@dataclass(frozen=True)
class FigureJob:
    kind: str
    input: str
    out: str
    stride: int = 6

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc


def load_trajectory(path: str) -> dict:
    data = _load_json(path)
    if not isinstance(data, dict) or not TRAJECTORY_KEYS <= set(data):
        raise SchemaError(f"{path}: missing trajectory keys")
    for pt in data["points"]:
        if not POINT_KEYS <= set(pt):
            raise SchemaError(f"{path}: malformed trajectory point")
    if not data["points"]:
        raise SchemaError(f"{path}: trajectory has no recorded points")
    return data


def load_workspace(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != WORKSPACE_COLUMNS:
            raise SchemaError(f"{path}: header {header} != "
                              f"{list(WORKSPACE_COLUMNS)}")
        rows = []
        for raw in reader:
            if len(raw) != len(WORKSPACE_COLUMNS):
                raise SchemaError(f"{path}: short row {raw}")
            rows.append({"label": raw[0], "method": raw[1],
                         "n_segments": int(raw[2]),
                         "xyz": np.array([float(raw[3]), float(raw[4]),
                                          float(raw[5])])})
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def load_summary(path: str) -> list[dict]:
    data = _load_json(path)
    if not isinstance(data, list) or not data:
        raise SchemaError(f"{path}: expected a non-empty list of cells")
    for cell in data:
        if not isinstance(cell, dict) or set(cell) != SUMMARY_KEYS:
            raise SchemaError(f"{path}: cell keys {sorted(cell)} do not "
                              f"match the summary schema")
    return data


def plot_trajectory(job: FigureJob):
    """3D snapshots of the manipulator centerline every stride-th
    iteration, with the final shape and the target tip highlighted."""
    data = load_trajectory(job.input)
    points = data["points"]
    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(projection="3d")

    snapshots = points[::job.stride]
    for k, pt in enumerate(snapshots):
        line = np.asarray(pt["centerline"])
        shade = 0.25 + 0.55 * (k / max(len(snapshots) - 1, 1))
        ax.plot(line[:, 0], line[:, 1], line[:, 2],
                color=plt.cm.viridis(shade), linewidth=1.0,
                label="iterates" if k == 0 else None)
    final = np.asarray(points[-1]["centerline"])
    ax.plot(final[:, 0], final[:, 1], final[:, 2], color="black",
            linewidth=2.2, label=f"final (iter {points[-1]['iteration']})")
    tip = data["target"]["translation"]
    ax.scatter([tip[0]], [tip[1]], [tip[2]], color=FAILED_COLOR, s=60,
               marker="*", label="target tip", depthshade=False)

    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("z")
    ax.set_title(f"{data['method']} convergence, "
                 f"e_V = {data['final_error']:.2e} "
                 f"after {data['iterations']} iterations")
    ax.legend(loc="upper left")
    return fig


def plot_workspace(job: FigureJob):
    """Scatter of reachable tip positions against failed targets, one
    panel per (method, segment count) pair present in the file."""
    rows = load_workspace(job.input)
    reachable = [r for r in rows if r["label"] == "reachable"]
    failed = [r for r in rows if r["label"] == "failed"]
    panels = sorted({(r["method"], r["n_segments"]) for r in failed})
    if not panels:
        panels = sorted({("", r["n_segments"]) for r in reachable})

    fig, axes = plt.subplots(1, len(panels),
                             figsize=(5 * len(panels), 4.5),
                             subplot_kw={"projection": "3d"}, squeeze=False)
    for ax, (method, n) in zip(axes[0], panels):
        ok = np.array([r["xyz"] for r in reachable if r["n_segments"] == n])
        if ok.size:
            ax.scatter(ok[:, 0], ok[:, 1], ok[:, 2], s=6,
                       color=REACHABLE_COLOR, alpha=0.5, label="reachable")
        bad = np.array([r["xyz"] for r in failed
                        if r["method"] == method and r["n_segments"] == n])
        if bad.size:
            ax.scatter(bad[:, 0], bad[:, 1], bad[:, 2], s=14,
                       color=FAILED_COLOR, label="failed")
        title = f"n = {n}" + (f", {method}" if method else "")
        ax.set_title(title)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_zlabel("z")
        ax.legend(loc="upper left")
    return fig


def _curve_groups(cells):
    # (method, tolerance) -> iter_limit -> mean success rate over n
    groups = {}
    for c in cells:
        key = (c["method"], c["tolerance"])
        groups.setdefault(key, {}).setdefault(c["iter_limit"],
                                              []).append(c["success_rate"])
    return groups


def plot_success_curves(job: FigureJob):
    """Success rate versus iteration budget, one curve per
    (method, tolerance) pair, averaged over segment counts."""
    cells = load_summary(job.input)
    groups = _curve_groups(cells)
    tolerances = sorted({tol for _, tol in groups}, reverse=True)
    styles = ["-", "--", ":", "-."]

    fig, ax = plt.subplots(figsize=(7, 5))
    for (method, tol), by_limit in sorted(groups.items()):
        limits = np.array(sorted(by_limit))
        rates = np.array([np.mean(by_limit[i]) for i in limits])
        if np.any(np.diff(rates) < 0):
            warnings.warn(f"success rate not monotone in budget for "
                          f"{method} at tol {tol:g}", stacklevel=2)
        ax.plot(limits, rates,
                marker=METHOD_MARKERS.get(method, "s"),
                linestyle=styles[tolerances.index(tol) % len(styles)],
                label=f"{method}, tol {tol:g}")
    ax.set_xlabel("iteration limit")
    ax.set_ylabel("success rate")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title("convergence success rate")
    return fig


def plot_success_bars(job: FigureJob):
    """Per-segment-count success bars comparing methods, one panel per
    iteration budget at the coarsest tolerance present."""
    cells = load_summary(job.input)
    tol = max(c["tolerance"] for c in cells)
    cells = [c for c in cells if c["tolerance"] == tol]
    limits = sorted({c["iter_limit"] for c in cells})
    methods = sorted({c["method"] for c in cells})
    counts = sorted({c["n_segments"] for c in cells})

    fig, axes = plt.subplots(1, len(limits),
                             figsize=(5.5 * len(limits), 4.5),
                             sharey=True, squeeze=False)
    width = 0.8 / len(methods)
    x = np.arange(len(counts))
    for ax, limit in zip(axes[0], limits):
        for j, method in enumerate(methods):
            rate = {c["n_segments"]: c["success_rate"] for c in cells
                    if c["method"] == method and c["iter_limit"] == limit}
            ax.bar(x + (j - (len(methods) - 1) / 2) * width,
                   [rate.get(n, 0.0) for n in counts],
                   width=width, label=method)
        ax.set_xticks(x, [str(n) for n in counts])
        ax.set_xlabel("segments")
        ax.set_title(f"within {limit} iterations, tol {tol:g}")
        ax.grid(True, axis="y", alpha=0.3)
    axes[0][0].set_ylabel("success rate")
    axes[0][0].set_ylim(0.0, 1.02)
    axes[0][-1].legend(fontsize=8)
    return fig


_RENDERERS = {
    "trajectory3d": plot_trajectory,
    "workspace": plot_workspace,
    "success_curves": plot_success_curves,
    "success_bars": plot_success_bars,
}


def render(job: FigureJob) -> None:
    """Build the figure for `job` and write it to job.out. Nothing is
    written when the input fails validation."""
    fig = _RENDERERS[job.kind](job)
    try:
        fig.savefig(job.out, dpi=150, metadata={"Software": "cc-ik-plots"})
    finally:
        plt.close(fig)
