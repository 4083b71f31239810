"""Command-line entry point and file I/O.

Subcommands: solve a single case from an input file, run the built-in
four-segment demo, execute a benchmark suite, or sample a workspace cloud.
All outputs are plain JSON/CSV written atomically (temp file + rename) so
downstream plotting tools never see partial files.

Exit codes: 0 = ran to completion (non-convergence is data, not an error),
2 = bad input, 3 = I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import replace

import numpy as np

from . import bench as bench_mod
from . import cc_model
from .bench import BenchmarkSpec, TrialRecord, aggregate, run_suite, sample_workspace
from .cc_model import ManipulatorState
from .liegroup import Pose
from .solvers import Method, SolveResult, SolverOptions, make_initial_guess, solve

__all__ = [
    "main",
    "quaternion_from_rotation",
    "rotation_from_quaternion",
    "read_key_value_file",
    "TRIALS_CSV_COLUMNS",
    "WORKSPACE_CSV_COLUMNS",
]

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_IO = 3

# Single source of truth for the plotting side; order is part of the schema.
TRIALS_CSV_COLUMNS = (
    "trial_id", "method", "n_segments", "iter_limit", "tolerance", "seed",
    "converged", "iterations", "final_error", "deadlock_any", "fail_cause",
    "target_x", "target_y", "target_z", "wall_time_us")
WORKSPACE_CSV_COLUMNS = ("label", "method", "n_segments", "x", "y", "z")

DEMO_KAPPA = (np.pi / 2, np.pi / 3, np.pi / 4, np.pi / 5)
DEMO_PHI = (np.pi / 5, np.pi / 4, np.pi / 2, 3 * np.pi / 4)
CENTERLINE_SAMPLES = 9


class InputError(ValueError):
    """Malformed input file or inconsistent option values."""


def quaternion_from_rotation(R: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) of a rotation matrix, w >= 0."""
    R = np.asarray(R, dtype=float)
    t = np.trace(R)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2
        q = np.array([0.25 * s, (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(R)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(R[i, i] - R[j, j] - R[k, k] + 1.0) * 2
        q = np.empty(4)
        q[0] = (R[k, j] - R[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (R[j, i] + R[i, j]) / s
        q[1 + k] = (R[k, i] + R[i, k]) / s
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


def rotation_from_quaternion(q) -> np.ndarray:
    """Rotation matrix of a quaternion (w, x, y, z); normalizes the input."""
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise InputError("quaternion must have 4 components (w, x, y, z)")
    nrm = np.linalg.norm(q)
    if nrm < 1e-12:
        raise InputError("quaternion has zero norm")
    w, x, y, z = q / nrm
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def read_key_value_file(path: str) -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment; later keys win."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(",", " ").split()]


def _atomic_write(path: str, data: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=1) + "\n")


def _pose_dict(pose: Pose) -> dict:
    return {"quaternion": [float(v) for v in quaternion_from_rotation(pose.R)],
            "translation": [float(v) for v in pose.p]}


def _pose_from_dict(d: dict) -> Pose:
    R = rotation_from_quaternion(d["quaternion"])
    return Pose(R, np.asarray(d["translation"], dtype=float))


def _state_dict(state: ManipulatorState) -> list[dict]:
    return [{"kappa": s.kappa, "phi": s.phi, "l": s.l, "L": s.L}
            for s in state.segments]


def _result_dict(result: SolveResult, target: Pose, opts: SolverOptions) -> dict:
    return {
        "method": opts.method.value,
        "tolerance": opts.tol,
        "max_iter": opts.max_iter,
        "beta": opts.beta,
        "converged": result.converged,
        "iterations": result.iterations,
        "final_error": result.final_error,
        "fail_cause": result.fail_cause,
        "deadlock_flags": list(result.deadlock_flags),
        "final_state": _state_dict(result.final_state),
        "target": _pose_dict(target),
    }


def _trajectory_dict(result: SolveResult, target: Pose,
                     opts: SolverOptions) -> dict:
    points = []
    for pt in result.trajectory or ():
        line = cc_model.centerline(pt.state, CENTERLINE_SAMPLES)
        points.append({
            "iteration": pt.iteration,
            "error": pt.error,
            "kappa": [s.kappa for s in pt.state.segments],
            "phi": [s.phi for s in pt.state.segments],
            "l": [s.l for s in pt.state.segments],
            "centerline": [[float(v) for v in row] for row in line],
        })
    return {
        "method": opts.method.value,
        "tolerance": opts.tol,
        "converged": result.converged,
        "iterations": result.iterations,
        "final_error": result.final_error,
        "samples_per_segment": CENTERLINE_SAMPLES,
        "target": _pose_dict(target),
        "points": points,
    }


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def _trial_row(r: TrialRecord) -> list:
    return [r.trial_id, r.method.value, r.n_segments, r.iter_limit,
            repr(r.tolerance), r.seed, int(r.converged), r.iterations,
            repr(r.final_error), int(r.deadlock_any), r.fail_cause,
            repr(r.target_tip[0]), repr(r.target_tip[1]),
            repr(r.target_tip[2]), r.wall_time_us]


def write_trials_csv(path: str, records: list[TrialRecord]) -> None:
    _atomic_write(path, _csv_text(TRIALS_CSV_COLUMNS,
                                  [_trial_row(r) for r in records]))


def write_summary_json(path: str, records: list[TrialRecord]) -> None:
    cells = [{
        "method": c.method.value,
        "n_segments": c.n_segments,
        "iter_limit": c.iter_limit,
        "tolerance": c.tolerance,
        "trial_count": c.trial_count,
        "success_rate": c.success_rate,
        "mean_iter_converged": c.mean_iter_converged,
        "mean_iter_paired": c.mean_iter_paired,
        "deadlock_rate": c.deadlock_rate,
    } for c in aggregate(records).cells]
    _write_json(path, cells)


def _parse_methods(text: str) -> tuple[Method, ...]:
    try:
        return tuple(Method(tok.strip().lower())
                     for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise InputError(f"unknown method in {text!r}") from exc


def _parse_segments(text: str) -> tuple[int, ...]:
    counts = tuple(int(tok) for tok in text.replace(",", " ").split())
    if not counts or any(c < 1 for c in counts):
        raise InputError("--segments must list positive integers")
    return counts


def _solver_options(args, config: dict[str, str]) -> SolverOptions:
    """SolverOptions from config-file keys with CLI flags taking precedence."""
    def pick(flag, key, cast, default):
        v = getattr(args, flag, None)
        if v is not None:
            return cast(v)
        if key in config:
            return cast(config[key])
        return default

    base = SolverOptions()
    return SolverOptions(
        method=Method(pick("method", "method", str, base.method.value)),
        beta=pick("beta", "beta", float, base.beta),
        lam=pick("lam", "lambda", float, base.lam),
        tol=pick("tol", "tol", float, base.tol),
        max_iter=pick("max_iter", "max_iter", int, base.max_iter),
        vvl_initial_length_factor=pick("vvl_factor", "vvl_factor", float,
                                       base.vvl_initial_length_factor),
        record_trajectory=bool(getattr(args, "trajectory", False)),
    )


def _target_from_config(config: dict[str, str],
                        ) -> tuple[int, list[float], Pose]:
    """Target pose plus segment count and nominal lengths from a solve
    input file. Accepts a configuration (kappa/phi lists) or a pose
    (quaternion/translation)."""
    if "kappa" in config:
        kappa = _floats(config["kappa"])
        phi = _floats(config.get("phi", ""))
        n = len(kappa)
        if len(phi) != n:
            raise InputError("kappa and phi must have equal length")
        L = _floats(config["L"]) if "L" in config else [1.0] * n
        l = _floats(config["l"]) if "l" in config else list(L)
        if len(L) != n or len(l) != n:
            raise InputError("l and L must match the segment count")
        state = ManipulatorState.from_arrays(kappa, phi, l, L)
        return n, L, cc_model.forward_kinematics(state)
    if "quaternion" in config or "translation" in config:
        if "segments" not in config:
            raise InputError("pose targets require a 'segments' count")
        n = int(config["segments"])
        L = _floats(config["L"]) if "L" in config else [1.0] * n
        if len(L) != n:
            raise InputError("L must match the segment count")
        q = _floats(config.get("quaternion", "1 0 0 0"))
        t = _floats(config.get("translation", "0 0 0"))
        if len(t) != 3:
            raise InputError("translation must have 3 components")
        return n, L, Pose(rotation_from_quaternion(q), np.array(t))
    raise InputError(
        "input file must define a configuration (kappa, phi, ...) "
        "or a pose (quaternion, translation, segments)")


def cmd_solve(args) -> int:
    config = read_key_value_file(args.input)
    n, L, target = _target_from_config(config)
    opts = _solver_options(args, config)
    result = solve(make_initial_guess(n, L, opts), target, opts)
    out_dir = args.out_dir
    _write_json(os.path.join(out_dir, "result.json"),
                _result_dict(result, target, opts))
    if opts.record_trajectory:
        _write_json(os.path.join(out_dir, "trajectory.json"),
                    _trajectory_dict(result, target, opts))
    print(f"method={opts.method.value} converged={result.converged} "
          f"iterations={result.iterations} final_error={result.final_error:.3e}")
    return EXIT_OK


def demo_target() -> tuple[ManipulatorState, Pose]:
    """The built-in four-segment target configuration and its pose."""
    state = ManipulatorState.from_arrays(DEMO_KAPPA, DEMO_PHI, [1.0] * 4)
    return state, cc_model.forward_kinematics(state)


def adverse_start(target: Pose, n: int = 4) -> ManipulatorState:
    """Start that reliably traps the plain Jacobian iteration: every segment
    bent to a half circle facing away from the target's azimuth."""
    az = float(np.arctan2(target.p[1], target.p[0]))
    return ManipulatorState.from_arrays(
        [np.pi] * n, [az + np.pi] * n, [1.0] * n)


def run_demo(out_dir: str, tol: float = 1e-8, max_iter: int = 500,
             ) -> list[tuple[str, SolveResult]]:
    """The three demo runs; writes one trajectory file per run."""
    _, target = demo_target()
    runs = []

    opts_jac = SolverOptions(method=Method.JACOBIAN, tol=tol,
                             max_iter=max_iter, record_trajectory=True)
    runs.append(("rest-jacobian", opts_jac,
                 solve(make_initial_guess(4, [1.0] * 4, opts_jac),
                       target, opts_jac)))
    runs.append(("adverse-jacobian", opts_jac,
                 solve(adverse_start(target), target, opts_jac)))
    opts_vvl = SolverOptions(method=Method.VVL, tol=tol, max_iter=max_iter,
                             vvl_initial_length_factor=1.0 / 3.0,
                             record_trajectory=True)
    runs.append(("rest-vvl", opts_vvl,
                 solve(make_initial_guess(4, [1.0] * 4, opts_vvl),
                       target, opts_vvl)))

    out = []
    for name, opts, result in runs:
        _write_json(os.path.join(out_dir, f"trajectory-{name}.json"),
                    _trajectory_dict(result, target, opts))
        out.append((name, result))
    return out


def cmd_demo(args) -> int:
    results = run_demo(args.out_dir)
    print(f"{'run':<18} {'converged':<10} {'iterations':<11} "
          f"{'final_error':<13} deadlock")
    for name, r in results:
        print(f"{name:<18} {str(r.converged):<10} {r.iterations:<11d} "
              f"{r.final_error:<13.3e} {any(r.deadlock_flags)}")
    return EXIT_OK


def _benchmark_spec(args, config: dict[str, str]) -> BenchmarkSpec:
    def pick(flag, key, cast, default):
        v = getattr(args, flag, None)
        if v is not None:
            return cast(v)
        if key in config:
            return cast(config[key])
        return default

    base = BenchmarkSpec()
    solver = replace(SolverOptions(),
                     beta=pick("beta", "beta", float, SolverOptions().beta),
                     lam=pick("lam", "lambda", float, SolverOptions().lam))
    return BenchmarkSpec(
        segment_counts=pick("segments", "segments", _parse_segments,
                            base.segment_counts),
        trials_per_config=pick("trials", "trials", int, 1000),
        iteration_limits=(pick("max_iter", "max_iter", int, 500),),
        tolerances=(pick("tol", "tol", float, 1e-4),),
        methods=pick("method", "method", _parse_methods, base.methods),
        theta_max=pick("theta_max", "theta_max", float, base.theta_max),
        master_seed=pick("seed", "seed", int, base.master_seed),
        solver=solver)


def cmd_bench(args) -> int:
    config = read_key_value_file(args.config) if args.config else {}
    spec = _benchmark_spec(args, config)
    records = run_suite(spec)
    write_trials_csv(os.path.join(args.out_dir, "trials.csv"), records)
    write_summary_json(os.path.join(args.out_dir, "summary.json"), records)
    for c in aggregate(records).cells:
        mean = ("-" if c.mean_iter_converged is None
                else f"{c.mean_iter_converged:.1f}")
        print(f"{c.method.value:<9} n={c.n_segments} limit={c.iter_limit} "
              f"tol={c.tolerance:g} success={c.success_rate:.3f} "
              f"mean_iter={mean}")
    return EXIT_OK


def cmd_workspace(args) -> int:
    config = read_key_value_file(args.config) if args.config else {}
    spec = _benchmark_spec(args, config)
    rows = []
    for n in spec.segment_counts:
        for tip, _ in sample_workspace(spec.master_seed, n,
                                       spec.trials_per_config, spec):
            rows.append(["reachable", "", n,
                         repr(float(tip[0])), repr(float(tip[1])),
                         repr(float(tip[2]))])
    records = run_suite(spec)
    for r in records:
        if not r.converged:
            rows.append(["failed", r.method.value, r.n_segments,
                         repr(r.target_tip[0]), repr(r.target_tip[1]),
                         repr(r.target_tip[2])])
    _atomic_write(os.path.join(args.out_dir, "workspace.csv"),
                  _csv_text(WORKSPACE_CSV_COLUMNS, rows))
    n_failed = sum(not r.converged for r in records)
    print(f"workspace.csv: {len(rows)} rows "
          f"({len(rows) - n_failed} reachable, {n_failed} failed)")
    return EXIT_OK


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=[m.value for m in Method],
                   help="IK update rule")
    p.add_argument("--beta", type=float, help="iteration step size factor")
    p.add_argument("--lambda", dest="lam", type=float,
                   help="damped-least-squares damping factor")
    p.add_argument("--tol", type=float, help="convergence tolerance")
    p.add_argument("--max-iter", type=int, help="iteration limit")
    p.add_argument("--vvl-factor", dest="vvl_factor", type=float,
                   help="initial virtual length as a fraction of nominal")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cc-ik",
        description="Constant-curvature continuum manipulator IK toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one IK case from an input file")
    p.add_argument("--input", required=True, help="key=value target file")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--trajectory", action="store_true",
                   help="also write trajectory.json")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("demo", help="run the built-in four-segment scenario")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_demo)

    for name, func, hlp in (
            ("bench", cmd_bench, "run a randomized benchmark suite"),
            ("workspace", cmd_workspace, "sample workspace + failure cloud")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--config", help="key=value benchmark config file")
        p.add_argument("--out-dir", default=".")
        p.add_argument("--method", type=str,
                       help="comma-separated methods (default: all)")
        p.add_argument("--beta", type=float)
        p.add_argument("--lambda", dest="lam", type=float)
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", type=int)
        p.add_argument("--segments", type=str,
                       help="comma-separated segment counts")
        p.add_argument("--trials", type=int)
        p.add_argument("--theta-max", dest="theta_max", type=float)
        p.add_argument("--seed", type=int)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        os.makedirs(args.out_dir, exist_ok=True)
        return args.func(args)
    except (InputError, ValueError, KeyError) as exc:
        print(f"cc-ik: invalid input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except FileNotFoundError as exc:
        print(f"cc-ik: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as exc:
        print(f"cc-ik: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
