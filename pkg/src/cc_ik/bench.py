"""Randomized IK benchmark harness: joint-space target sampling, paired
trials across methods, deterministic seeding, aggregation and workspace
point clouds.

Targets are always generated from a random reachable configuration, so
non-convergence is attributable to the solver, never to an infeasible
target. Every method sees bitwise-identical targets at equal
(n_segments, trial_index).
"""
from __future__ import annotations

import hashlib
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .cc_model import ManipulatorState
from .liegroup import Pose
from .solvers import Method, SolverOptions, make_initial_guess, solve
from . import cc_model

__all__ = [
    "BenchmarkSpec",
    "TrialRecord",
    "SummaryCell",
    "BenchmarkSummary",
    "trial_seed",
    "target_seed",
    "sample_target",
    "run_trial",
    "run_suite",
    "aggregate",
    "sample_workspace",
    "worker_count",
]

DEFAULT_ITERATION_LIMITS = (30, 60, 100, 160, 500)
DEFAULT_TOLERANCES = (1e-4, 1e-6, 1e-8)


@dataclass(frozen=True)
class BenchmarkSpec:
    segment_counts: tuple[int, ...] = (2, 3, 4, 5, 6, 7)
    trials_per_config: int = 1000
    iteration_limits: tuple[int, ...] = DEFAULT_ITERATION_LIMITS
    tolerances: tuple[float, ...] = DEFAULT_TOLERANCES
    methods: tuple[Method, ...] = (Method.JACOBIAN, Method.DLS, Method.VVL)
    theta_max: float = np.pi          # per-segment bending angle sampling bound
    master_seed: int = 0
    nominal_length: float = 1.0
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if not (self.segment_counts and self.iteration_limits
                and self.tolerances and self.methods):
            raise ValueError("all sweep sets must be non-empty")
        if self.trials_per_config < 1:
            raise ValueError("trials_per_config must be >= 1")
        if not 0 <= self.theta_max <= 2 * np.pi:
            raise ValueError("theta_max must be in [0, 2*pi]")


@dataclass(frozen=True)
class TrialRecord:
    trial_id: str
    method: Method
    n_segments: int
    iter_limit: int
    tolerance: float
    seed: int
    target_kappa: tuple[float, ...]
    target_phi: tuple[float, ...]
    target_tip: tuple[float, float, float]
    converged: bool
    iterations: int
    final_error: float
    deadlock_any: bool
    fail_cause: str
    wall_time_us: int


@dataclass(frozen=True)
class SummaryCell:
    method: Method
    n_segments: int
    iter_limit: int
    tolerance: float
    trial_count: int
    success_rate: float
    mean_iter_converged: float | None
    mean_iter_paired: float | None    # over trials where every method converged
    deadlock_rate: float


@dataclass(frozen=True)
class BenchmarkSummary:
    cells: tuple[SummaryCell, ...]


def _hash64(*parts) -> int:
    h = hashlib.blake2b("\x1f".join(str(p) for p in parts).encode(),
                        digest_size=8)
    return int.from_bytes(h.digest(), "little")


def target_seed(master_seed: int, n: int, trial_index: int) -> int:
    """Seed for target sampling; independent of method/limit/tolerance so
    all methods are paired on identical targets."""
    return _hash64(master_seed, "target", n, trial_index)


def trial_seed(master_seed: int, method: Method, n: int, limit: int,
               tol: float, trial_index: int) -> int:
    """Per-trial seed recorded with the cell; derived from the full tuple."""
    return _hash64(master_seed, method.value, n, limit, repr(tol), trial_index)


def sample_target(seed: int, n: int, spec: BenchmarkSpec,
                  ) -> tuple[ManipulatorState, Pose]:
    """Uniform joint-space sample: bending angle theta_i ~ U[0, theta_max]
    (kappa_i = theta_i / L_i), phi_i ~ U[0, 2*pi). Returns the configuration
    and its forward-kinematics pose."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, spec.theta_max, n)
    phi = rng.uniform(0.0, 2 * np.pi, n)
    L = np.full(n, spec.nominal_length)
    state = ManipulatorState.from_arrays(theta / L, phi, L, L)
    return state, cc_model.forward_kinematics(state)


def run_trial(spec: BenchmarkSpec, method: Method, n: int, limit: int,
              tol: float, trial_index: int) -> TrialRecord:
    """Execute one IK trial from the rest guess; solver errors are recorded,
    never raised."""
    seed = trial_seed(spec.master_seed, method, n, limit, tol, trial_index)
    target_state, target = sample_target(
        target_seed(spec.master_seed, n, trial_index), n, spec)
    opts = replace(spec.solver, method=method, tol=tol, max_iter=limit)
    guess = make_initial_guess(n, [s.L for s in target_state.segments], opts)
    t0 = time.perf_counter()
    result = solve(guess, target, opts)
    wall_us = int((time.perf_counter() - t0) * 1e6)
    return TrialRecord(
        trial_id=f"{method.value}-n{n}-i{limit}-t{tol:g}-{trial_index}",
        method=method, n_segments=n, iter_limit=limit, tolerance=tol,
        seed=seed,
        target_kappa=tuple(s.kappa for s in target_state.segments),
        target_phi=tuple(s.phi for s in target_state.segments),
        target_tip=tuple(float(v) for v in target.p),
        converged=result.converged, iterations=result.iterations,
        final_error=result.final_error,
        deadlock_any=any(result.deadlock_flags),
        fail_cause=result.fail_cause, wall_time_us=wall_us)


def _cells(spec: BenchmarkSpec):
    for method in spec.methods:
        for n in spec.segment_counts:
            for limit in spec.iteration_limits:
                for tol in spec.tolerances:
                    yield method, n, limit, tol


def worker_count() -> int:
    """Worker processes for run_suite; capped by CC_IK_THREADS."""
    workers = os.cpu_count() or 1
    cap = os.environ.get("CC_IK_THREADS")
    if cap:
        workers = min(workers, max(1, int(cap)))
    return workers


def _run_chunk(args) -> list[TrialRecord]:
    spec, method, n, limit, tol = args
    return [run_trial(spec, method, n, limit, tol, i)
            for i in range(spec.trials_per_config)]


def run_suite(spec: BenchmarkSpec, workers: int | None = None,
              ) -> list[TrialRecord]:
    """All (method x n x limit x tolerance x trial) cells, in canonical
    order regardless of scheduling."""
    if workers is None:
        workers = worker_count()
    jobs = [(spec, *cell) for cell in _cells(spec)]
    if workers <= 1 or len(jobs) == 1:
        chunks = [_run_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_chunk, jobs))
    return [rec for chunk in chunks for rec in chunk]


def aggregate(records: list[TrialRecord]) -> BenchmarkSummary:
    """Per-cell success rate, mean iterations over converged trials, and the
    paired statistic: mean iterations over trials on which every method
    present in `records` converged (at equal n/limit/tolerance)."""
    if not records:
        raise ValueError("no records to aggregate")
    methods = sorted({r.method for r in records}, key=lambda m: m.value)
    by_cell: dict[tuple, list[TrialRecord]] = {}
    for r in records:
        by_cell.setdefault((r.method, r.n_segments, r.iter_limit,
                            r.tolerance), []).append(r)
    # trial_index -> converged, per (method, n, limit, tol)
    def index_of(r: TrialRecord) -> int:
        return int(r.trial_id.rsplit("-", 1)[1])

    converged_sets: dict[tuple, set[int]] = {}
    for key, recs in by_cell.items():
        converged_sets[key] = {index_of(r) for r in recs if r.converged}

    cells = []
    for (method, n, limit, tol), recs in sorted(
            by_cell.items(), key=lambda kv: (kv[0][0].value, kv[0][1],
                                             kv[0][2], kv[0][3])):
        count = len(recs)
        conv = [r for r in recs if r.converged]
        paired = set.intersection(*(
            converged_sets.get((m, n, limit, tol), set()) for m in methods))
        paired_iters = [r.iterations for r in recs if index_of(r) in paired]
        cells.append(SummaryCell(
            method=method, n_segments=n, iter_limit=limit, tolerance=tol,
            trial_count=count,
            success_rate=len(conv) / count if count else 0.0,
            mean_iter_converged=(float(np.mean([r.iterations for r in conv]))
                                 if conv else None),
            mean_iter_paired=(float(np.mean(paired_iters))
                              if paired_iters else None),
            deadlock_rate=sum(r.deadlock_any for r in recs) / count))
    return BenchmarkSummary(tuple(cells))


def sample_workspace(seed: int, n: int, count: int, spec: BenchmarkSpec,
                     ) -> list[tuple[np.ndarray, ManipulatorState]]:
    """Tip positions (with source configurations) of `count` random
    configurations drawn as in sample_target."""
    if count < 1:
        raise ValueError("count must be >= 1")
    out = []
    for i in range(count):
        state, pose = sample_target(_hash64(seed, "workspace", n, i), n, spec)
        out.append((pose.p, state))
    return out
