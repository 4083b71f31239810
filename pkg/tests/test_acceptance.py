"""End-to-end acceptance suite.

One test per headline claim: finite-difference agreement of the analytic
Jacobians, accuracy of the Lie-group primitives, the three demonstration
runs, the desk-scale statistical benchmark (success dominance, success
gap, paired iteration ratio), failure geography, and byte-level
determinism of the benchmark CSV output.
"""
import csv
import time

import numpy as np
import pytest

from cc_ik import cc_model as cm
from cc_ik import liegroup as lg
from cc_ik.bench import BenchmarkSpec, aggregate, run_suite
from cc_ik.cc_model import ManipulatorState, SegmentState
from cc_ik.cli import main, run_demo
from cc_ik.solvers import Method

DESK = BenchmarkSpec(segment_counts=(2, 3, 4, 5, 6, 7),
                     trials_per_config=1000,
                     iteration_limits=(500,),
                     tolerances=(1e-4,),
                     methods=(Method.JACOBIAN, Method.DLS, Method.VVL),
                     master_seed=0)


@pytest.fixture(scope="module")
def desk_bench():
    t0 = time.perf_counter()
    records = run_suite(DESK)
    elapsed = time.perf_counter() - t0
    return records, aggregate(records), elapsed


def _success(summary, method, n):
    for c in summary.cells:
        if c.method is method and c.n_segments == n:
            return c.success_rate
    raise KeyError((method, n))


def _paired_mean(summary, method, n):
    for c in summary.cells:
        if c.method is method and c.n_segments == n:
            return c.mean_iter_paired
    raise KeyError((method, n))


def _fd_column(state, seg, param, step=1e-6):
    def bump(delta):
        segs = list(state.segments)
        s = segs[seg]
        segs[seg] = SegmentState(
            kappa=s.kappa + (delta if param == "kappa" else 0.0),
            phi=s.phi + (delta if param == "phi" else 0.0),
            l=s.l + (delta if param == "l" else 0.0),
            L=s.L)
        return cm.forward_kinematics(ManipulatorState(tuple(segs))).matrix()

    T0 = cm.forward_kinematics(state).matrix()
    dT = (bump(step) - bump(-step)) / (2 * step)
    return dT @ np.linalg.inv(T0)


def test_jacobian_finite_difference_suite():
    # 100 seeded states over 1..7 segments; every analytic column of both
    # Jacobian variants agrees with central differences to 1e-5
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for trial in range(100):
        n = trial % 7 + 1
        L = rng.uniform(0.5, 1.5, n)
        kappa = rng.uniform(-np.pi, np.pi, n) / L
        phi = rng.uniform(0, 2 * np.pi, n)
        l = L * rng.uniform(0.3, 1.0, n)
        st = ManipulatorState.from_arrays(kappa, phi, l, L)
        Js = cm.jacobian_standard(st)
        Jv = cm.jacobian_vvl(st)
        for i in range(n):
            for param in ("kappa", "phi", "l"):
                fd = _fd_column(st, i, param)
                worst = max(worst,
                            np.abs(lg.twist_hat(Jv.column(i, param)) - fd).max())
                if param != "l":
                    worst = max(
                        worst,
                        np.abs(lg.twist_hat(Js.column(i, param)) - fd).max())
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-5, f"worst FD deviation {worst:.3e}"
    assert elapsed < 10.0, f"FD suite took {elapsed:.1f} s"


def test_lie_group_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2025)
    worst = 0.0
    for _ in range(10_000):
        w = rng.normal(size=3)
        w *= rng.uniform(0, np.pi - 0.1) / np.linalg.norm(w)
        V = np.concatenate([w, rng.normal(size=3)])
        worst = max(worst, np.abs(lg.log_se3(lg.exp_se3(V)) - V).max())
    assert worst <= 1e-9, f"exp/log round trip {worst:.3e}"

    worst = 0.0
    for _ in range(100):
        wa = rng.normal(size=3)
        wa *= rng.uniform(0, np.pi - 0.1) / np.linalg.norm(wa)
        wb = rng.normal(size=3)
        wb *= rng.uniform(0, np.pi - 0.1) / np.linalg.norm(wb)
        A = lg.exp_se3(np.concatenate([wa, rng.normal(size=3)]))
        B = lg.exp_se3(np.concatenate([wb, rng.normal(size=3)]))
        diff = (lg.adjoint_of_pose(A @ B)
                - lg.adjoint_of_pose(A) @ lg.adjoint_of_pose(B))
        worst = max(worst, np.abs(diff).max())
        M = rng.normal(size=(6, rng.integers(4, 12)))
        P = lg.pseudo_inverse(M)
        worst = max(worst,
                    np.abs(M @ P @ M - M).max(),
                    np.abs(P @ M @ P - P).max(),
                    np.abs((M @ P) - (M @ P).T).max(),
                    np.abs((P @ M) - (P @ M).T).max())
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-9, f"adjoint/pseudo-inverse deviation {worst:.3e}"
    assert elapsed < 10.0, f"Lie-group suite took {elapsed:.1f} s"


def test_demo_reproduction(tmp_path):
    t0 = time.perf_counter()
    results = dict(run_demo(str(tmp_path)))
    elapsed = time.perf_counter() - t0

    rest = results["rest-jacobian"]
    assert rest.converged and rest.iterations <= 200, \
        f"rest Jacobian: converged={rest.converged} iters={rest.iterations}"

    adverse = results["adverse-jacobian"]
    assert not adverse.converged
    assert adverse.iterations == 500
    assert adverse.final_error > 0.1, f"residual {adverse.final_error:.3f}"
    assert any(adverse.deadlock_flags)

    vvl = results["rest-vvl"]
    assert vvl.converged and vvl.iterations <= 100, \
        f"VVL: converged={vvl.converged} iters={vvl.iterations}"
    assert vvl.iterations < rest.iterations, \
        f"VVL {vvl.iterations} vs Jacobian {rest.iterations}"
    assert elapsed < 5.0, f"demo took {elapsed:.1f} s"


def test_benchmark_success_dominance(desk_bench):
    _, summary, elapsed = desk_bench
    assert elapsed < 300.0, f"benchmark took {elapsed:.0f} s"
    for n in DESK.segment_counts:
        vvl = _success(summary, Method.VVL, n)
        jac = _success(summary, Method.JACOBIAN, n)
        assert vvl >= jac, f"n={n}: VVL {vvl:.3f} < Jacobian {jac:.3f}"


def test_benchmark_success_gap(desk_bench):
    _, summary, _ = desk_bench
    gaps = {n: _success(summary, Method.VVL, n)
            - _success(summary, Method.JACOBIAN, n)
            for n in (4, 5, 6, 7)}
    detail = ", ".join(f"n={n}: {100 * g:+.1f}pp" for n, g in gaps.items())
    assert all(g >= 0.10 for g in gaps.values()), detail


def test_benchmark_paired_iteration_ratio(desk_bench):
    # mean iterations over targets every method solved, pooled over n
    records, _, _ = desk_bench
    by_target = {}
    for r in records:
        key = (r.n_segments, int(r.trial_id.rsplit("-", 1)[1]))
        by_target.setdefault(key, []).append(r)
    iters = {Method.VVL: [], Method.JACOBIAN: []}
    for group in by_target.values():
        if len(group) == 3 and all(r.converged for r in group):
            for r in group:
                if r.method in iters:
                    iters[r.method].append(r.iterations)
    assert iters[Method.VVL], "no mutually converged targets"
    ratio = np.mean(iters[Method.VVL]) / np.mean(iters[Method.JACOBIAN])
    assert ratio <= 0.7, f"paired iteration ratio {ratio:.3f}"


def test_failure_geography(desk_bench):
    # Jacobian failures concentrate far from the base for 4..6 segments
    records, _, _ = desk_bench
    for n in (4, 5, 6):
        rows = [r for r in records
                if r.method is Method.JACOBIAN and r.n_segments == n]
        dist = np.array([np.linalg.norm(r.target_tip) for r in rows])
        failed = np.array([not r.converged for r in rows])
        assert failed.any(), f"n={n}: no failures to locate"
        assert np.median(dist[failed]) > np.median(dist), \
            (f"n={n}: failure median {np.median(dist[failed]):.3f} "
             f"<= overall {np.median(dist):.3f}")


def test_benchmark_determinism(tmp_path):
    def rows(name):
        d = tmp_path / name
        d.mkdir()
        assert main(["bench", "--segments", "2,3,4,5,6,7", "--trials", "40",
                     "--seed", "0", "--out-dir", str(d)]) == 0
        with open(d / "trials.csv", newline="") as fh:
            raw = list(csv.reader(fh))
        i = raw[0].index("wall_time_us")
        return [[c for j, c in enumerate(r) if j != i] for r in raw]

    assert rows("first") == rows("second")
