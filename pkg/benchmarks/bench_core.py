"""Benchmark the compiled kernel core against the pure-NumPy fallback.

Times the two hot paths on scenario-shaped workloads: single projection
QP solves (the per-step controller problem) and the frozen stepping loop
(equilibrium and invariance certification).  Run:

    python benchmarks/bench_core.py
"""

import time

import numpy as np

from hybridfo import _pure, backend


def scenario_rows():
    # discharging-mode shape: availability, battery box, nonnegativity
    R = np.array(
        [
            [1, 0, 0, 1, 0],
            [0, 1, 0, 0, 1],
            [0, 0, 1, 0, 0],
            [0, 0, -1, 0, 0],
            [-1, 0, 0, 0, 0],
            [0, -1, 0, 0, 0],
            [0, 0, -1, 0, 0],
            [0, 0, 0, -1, 0],
            [0, 0, 0, 0, -1],
        ],
        dtype=float,
    )
    b = np.array([31000.0, 62000.0, 18000.0, 20000.0, 0, 0, 0, 0, 0])
    E = np.array([[0.0, 0.0, 0.0, 1.0, 1.0]])
    f = np.zeros(1)
    return R, b, E, f


def bench_qp(impl, n_solves=2000, seed=0):
    rng = np.random.default_rng(seed)
    R, b, E, f = scenario_rows()
    box = np.vstack([R, np.eye(5), -np.eye(5)])
    rhs = np.concatenate([b, np.full(10, 2000.0)])
    gammas = rng.uniform(-2e5, 2e5, size=(n_solves, 5))
    start = time.perf_counter()
    for gamma in gammas:
        impl.qp_kernel(gamma, box, rhs, E, f, 0, 1000)
    return (time.perf_counter() - start) / n_solves


def bench_loop(impl, n_steps, seed=0):
    R, b, E, f = scenario_rows()
    rate = np.full(5, 2000.0)
    start = time.perf_counter()
    impl.frozen_loop(
        np.zeros(5), R, b, E, f, rate, 0.95, 1.0, 0.03,
        impl.GAMMA_DISCHARGING, 10.0, 80.0, 77500.0, np.zeros(5), n_steps, 0.0,
    )
    return (time.perf_counter() - start) / n_steps


def main() -> None:
    impls = [("pure", _pure)]
    if backend.compiled_available():
        from hybridfo import _core

        impls.append(("compiled", _core))
    else:
        print("compiled core not built; benchmarking the pure path only")

    results = {}
    for name, impl in impls:
        per_qp = bench_qp(impl, n_solves=500 if name == "pure" else 5000)
        per_step = bench_loop(impl, n_steps=1000 if name == "pure" else 20000)
        results[name] = (per_qp, per_step)
        print(f"{name:>9}: qp solve {per_qp * 1e6:8.1f} us   frozen-loop step {per_step * 1e6:8.1f} us")

    if len(results) == 2:
        qp_speedup = results["pure"][0] / results["compiled"][0]
        loop_speedup = results["pure"][1] / results["compiled"][1]
        print(f"{'speedup':>9}: qp solve {qp_speedup:8.1f} x    frozen-loop step {loop_speedup:8.1f} x")


if __name__ == "__main__":
    main()
