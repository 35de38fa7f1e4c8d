"""Benchmark: compiled kernels vs the pure-numpy fallback.

Times the capacity solver on the workloads that dominate real runs: a batch
of random channels, the plain-step burst in isolation, and an exhaustive
subset search.  Run from the repository root:

    python benchmarks/bench_backends.py
"""

import itertools
import time

import numpy as np

from dmcprune import backend
from dmcprune.capacity import _neg_row_entropies, _solve
from dmcprune.gen import GeneratorConfig, child_seed, sample_dmc


def time_solver(kernels, label):
    backend.eval_state = kernels.eval_state
    backend.run_burst = kernels.run_burst
    results = {}

    t0 = time.perf_counter()
    for t in range(60):
        rng = np.random.default_rng(7000 + t)
        m = int(rng.integers(2, 17))
        n = int(rng.integers(2, 17))
        w = np.ascontiguousarray(rng.dirichlet(np.ones(n), size=m))
        _solve(w, 1e-9, 1_000_000, True, False)
    results["random channels (60x, <=16)"] = time.perf_counter() - t0

    cfg = GeneratorConfig(num_inputs=12, num_outputs=12, num_prototypes=4,
                          seed=child_seed(0, 0))
    ch = sample_dmc(cfg)
    t0 = time.perf_counter()
    for k in range(2, 5):
        for sub in itertools.combinations(range(12), k):
            _solve(np.ascontiguousarray(ch.matrix[list(sub)]), 1e-9, 1_000_000, True, False)
    results["exhaustive k=2..4 (except loop)"] = time.perf_counter() - t0

    w = np.ascontiguousarray(sample_dmc(GeneratorConfig(
        num_inputs=30, num_outputs=30, num_prototypes=5, seed=child_seed(1, 0))).matrix)
    neg_h = _neg_row_entropies(w)
    colsup = np.ascontiguousarray((w > 0).any(axis=0), dtype=np.uint8)
    p = np.full(30, 1.0 / 30)
    q = np.empty(30)
    d = np.empty(30)
    delta = np.zeros(30)
    lower, upper = kernels.eval_state(w, neg_h, colsup, p, q, d)
    t0 = time.perf_counter()
    kernels.run_burst(w, neg_h, colsup, p, q, d, delta, lower, upper, 20_000, 0.0)
    results["20k plain steps, 30x30"] = time.perf_counter() - t0

    print(f"\n{label}")
    for name, secs in results.items():
        print(f"  {name:34s} {secs:8.3f} s")
    return results


def main():
    py = backend.get_backend("python")
    try:
        compiled = backend.get_backend("compiled")
    except RuntimeError:
        compiled = None

    saved = (backend.eval_state, backend.run_burst)
    try:
        res_py = time_solver(py, "pure-python kernels")
        if compiled is None:
            print("\ncompiled kernels unavailable; build with `pip install -e .`")
            return
        res_c = time_solver(compiled, "compiled kernels")
    finally:
        backend.eval_state, backend.run_burst = saved

    print("\nspeedup (python / compiled)")
    for name in res_py:
        print(f"  {name:34s} {res_py[name] / res_c[name]:8.1f}x")


if __name__ == "__main__":
    main()
