import numpy as np
import pytest

from dmcprune import backend
from dmcprune.capacity import _neg_row_entropies


def _kernels():
    mods = [("python", backend.get_backend("python"))]
    try:
        mods.append(("compiled", backend.get_backend("compiled")))
    except RuntimeError:
        pass
    return mods


KERNELS = _kernels()

needs_compiled = pytest.mark.skipif(
    len(KERNELS) < 2, reason="compiled kernels not built"
)


def random_state(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 10))
    n = int(rng.integers(2, 10))
    w = np.ascontiguousarray(rng.dirichlet(np.ones(n), size=m))
    p = rng.dirichlet(np.ones(m))
    return w, p


@pytest.mark.parametrize("name,mod", KERNELS)
class TestKernelContract:
    def test_eval_state_matches_reference(self, name, mod):
        for seed in range(20):
            w, p = random_state(seed)
            m, n = w.shape
            neg_h = _neg_row_entropies(w)
            colsup = np.ascontiguousarray((w > 0).any(axis=0), dtype=np.uint8)
            q = np.empty(n)
            d = np.empty(m)
            lower, upper = mod.eval_state(w, neg_h, colsup, p, q, d)
            q_ref = p @ w
            d_ref = neg_h - w @ np.log(q_ref)
            assert np.max(np.abs(q - q_ref)) <= 1e-14
            assert np.max(np.abs(d - d_ref)) <= 1e-12
            assert lower == pytest.approx(float(p @ d_ref), abs=1e-12)
            assert upper == pytest.approx(float(np.max(d_ref)), abs=1e-12)

    def test_burst_progresses_and_stops(self, name, mod):
        w, p = random_state(99)
        m, n = w.shape
        p = np.full(m, 1.0 / m)
        neg_h = _neg_row_entropies(w)
        colsup = np.ascontiguousarray((w > 0).any(axis=0), dtype=np.uint8)
        q = np.empty(n)
        d = np.empty(m)
        delta = np.zeros(m)
        lower, upper = mod.eval_state(w, neg_h, colsup, p, q, d)
        steps, lower2, upper2, dn, dnp, conv = mod.run_burst(
            w, neg_h, colsup, p, q, d, delta, lower, upper, 100_000, 1e-10
        )
        assert conv
        assert upper2 - lower2 <= 1e-10
        assert lower2 >= lower - 1e-15


@needs_compiled
class TestBackendAgreement:
    def test_eval_state_bitwise_close(self):
        py = backend.get_backend("python")
        cc = backend.get_backend("compiled")
        for seed in range(30):
            w, p = random_state(100 + seed)
            m, n = w.shape
            neg_h = _neg_row_entropies(w)
            colsup = np.ascontiguousarray((w > 0).any(axis=0), dtype=np.uint8)
            out = []
            for mod in (py, cc):
                q = np.empty(n)
                d = np.empty(m)
                out.append(mod.eval_state(w, neg_h, colsup, p.copy(), q, d))
            assert out[0][0] == pytest.approx(out[1][0], abs=1e-13)
            assert out[0][1] == pytest.approx(out[1][1], abs=1e-13)

    def test_solver_values_agree(self):
        from dmcprune.capacity import _solve

        saved = (backend.eval_state, backend.run_burst)
        values = {}
        try:
            for name, mod in KERNELS:
                backend.eval_state = mod.eval_state
                backend.run_burst = mod.run_burst
                vals = []
                for seed in range(15):
                    rng = np.random.default_rng(300 + seed)
                    m = int(rng.integers(2, 10))
                    n = int(rng.integers(2, 10))
                    w = np.ascontiguousarray(rng.dirichlet(np.ones(n), size=m))
                    lower, upper, _, _, _, _ = _solve(w, 1e-10, 1_000_000, True, False)
                    assert upper - lower <= 1e-10
                    vals.append(lower)
                values[name] = vals
        finally:
            backend.eval_state, backend.run_burst = saved
        assert np.max(np.abs(np.array(values["python"]) -
                             np.array(values["compiled"]))) <= 2e-10

    def test_starved_column_sentinel(self):
        py = backend.get_backend("python")
        cc = backend.get_backend("compiled")
        w = np.ascontiguousarray([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        p = np.array([0.5, 0.5, 0.0])  # starves the supported column 1
        neg_h = _neg_row_entropies(w)
        colsup = np.ascontiguousarray((w > 0).any(axis=0), dtype=np.uint8)
        for mod in (py, cc):
            q = np.empty(2)
            d = np.empty(3)
            lower, upper = mod.eval_state(w, neg_h, colsup, p, q, d)
            assert upper >= 1e299
            assert d[2] >= 1e299
            assert np.isfinite(lower)
