"""Pure-numpy kernels for the capacity solver inner loop.

Same contract as the compiled extension `dmcprune._kernels`; selected by
`dmcprune.backend` when the extension is missing or disabled.

State arrays are updated in place.  `BIG` is a finite sentinel for rows whose
divergence is infinite because the current output law starves a supported
column; keeping it finite avoids inf-inf arithmetic while still blocking any
false convergence certificate.
"""

from __future__ import annotations

import numpy as np

BIG = 1e300


def eval_state(w, neg_h, col_support, p, q, d):
    """Evaluate output law q = p @ w and per-row divergences d; return (lower, upper)."""
    np.matmul(p, w, out=q)
    pos = q > 0.0
    lq = np.zeros_like(q)
    np.log(q, out=lq, where=pos)
    np.matmul(w, lq, out=d)
    np.subtract(neg_h, d, out=d)
    starved_cols = ~pos & (col_support != 0)
    if starved_cols.any():
        starved_rows = (w[:, starved_cols] > 0.0).any(axis=1)
        d[starved_rows] = BIG
    lower = float(p @ d)
    upper = float(d.max())
    return lower, upper


def run_burst(w, neg_h, col_support, p, q, d, delta, lower, upper, max_steps, tol):
    """Run up to max_steps multiplicative updates; stop early once the bracket closes.

    Returns (steps_done, lower, upper, dn_last, dn_prev, converged) where
    dn_last/dn_prev are the norms of the last two step differences.
    """
    steps = 0
    dn_last = 0.0
    dn_prev = 0.0
    converged = upper - lower <= tol
    while not converged and steps < max_steps:
        pn = p * np.exp(d - upper)
        s = float(pn.sum())
        if s <= 0.0:
            pn = (d >= upper).astype(np.float64)
            s = float(pn.sum())
        pn /= s
        np.subtract(pn, p, out=delta)
        dn_prev = dn_last
        dn_last = float(np.linalg.norm(delta))
        p[:] = pn
        lower, upper = eval_state(w, neg_h, col_support, p, q, d)
        steps += 1
        converged = upper - lower <= tol
    return steps, lower, upper, dn_last, dn_prev, converged
