"""Convex-hull geometry of a channel: chi-squared projection, membership,
nearest neighbors, and removal of redundant input rows.

The hull of a sub-channel is the set of mixtures of its rows inside the
output simplex.  The projection minimizes the convex map
c -> chi2(P || sum_r c_r W_r) over the weight simplex by conditional-gradient
steps: the linear subproblem picks the best single row, the step size comes
from an exact line search, and the duality gap provides the stopping
certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .capacity import NotConverged, capacity_value
from .core import (
    INFINITE,
    Channel,
    DimensionMismatch,
    chi2_divergence,
    input_subset,
    restrict,
)

DEFAULT_FW_TOL = 1e-8
DEFAULT_FW_MAX_ITER = 200_000
DEFAULT_MEMBERSHIP_TOL = 1e-7


@dataclass(frozen=True)
class HullProjection:
    """Chi-squared projection of a conditional row onto a sub-channel's hull.

    distance_chi2 is INFINITE (with weights/hull_point None) when no mixture
    covers the row's support.
    """

    distance_chi2: float
    weights: np.ndarray | None
    hull_point: np.ndarray | None
    kappa: float | None
    iterations: int = 0
    trace: np.ndarray | None = None

    @property
    def finite(self) -> bool:
        return math.isfinite(self.distance_chi2)


@dataclass(frozen=True)
class HullPartition:
    in_hull: tuple[int, ...]
    out_of_hull: tuple[int, ...]


def _rows_of(channel_or_matrix) -> np.ndarray:
    if isinstance(channel_or_matrix, Channel):
        return channel_or_matrix.matrix
    return np.ascontiguousarray(channel_or_matrix, dtype=np.float64)


def chi2_to_hull(
    sub_channel,
    target,
    tol: float = DEFAULT_FW_TOL,
    max_iter: int = DEFAULT_FW_MAX_ITER,
    record_trace: bool = False,
    stop_objective: float | None = None,
) -> HullProjection:
    """Minimize chi2(target || mixture of sub-channel rows) over mixture weights.

    Terminates either with duality gap <= tol (certified minimum) or, when
    stop_objective is given, as soon as the objective falls below it (enough
    for membership decisions; convergence onto an exactly attained minimum is
    slow because the optimum is then interior to a face).
    """
    rows = _rows_of(sub_channel)
    px = np.asarray(target, dtype=np.float64)
    k, n = rows.shape
    if px.shape != (n,):
        raise DimensionMismatch(f"target has shape {px.shape}, rows have {n} outputs")
    union = (rows > 0).any(axis=0)
    if np.any((px > 0) & ~union):
        return HullProjection(INFINITE, None, None, None)
    if k == 1:
        dist = chi2_divergence(px, rows[0])
        w = np.ones(1)
        return HullProjection(dist, w, rows[0].copy(), _min_positive(rows[0]))

    p2 = px * px
    pmask = px > 0
    c = np.full(k, 1.0 / k)
    q = c @ rows

    def objective(qv: np.ndarray) -> float:
        return chi2_divergence(px, qv)

    def grad_q(qv: np.ndarray) -> np.ndarray:
        qs = np.where(qv > 0, qv, 1.0)
        g = -p2 / (qs * qs)
        g[~pmask] = 0.0
        return g

    def line_search(dq: np.ndarray, t_max: float) -> float:
        # exact up to bisection on the (monotone) derivative of the convex
        # 1-D restriction; the derivative is evaluated slightly inside t_max
        # to dodge division by an exactly vanished coordinate
        def dphi(t: float) -> float:
            return float(grad_q(q + t * dq) @ dq)

        if dphi(t_max * (1.0 - 1e-16)) <= 0.0:
            return t_max
        lo, hi = 0.0, t_max
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if dphi(mid) <= 0.0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    trace = [objective(q)] if record_trace else None
    it = 0
    gap = math.inf
    # toward-vertex steps alone zigzag at O(1/t) when the projection lies
    # inside a face; pairing them with away steps restores linear convergence
    # while the linear subproblem stays a single argmin over rows
    for it in range(1, max_iter + 1):
        if stop_objective is not None and objective(q) <= stop_objective:
            break
        grad = rows @ grad_q(q)
        s = int(np.argmin(grad))
        inner = float(c @ grad)
        gap = inner - float(grad[s])
        if gap <= tol:
            break
        support = np.flatnonzero(c > 0)
        v = int(support[np.argmax(grad[support])])
        away_gain = float(grad[v]) - inner
        if gap >= away_gain or c[v] >= 1.0 - 1e-15:
            t = line_search(rows[s] - q, 1.0)
            c *= 1.0 - t
            c[s] += t
        else:
            t_max = c[v] / (1.0 - c[v])
            t = line_search(q - rows[v], t_max)
            c *= 1.0 + t
            c[v] -= t
            if c[v] < 1e-17:
                c[v] = 0.0
        c = np.maximum(c, 0.0)
        c /= c.sum()
        q = c @ rows
        if record_trace:
            trace.append(objective(q))
    else:
        raise NotConverged(max_iter, gap)

    c = c / c.sum()
    q = c @ rows
    return HullProjection(
        distance_chi2=objective(q),
        weights=c,
        hull_point=q,
        kappa=_min_positive(q),
        iterations=it,
        trace=np.asarray(trace) if record_trace else None,
    )


def _min_positive(v: np.ndarray) -> float:
    pos = v[v > 0]
    return float(pos.min()) if pos.size else 0.0


def is_in_hull(sub_channel, target, membership_tol: float = DEFAULT_MEMBERSHIP_TOL,
               tol: float = DEFAULT_FW_TOL, max_iter: int = DEFAULT_FW_MAX_ITER) -> bool:
    proj = chi2_to_hull(sub_channel, target, tol=tol, max_iter=max_iter,
                        stop_objective=membership_tol)
    return proj.finite and proj.distance_chi2 <= membership_tol


def nearest_neighbor(sub_channel, target) -> tuple[int, float]:
    """Index and value of the chi-squared-closest row (ties -> smallest index)."""
    rows = _rows_of(sub_channel)
    px = np.asarray(target, dtype=np.float64)
    if px.shape != (rows.shape[1],):
        raise DimensionMismatch(f"target has shape {px.shape}, rows have {rows.shape[1]} outputs")
    values = np.array([chi2_divergence(px, rows[r]) for r in range(rows.shape[0])])
    idx = int(np.argmin(values))
    return idx, float(values[idx])


def partition_removed(
    channel: Channel,
    subset,
    membership_tol: float = DEFAULT_MEMBERSHIP_TOL,
) -> HullPartition:
    """Classify each removed input as inside or outside the kept rows' hull."""
    kept = input_subset(subset, channel.num_inputs)
    sub = channel.matrix[list(kept)]
    inside, outside = [], []
    for x in range(channel.num_inputs):
        if x in kept:
            continue
        if is_in_hull(sub, channel.matrix[x], membership_tol):
            inside.append(x)
        else:
            outside.append(x)
    return HullPartition(tuple(inside), tuple(outside))


def prune_redundant(
    channel: Channel,
    membership_tol: float = DEFAULT_MEMBERSHIP_TOL,
) -> tuple[int, ...]:
    """Drop rows lying in the hull of the remaining ones (ascending single pass).

    Removal only shrinks the hull, so a row that survives its test can never
    become redundant later in the pass; capacity preservation is exercised in
    the test suite, not assumed here.
    """
    survivors = list(range(channel.num_inputs))
    for x in range(channel.num_inputs):
        if len(survivors) == 1:
            break
        others = [i for i in survivors if i != x]
        if x not in survivors:
            continue
        if is_in_hull(channel.matrix[others], channel.matrix[x], membership_tol):
            survivors = others
    return tuple(survivors)


def capacity_after_prune(channel: Channel, survivors, tol: float = 1e-9) -> float:
    """Capacity of the surviving sub-channel (helper for the prune CLI)."""
    sub = restrict(channel, survivors)
    return capacity_value(sub.matrix, tol)
