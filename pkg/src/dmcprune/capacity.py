"""Capacity and pseudo-capacity solvers with certified primal/dual brackets.

The capacity solver alternates the classic multiplicative update from the
uniform input distribution.  Every iterate yields an exact bracket:

    lower = sum_x p(x) D(W_x || q)   (mutual information of the iterate)
    upper = max_x D(W_x || q)        (a feasible value of the minimax dual)

with q the iterate's output law, so convergence is declared only with a true
certificate.  Because the plain update can crawl (boundary-degenerate inputs,
near-duplicate rows), an acceleration layer periodically proposes candidate
points (active-set Newton step, boundary-aimed extrapolation along the last
step, Aitken extrapolation) and accepts one only if its exactly evaluated
bracket improves.  Rejected candidates never touch the state, and acceptance
demands a fixed fractional improvement, so the accelerated path keeps the
plain iteration's guarantees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .core import Channel, DimensionMismatch, DmcError, kl_divergence

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 1_000_000

# Multiplicative suppression applied instead of zeroing a coordinate: an exact
# zero can never re-enter the update, so a wrongly suppressed row would stall
# the solver permanently; from this floor a needed row revives exponentially.
_FLOOR_SCALE = 2.0 ** -100

_NEWTON_THRESHOLDS = (1e-15, 1e-8)
_NEWTON_MAX_ACTIVE = 600


class NotConverged(DmcError):
    def __init__(self, iterations: int, gap: float):
        self.iterations = iterations
        self.gap = gap
        super().__init__(f"bracket gap {gap:.3e} after {iterations} iterations")


class KktViolation(DmcError):
    def __init__(self, x: int, slack: float):
        self.x = x
        self.slack = slack
        super().__init__(f"optimality condition violated at input {x} (slack {slack:.3e})")


class EtaInfeasible(DmcError):
    pass


@dataclass(frozen=True)
class CapacityResult:
    capacity_nats: float
    input_dist: np.ndarray
    output_dist: np.ndarray
    lower_bracket: float
    upper_bracket: float
    iterations: int
    trace: np.ndarray | None = None

    @property
    def capacity_bits(self) -> float:
        return self.capacity_nats / math.log(2.0)

    @property
    def gap(self) -> float:
        return self.upper_bracket - self.lower_bracket


@dataclass(frozen=True)
class PseudoCapacityResult:
    eta: float
    pseudo_capacity_nats: float
    output_dist: np.ndarray
    iterations: int


@dataclass(frozen=True)
class KktReport:
    capacity_nats: float
    slacks: np.ndarray
    active: np.ndarray
    max_overshoot: float
    max_active_deviation: float


def _neg_row_entropies(w: np.ndarray) -> np.ndarray:
    out = np.zeros(w.shape[0])
    mask = w > 0
    np.sum(np.where(mask, w * np.log(np.where(mask, w, 1.0)), 0.0), axis=1, out=out)
    return out


class _State:
    """Mutable solver state with exact bracket evaluation via the kernel backend."""

    __slots__ = ("w", "neg_h", "col_support", "p", "q", "d", "delta", "lower", "upper")

    def __init__(self, w: np.ndarray):
        m, n = w.shape
        self.w = w
        self.neg_h = _neg_row_entropies(w)
        self.col_support = np.ascontiguousarray((w > 0).any(axis=0), dtype=np.uint8)
        self.p = np.full(m, 1.0 / m)
        self.q = np.empty(n)
        self.d = np.empty(m)
        self.delta = np.zeros(m)
        self.lower, self.upper = backend.eval_state(
            w, self.neg_h, self.col_support, self.p, self.q, self.d
        )

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    def evaluate(self, p: np.ndarray, q_buf: np.ndarray, d_buf: np.ndarray):
        return backend.eval_state(self.w, self.neg_h, self.col_support, p, q_buf, d_buf)

    def burst(self, max_steps: int, tol: float):
        steps, self.lower, self.upper, dn_last, dn_prev, converged = backend.run_burst(
            self.w, self.neg_h, self.col_support,
            self.p, self.q, self.d, self.delta,
            self.lower, self.upper, max_steps, tol,
        )
        return steps, dn_last, dn_prev, converged


def _newton_candidates(st: _State):
    """Equalize the divergences over candidate active sets (damped to stay feasible).

    Near-duplicate rows make the overlap system singular, so besides the exact
    solve (quadratic when well-conditioned) a truncated-SVD solution is
    proposed: it drops the duplicate null-space and equalizes the remaining
    directions with an undamped step.
    """
    m = st.w.shape[0]
    seen = set()
    active_sets = [np.flatnonzero(st.p > thr) for thr in _NEWTON_THRESHOLDS]
    # suppressed rows whose divergence reaches the current max belong in the
    # optimal support; equalizing over them solves for their revived mass
    # directly (naive mass seeding overshoots and gets rejected)
    high_dead = np.flatnonzero((st.p <= 1e-15) & (st.d >= st.upper - 4.0 * st.gap)
                               & np.isfinite(st.d))
    if high_dead.size:
        base = np.flatnonzero(st.p > 1e-15)
        active_sets.append(np.sort(np.concatenate([base, high_dead[:_MAX_REVIVALS]])))
    for live in active_sets:
        key = live.tobytes()
        if key in seen or not (2 <= live.size <= _NEWTON_MAX_ACTIVE):
            continue
        seen.add(key)
        wl = st.w[live]
        qs = np.where(st.q > 0, st.q, 1.0)
        overlap = (wl / qs) @ wl.T
        k = live.size
        mat = np.zeros((k + 1, k + 1))
        mat[:k, :k] = overlap
        mat[:k, k] = 1.0
        mat[k, :k] = 1.0
        rhs = np.zeros(k + 1)
        rhs[:k] = st.d[live]
        steps = []
        try:
            steps.append(np.linalg.solve(mat, rhs)[:k])
        except np.linalg.LinAlgError:
            pass
        try:
            steps.append(np.linalg.lstsq(mat, rhs, rcond=1e-10)[0][:k])
        except np.linalg.LinAlgError:
            pass
        pl = st.p[live]
        for step in steps:
            neg = step < 0
            alpha = 1.0
            if np.any(neg):
                alpha = min(1.0, 0.99 * float(np.min(pl[neg] / -step[neg])))
            if alpha <= 0 or not np.isfinite(alpha):
                continue
            cand = np.zeros(m)
            cand[live] = pl + alpha * step
            yield cand


def _jump_candidates(st: _State, dn_last: float, dn_prev: float):
    """Extrapolate along the last step: to the boundary, and by the Aitken factor."""
    thetas = []
    live = st.p > 1e-14
    neg = (st.delta < 0) & live
    if np.any(neg):
        tmax = float(np.min(st.p[neg] / -st.delta[neg]))
        thetas += [tmax, tmax / 4.0]
    if dn_prev > 0:
        lam = dn_last / dn_prev
        if 0.0 < lam < 1.0:
            thetas.append(lam / (1.0 - lam))
    for theta in thetas:
        if math.isfinite(theta) and theta > 1.0:
            yield st.p + theta * st.delta


_MAX_PAIR_MERGES = 8


def _pair_merge_candidates(st: _State):
    """Consolidate a near-duplicate row pair onto one of its members.

    Twin rows trade mass at the rate of their divergence difference, which
    stalls the plain iteration; moving one twin's whole mass onto the other
    finishes the trade in one step when consolidation is what the optimum
    wants.  Twins are matched by row similarity (divergence values tie across
    unrelated rows near a stall), and rows whose divergence reaches the
    current max take part even when their mass sits at the suppression
    floor.  Interior splits are handled by the exact line refinement instead.
    """
    cut = st.upper - 4.0 * st.gap
    targets = [x for x in np.flatnonzero(st.d >= cut) if math.isfinite(st.d[x])]
    targets.sort(key=lambda x: (-st.d[x], x))
    emitted = 0
    seen = set()
    for x in targets[:6]:
        row_dist = np.sum((st.w - st.w[x]) ** 2, axis=1)
        row_dist[x] = math.inf
        row_dist[st.p <= 1e-14] = math.inf
        order = np.argsort(row_dist, kind="stable")
        for y in order[:2]:
            y = int(y)
            if not math.isfinite(row_dist[y]):
                break
            for frm, to in ((y, x), (x, y)):
                if st.p[frm] <= 1e-14 or (frm, to) in seen:
                    continue
                seen.add((frm, to))
                cand = st.p.copy()
                cand[to] += cand[frm]
                cand[frm] = 0.0
                yield cand
                emitted += 1
                if emitted >= _MAX_PAIR_MERGES:
                    return


def _similarity_groups(st: _State) -> list[list[int]]:
    """Connected components of near-identical rows (squared L2 closeness)."""
    m = st.w.shape[0]
    norms = np.sum(st.w * st.w, axis=1)
    scale = 1e-6 * max(float(np.max(norms)), 1e-300)
    parent = list(range(m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(m):
        for j in range(i + 1, m):
            if float(np.sum((st.w[i] - st.w[j]) ** 2)) <= scale:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    return [groups[r] for r in sorted(groups)]


def _quotient_newton_candidates(st: _State):
    """Newton step on the twin-quotient problem.

    Each cluster of near-identical rows becomes one variable (its internal
    split frozen at the current proportions), which removes the degenerate
    directions that wreck the full overlap system; the across-group
    allocation is then solved to Newton quality in one shot.  Internal splits
    are refined separately by the exact line searches.
    """
    m = st.w.shape[0]
    if m > 128:
        return
    groups = _similarity_groups(st)
    if not any(len(g) >= 2 for g in groups):
        return
    rows = []
    masses = []
    for g in groups:
        idx = np.asarray(g)
        t = float(np.sum(st.p[idx]))
        if t > 0:
            r = st.p[idx] / t
        else:
            r = np.full(idx.size, 1.0 / idx.size)
        rows.append(r @ st.w[idx])
        masses.append(t)
    eff = np.asarray(rows)
    t = np.asarray(masses)
    qs = np.where(st.q > 0, st.q, 1.0)
    self_terms = np.array([
        float(np.sum(np.where(row > 0, row * np.log(np.where(row > 0, row, 1.0)), 0.0)))
        for row in eff
    ])
    d_eff = self_terms - eff @ np.where(st.q > 0, np.log(qs), 0.0)
    g_count = len(groups)
    overlap = (eff / qs) @ eff.T
    mat = np.zeros((g_count + 1, g_count + 1))
    mat[:g_count, :g_count] = overlap
    mat[:g_count, g_count] = 1.0
    mat[g_count, :g_count] = 1.0
    rhs = np.zeros(g_count + 1)
    rhs[:g_count] = d_eff
    for solver in ("exact", "lstsq"):
        try:
            if solver == "exact":
                step = np.linalg.solve(mat, rhs)[:g_count]
            else:
                step = np.linalg.lstsq(mat, rhs, rcond=1e-10)[0][:g_count]
        except np.linalg.LinAlgError:
            continue
        negm = step < 0
        alpha = 1.0
        if np.any(negm):
            alpha = min(1.0, 0.99 * float(np.min(t[negm] / -step[negm])))
        if alpha <= 0 or not np.isfinite(alpha):
            continue
        cand = np.zeros(m)
        for gi, g in enumerate(groups):
            idx = np.asarray(g)
            total = t[gi] + alpha * step[gi]
            if t[gi] > 0:
                cand[idx] = st.p[idx] * (total / t[gi])
            else:
                cand[idx] = total / idx.size
        yield cand


def _group_newton_candidates(st: _State):
    """Equalize divergences inside clusters of near-identical rows.

    Groups of twin rows split their joint mass along directions the global
    Newton system cannot resolve (globally near-null, so the truncated solve
    drops them and the exact solve is wrecked by conditioning), and pairwise
    fixes converge slowly for groups larger than two.  Restricted to one
    group, the overlap system is well-scaled: its dominant eigenvalue is the
    group's own, so the difference directions survive the relative truncation.
    Suppressed members take part; the solve assigns their revived mass.
    """
    m = st.w.shape[0]
    if m > 128:
        return
    multi = [g for g in _similarity_groups(st) if len(g) >= 2]
    multi.sort(key=lambda g: (-float(np.max(st.d[g])), g[0]))
    qs = np.where(st.q > 0, st.q, 1.0)
    for group in multi[:6]:
        idx = np.asarray(group)
        total = float(np.sum(st.p[idx]))
        if total <= 1e-12 or not np.all(np.isfinite(st.d[idx])):
            continue
        wg = st.w[idx]
        overlap = (wg / qs) @ wg.T
        k = idx.size
        mat = np.zeros((k + 1, k + 1))
        mat[:k, :k] = overlap
        mat[:k, k] = 1.0
        mat[k, :k] = 1.0
        rhs = np.zeros(k + 1)
        rhs[:k] = st.d[idx]
        try:
            step = np.linalg.lstsq(mat, rhs, rcond=1e-10)[0][:k]
        except np.linalg.LinAlgError:
            continue
        pg = st.p[idx]
        neg = step < 0
        alpha = 1.0
        if np.any(neg):
            alpha = min(1.0, 0.99 * float(np.min(pg[neg] / -step[neg])))
        if alpha <= 0 or not np.isfinite(alpha):
            continue
        cand = st.p.copy()
        cand[idx] = pg + alpha * step
        yield cand


def _line_candidates(st: _State, q_buf: np.ndarray, d_buf: np.ndarray):
    """Exact 1-D refinement along the flattest directions.

    Near-duplicate rows leave the objective almost linear along their
    exchange directions, so model-based steps cannot place the minimizer in
    the final decades of convergence.  The bracket gap restricted to a
    mass-conserving line is convex (max of convex divergences minus a concave
    mutual information), so a golden-section search locates its exact
    minimizer at the cost of function evaluations only.  Pair directions
    toward a row whose divergence reaches the current max subsume full
    merges, split rebalancing, and the revival of a row wrongly parked at
    the suppression floor.  Returns (candidates, evals).
    """
    directions = []
    cut = st.upper - 4.0 * st.gap
    targets = [x for x in np.flatnonzero(st.d >= cut) if math.isfinite(st.d[x])]
    targets.sort(key=lambda x: (-st.d[x], x))
    seen = set()
    for x in targets[:3]:
        row_dist = np.sum((st.w - st.w[x]) ** 2, axis=1)
        row_dist[x] = math.inf
        row_dist[st.p <= 1e-14] = math.inf
        y = int(np.argmin(row_dist))
        if not math.isfinite(row_dist[y]) or (min(x, y), max(x, y)) in seen:
            continue
        seen.add((min(x, y), max(x, y)))
        u = np.zeros(st.p.size)
        u[x] = 1.0
        u[y] = -1.0
        directions.append(u)
    for delta in _group_newton_candidates(st):
        directions.append(delta - st.p)
    for delta in _newton_candidates(st):
        directions.append(delta - st.p)

    cands = []
    evals = 0
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    for u in directions[:4]:
        norm = float(np.max(np.abs(u)))
        if norm <= 0:
            continue
        pos = u > 0
        neg = u < 0
        t_hi = float(np.min(st.p[neg] / -u[neg])) if neg.any() else 0.0
        t_lo = -float(np.min(st.p[pos] / u[pos])) if pos.any() else 0.0
        if not (t_hi > t_lo):
            continue

        def gap_at(t: float) -> float:
            nonlocal evals
            c = np.maximum(st.p + t * u, 0.0)
            s = c.sum()
            if not np.isfinite(s) or s <= 0:
                return math.inf
            evals += 1
            lo, up = st.evaluate(c / s, q_buf, d_buf)
            return up - lo

        a, b = t_lo, t_hi
        x1 = b - invphi * (b - a)
        x2 = a + invphi * (b - a)
        f1, f2 = gap_at(x1), gap_at(x2)
        for _ in range(60):
            if f1 <= f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - invphi * (b - a)
                f1 = gap_at(x1)
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + invphi * (b - a)
                f2 = gap_at(x2)
        t = 0.5 * (a + b)
        if t != 0.0:
            cands.append(st.p + t * u)
    return cands, evals


_MAX_REVIVALS = 4


class _Anchors:
    """Best bracket committed so far; acceptance must improve on it."""

    __slots__ = ("best_lower", "best_gap")

    def __init__(self, lower: float, upper: float):
        self.best_lower = lower
        self.best_gap = upper - lower

    def observe(self, lower: float, upper: float) -> None:
        self.best_lower = max(self.best_lower, lower)
        self.best_gap = min(self.best_gap, upper - lower)


def _try_candidates(st: _State, anchors: _Anchors, candidates, horizon: int,
                    p_buf: np.ndarray, q_buf: np.ndarray, d_buf: np.ndarray,
                    delta_buf: np.ndarray):
    """Advance each candidate `horizon` plain steps; return the best admissible.

    Judging candidates after the same number of plain updates the live
    trajectory is getting filters out transient improvements the flow would
    undo (accept/crawl-back loops plagued shorter-sighted variants of this
    rule).  Admissibility is anchored to the best bracket ever committed: the
    post-horizon lower bound may not drop below the best lower bound, and the
    post-horizon gap must shrink the best gap by at least 0.01%, which bounds
    the total number of acceptances, so no accept/undo cycle can persist.
    """
    floor_tol = 1e-15 * max(1.0, abs(anchors.best_lower))
    best = None
    evals = 0
    for cand in candidates:
        c = np.where(cand > 0, cand, np.where(st.p > 0, st.p * _FLOOR_SCALE, 0.0))
        s = c.sum()
        if not np.isfinite(s) or s <= 0:
            continue
        p_buf[:] = c / s
        evals += 1
        lc, uc = st.evaluate(p_buf, q_buf, d_buf)
        steps, lc, uc, _, _, _ = backend.run_burst(
            st.w, st.neg_h, st.col_support, p_buf, q_buf, d_buf, delta_buf,
            lc, uc, horizon, 0.0,
        )
        evals += steps
        if lc < anchors.best_lower - floor_tol:
            continue
        if (uc - lc) > anchors.best_gap * (1.0 - 1e-4):
            continue
        if best is None or (uc - lc) < (best[2] - best[1]):
            best = (p_buf.copy(), lc, uc)
    return best, evals


def _solve(w: np.ndarray, tol: float, max_iter: int, accel: bool, record_trace: bool):
    """Core driver; returns (lower, upper, p, q, iterations, trace)."""
    m = w.shape[0]
    if m == 1:
        p = np.ones(1)
        return 0.0, 0.0, p, w[0].copy(), 0, (np.zeros((1, 2)) if record_trace else None)
    st = _State(w)
    anchors = _Anchors(st.lower, st.upper)
    trace = [(st.lower, st.upper)] if record_trace else None
    p_buf = np.empty_like(st.p)
    q_buf = np.empty_like(st.q)
    d_buf = np.empty_like(st.d)
    delta_buf = np.empty_like(st.p)
    it = 0
    wait = 4
    dn_last = dn_prev = 0.0
    while st.gap > tol and it < max_iter:
        burst_len = min(wait, max_iter - it) if accel else (max_iter - it)
        if record_trace:
            converged = False
            steps = 0
            while steps < burst_len:
                s1, dn_last, dn_prev, converged = st.burst(1, tol)
                if s1 == 0:
                    break
                steps += 1
                trace.append((st.lower, st.upper))
                if converged:
                    break
        else:
            steps, dn_last, dn_prev, converged = st.burst(burst_len, tol)
        it += steps
        anchors.observe(st.lower, st.upper)
        if converged:
            break
        if not accel or it >= max_iter:
            continue
        cands = (list(_newton_candidates(st))
                 + list(_quotient_newton_candidates(st))
                 + list(_jump_candidates(st, dn_last, dn_prev))
                 + list(_pair_merge_candidates(st)))
        if wait >= 8:
            cands += list(_group_newton_candidates(st))
        if wait >= 16:
            # model-based candidates have been failing; pay for exact 1-D refines
            line_cands, line_evals = _line_candidates(st, q_buf, d_buf)
            cands += line_cands
            it += line_evals
        horizon = min(wait, 16)
        best, evals = _try_candidates(st, anchors, cands, horizon,
                                      p_buf, q_buf, d_buf, delta_buf)
        it += evals
        if best is not None:
            st.p[:] = best[0]
            st.lower, st.upper = st.evaluate(st.p, st.q, st.d)
            anchors.observe(st.lower, st.upper)
            if record_trace:
                trace.append((st.lower, st.upper))
            dn_last = dn_prev = 0.0
            wait = 2
        else:
            wait = min(wait * 2, 256)
    trace_arr = np.asarray(trace) if record_trace else None
    return st.lower, st.upper, st.p, st.q, it, trace_arr


def blahut_arimoto(
    channel: Channel,
    tol_nats: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    accel: bool = True,
    record_trace: bool = False,
) -> CapacityResult:
    """Channel capacity with a certified bracket of width <= tol_nats.

    Raises NotConverged if the bracket does not close within max_iter
    evaluations.  The returned capacity is the final lower bracket.
    """
    if tol_nats <= 0:
        raise DmcError("tol_nats must be positive")
    lower, upper, p, q, it, trace = _solve(
        channel.matrix, tol_nats, max_iter, accel, record_trace
    )
    if upper - lower > tol_nats:
        raise NotConverged(it, upper - lower)
    p = p.copy()
    p.setflags(write=False)
    q = q.copy()
    q.setflags(write=False)
    return CapacityResult(
        capacity_nats=lower,
        input_dist=p,
        output_dist=q,
        lower_bracket=lower,
        upper_bracket=upper,
        iterations=it,
        trace=trace,
    )


def capacity_value(matrix: np.ndarray, tol_nats: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Capacity of a raw row-stochastic matrix; fast path for subset enumeration."""
    lower, upper, _, _, it, _ = _solve(
        np.ascontiguousarray(matrix, dtype=np.float64), tol_nats, max_iter, True, False
    )
    if upper - lower > tol_nats:
        raise NotConverged(it, upper - lower)
    return lower


def mutual_information(channel: Channel, input_dist) -> float:
    """I(P; W) = sum_x p(x) D(W_x || sum_x' p(x') W_x') in nats."""
    p = np.asarray(input_dist, dtype=np.float64)
    if p.shape != (channel.num_inputs,):
        raise DimensionMismatch(
            f"input distribution has shape {p.shape}, channel has {channel.num_inputs} inputs"
        )
    w = channel.matrix
    q = p @ w
    total = 0.0
    for x in np.flatnonzero(p > 0):
        total += float(p[x]) * kl_divergence(w[x], q)
    return max(0.0, total)


def verify_kkt(
    channel: Channel,
    result: CapacityResult,
    tol: float = 1e-8,
    support_threshold: float | None = None,
) -> KktReport:
    """Check the optimality conditions at the solver's output law.

    Every input must satisfy D(W_x||Q*) <= C + tol, and inputs carrying mass
    above support_threshold must satisfy |D(W_x||Q*) - C| <= tol.  A row with
    mass p is only guaranteed |D - C| <= gap/p by the bracket, so the default
    threshold scales as gap/tol (inputs crawling toward zero mass are not
    treated as active).  Returns the per-symbol slacks C - D(W_x||Q*); raises
    KktViolation otherwise.
    """
    c = result.capacity_nats
    if support_threshold is None:
        support_threshold = max(1e-7, 2.0 * result.gap / tol)
    w = channel.matrix
    q = result.output_dist
    divs = np.array([kl_divergence(w[x], q) for x in range(channel.num_inputs)])
    slacks = c - divs
    active = result.input_dist > support_threshold
    for x in range(channel.num_inputs):
        if divs[x] > c + tol:
            raise KktViolation(x, float(slacks[x]))
        if active[x] and abs(divs[x] - c) > tol:
            raise KktViolation(x, float(slacks[x]))
    finite = np.isfinite(divs)
    max_overshoot = float(np.max(divs[finite] - c)) if finite.any() else 0.0
    max_active_dev = float(np.max(np.abs(divs[active] - c))) if active.any() else 0.0
    slacks.setflags(write=False)
    return KktReport(
        capacity_nats=c,
        slacks=slacks,
        active=active,
        max_overshoot=max_overshoot,
        max_active_deviation=max_active_dev,
    )


# --- pseudo-capacity over the floored simplex {Q : Q(y) >= eta} ---


def project_floored_simplex(v: np.ndarray, eta: float) -> np.ndarray:
    """Euclidean projection onto {Q : Q(y) >= eta, sum Q = 1}."""
    n = v.size
    total = 1.0 - n * eta
    if total < 0:
        raise EtaInfeasible(f"eta={eta} exceeds 1/{n}")
    u = np.sort(v - eta)[::-1]
    cs = np.cumsum(u)
    j = np.arange(1, n + 1)
    cond = u - (cs - total) / j > 0
    rho = int(np.max(np.flatnonzero(cond))) if cond.any() else 0
    theta = (cs[rho] - total) / (rho + 1)
    return eta + np.maximum(v - eta - theta, 0.0)


def waterfill_floored(wbar: np.ndarray, eta: float) -> np.ndarray:
    """argmin_{Q >= eta, sum Q = 1} of -sum_y wbar(y) log Q(y), in closed form.

    Unfloored coordinates are proportional to wbar; the rest sit at eta.
    """
    n = wbar.size
    order = np.argsort(-wbar)
    ws = wbar[order]
    cs = np.cumsum(ws)
    lam = None
    for k in range(n, 0, -1):
        denom = 1.0 - (n - k) * eta
        if denom <= 0:
            continue
        cand = cs[k - 1] / denom
        if cand <= 0:
            continue
        ok_low = ws[k - 1] >= cand * eta - 1e-300
        ok_high = (k == n) or (ws[k] <= cand * eta)
        if ok_low and ok_high:
            lam = cand
            break
    if lam is None:
        return np.full(n, 1.0 / n)
    q = np.where(wbar / lam >= eta, wbar / lam, eta)
    return q / q.sum()


def _pseudo_eval(w: np.ndarray, neg_h: np.ndarray, p: np.ndarray, eta: float):
    q = waterfill_floored(p @ w, eta)
    d = neg_h - w @ np.log(q)
    return q, d, float(p @ d), float(np.max(d))


def _pseudo_subgradient_phase(w: np.ndarray, eta: float, restarts: int, steps: int):
    """Projected subgradient descent on Q (step log|Y|/sqrt(t), random restarts)."""
    m, n = w.shape
    rng = np.random.default_rng(1789)
    step_scale = math.log(max(n, 2))
    best_f = math.inf
    best_q = np.full(n, 1.0 / n)
    evals = 0
    for r in range(restarts):
        if r == 0:
            q = np.full(n, 1.0 / n)
        else:
            q = eta + (1.0 - n * eta) * rng.dirichlet(np.ones(n))
        for t in range(1, steps + 1):
            divs = np.array([kl_divergence(w[x], q) for x in range(m)])
            evals += 1
            xs = int(np.argmax(divs))
            f = float(divs[xs])
            if f < best_f:
                best_f = f
                best_q = q.copy()
            grad = -w[xs] / q
            q = project_floored_simplex(q - (step_scale / math.sqrt(t)) * grad, eta)
    return best_f, best_q, evals


def pseudo_capacity(
    channel: Channel,
    eta: float,
    tol_nats: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    subgradient_restarts: int = 20,
    subgradient_steps: int = 250,
) -> PseudoCapacityResult:
    """min over {Q >= eta} of max_x D(W_x||Q), with a certified bracket.

    A projected-subgradient sweep with random restarts scouts the floored
    simplex, then an alternating phase with the exact inner minimizer
    (closed-form water-filling) closes the bracket to tol_nats.
    """
    w = channel.matrix
    m, n = w.shape
    if not (eta > 0):
        raise EtaInfeasible(f"eta must be positive, got {eta}")
    if eta * n > 1.0 + 1e-12:
        raise EtaInfeasible(f"eta={eta} exceeds 1/|Y|=1/{n}")
    if tol_nats <= 0:
        raise DmcError("tol_nats must be positive")
    if abs(eta * n - 1.0) <= 1e-12:
        q = np.full(n, eta)
        value = max(kl_divergence(w[x], q) for x in range(m))
        q.setflags(write=False)
        return PseudoCapacityResult(eta, value, q, 0)

    _, _, evals = _pseudo_subgradient_phase(
        w, eta, subgradient_restarts, subgradient_steps
    )

    neg_h = _neg_row_entropies(w)
    p = np.full(m, 1.0 / m)
    q, d, lower, upper = _pseudo_eval(w, neg_h, p, eta)
    it = evals + 1
    wait = 4
    since = 0
    prev_dn = 0.0
    delta = np.zeros(m)
    while upper - lower > tol_nats and it < max_iter:
        it += 1
        since += 1
        pn = p * np.exp(d - upper)
        s = pn.sum()
        if s <= 0:
            pn = (d >= upper).astype(float)
            s = pn.sum()
        pn /= s
        np.subtract(pn, p, out=delta)
        dn = float(np.linalg.norm(delta))
        lam = dn / prev_dn if prev_dn > 0 else None
        prev_dn = dn
        p = pn
        q, d, lower, upper = _pseudo_eval(w, neg_h, p, eta)
        if since < wait or upper - lower <= tol_nats:
            continue
        since = 0
        gap = upper - lower
        thetas = []
        neg = (delta < 0) & (p > 1e-14)
        if np.any(neg):
            tmax = float(np.min(p[neg] / -delta[neg]))
            thetas += [tmax, tmax / 4.0]
        if lam is not None and 0 < lam < 1:
            thetas.append(lam / (1 - lam))
        best = None
        for theta in thetas:
            if not (math.isfinite(theta) and theta > 1.0):
                continue
            c = p + theta * delta
            c = np.where(c > 0, c, np.where(p > 0, p * _FLOOR_SCALE, 0.0))
            s = c.sum()
            if not np.isfinite(s) or s <= 0:
                continue
            c /= s
            it += 1
            qc, dc, lc, uc = _pseudo_eval(w, neg_h, c, eta)
            if lc < lower - 1e-15 * max(1.0, abs(lower)):
                continue
            if (uc - lc) > (1 - 1e-3) * gap and lc < lower + 0.01 * gap:
                continue
            if best is None or uc - lc < best[2] - best[1]:
                best = (c, lc, uc)
        if best is not None:
            p = best[0]
            q, d, lower, upper = _pseudo_eval(w, neg_h, p, eta)
            prev_dn = 0.0
            wait = 2
        else:
            wait = min(wait * 2, 256)
    if upper - lower > tol_nats:
        raise NotConverged(it, upper - lower)
    q = q.copy()
    q.setflags(write=False)
    return PseudoCapacityResult(eta, upper, q, it)
