"""Input-symbol selection: agglomerative clustering on pairwise JSD with
complete linkage and farthest-average representatives, plus exhaustive,
greedy, and random baselines.

All tie-breaks are lexicographic / smallest-index so every routine is
deterministic given its inputs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations

import numpy as np

from .bound import BoundReport, Mode, capacity_loss_bound
from .capacity import DEFAULT_MAX_ITER, DEFAULT_TOL, capacity_value, blahut_arimoto
from .core import (
    Channel,
    DmcError,
    chi2_divergence,
    entropy,
    input_subset,
    js_divergence,
    restrict,
    validate_channel,
)


class InvalidK(DmcError):
    pass


class BudgetExceeded(DmcError):
    def __init__(self, count: int, budget: int):
        self.count = count
        self.budget = budget
        super().__init__(f"{count} subsets exceed the enumeration budget {budget}")


class CounterexampleFailed(DmcError):
    pass


class Method(str, Enum):
    CLUSTERING = "clustering"
    EXHAUSTIVE = "exhaustive"
    GREEDY = "greedy"
    RANDOM = "random"


@dataclass(frozen=True)
class ClusterAssignment:
    clusters: tuple[tuple[int, ...], ...]
    merge_trace: tuple[tuple[tuple[int, ...], tuple[int, ...], float], ...]


@dataclass(frozen=True)
class SelectionResult:
    subset: tuple[int, ...]
    method: str
    capacity_nats: float
    bound: BoundReport | None = None
    wall_time_s: float = 0.0

    @property
    def capacity_bits(self) -> float:
        return self.capacity_nats / math.log(2.0)


def pairwise_jsd(channel: Channel, metric: str = "jsd") -> np.ndarray:
    """Symmetric matrix of pairwise row divergences (JSD by default).

    `metric="chi2"` uses the symmetrized chi-squared divergence instead; the
    default matches the selection algorithm's distance choice.
    """
    w = channel.matrix
    m = channel.num_inputs
    dist = np.zeros((m, m))
    for a in range(m):
        for b in range(a + 1, m):
            if metric == "jsd":
                v = js_divergence(w[a], w[b])
            elif metric == "chi2":
                v = 0.5 * (chi2_divergence(w[a], w[b]) + chi2_divergence(w[b], w[a]))
            else:
                raise DmcError(f"unknown metric {metric!r}")
            dist[a, b] = dist[b, a] = v
    return dist


def cluster_inputs(distance: np.ndarray, k: int) -> ClusterAssignment:
    """Agglomerative complete-linkage clustering down to k clusters.

    At each step the pair with minimal linkage is merged; ties pick the
    lexicographically smallest (min element of a, min element of b) pair.
    """
    m = distance.shape[0]
    if distance.shape != (m, m):
        raise DmcError("distance matrix must be square")
    if not 1 <= k <= m:
        raise InvalidK(f"k={k} outside [1, {m}]")
    members: dict[int, list[int]] = {i: [i] for i in range(m)}
    linkage = distance.astype(np.float64).copy()
    trace = []
    while len(members) > k:
        best = None
        ids = sorted(members, key=lambda c: members[c][0])
        for ia in range(len(ids)):
            for ib in range(ia + 1, len(ids)):
                a, b = ids[ia], ids[ib]
                val = linkage[a, b]
                key = (val, members[a][0], members[b][0])
                if best is None or key < best[0]:
                    best = (key, a, b)
        (val, _, _), a, b = best
        trace.append((tuple(members[a]), tuple(members[b]), float(val)))
        members[a] = sorted(members[a] + members[b])
        del members[b]
        for c in members:
            if c != a:
                v = max(linkage[a, c], linkage[b, c])
                linkage[a, c] = linkage[c, a] = v
    clusters = tuple(tuple(members[c]) for c in sorted(members, key=lambda c: members[c][0]))
    return ClusterAssignment(clusters=clusters, merge_trace=tuple(trace))


def select_representatives(
    channel: Channel, distance: np.ndarray, assignment: ClusterAssignment
) -> tuple[int, ...]:
    """Per cluster, the member with the largest average distance to all other
    symbols of the whole alphabet (ties -> smallest index)."""
    m = channel.num_inputs
    if m == 1:
        scores = np.zeros(1)
    else:
        scores = distance.sum(axis=1) / (m - 1)
    reps = []
    for cluster in assignment.clusters:
        best = cluster[0]
        for x in cluster[1:]:
            if scores[x] > scores[best]:
                best = x
        reps.append(best)
    return tuple(sorted(reps))


def select_inputs(
    channel: Channel,
    k: int,
    with_bound: bool = False,
    ba_tol: float = DEFAULT_TOL,
    ba_max_iter: int = DEFAULT_MAX_ITER,
    bound_mode: Mode | str = Mode.SURROGATE,
    distance: np.ndarray | None = None,
) -> SelectionResult:
    """Clustering-based selection of k input symbols.

    Selection itself never solves for capacity; the restricted channel's
    capacity (and optional loss certificate) is computed afterwards for
    reporting.  A precomputed pairwise-distance matrix may be passed in.
    """
    if not 1 <= k <= channel.num_inputs:
        raise InvalidK(f"k={k} outside [1, {channel.num_inputs}]")
    t0 = time.perf_counter()
    dist = pairwise_jsd(channel) if distance is None else distance
    assignment = cluster_inputs(dist, k)
    subset = select_representatives(channel, dist, assignment)
    cap = capacity_value(channel.matrix[list(subset)], ba_tol, ba_max_iter)
    rep = None
    if with_bound:
        rep = capacity_loss_bound(channel, subset, bound_mode,
                                  ba_tol=ba_tol, ba_max_iter=ba_max_iter)
    return SelectionResult(
        subset=subset,
        method=Method.CLUSTERING.value,
        capacity_nats=cap,
        bound=rep,
        wall_time_s=time.perf_counter() - t0,
    )


def exhaustive_select(
    channel: Channel,
    k: int,
    budget: int = 10**6,
    ba_tol: float = DEFAULT_TOL,
    ba_max_iter: int = DEFAULT_MAX_ITER,
) -> SelectionResult:
    """Best k-subset by enumerating all of them (lexicographic order, first
    strict improvement wins, so ties resolve to the smallest subset)."""
    m = channel.num_inputs
    if not 1 <= k <= m:
        raise InvalidK(f"k={k} outside [1, {m}]")
    count = math.comb(m, k)
    if count > budget:
        raise BudgetExceeded(count, budget)
    t0 = time.perf_counter()
    w = channel.matrix
    best_subset = None
    best_cap = -math.inf
    for sub in combinations(range(m), k):
        cap = capacity_value(w[list(sub)], ba_tol, ba_max_iter)
        if cap > best_cap:
            best_cap = cap
            best_subset = sub
    return SelectionResult(
        subset=tuple(best_subset),
        method=Method.EXHAUSTIVE.value,
        capacity_nats=best_cap,
        wall_time_s=time.perf_counter() - t0,
    )


def greedy_select(
    channel: Channel,
    k: int,
    ba_tol: float = DEFAULT_TOL,
    ba_max_iter: int = DEFAULT_MAX_ITER,
) -> SelectionResult:
    """Forward greedy by capacity gain, seeded with the best pair.

    All single symbols tie at capacity 0, so the first step enumerates pairs.
    """
    m = channel.num_inputs
    if k < 2:
        raise InvalidK("greedy selection needs k >= 2")
    if k > m:
        raise InvalidK(f"k={k} outside [2, {m}]")
    t0 = time.perf_counter()
    w = channel.matrix
    chosen = None
    best_cap = -math.inf
    for pair in combinations(range(m), 2):
        cap = capacity_value(w[list(pair)], ba_tol, ba_max_iter)
        if cap > best_cap:
            best_cap = cap
            chosen = list(pair)
    while len(chosen) < k:
        best_x, best_c = None, -math.inf
        for x in range(m):
            if x in chosen:
                continue
            cap = capacity_value(w[sorted(chosen + [x])], ba_tol, ba_max_iter)
            if cap > best_c:
                best_c, best_x = cap, x
        chosen.append(best_x)
        best_cap = best_c
    return SelectionResult(
        subset=tuple(sorted(chosen)),
        method=Method.GREEDY.value,
        capacity_nats=best_cap,
        wall_time_s=time.perf_counter() - t0,
    )


def random_select(
    channel: Channel,
    k: int,
    rng: np.random.Generator,
    ba_tol: float = DEFAULT_TOL,
    ba_max_iter: int = DEFAULT_MAX_ITER,
) -> SelectionResult:
    """Uniformly random k-subset baseline (deterministic given the generator state)."""
    m = channel.num_inputs
    if not 1 <= k <= m:
        raise InvalidK(f"k={k} outside [1, {m}]")
    t0 = time.perf_counter()
    subset = tuple(sorted(int(i) for i in rng.choice(m, size=k, replace=False)))
    cap = capacity_value(channel.matrix[list(subset)], ba_tol, ba_max_iter)
    return SelectionResult(
        subset=subset,
        method=Method.RANDOM.value,
        capacity_nats=cap,
        wall_time_s=time.perf_counter() - t0,
    )


# Fixed 4-input channel whose rows are permutations of one multiset, so all
# conditional entropies agree and capacity reduces to balancing the output
# law; adding input 2 to {0,1,3} gains strictly more than adding it to {0,1},
# violating the diminishing-returns property of submodular set functions.
NON_SUBMODULAR_ROWS = (
    (0.6, 0.2, 0.1, 0.1),
    (0.6, 0.1, 0.1, 0.2),
    (0.6, 0.1, 0.2, 0.1),
    (0.1, 0.6, 0.1, 0.2),
)


@dataclass(frozen=True)
class SubmodularityReport:
    gain_small_set: float
    gain_large_set: float
    margin: float
    row_entropies: tuple[float, ...]
    empty_set_gain: float
    singleton_gain: float
    passed: bool = field(default=True)


def check_submodularity_counterexample(
    ba_tol: float = DEFAULT_TOL,
    ba_max_iter: int = DEFAULT_MAX_ITER,
) -> SubmodularityReport:
    """Verify that capacity gains violate diminishing returns on the fixed channel.

    Checks C({0,1,3} + {2}) - C({0,1,3}) > C({0,1} + {2}) - C({0,1}) with a
    margin above solver noise, equal row entropies, and the empty-set case
    (every singleton has capacity 0 while pairs gain strictly).  Raises
    CounterexampleFailed on any violation, which would indicate a solver bug.
    """
    ch = validate_channel(np.array(NON_SUBMODULAR_ROWS))
    w = ch.matrix

    def cap(rows):
        return capacity_value(w[list(rows)], ba_tol, ba_max_iter)

    c01 = cap((0, 1))
    c012 = cap((0, 1, 2))
    c013 = cap((0, 1, 3))
    c0123 = cap((0, 1, 2, 3))
    gain_small = c012 - c01
    gain_large = c0123 - c013
    margin = gain_large - gain_small
    entropies = tuple(entropy(w[x]) for x in range(4))
    spread = max(entropies) - min(entropies)
    singleton_gain = cap((0, 1)) - cap((0,))
    if margin <= 10 * ba_tol:
        raise CounterexampleFailed(f"margin {margin:.3e} not strictly positive")
    if spread > 1e-12:
        raise CounterexampleFailed(f"row entropies differ by {spread:.3e}")
    if singleton_gain <= 0:
        raise CounterexampleFailed("pair gain over a singleton should be positive")
    return SubmodularityReport(
        gain_small_set=gain_small,
        gain_large_set=gain_large,
        margin=margin,
        row_entropies=entropies,
        empty_set_gain=0.0,
        singleton_gain=singleton_gain,
        passed=True,
    )
