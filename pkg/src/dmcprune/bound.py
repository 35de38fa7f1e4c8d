"""Analytical certificate on the capacity lost by restricting the input alphabet.

For a kept subset R, the certificate bounds C(W) - C(W_R) by

    4|Y|*eta  +  delta  +  sqrt(-log(eta) * (C(W_R) - log(kappa))) * sqrt(delta)

where delta is the chi-squared distance from the critical symbol's row to the
hull of the kept rows, kappa the smallest nonzero mass of the projecting hull
point, and eta a floor parameter chosen by a bias/variance balance.  The
certificate is valid only for eta <= 1/(2|Y|); otherwise the report is marked
unavailable rather than clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .capacity import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    blahut_arimoto,
    pseudo_capacity,
)
from .core import INFINITE, Channel, DmcError, input_subset, kl_divergence, restrict
from .hull import DEFAULT_FW_TOL, DEFAULT_MEMBERSHIP_TOL, chi2_to_hull

ETA_OFFSET = 0.07  # additive constant in the floor-parameter formula

_ARGMAX_TIE_TOL = 1e-9


class InvalidKappa(DmcError):
    pass


class Mode(str, Enum):
    SURROGATE = "surrogate"
    EXACT_PSEUDO = "exact_pseudo"


@dataclass(frozen=True)
class BoundReport:
    subset: tuple[int, ...]
    capacity_pruned_nats: float
    eta: float
    eta_valid: bool
    critical_x: int
    delta: float
    kappa: float | None
    term_linear: float
    term_delta: float
    term_cross: float
    bound_nats: float | None
    mode: str
    reason: str | None = None

    @property
    def available(self) -> bool:
        return self.bound_nats is not None

    def to_dict(self) -> dict:
        ln2 = math.log(2.0)
        d = {
            "subset": list(self.subset),
            "mode": self.mode,
            "capacity_pruned_nats": self.capacity_pruned_nats,
            "capacity_pruned_bits": self.capacity_pruned_nats / ln2,
            "eta": self.eta,
            "eta_valid": self.eta_valid,
            "critical_x": self.critical_x,
            "delta_chi2": None if math.isinf(self.delta) else self.delta,
            "delta_infinite": math.isinf(self.delta),
            "kappa": self.kappa,
            "term_linear_nats": self.term_linear,
            "term_delta_nats": self.term_delta,
            "term_cross_nats": self.term_cross,
            "available": self.available,
            "bound_nats": self.bound_nats,
            "bound_bits": None if self.bound_nats is None else self.bound_nats / ln2,
            "reason": self.reason,
        }
        return d


def choose_eta(capacity_pruned_nats: float, kappa: float, delta: float,
               num_outputs: int) -> float:
    """Floor parameter balancing the linear and square-root terms of the bound."""
    if kappa <= 0 or not math.isfinite(kappa):
        raise InvalidKappa(f"kappa must be in (0, 1], got {kappa}")
    if delta < 0:
        raise DmcError(f"delta must be nonnegative, got {delta}")
    if math.isinf(delta):
        return INFINITE
    radicand = capacity_pruned_nats - math.log(kappa)
    return (math.sqrt(radicand) * math.sqrt(delta) / (4.0 * num_outputs) + ETA_OFFSET) ** 2


def _row_divergences(w: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.array([kl_divergence(w[x], q) for x in range(w.shape[0])])


def _argmax_candidates(divs: np.ndarray) -> list[int]:
    """All indices within the tie tolerance of the maximum, ascending."""
    top = float(np.max(divs))
    if math.isinf(top):
        return [int(i) for i in np.flatnonzero(np.isinf(divs))]
    return [int(i) for i in np.flatnonzero(divs >= top - _ARGMAX_TIE_TOL)]


def _projection_for(w: np.ndarray, kept: tuple[int, ...], x: int,
                    membership_tol: float, fw_tol: float):
    """(delta, kappa) of symbol x against the kept rows' hull.

    Symbols in the kept set, and projections within membership tolerance,
    count as inside the hull: delta is exactly 0 there.
    """
    if x in kept:
        row = w[x]
        return 0.0, float(np.min(row[row > 0]))
    proj = chi2_to_hull(w[list(kept)], w[x], tol=fw_tol, stop_objective=membership_tol)
    if not proj.finite:
        return INFINITE, None
    delta = proj.distance_chi2
    if delta <= membership_tol:
        delta = 0.0
    return delta, proj.kappa


def capacity_loss_bound(
    channel: Channel,
    subset,
    mode: Mode | str = Mode.SURROGATE,
    ba_tol: float = DEFAULT_TOL,
    ba_max_iter: int = DEFAULT_MAX_ITER,
    fw_tol: float = DEFAULT_FW_TOL,
    membership_tol: float = DEFAULT_MEMBERSHIP_TOL,
    pseudo_tol: float = 1e-7,
) -> BoundReport:
    """Assemble the capacity-loss certificate for keeping only `subset`.

    The critical symbol is pre-selected as the maximizer of D(W_x||Q*) over
    the whole alphabet, with Q* the pruned channel's optimal output law; eta
    is derived from that symbol.  In EXACT_PSEUDO mode the final symbol is
    re-selected against the floored-simplex output law at that eta (eta is
    not re-derived).  Among maximizers tied within 1e-9, the one minimizing
    the bound is reported.
    """
    mode = Mode(mode)
    kept = input_subset(subset, channel.num_inputs)
    w = channel.matrix
    n = channel.num_outputs
    pruned = restrict(channel, kept)
    cap = blahut_arimoto(pruned, ba_tol, ba_max_iter)
    cr = cap.capacity_nats

    divs_surrogate = _row_divergences(w, cap.output_dist)
    x_pre = _argmax_candidates(divs_surrogate)[0]
    delta_pre, kappa_pre = _projection_for(w, kept, x_pre, membership_tol, fw_tol)
    if kappa_pre is None:
        eta = INFINITE
    else:
        eta = choose_eta(cr, kappa_pre, delta_pre, n)
    eta_valid = bool(0.0 < eta <= 1.0 / (2.0 * n))

    reason = None
    divs = divs_surrogate
    if mode is Mode.EXACT_PSEUDO:
        if eta_valid:
            ps = pseudo_capacity(channel=pruned, eta=eta, tol_nats=pseudo_tol)
            divs = _row_divergences(w, ps.output_dist)
        else:
            reason = "eta invalid; critical symbol kept from the surrogate selection"

    best = None
    for x in _argmax_candidates(divs):
        if x == x_pre:
            delta_x, kappa_x = delta_pre, kappa_pre
        else:
            delta_x, kappa_x = _projection_for(w, kept, x, membership_tol, fw_tol)
        bound_x = _assemble(cr, eta, delta_x, kappa_x, n)
        key = math.inf if bound_x is None else bound_x[3]
        if best is None or key < best[0]:
            best = (key, x, delta_x, kappa_x, bound_x)

    _, x_final, delta, kappa, terms = best
    if terms is None:
        term_linear = 4.0 * n * eta if math.isfinite(eta) else math.inf
        report_reason = reason or "no same-support hull point: delta is infinite"
        return BoundReport(
            subset=kept, capacity_pruned_nats=cr, eta=eta, eta_valid=eta_valid,
            critical_x=x_final, delta=delta, kappa=kappa,
            term_linear=term_linear, term_delta=math.inf, term_cross=math.inf,
            bound_nats=None, mode=mode.value, reason=report_reason,
        )
    term_linear, term_delta, term_cross, total = terms
    if not eta_valid:
        return BoundReport(
            subset=kept, capacity_pruned_nats=cr, eta=eta, eta_valid=False,
            critical_x=x_final, delta=delta, kappa=kappa,
            term_linear=term_linear, term_delta=term_delta, term_cross=term_cross,
            bound_nats=None, mode=mode.value,
            reason=reason or f"eta={eta:.6g} exceeds 1/(2|Y|)={1.0 / (2 * n):.6g}",
        )
    return BoundReport(
        subset=kept, capacity_pruned_nats=cr, eta=eta, eta_valid=True,
        critical_x=x_final, delta=delta, kappa=kappa,
        term_linear=term_linear, term_delta=term_delta, term_cross=term_cross,
        bound_nats=total, mode=mode.value, reason=reason,
    )


def _assemble(cr: float, eta: float, delta: float, kappa: float | None, n: int):
    """The three bound terms for one candidate symbol, or None if delta is infinite."""
    if kappa is None or math.isinf(delta):
        return None
    term_linear = 4.0 * n * eta if math.isfinite(eta) else math.inf
    term_delta = delta
    if delta == 0.0:
        term_cross = 0.0
    elif not (math.isfinite(eta) and 0.0 < eta < 1.0):
        # -log(eta) is not a positive factor here; the certificate is
        # unavailable regardless since eta exceeds 1/(2|Y|)
        term_cross = math.inf
    else:
        term_cross = math.sqrt(-math.log(eta) * (cr - math.log(kappa))) * math.sqrt(delta)
    total = term_linear + term_delta + term_cross
    return term_linear, term_delta, term_cross, total


def validate_bound(
    channel: Channel,
    subset,
    report: BoundReport,
    ba_tol: float = DEFAULT_TOL,
    ba_max_iter: int = DEFAULT_MAX_ITER,
) -> float:
    """Slack of the certificate: bound - (C(W) - C(W_R)).

    Computing the full capacity here is for validation only; the bound itself
    never uses it.
    """
    if not report.available:
        raise DmcError("bound is unavailable; nothing to validate")
    full = blahut_arimoto(channel, ba_tol, ba_max_iter)
    loss = full.capacity_nats - report.capacity_pruned_nats
    return report.bound_nats - loss
