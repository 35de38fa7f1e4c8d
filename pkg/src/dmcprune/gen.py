"""Randomized channel construction by two-level Dirichlet sampling.

A handful of prototype rows are drawn from a sparse symmetric Dirichlet;
each channel row is then drawn from a high-concentration Dirichlet centered
on its prototype, so rows form tight groups.  A small additive mass keeps
every entry positive so hulls share support with removed rows.

RNG contract: streams are PCG64 generators seeded with
SeedSequence([seed]) for a single channel and SeedSequence([master_seed, i])
to derive the i-th channel's integer seed in multi-channel runs; draw order
is prototypes first, then assignments (random mode only), then rows 0..|X|-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Channel, DmcError

PROTO_ALPHA_FLOOR = 1e-12


class InvalidAlpha(DmcError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    num_inputs: int
    num_outputs: int
    num_prototypes: int = 5
    proto_scale: float = 0.005
    row_scale: float = 1e10
    smoothing_eps: float = 1e-9
    seed: int = 0
    assignment: str = "round-robin"  # or "random"

    def __post_init__(self):
        if self.num_inputs < 1 or self.num_outputs < 1:
            raise DmcError("alphabet sizes must be at least 1")
        if not 1 <= self.num_prototypes < self.num_inputs:
            raise DmcError(
                f"num_prototypes={self.num_prototypes} must be in [1, num_inputs)"
            )
        if self.proto_scale <= 0 or self.row_scale <= 0:
            raise DmcError("scale parameters must be positive")
        if self.smoothing_eps < 0:
            raise DmcError("smoothing_eps must be nonnegative")
        if self.assignment not in ("round-robin", "random"):
            raise DmcError(f"unknown assignment scheme {self.assignment!r}")

    def to_dict(self) -> dict:
        return {
            "num_inputs": self.num_inputs,
            "num_outputs": self.num_outputs,
            "num_prototypes": self.num_prototypes,
            "proto_scale": self.proto_scale,
            "row_scale": self.row_scale,
            "smoothing_eps": self.smoothing_eps,
            "seed": self.seed,
            "assignment": self.assignment,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        return cls(**d)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed)]))


def child_seed(master_seed: int, index: int) -> int:
    """Deterministic per-channel integer seed for multi-channel runs."""
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def sample_dirichlet(alpha, rng: np.random.Generator) -> np.ndarray:
    """One Dirichlet draw by the gamma-ratio construction.

    Tiny concentrations underflow individual gamma draws to exact zero; an
    all-zero vector is redrawn from the same stream (deterministic).
    """
    a = np.asarray(alpha, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise InvalidAlpha("alpha must be a non-empty vector")
    if not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise InvalidAlpha("alpha entries must be positive and finite")
    g = rng.standard_gamma(a)
    while g.sum() == 0.0:
        g = rng.standard_gamma(a)
    return g / g.sum()


def sample_dmc(config: GeneratorConfig) -> Channel:
    """Generate one channel: prototypes, slot assignment, rows, smoothing."""
    rng = make_rng(config.seed)
    n = config.num_outputs
    protos = [sample_dirichlet(np.full(n, config.proto_scale), rng)
              for _ in range(config.num_prototypes)]
    if config.assignment == "random":
        slots = rng.integers(0, config.num_prototypes, size=config.num_inputs)
    else:
        slots = np.arange(config.num_inputs) % config.num_prototypes
    rows = np.empty((config.num_inputs, n))
    for i in range(config.num_inputs):
        proto = protos[int(slots[i])]
        alpha = config.row_scale * np.where(proto == 0.0, PROTO_ALPHA_FLOOR, proto)
        row = sample_dirichlet(alpha, rng)
        rows[i] = (row + config.smoothing_eps) / (1.0 + n * config.smoothing_eps)
    return Channel(rows)
