"""Randomized-experiment harness: generate channels, run every selection
method over a grid of subset sizes, and emit a deterministic CSV.

Per-channel work is a pure function of the derived seed, so runs parallelize
over channels and the gathered output is schedule-independent.  Wall times are
only written when requested, keeping default output byte-identical across
runs and worker counts.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bound import capacity_loss_bound
from .capacity import blahut_arimoto
from .core import DmcError
from .gen import GeneratorConfig, child_seed, sample_dmc
from .select import (
    BudgetExceeded,
    Method,
    exhaustive_select,
    greedy_select,
    pairwise_jsd,
    random_select,
    select_inputs,
)

CSV_COLUMNS = ("seed", "k", "method", "capacity_bits", "full_capacity_bits",
               "bound_bits", "eta", "wall_time_s", "error")

THREADS_ENV_VAR = "DMC_PRUNE_THREADS"

_METHOD_ORDER = (Method.CLUSTERING, Method.EXHAUSTIVE, Method.GREEDY, Method.RANDOM)

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class SweepConfig:
    generator: GeneratorConfig
    k_values: tuple[int, ...]
    num_channels: int
    methods: tuple[str, ...] = ("clustering",)
    compute_bound: bool = False
    exhaustive_budget: int = 10**6
    output_path: str | None = None
    ba_tol: float = 1e-9
    ba_max_iter: int = 1_000_000

    def __post_init__(self):
        ks = tuple(int(k) for k in self.k_values)
        if not ks or any(b <= a for a, b in zip(ks, ks[1:])):
            raise DmcError("k_values must be non-empty and strictly increasing")
        if ks[0] < 1 or ks[-1] > self.generator.num_inputs:
            raise DmcError(f"k_values must lie in [1, {self.generator.num_inputs}]")
        object.__setattr__(self, "k_values", ks)
        methods = tuple(Method(m).value for m in self.methods)
        object.__setattr__(self, "methods", methods)
        if self.num_channels < 1:
            raise DmcError("num_channels must be at least 1")

    def to_dict(self) -> dict:
        return {
            "generator": self.generator.to_dict(),
            "k_values": list(self.k_values),
            "num_channels": self.num_channels,
            "methods": list(self.methods),
            "compute_bound": self.compute_bound,
            "exhaustive_budget": self.exhaustive_budget,
            "output_path": self.output_path,
            "ba_tol": self.ba_tol,
            "ba_max_iter": self.ba_max_iter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        d = dict(d)
        d["generator"] = GeneratorConfig.from_dict(d["generator"])
        for key in ("k_values", "methods"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass(frozen=True)
class SweepRow:
    seed: int
    k: int
    method: str
    capacity_bits: float | None
    full_capacity_bits: float | None
    bound_bits: float | None
    eta: float | None
    wall_time_s: float | None
    error: str = ""


def _fmt(v) -> str:
    if v is None:
        return ""
    return f"{v:.12g}"


def _parse(tok: str):
    return None if tok == "" else float(tok)


def _run_channel(config: SweepConfig, index: int, timings: bool) -> list[SweepRow]:
    seed = child_seed(config.generator.seed, index)
    gen_cfg = GeneratorConfig(**{**config.generator.to_dict(), "seed": seed})
    channel = sample_dmc(gen_cfg)
    full = blahut_arimoto(channel, config.ba_tol, config.ba_max_iter)
    full_bits = full.capacity_nats / _LN2
    distance = pairwise_jsd(channel)
    rows = []
    for k in config.k_values:
        for method in _METHOD_ORDER:
            if method.value not in config.methods:
                continue
            t0 = time.perf_counter()
            cap_bits = bound_bits = eta = None
            err = ""
            subset = None
            try:
                if method is Method.CLUSTERING:
                    sel = select_inputs(channel, k, ba_tol=config.ba_tol,
                                        ba_max_iter=config.ba_max_iter, distance=distance)
                elif method is Method.EXHAUSTIVE:
                    sel = exhaustive_select(channel, k, budget=config.exhaustive_budget,
                                            ba_tol=config.ba_tol, ba_max_iter=config.ba_max_iter)
                elif method is Method.GREEDY:
                    sel = greedy_select(channel, k, ba_tol=config.ba_tol,
                                        ba_max_iter=config.ba_max_iter)
                else:
                    rng = np.random.default_rng(np.random.SeedSequence([seed, 10_000 + k]))
                    sel = random_select(channel, k, rng, ba_tol=config.ba_tol,
                                        ba_max_iter=config.ba_max_iter)
                cap_bits = sel.capacity_nats / _LN2
                subset = sel.subset
            except (DmcError, BudgetExceeded) as e:
                err = f"{type(e).__name__}: {e}"
            if subset is not None and config.compute_bound:
                try:
                    rep = capacity_loss_bound(channel, subset, ba_tol=config.ba_tol,
                                              ba_max_iter=config.ba_max_iter)
                    eta = rep.eta if math.isfinite(rep.eta) else None
                    bound_bits = None if rep.bound_nats is None else rep.bound_nats / _LN2
                except DmcError as e:
                    err = f"{type(e).__name__}: {e}"
            wall = time.perf_counter() - t0 if timings else None
            rows.append(SweepRow(
                seed=seed, k=k, method=method.value,
                capacity_bits=cap_bits, full_capacity_bits=full_bits,
                bound_bits=bound_bits, eta=eta, wall_time_s=wall, error=err,
            ))
    return rows


def _worker(args) -> list[SweepRow]:
    config_dict, index, timings = args
    return _run_channel(SweepConfig.from_dict(config_dict), index, timings)


def resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(THREADS_ENV_VAR, "").strip()
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_sweep(config: SweepConfig, workers: int | None = None,
              timings: bool = False) -> tuple[list[SweepRow], dict]:
    """Run the experiment; returns (rows, summary).

    Rows arrive sorted by (channel index, k, method order); the summary maps
    (k, method) to population mean/std of capacity_bits over error-free rows.
    """
    nworkers = resolve_workers(workers)
    indices = list(range(config.num_channels))
    if nworkers == 1 or config.num_channels == 1:
        per_channel = [_run_channel(config, i, timings) for i in indices]
    else:
        args = [(config.to_dict(), i, timings) for i in indices]
        with ProcessPoolExecutor(max_workers=min(nworkers, len(indices))) as pool:
            per_channel = list(pool.map(_worker, args))
    rows = [row for chunk in per_channel for row in chunk]
    return rows, summarize(rows)


def summarize(rows: list[SweepRow]) -> dict:
    """Population mean/std of capacity_bits (and bound_bits) per (k, method)."""
    summary: dict[tuple[int, str], dict] = {}
    for row in rows:
        if row.error or row.capacity_bits is None:
            continue
        summary.setdefault((row.k, row.method), {"caps": [], "bounds": []})
        summary[(row.k, row.method)]["caps"].append(row.capacity_bits)
        if row.bound_bits is not None:
            summary[(row.k, row.method)]["bounds"].append(row.bound_bits)
    out = {}
    for key in sorted(summary):
        caps = np.asarray(summary[key]["caps"])
        entry = {
            "n": int(caps.size),
            "mean_capacity_bits": float(caps.mean()),
            "std_capacity_bits": float(caps.std(ddof=0)),
        }
        bounds = summary[key]["bounds"]
        if bounds:
            b = np.asarray(bounds)
            entry["n_bound"] = int(b.size)
            entry["mean_bound_bits"] = float(b.mean())
            entry["std_bound_bits"] = float(b.std(ddof=0))
        out[key] = entry
    return out


def write_csv(path, rows: list[SweepRow], summary: dict, config: SweepConfig) -> None:
    lines = ["# dmcprune sweep csv v1"]
    lines.append("# config: " + json.dumps(config.to_dict(), sort_keys=True))
    lines.append(",".join(CSV_COLUMNS))
    for r in rows:
        lines.append(",".join([
            str(r.seed), str(r.k), r.method,
            _fmt(r.capacity_bits), _fmt(r.full_capacity_bits),
            _fmt(r.bound_bits), _fmt(r.eta), _fmt(r.wall_time_s),
            r.error.replace(",", ";"),
        ]))
    for (k, method), entry in sorted(summary.items()):
        parts = [f"# summary,k={k},method={method}"]
        for key in ("n", "mean_capacity_bits", "std_capacity_bits",
                    "n_bound", "mean_bound_bits", "std_bound_bits"):
            if key in entry:
                v = entry[key]
                parts.append(f"{key}={v if isinstance(v, int) else _fmt(v)}")
        lines.append(",".join(parts))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> list[SweepRow]:
    rows = []
    header_seen = False
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line != ",".join(CSV_COLUMNS):
                raise DmcError(f"unexpected CSV header {line!r}")
            header_seen = True
            continue
        toks = line.split(",")
        rows.append(SweepRow(
            seed=int(toks[0]), k=int(toks[1]), method=toks[2],
            capacity_bits=_parse(toks[3]), full_capacity_bits=_parse(toks[4]),
            bound_bits=_parse(toks[5]), eta=_parse(toks[6]),
            wall_time_s=_parse(toks[7]), error=toks[8],
        ))
    return rows
