"""Command-line interface.

Numeric output defaults to bits; pass --nats for natural units.  Exit codes:
0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .bound import Mode, capacity_loss_bound
from .capacity import blahut_arimoto
from .core import DmcError, input_subset, restrict
from .gen import GeneratorConfig, sample_dmc
from .hull import capacity_after_prune, chi2_to_hull, prune_redundant
from .io import load_channel, save_channel
from .select import (
    Method,
    check_submodularity_counterexample,
    exhaustive_select,
    greedy_select,
    random_select,
    select_inputs,
)
from .sweep import SweepConfig, run_sweep, write_csv

_LN2 = math.log(2.0)


def _unit(args) -> tuple[str, float]:
    return ("nats", 1.0) if args.nats else ("bits", _LN2)


def _parse_subset(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip() != ""]
    except ValueError as e:
        raise DmcError(f"bad subset {text!r}: {e}") from e


def _cmd_capacity(args) -> int:
    channel = load_channel(args.channel)
    result = blahut_arimoto(channel, args.tol, args.max_iter)
    unit, scale = _unit(args)
    if args.json:
        print(json.dumps({
            "capacity_bits": result.capacity_nats / _LN2,
            "capacity_nats": result.capacity_nats,
            "lower_bracket_nats": result.lower_bracket,
            "upper_bracket_nats": result.upper_bracket,
            "iterations": result.iterations,
            "input_dist": [float(v) for v in result.input_dist],
            "output_dist": [float(v) for v in result.output_dist],
        }, indent=2))
    else:
        print(f"{result.capacity_nats / scale:.6f} {unit}")
    return 0


def _cmd_select(args) -> int:
    channel = load_channel(args.channel)
    method = Method(args.method)
    if method is Method.CLUSTERING:
        sel = select_inputs(channel, args.k, with_bound=args.bound)
    elif method is Method.EXHAUSTIVE:
        sel = exhaustive_select(channel, args.k, budget=args.budget)
    elif method is Method.GREEDY:
        sel = greedy_select(channel, args.k)
    else:
        import numpy as np
        sel = random_select(channel, args.k,
                            np.random.default_rng(np.random.SeedSequence([args.seed])))
    if args.bound and sel.bound is None and method is not Method.CLUSTERING:
        sel = type(sel)(**{**sel.__dict__,
                           "bound": capacity_loss_bound(channel, sel.subset)})
    unit, scale = _unit(args)
    if args.json:
        d = {
            "subset": list(sel.subset),
            "method": sel.method,
            "capacity_bits": sel.capacity_nats / _LN2,
            "capacity_nats": sel.capacity_nats,
        }
        if sel.bound is not None:
            d["bound"] = sel.bound.to_dict()
        print(json.dumps(d, indent=2))
    else:
        print(f"subset: {','.join(str(i) for i in sel.subset)}")
        print(f"capacity: {sel.capacity_nats / scale:.6f} {unit}")
        if sel.bound is not None:
            if sel.bound.available:
                print(f"loss bound: {sel.bound.bound_nats / scale:.6f} {unit}")
            else:
                print(f"loss bound: UNAVAILABLE ({sel.bound.reason})")
    return 0


def _cmd_bound(args) -> int:
    channel = load_channel(args.channel)
    subset = _parse_subset(args.subset)
    mode = Mode.SURROGATE if args.mode == "surrogate" else Mode.EXACT_PSEUDO
    report = capacity_loss_bound(channel, subset, mode)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def _cmd_hull(args) -> int:
    channel = load_channel(args.channel)
    subset = input_subset(_parse_subset(args.subset), channel.num_inputs)
    target = channel.matrix[args.x]
    proj = chi2_to_hull(restrict(channel, subset).matrix, target)
    d = {
        "subset": list(subset),
        "x": args.x,
        "distance_chi2": None if not proj.finite else proj.distance_chi2,
        "distance_infinite": not proj.finite,
        "kappa": proj.kappa,
        "weights": None if proj.weights is None else [float(v) for v in proj.weights],
        "hull_point": None if proj.hull_point is None else [float(v) for v in proj.hull_point],
        "iterations": proj.iterations,
    }
    print(json.dumps(d, indent=2))
    return 0


def _cmd_prune(args) -> int:
    channel = load_channel(args.channel)
    survivors = prune_redundant(channel, args.membership_tol)
    unit, scale = _unit(args)
    cap_full = blahut_arimoto(channel).capacity_nats
    cap_pruned = capacity_after_prune(channel, survivors)
    print(f"survivors: {','.join(str(i) for i in survivors)}")
    print(f"removed: {channel.num_inputs - len(survivors)} of {channel.num_inputs}")
    print(f"capacity before: {cap_full / scale:.6f} {unit}")
    print(f"capacity after: {cap_pruned / scale:.6f} {unit}")
    return 0


def _cmd_gen(args) -> int:
    config = GeneratorConfig(
        num_inputs=args.nx, num_outputs=args.ny, num_prototypes=args.k0,
        proto_scale=args.s1, row_scale=args.s2, smoothing_eps=args.eps,
        seed=args.seed, assignment=args.assignment,
    )
    channel = sample_dmc(config)
    save_channel(args.out, channel, metadata={"generator": config.to_dict()})
    print(f"wrote {channel.num_inputs}x{channel.num_outputs} channel to {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    config_dict = json.loads(Path(args.config).read_text())
    config = SweepConfig.from_dict(config_dict)
    rows, summary = run_sweep(config, workers=args.workers, timings=args.timings)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "sweep.csv"
    write_csv(out_path, rows, summary, config)
    errors = sum(1 for r in rows if r.error)
    print(f"wrote {len(rows)} rows ({errors} with errors) to {out_path}")
    for (k, method), entry in sorted(summary.items()):
        print(f"k={k} method={method}: mean={entry['mean_capacity_bits']:.6f} bits "
              f"std={entry['std_capacity_bits']:.6f} n={entry['n']}")
    return 0


def _cmd_check_submodularity(args) -> int:
    report = check_submodularity_counterexample()
    print(f"gain adding symbol 2 to {{0,1,3}}: {report.gain_large_set:.9f} nats")
    print(f"gain adding symbol 2 to {{0,1}}:   {report.gain_small_set:.9f} nats")
    print(f"margin: {report.margin:.9f} nats")
    print("PASS")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmcprune",
        description="Input-symbol selection and capacity certificates for "
                    "discrete memoryless channels",
    )
    parser.add_argument("--version", action="version", version=f"dmcprune {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="channel capacity with certified bracket")
    p.add_argument("channel")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=1_000_000)
    p.add_argument("--nats", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_capacity)

    p = sub.add_parser("select", help="select k input symbols")
    p.add_argument("channel")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--method", choices=[m.value for m in Method], default="clustering")
    p.add_argument("--bound", action="store_true", help="attach the loss certificate")
    p.add_argument("--budget", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0, help="seed for --method random")
    p.add_argument("--nats", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("bound", help="capacity-loss certificate for a kept subset")
    p.add_argument("channel")
    p.add_argument("--subset", required=True, help="comma-separated kept indices")
    p.add_argument("--mode", choices=["surrogate", "exact"], default="surrogate")
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("hull", help="chi-squared projection of a row onto a hull")
    p.add_argument("channel")
    p.add_argument("--subset", required=True, help="comma-separated hull indices")
    p.add_argument("--x", type=int, required=True, help="row to project")
    p.set_defaults(func=_cmd_hull)

    p = sub.add_parser("prune", help="remove rows inside the others' hull")
    p.add_argument("channel")
    p.add_argument("--membership-tol", type=float, default=1e-7)
    p.add_argument("--nats", action="store_true")
    p.set_defaults(func=_cmd_prune)

    p = sub.add_parser("gen", help="generate a random channel")
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--ny", type=int, required=True)
    p.add_argument("--k0", type=int, default=5)
    p.add_argument("--s1", type=float, default=0.005)
    p.add_argument("--s2", type=float, default=1e10)
    p.add_argument("--eps", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--assignment", choices=["round-robin", "random"],
                   default="round-robin")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("sweep", help="run a randomized selection experiment")
    p.add_argument("--config", required=True, help="SweepConfig JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--timings", action="store_true",
                   help="record wall times (breaks byte-level reproducibility)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("check-submodularity",
                       help="verify the diminishing-returns counterexample")
    p.set_defaults(func=_cmd_check_submodularity)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DmcError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
