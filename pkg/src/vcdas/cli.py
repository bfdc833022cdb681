"""Command line entry point: ``vcdas <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import re
import sys

from .harness import ConfigError, ExperimentConfig, run

SUBCOMMANDS = {
    "mrt-sweep": ("mrt", "average MRT rate and its upper bound versus V"),
    "single-topo": ("single", "closed-form vs Monte Carlo MRT rate per user, one topology"),
    "bound": ("bound", "upper bound and entropy terms versus V"),
    "vstar": ("vstar", "optimal virtual cell size"),
    "group-sweep": ("group", "ZFBF rate with virtual-cell grouping versus V"),
    "compare": ("compare", "per-user ZFBF rates: grouping vs sector clustering"),
    "topo-dump": ("topo", "dump the first topology of a seed as JSON"),
}


def parse_v(text: str) -> tuple[int, ...]:
    m = re.fullmatch(r"\s*(\d+)\s*(?:\.\.\s*(\d+)\s*)?", text)
    if not m:
        raise argparse.ArgumentTypeError(f"expected N or A..B, got {text!r}")
    lo = int(m.group(1))
    hi = int(m.group(2)) if m.group(2) else lo
    if hi < lo:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return tuple(range(lo, hi + 1))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vcdas", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--k", type=int, required=True, help="number of users")
        p.add_argument("--l", type=int, required=True, help="number of BS antennas")
        p.add_argument("--v", type=parse_v, default=(1,), help="virtual cell size, N or A..B")
        p.add_argument("--alpha", type=float, default=4.0, help="path-loss factor")
        p.add_argument("--snr-db", type=float, default=10.0, help="transmit SNR in dB")
        p.add_argument("--topologies", type=int, default=200)
        p.add_argument("--fading-samples", type=int, default=200_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output file (stdout if omitted)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if name == "compare":
            p.add_argument("--clusters", type=int, default=4, help="baseline sector count")
        if name in ("group-sweep", "compare"):
            p.add_argument("--interference", choices=("average", "instantaneous"),
                           default="average")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = ExperimentConfig(
        K=args.k, L=args.l, V=args.v, alpha=args.alpha, snr_db=args.snr_db,
        n_topologies=args.topologies, n_fading_samples=args.fading_samples,
        seed=args.seed, mode=SUBCOMMANDS[args.command][0], out=args.out,
        fmt=args.format, n_clusters=getattr(args, "clusters", 4),
        interference=getattr(args, "interference", "average"))
    try:
        text = run(cfg)
    except ConfigError as exc:
        print(f"vcdas: config error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
