"""Command line interface.

Subcommands:
  median       one private median + interval release from a data file
  sweep        run a benchmark grid described by a JSON spec file
  oracle-check run the small-instance validation battery
  emit-plots   recompute summaries and plot data from a trials.csv

Exit codes: 0 success, 1 usage error (or failed checks), 2 data error,
3 convergence / degenerate-parameter error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .bench import SweepSpec, emit, load_dataset, read_trials, run_trials, summarize
from .domain import dedup_remap
from .errors import ConvergenceError, DataError, DegenerateParameterError
from .expmech import rng_stream
from .hyperparams import SplitPolicy, make_params
from .median import dp_median
from .ri import dp_ri

USAGE_EXIT = 1
DATA_EXIT = 2
CONVERGENCE_EXIT = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; the documented contract
    # reserves 2 for data errors, so remap usage problems to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _parse_range(text: str) -> tuple[int, int]:
    try:
        lo_text, hi_text = text.split(":", 1)
        lo, hi = int(lo_text), int(hi_text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"range must look like LO:HI with integers, got {text!r}"
        ) from None
    if hi <= lo:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return lo, hi


def _split_policy(text: str) -> SplitPolicy:
    try:
        return SplitPolicy.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="postri", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_median = sub.add_parser(
        "median", help="one private median + interval release",
        description="Release a differentially private median and a "
        "randomization interval guaranteed to contain the true median "
        "with probability 1 - beta.",
    )
    p_median.add_argument("--input", required=True, help="delimited data file")
    p_median.add_argument("--column", required=True, help="column name to query")
    p_median.add_argument(
        "--range", required=True, type=_parse_range, metavar="LO:HI",
        help="declared public bounds of the column",
    )
    p_median.add_argument("--eps", type=float, default=1.0,
                          help="total privacy budget (default 1.0)")
    p_median.add_argument("--beta", type=float, default=0.01,
                          help="interval failure probability (default 0.01)")
    p_median.add_argument(
        "--split", type=_split_policy, default=SplitPolicy("default"),
        metavar="{default|optimal|median-focused|ratio=R}",
        help="budget split policy (default: even split)",
    )
    p_median.add_argument("--seed", type=int, default=None,
                          help="RNG seed; omit for OS entropy")
    p_median.add_argument("--domain-size", type=int, default=10**8,
                          help="output domain size N (default 1e8)")
    p_median.add_argument("--beta-split", type=float, default=0.5,
                          help="fraction of beta spent on the median stage")

    p_sweep = sub.add_parser(
        "sweep", help="run a benchmark grid from a JSON spec",
        description="Run the (split policy, eps) grid described by a sweep "
        "spec file and write trials/summary/fig files.",
    )
    p_sweep.add_argument("--spec", required=True, help="JSON sweep spec file")
    p_sweep.add_argument("--out", default="results", help="output directory")

    p_oracle = sub.add_parser(
        "oracle-check", help="run the small-instance validation battery")
    p_oracle.add_argument("--seed", type=int, default=0)

    p_plots = sub.add_parser(
        "emit-plots", help="recompute summaries and plot data from trials.csv",
        description="Reads an existing trials.csv (possibly merged with "
        "records from other techniques) and rewrites summary and fig files.",
    )
    p_plots.add_argument("--trials", required=True, help="existing trials.csv")
    p_plots.add_argument("--out", default="results", help="output directory")
    return parser


def _cmd_median(args) -> int:
    data, dom = load_dataset(args.input, args.column, args.range, args.domain_size)
    exp_data, dmap = dedup_remap(data, dom)
    params = make_params(
        args.eps, args.beta, dmap.expanded_size, args.split, args.beta_split
    )
    rng = rng_stream(args.seed)
    med = dp_median(
        exp_data, dmap.expanded_domain, params.eps1, params.beta1, rng,
        params.delta_u,
    )
    ri = dp_ri(exp_data, dmap.expanded_domain, med.o, dmap, params, rng)
    # Only budget-covered values are printed; the coverage diagnostics on
    # RIResult depend on the private data and stay out of the release.
    release = {
        "median": dom.to_original(ri.center),
        "lower": dom.to_original(ri.lower),
        "upper": dom.to_original(ri.upper),
        "width": ri.upper - ri.lower,
        "eps_total": params.eps_total,
        "eps1": params.eps1,
        "eps2": params.eps2,
        "beta": params.beta_total,
        "split_policy": args.split.label(),
        "step": params.step,
        "gamma1": med.gamma1,
        "gamma2": ri.gamma2,
        "n": data.n,
    }
    json.dump(release, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _cmd_sweep(args) -> int:
    spec = SweepSpec.from_file(args.spec)
    t0 = time.perf_counter()
    records = run_trials(spec)
    elapsed = time.perf_counter() - t0
    paths = emit(records, summarize(records), args.out)
    print(f"{len(records)} trials in {elapsed:.1f}s", file=sys.stderr)
    for name in sorted(paths):
        print(f"wrote {paths[name]}", file=sys.stderr)
    return 0


def _cmd_oracle_check(args) -> int:
    from .oracle import run_oracle_checks

    results = run_oracle_checks(seed=args.seed)
    failed = 0
    for name, passed, detail in results:
        status = "PASS" if passed else "FAIL"
        print(f"{status}  {name}  ({detail})")
        failed += not passed
    if failed:
        print(f"{failed}/{len(results)} checks failed", file=sys.stderr)
        return 1
    print(f"all {len(results)} checks passed")
    return 0


def _cmd_emit_plots(args) -> int:
    records = read_trials(args.trials)
    paths = emit(records, summarize(records), args.out)
    for name in sorted(paths):
        print(f"wrote {paths[name]}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "median": _cmd_median,
        "sweep": _cmd_sweep,
        "oracle-check": _cmd_oracle_check,
        "emit-plots": _cmd_emit_plots,
    }
    try:
        return handlers[args.command](args)
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return DATA_EXIT
    except (ConvergenceError, DegenerateParameterError) as e:
        print(f"parameter error: {e}", file=sys.stderr)
        return CONVERGENCE_EXIT


if __name__ == "__main__":
    sys.exit(main())
