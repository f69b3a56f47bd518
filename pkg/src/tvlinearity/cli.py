"""Command line interface: simulate, test, experiment, figure."""

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .database import Database
from .dgp import DEFAULT_BURN_IN, DgpKind, DgpSpec, MeanParams, VarianceParams, simulate
from .figures import emit_figure_data
from .linearity import BootstrapConfig, BootstrapScheme, Multiplier, TestMethod, VarianceLag, run_test
from .montecarlo import ExperimentConfig, preset_config, run_experiment, summarize
from .transition import TransitionParams
from .utils import configure_logging, default_threads, read_series_csv, series_to_csv


logger = logging.getLogger(__name__)


def build_spec(args: argparse.Namespace) -> DgpSpec:
    """DgpSpec from `simulate` flags; c defaults to T/2."""
    kind = DgpKind(args.kind)
    transition = TransitionParams(args.gamma, args.c if args.c is not None else args.T / 2)
    mean = MeanParams(args.alpha0, args.beta0, args.alpha1, args.beta1, transition)
    variance = None
    if kind in (DgpKind.AR_ARCH, DgpKind.TV_ARCH):
        variance = VarianceParams(args.a0, args.b0, args.a1, args.b1, transition)
    return DgpSpec(kind, mean, variance, sample_size=args.T, burn_in=args.burn_in)


def cmd_simulate(args: argparse.Namespace) -> int:
    """Write one simulated series to stdout."""
    series = simulate(build_spec(args), args.seed)
    sys.stdout.write(series_to_csv(series, diagnostics=args.diagnostics))
    return 0


def cmd_test(args: argparse.Namespace) -> int:
    """Run the requested tests on a CSV series and print one CSV row per method."""
    source = sys.stdin if args.input == "-" else Path(args.input)
    values = read_series_csv(source)
    cfg = BootstrapConfig(
        iterations=args.boot_iters,
        multiplier=Multiplier(args.multiplier),
        seed=args.seed,
        scheme=BootstrapScheme(args.scheme),
        variance_lag=VarianceLag(args.variance_lag),
    )
    methods = args.method or [m.value for m in TestMethod]
    sys.stdout.write("method,statistic,p_value\n")
    for method in methods:
        outcome = run_test(method, values, cfg)
        sys.stdout.write(f"{outcome.method.value},{outcome.statistic!r},{outcome.p_value!r}\n")
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    """Run a config file or preset tables; write CSV/text tables and store them in results.db."""
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    threads = args.threads or default_threads()

    runs: list[tuple[str, ExperimentConfig, str]] = []
    if args.config:
        cfg = ExperimentConfig.from_json_file(args.config)
        overrides = cfg.to_dict()
        if args.replications:
            overrides["replications"] = args.replications
        if args.boot_iters:
            overrides["bootstrap"]["iterations"] = args.boot_iters
        if args.seed is not None:
            overrides["master_seed"] = args.seed
        if args.sizes:
            overrides["sample_sizes"] = args.sizes
        overrides["threads"] = threads
        runs.append(("experiment", ExperimentConfig.from_dict(overrides), "custom"))
    else:
        tables = [1, 2, 3, 4] if args.table == "all" else [int(args.table)]
        for k in tables:
            cfg, layout = preset_config(
                k,
                replications=args.replications or 10_000,
                bootstrap_iterations=args.boot_iters or 1000,
                master_seed=args.seed or 0,
                threads=threads,
                sample_sizes=args.sizes or (100, 200, 400, 1000),
            )
            runs.append((layout.name, cfg, layout))

    db = Database(out / "results.db")
    db.init_schema()
    for name, cfg, layout in runs:
        table = run_experiment(cfg)
        formatted = summarize(table, layout)
        (out / f"{name}.csv").write_text(formatted.csv, encoding="utf-8")
        (out / f"{name}.txt").write_text(formatted.text, encoding="utf-8")
        (out / f"{name}_cells.csv").write_text(table.to_csv(), encoding="utf-8")
        layout_name = layout if isinstance(layout, str) else layout.name
        experiment_id = db.save_experiment(cfg, table, layout_name)
        logger.info("wrote %s (experiment %d) to %s", name, experiment_id, out)
        sys.stdout.write(formatted.text)
    db.close()
    return 0


def cmd_figure(args: argparse.Namespace) -> int:
    """Write transition curve data to stdout."""
    gammas = args.gamma or [0.01, 0.1]
    sys.stdout.write(emit_figure_data(args.T, gammas, args.c))
    return 0


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with the simulate, test, experiment and figure subcommands."""
    parser = argparse.ArgumentParser(
        prog="tvlinearity",
        description="Tests for time-varying conditional mean and variance",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (default: $TVLINEARITY_LOG_LEVEL or WARNING)")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate one series as CSV (t,y)")
    sim.add_argument("--kind", choices=[k.value for k in DgpKind], default=DgpKind.AR_HOMOSKEDASTIC.value)
    sim.add_argument("--T", type=int, default=200)
    sim.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN)
    sim.add_argument("--alpha0", type=float, default=1.0)
    sim.add_argument("--beta0", type=float, default=0.3)
    sim.add_argument("--alpha1", type=float, default=0.0)
    sim.add_argument("--beta1", type=float, default=0.0)
    sim.add_argument("--a0", type=float, default=1.0)
    sim.add_argument("--b0", type=float, default=0.0)
    sim.add_argument("--a1", type=float, default=0.0)
    sim.add_argument("--b1", type=float, default=0.0)
    sim.add_argument("--gamma", type=float, default=0.0)
    sim.add_argument("--c", type=float, default=None, help="threshold (default T/2)")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--diagnostics", action="store_true", help="add the h2 column")
    sim.set_defaults(func=cmd_simulate)

    test = sub.add_parser("test", help="run linearity tests on a CSV series")
    test.add_argument("input", help="one-column or t,y CSV file, '-' for stdin")
    test.add_argument("--method", action="append", choices=[m.value for m in TestMethod],
                      help="repeatable; default: all methods")
    test.add_argument("--boot-iters", type=int, default=1000)
    test.add_argument("--multiplier", choices=[m.value for m in Multiplier], default=Multiplier.STANDARD_NORMAL.value)
    test.add_argument("--scheme", choices=[s.value for s in BootstrapScheme], default=BootstrapScheme.FIXED.value)
    test.add_argument("--variance-lag", choices=[v.value for v in VarianceLag], default=VarianceLag.BOOTSTRAP.value,
                      help="lag regressor of the vb/vwb bootstrap regression")
    test.add_argument("--seed", type=int, default=None)
    test.set_defaults(func=cmd_test)

    exp = sub.add_parser("experiment", help="Monte Carlo rejection frequencies")
    source = exp.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="ExperimentConfig JSON file")
    source.add_argument("--table", choices=["1", "2", "3", "4", "all"])
    exp.add_argument("--replications", type=int, default=None)
    exp.add_argument("--boot-iters", type=int, default=None)
    exp.add_argument("--seed", type=int, default=None)
    exp.add_argument("--threads", type=int, default=None, help="default: $TVLINEARITY_THREADS or 1")
    exp.add_argument("--sizes", type=int, nargs="+", default=None, help="override the sample sizes of a preset or config file")
    exp.add_argument("--out", default=".")
    exp.set_defaults(func=cmd_experiment)

    fig = sub.add_parser("figure", help="transition function values as CSV")
    fig.add_argument("--T", type=int, default=200)
    fig.add_argument("--gamma", type=float, action="append")
    fig.add_argument("--c", type=float, default=None, help="threshold (default T/2)")
    fig.set_defaults(func=cmd_figure)

    return parser


def main(argv: list[str] | None = None) -> int:
    """Entry point of the `tvlinearity` console script."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except (ValueError, ArithmeticError, LookupError, RuntimeError, OSError) as e:
        print(f"tvlinearity {args.command}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
