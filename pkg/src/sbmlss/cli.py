"""Command-line entry point: ``sbmlss {generate,test,calibrate,power,oracle,identities}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

from . import __version__
from .cycles import mode_from_name
from .errors import ConfigError, NumericalError, ParameterError
from .graph_models import ModelParams, params_from_t, read_edgelist, sample_graph, write_edgelist
from .harness import (
    SEED_ENV_VAR,
    default_seed,
    load_config,
    plot_power,
    run_calibrate,
    run_identities,
    run_oracle_compare,
    run_power_curve,
    write_csv,
)
from .spectral import Centering, spectrum_of
from .statistics import SignMode, StatisticKind, TestSpec, apply_test

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def _add_experiment_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--n", type=int)
    p.add_argument("--p-av", dest="p_av", type=float)
    p.add_argument("--kappa", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int, help=f"default: ${SEED_ENV_VAR} or 0")
    p.add_argument("--t-grid", dest="t_grid", help="comma-separated t values")
    p.add_argument("--stats", dest="statistics", help="comma-separated: La,Lo,adaptive_odd,adaptive_all")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--k", dest="k_n", help="largest polynomial degree, or 'auto'")
    p.add_argument("--centering", choices=["known", "estimated"])
    p.add_argument("--t-correction", dest="t_correction")
    p.add_argument("--threads", type=int)
    p.add_argument("--out", dest="output_path", help="CSV output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sbmlss", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a graph and write it as an edge list")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=float, help="edge (within-block) probability")
    g.add_argument("--q", type=float, help="between-block probability")
    g.add_argument("--kappa", type=int, default=1)
    g.add_argument("--t", type=float, help="signal strength; with --p-av picks p and q")
    g.add_argument("--p-av", dest="p_av", type=float)
    g.add_argument("--disassortative", action="store_true")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)
    g.add_argument("--labels-out", help="optional file for block labels, one per line")

    t = sub.add_parser("test", help="run one test on an edge-list graph")
    t.add_argument("graph")
    t.add_argument("--stat", default="adaptive_odd", choices=[k.value for k in StatisticKind])
    t.add_argument("--t", type=float)
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--epsilon", type=float, default=0.15)
    t.add_argument("--k", type=int)
    t.add_argument("--sign", default="assortative", choices=["assortative", "disassortative"])
    t.add_argument("--centering", default="estimated", choices=["known", "estimated"])
    t.add_argument("--p-av", dest="p_av", type=float, help="needed with --centering known")
    t.add_argument("--t-correction", default="auto")
    t.add_argument("--csv", action="store_true", help="print a CSV row instead of JSON")
    t.add_argument("--dump-spectrum", help="write the eigenvalues to this CSV file")

    for name, helptext in (("calibrate", "empirical level under the null"), ("power", "empirical power curve"), ("oracle", "brute-force cycles vs LSS")):
        p = sub.add_parser(name, help=helptext)
        _add_experiment_args(p)
        if name == "power":
            p.add_argument("--plot", help="also write an SVG plot to this path")

    sub.add_parser("identities", help="check the exact combinatorial identities")
    return ap


def _overrides(args) -> dict:
    keys = ("n", "p_av", "kappa", "alpha", "reps", "seed", "t_grid", "statistics", "epsilon", "k_n", "centering", "t_correction", "threads", "output_path")
    return {k: getattr(args, k, None) for k in keys}


def _emit(rows, config, columns=None) -> None:
    write_csv(rows, config.output_path or sys.stdout, config, columns)


def _cmd_generate(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    if args.t is not None:
        if args.p_av is None or args.kappa < 2:
            raise ConfigError("--t needs --p-av and --kappa >= 2")
        params = params_from_t(args.n, args.p_av, args.t, args.kappa, not args.disassortative)
    else:
        if args.p is None:
            raise ConfigError("give --p (and --q, --kappa for an SBM) or --t with --p-av")
        q = args.q if args.q is not None else args.p
        params = ModelParams(n=args.n, kappa=args.kappa, p=args.p, q=q)
    g = sample_graph(params, seed)
    write_edgelist(g, args.out)
    if args.labels_out and g.labels is not None:
        with open(args.labels_out, "w") as fh:
            fh.writelines(f"{x}\n" for x in g.labels)
    return EXIT_OK


def _cmd_test(args) -> int:
    g = read_edgelist(args.graph)
    spec = TestSpec(
        kind=StatisticKind(args.stat),
        alpha=args.alpha,
        t=args.t,
        epsilon=args.epsilon,
        k_n=args.k,
        sign_mode=SignMode(args.sign),
        t_correction=mode_from_name(args.t_correction),
        centering=Centering(args.centering),
    )
    outcome = apply_test(g, spec, p_av=args.p_av)
    if args.dump_spectrum:
        spec_obj = spectrum_of(g, spec.centering, args.p_av)
        with open(args.dump_spectrum, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "eigenvalue"])
            w.writerows((i, repr(float(v))) for i, v in enumerate(spec_obj.eigenvalues))
    if args.csv:
        w = csv.writer(sys.stdout)
        w.writerow(outcome.CSV_COLUMNS)
        w.writerow(outcome.csv_row())
    else:
        print(json.dumps(outcome.to_dict(), indent=2))
    return EXIT_OK


def _cmd_experiment(args) -> int:
    experiment = args.command
    config = load_config(args.config, _overrides(args), experiment=experiment)
    if experiment == "calibrate":
        _emit(run_calibrate(config), config)
    elif experiment == "power":
        rows = run_power_curve(config)
        _emit(rows, config)
        if args.plot:
            plot_power(rows, args.plot, config.alpha)
    else:
        result = run_oracle_compare(config)
        _emit(result.rows, config, ["rep", "k", "cycle_bruteforce", "cycle_from_lss", "diff"])
        for s in result.summary:
            print(
                f"k={s['k']}: reps={s['reps']} sd(bruteforce)={s['sd_bruteforce']:.4g} "
                f"sd(diff)={s['sd_diff']:.4g} corr={s['correlation']:.4f}",
                file=sys.stderr,
            )
        for rep, reason in result.skipped:
            print(f"skipped replicate {rep}: {reason}", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "identities":
            return run_identities()
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "test":
            return _cmd_test(args)
        return _cmd_experiment(args)
    except (ConfigError, ParameterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
