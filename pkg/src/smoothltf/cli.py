"""Command-line interface.

Exit codes: 0 success (all checks passed), 1 a check failed, 2 usage or input
error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback

from . import __version__
from .cube import ConfigurationError, generate_dataset
from .dataio import DataFormatError, read_dataset, write_dataset
from .harness.config import build_data_config, load_config
from .harness.experiment import ExperimentFailed, run_experiment
from .harness.lemmas import PROFILES, REGISTRY, UnknownLemma, format_table, lemma_check_suite
from .harness.plots import emit_plots
from .harness.records import RECORD_SCHEMA, SchemaError, read_records, write_records
from .regression import (
    FiniteSource,
    InsufficientSamples,
    LearnConfig,
    MonomialBasis,
    evaluate,
    learn,
    load_hypothesis,
    save_hypothesis,
)

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
USER_ERRORS = (ConfigurationError, DataFormatError, SchemaError, InsufficientSamples, UnknownLemma,
               FileNotFoundError, ValueError)


def _data_spec_from_flags(args) -> dict:
    marginal = {"kind": "uniform"}
    if args.marginal.startswith("bitflip:"):
        marginal = {"kind": "bitflip", "sigma": float(args.marginal.split(":", 1)[1])}
    elif args.marginal != "uniform":
        raise ConfigurationError("--marginal must be 'uniform' or 'bitflip:<sigma>' (use --config for more)")
    if args.weights:
        planted = {"w": [float(v) for v in args.weights.split(",")], "theta": args.theta}
    else:
        planted = {"kind": "majority"}
    return {"n": args.n, "marginal": marginal, "planted": planted,
            "noise": {"kind": args.noise, "eta": args.eta, "width": args.width}}


def cmd_gen_data(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        spec, seed = cfg.raw["data"], cfg.seed if args.seed is None else args.seed
    else:
        if args.n is None:
            raise ConfigurationError("gen-data needs --config or --n")
        spec, seed = _data_spec_from_flags(args), args.seed or 0
    data = generate_dataset(build_data_config(spec), args.count, seed)
    write_dataset(data, args.out, header=f"generated by smoothltf {__version__}\n"
                                         f"seed={seed} data={json.dumps(spec, sort_keys=True)}")
    print(f"wrote {len(data)} samples (n={data.n}) to {args.out}")
    return EXIT_OK


def cmd_learn(args) -> int:
    data = read_dataset(args.data)
    r = args.reps or LearnConfig.repetitions(args.epsilon, args.delta)
    V = args.val_size or LearnConfig.validation_size(args.epsilon, args.delta, r)
    N = args.samples_per_rep or (len(data) - V) // r
    size = len(MonomialBasis(data.n, args.degree))
    if N < size:
        raise ConfigurationError(
            f"{len(data)} samples give N={N} per repetition (r={r}, V={V}), below the basis size {size}; "
            "supply more data or lower --reps / --val-size")
    cfg = LearnConfig.from_targets(args.degree, args.epsilon, args.delta, N, r, V)
    h = learn(FiniteSource(data, seed=args.seed), cfg, seed=args.seed)
    h.metadata["data_file"] = str(args.data)
    save_hypothesis(h, args.out)
    m = h.metadata
    print(f"r={cfg.r} N={cfg.N} V={cfg.V} chosen={m['chosen']} "
          f"train_error={m['train_errors'][m['chosen']]:.6f} "
          f"validation_error={m['validation_errors'][m['chosen']]:.6f} t={h.t:.6g}")
    print(f"model written to {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    h = load_hypothesis(args.model)
    data = read_dataset(args.data)
    err = evaluate(h, data)
    if args.json:
        print(json.dumps({"error": err, "samples": len(data)}))
    else:
        print(f"error={err:.6f} samples={len(data)}")
    return EXIT_OK


def cmd_lemma_check(args) -> int:
    rows = lemma_check_suite(args.select, args.budget, seed=args.seed, jobs=args.jobs,
                             bound_scale=args.bound_scale)
    print(format_table(rows))
    if args.out:
        write_records(args.out, rows)
    failed = sum(not r["passed"] for r in rows)
    print(f"{len(rows) - failed} passed, {failed} failed")
    return EXIT_CHECK if failed else EXIT_OK


def cmd_experiment(args) -> int:
    try:
        records = run_experiment(args.config, out=args.out, jobs=args.jobs, timing=not args.no_timing)
    except ExperimentFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    for r in records:
        e, b = r["errors"], r["benchmark"]
        point = " ".join(f"{k}={v}" for k, v in r["sweep_point"].items()) or "-"
        print(f"[{point}] train={e['train']:.4f} validation={e['validation']:.4f} test={e['test']:.4f} "
              f"benchmark={b['value']:.4f} excess={r['excess']:+.4f}")
    if args.out:
        print(f"{len(records)} record(s) appended to {args.out}")
    return EXIT_OK


def cmd_emit_plots(args) -> int:
    records = [r for path in args.records for r in read_records(path, RECORD_SCHEMA)]
    for path in emit_plots(records, args.outdir):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smoothltf", description=__doc__.splitlines()[0],
                                epilog="Exit codes: 0 ok, 1 check failure, 2 usage error, 3 internal error.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="sample a planted dataset to the text format")
    g.add_argument("--config", help="TOML config; its [data] table and seed are used")
    g.add_argument("--n", type=int, help="dimension (when no --config)")
    g.add_argument("--marginal", default="uniform", help="'uniform' or 'bitflip:<sigma>'")
    g.add_argument("--weights", help="comma-separated planted weights (default: majority)")
    g.add_argument("--theta", type=float, default=0.0, help="planted threshold")
    g.add_argument("--noise", default="none", choices=["none", "rcn", "boundary"])
    g.add_argument("--eta", type=float, default=0.0, help="RCN rate in [0, 1/2)")
    g.add_argument("--width", type=float, default=0.0, help="boundary band width")
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)

    lrn = sub.add_parser("learn", help="fit a polynomial threshold hypothesis to a dataset file")
    lrn.add_argument("--data", required=True)
    lrn.add_argument("--degree", type=int, required=True)
    lrn.add_argument("--epsilon", type=float, default=0.1)
    lrn.add_argument("--delta", type=float, default=0.1)
    lrn.add_argument("--seed", type=int, default=0)
    lrn.add_argument("--out", required=True, help="model JSON path")
    lrn.add_argument("--reps", type=int, help="repetitions r (default ceil(4 ln(2/delta)/epsilon))")
    lrn.add_argument("--val-size", type=int, help="validation size V (default ceil(8 ln(4r/delta)/epsilon^2))")
    lrn.add_argument("--samples-per-rep", type=int, help="N (default: split the remaining data evenly)")
    lrn.set_defaults(func=cmd_learn)

    ev = sub.add_parser("eval", help="0/1 error of a saved model on a dataset file")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--json", action="store_true")
    ev.set_defaults(func=cmd_eval)

    lc = sub.add_parser("lemma-check", help="run inequality checks and print a pass/fail table")
    lc.add_argument("--select", default="all", help=f"'all' or comma-separated ids: {', '.join(REGISTRY)}")
    lc.add_argument("--budget", default="smoke", choices=sorted(PROFILES))
    lc.add_argument("--seed", type=int, default=0)
    lc.add_argument("--jobs", type=int, default=1)
    lc.add_argument("--bound-scale", type=float, default=1.0,
                    help="multiply every upper bound (values < 1 give a negative control)")
    lc.add_argument("--out", help="append result rows (JSON lines) here")
    lc.set_defaults(func=cmd_lemma_check)

    ex = sub.add_parser("experiment", help="run a configured learning experiment or sweep")
    ex.add_argument("--config", required=True)
    ex.add_argument("--out", help="append records (JSON lines) here")
    ex.add_argument("--jobs", type=int, default=1)
    ex.add_argument("--no-timing", action="store_true", help="omit wall-clock so records are byte-stable")
    ex.set_defaults(func=cmd_experiment)

    pl = sub.add_parser("emit-plots", help="write CSV series and a gnuplot script from records")
    pl.add_argument("--records", nargs="+", required=True)
    pl.add_argument("--outdir", required=True)
    pl.set_defaults(func=cmd_emit_plots)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
