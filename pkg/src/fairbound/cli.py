"""Command-line entry points.

Subcommands: gen-data, train, privatize, audit, bound, experiment, table.
Every long flag can equivalently be written as a key in a ``--config`` file
(same name, without the leading dashes); flags given on the command line
override config values.  Exit codes: 0 success, 2 configuration error,
3 optimizer convergence error, 4 data error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import bounds as bounds_mod
from . import experiment as experiment_mod
from .config import read_config, read_synthetic_spec
from .dataset import load_csv, synthesize, write_csv
from .exceptions import ConfigError, ConvergenceError, DataError
from .fairness import NOTIONS, coefficients, conditional_accuracies, group_fairness_all
from .model import load_model, save_model
from .privacy import (
    MECHANISMS,
    DpSgdConfig,
    PrivacyParams,
    dpsgd,
    dpsgd_distance_bound,
    output_perturb,
    warn_if_gradient_noise_dominates,
)
from .trainer import constants, constants_from_feature_bound, fit_erm

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_DATA = 4


def _mechanism_key(flag_value: str) -> str:
    value = flag_value.replace("-", "_")
    if value not in MECHANISMS:
        raise ConfigError(f"unknown mechanism {flag_value!r}")
    return value


def _notion_key(flag_value: str) -> str:
    value = flag_value.replace("-", "_")
    if value not in NOTIONS:
        raise ConfigError(f"unknown notion {flag_value!r}")
    return value


def _resolve_delta(value: str, n: int) -> float:
    if value == "auto":
        return 1.0 / n**2
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"--delta must be a number or 'auto', got {value!r}")


def _parse_desirable(value: str) -> frozenset[int]:
    try:
        return frozenset(int(t) for t in value.split(",") if t.strip())
    except ValueError:
        raise ConfigError(f"--desirable must be comma-separated label ids, got {value!r}")


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Merge --config file values as defaults; actual flags still win.

    Config keys are the long flag names without the leading dashes (e.g.
    ``label-col``, ``lambda``); underscores are accepted as well.
    """
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise ConfigError("--config needs a file path")
    values = read_config(argv[idx + 1])
    option_to_dest = {}
    for action in parser._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                option_to_dest[opt[2:]] = action.dest
    defaults = {}
    for key, value in values.items():
        dest = option_to_dest.get(key, option_to_dest.get(key.replace("_", "-")))
        if dest is None:
            raise ConfigError(f"config key {key!r} does not match any flag")
        defaults[dest] = value
    parser.set_defaults(**defaults)
    # required flags satisfied by config must not be demanded again
    for action in parser._actions:
        if action.dest in defaults:
            action.required = False
    return [a for i, a in enumerate(argv) if i not in (idx, idx + 1)]


def _add_data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="input CSV path")
    parser.add_argument("--sensitive-col", default="s", help="sensitive attribute column name")
    parser.add_argument("--label-col", default="y", help="label column name")


def _add_config_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key-value config file; flags override its entries")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairbound")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="synthesize a dataset from a spec file")
    _add_config_flag(p)
    p.add_argument("--spec", required=True, help="synthetic spec (key-value file)")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--sensitive-col", default="s")
    p.add_argument("--label-col", default="y")

    p = sub.add_parser("train", help="fit the regularized optimum")
    _add_config_flag(p)
    _add_data_flags(p)
    p.add_argument("--lambda", dest="lam", required=True, type=float, help="ridge weight")
    p.add_argument("--tol", type=float, default=1e-10, help="gradient-norm stopping tolerance")
    p.add_argument("--max-iters", type=int, default=200_000)
    p.add_argument("--radius", type=float, default=None, help="ball radius override")
    p.add_argument("--out", required=True, help="output model path")

    p = sub.add_parser("privatize", help="release a private model")
    _add_config_flag(p)
    _add_data_flags(p)
    p.add_argument("--model", required=True, help="trained model path")
    p.add_argument("--lambda", dest="lam", required=True, type=float)
    p.add_argument("--mechanism", default="output-perturbation")
    p.add_argument("--epsilon", required=True, type=float)
    p.add_argument("--delta", default="auto", help="number, or 'auto' for 1/n^2")
    p.add_argument("--zeta", type=float, default=0.01, help="bound failure probability")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--steps", type=int, default=None, help="DP-SGD step count override")
    p.add_argument("--noise-exponent", default="T_squared", choices=("T_squared", "T_linear"))
    p.add_argument("--out", required=True, help="output model path")

    p = sub.add_parser("audit", help="per-group fairness levels of a model")
    _add_config_flag(p)
    _add_data_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--notion", required=True)
    p.add_argument("--desirable", default="1", help="desirable label ids (equality of opportunity)")
    p.add_argument("--report", required=True, help="output CSV path")
    _add_finite_sample_flags(p)

    p = sub.add_parser("bound", help="certified fairness-gap bounds")
    _add_config_flag(p)
    _add_data_flags(p)
    p.add_argument("--model", required=True, help="reference model")
    p.add_argument("--other", default=None, help="second model: use the measured distance")
    p.add_argument("--train-data", default=None, help="training CSV (for n and feature bound)")
    p.add_argument("--train-n", type=int, default=None, help="training size if --train-data absent")
    p.add_argument("--lambda", dest="lam", required=True, type=float)
    p.add_argument("--notion", required=True)
    p.add_argument("--desirable", default="1")
    p.add_argument("--mechanism", default="output-perturbation")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--delta", default="auto")
    p.add_argument("--zeta", type=float, default=0.01)
    p.add_argument("--variant", default="best", choices=bounds_mod.VARIANTS)
    p.add_argument("--out", required=True)
    _add_finite_sample_flags(p)

    p = sub.add_parser("experiment", help="run a sweep experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("table", help="summary row of group-averaged bounds per notion")
    _add_config_flag(p)
    _add_data_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--train-data", required=True)
    p.add_argument("--lambda", dest="lam", required=True, type=float)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--delta", default="auto")
    p.add_argument("--zeta", type=float, default=0.01)
    p.add_argument("--desirable", default="1")
    p.add_argument("--name", default="dataset", help="dataset label for the row")
    p.add_argument("--out", required=True)

    return parser


def _add_finite_sample_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--finite-sample",
        default="off",
        choices=("off", "independent", "dependent"),
        help="add true-vs-empirical slack columns",
    )
    parser.add_argument("--fs-delta", type=float, default=0.05, help="slack failure probability")
    parser.add_argument("--b3", type=float, default=None, help="coefficient concentration constant")
    parser.add_argument("--b4", type=float, default=2.0, help="coefficient concentration exponent")
    parser.add_argument("--natarajan-dim", type=float, default=None)


def _cmd_gen_data(args: argparse.Namespace) -> int:
    spec = read_synthetic_spec(args.spec)
    d = synthesize(spec, seed=int(args.seed))
    if args.sensitive_col != "s" or args.label_col != "y":
        d = replace(d, sensitive_col=args.sensitive_col, label_col=args.label_col)
    write_csv(d, args.out)
    print(f"wrote {d.n} rows ({d.p - 1} features + intercept) to {args.out}")
    return EXIT_OK


def _cmd_train(args: argparse.Namespace) -> int:
    d = load_csv(args.data, args.sensitive_col, args.label_col)
    model = fit_erm(d, float(args.lam), tol=float(args.tol), max_iters=int(args.max_iters),
                    radius=None if args.radius is None else float(args.radius))
    save_model(model, args.out)
    print(f"trained on n={d.n}; weight norm {np.linalg.norm(model.weights):.6g}, "
          f"radius {model.radius:.6g} -> {args.out}")
    return EXIT_OK


def _cmd_privatize(args: argparse.Namespace) -> int:
    d = load_csv(args.data, args.sensitive_col, args.label_col)
    hstar = load_model(args.model)
    mechanism = _mechanism_key(args.mechanism)
    delta = _resolve_delta(args.delta, d.n)
    pp = PrivacyParams(epsilon=float(args.epsilon), delta=delta, zeta=float(args.zeta),
                       mechanism=mechanism, seed=int(args.seed))
    c = constants(d, float(args.lam), hstar.radius)
    if mechanism == "output_perturbation":
        released = output_perturb(hstar, c, d.n, pp)
    else:
        if args.steps is not None:
            steps = int(args.steps)
        else:
            steps = dpsgd_distance_bound(hstar.num_params, c, d.n, pp).steps
        if steps == 0:
            cfg = DpSgdConfig(steps=0, step_size=0.5 / c.smoothness, noise_variance=0.0,
                              radius=c.radius)
        else:
            cfg = DpSgdConfig.calibrated(c, d.n, pp, steps, exponent=args.noise_exponent)
            warn_if_gradient_noise_dominates(hstar, d, float(args.lam), cfg.noise_variance)
        released = dpsgd(d, c, pp, cfg)
    save_model(released, args.out)
    print(f"released {mechanism} model (epsilon={pp.epsilon}, delta={pp.delta}) -> {args.out}")
    return EXIT_OK


def _cmd_audit(args: argparse.Namespace) -> int:
    d = load_csv(args.data, args.sensitive_col, args.label_col)
    model = load_model(args.model)
    notion = _notion_key(args.notion)
    desirable = _parse_desirable(args.desirable) if notion == "equality_of_opportunity" else None
    spec = coefficients(d, notion, desirable=desirable)
    values = group_fairness_all(model, d, spec)
    _, empty = conditional_accuracies(model, d, spec.partition)
    slack = None
    confidence = None
    if args.finite_sample != "off":
        slack = experiment_mod.finite_sample_slacks(
            spec, d.n, float(args.fs_delta), d.num_labels, d.p, args.finite_sample,
            b3=None if args.b3 is None else float(args.b3), b4=float(args.b4),
            natarajan_dim=None if args.natarajan_dim is None else float(args.natarajan_dim),
        )
        confidence = 1.0 - float(args.fs_delta)
    experiment_mod.write_audit_csv(
        spec, values, empty, args.report,
        metadata={"notion": notion, "data": args.data, "model": args.model},
        slack=slack, combined_confidence=confidence,
    )
    print(f"audited {notion} over {spec.num_groups} groups -> {args.report}")
    return EXIT_OK


def _cmd_bound(args: argparse.Namespace) -> int:
    eval_data = load_csv(args.data, args.sensitive_col, args.label_col)
    reference = load_model(args.model)
    other = load_model(args.other) if args.other else None
    notion = _notion_key(args.notion)
    mechanism = _mechanism_key(args.mechanism)
    desirable = _parse_desirable(args.desirable) if notion == "equality_of_opportunity" else None

    if args.train_data:
        train = load_csv(args.train_data, args.sensitive_col, args.label_col)
        n, feature_bound = train.n, train.feature_norm_bound
    elif args.train_n:
        n, feature_bound = int(args.train_n), eval_data.feature_norm_bound
    else:
        raise ConfigError("bound needs --train-data or --train-n for the training size")

    c = constants_from_feature_bound(float(args.lam), feature_bound, reference.radius)
    pp = PrivacyParams(epsilon=float(args.epsilon), delta=_resolve_delta(args.delta, n),
                       zeta=float(args.zeta), mechanism=mechanism, seed=0)
    spec = coefficients(eval_data, notion, desirable=desirable)
    report = bounds_mod.theorem3_report(reference, eval_data, spec, c, n, pp, other=other)

    slack = None
    confidence = None
    if args.finite_sample != "off":
        slack = experiment_mod.finite_sample_slacks(
            spec, eval_data.n, float(args.fs_delta), eval_data.num_labels, eval_data.p,
            args.finite_sample, b3=None if args.b3 is None else float(args.b3),
            b4=float(args.b4),
            natarajan_dim=None if args.natarajan_dim is None else float(args.natarajan_dim),
        )
        confidence = 1.0 - float(args.fs_delta) - pp.zeta
    experiment_mod.write_bound_report_csv(
        report, args.out,
        metadata={
            "notion": notion,
            "mechanism": mechanism,
            "zeta": repr(pp.zeta),
            "variant": args.variant,
            "statement": "true-vs-empirical" if slack is not None else "empirical",
        },
        slack=slack, combined_confidence=confidence,
    )
    print(f"bound report ({report.dist_provenance} dist={report.dist:.6g}) -> {args.out}")
    return EXIT_OK


def _cmd_experiment(args: argparse.Namespace) -> int:
    cfg = experiment_mod.load_experiment_config(args.config, seed=int(args.seed))
    result = experiment_mod.run_experiment(cfg, args.out_dir)
    print(f"sweep wrote {result.rows} rows -> {result.sweep_path} "
          f"({len(result.failures)} failed grid points)")
    return EXIT_OK


def _cmd_table(args: argparse.Namespace) -> int:
    eval_data = load_csv(args.data, args.sensitive_col, args.label_col)
    train = load_csv(args.train_data, args.sensitive_col, args.label_col)
    model = load_model(args.model)
    delta = None if args.delta == "auto" else float(args.delta)
    row = experiment_mod.table_report(
        model, train, eval_data, float(args.lam),
        epsilon=float(args.epsilon), zeta=float(args.zeta), delta=delta,
        desirable=_parse_desirable(args.desirable), dataset_name=args.name,
    )
    experiment_mod.write_table_csv([row], args.out)
    print(f"table row for {args.name!r} -> {args.out}")
    return EXIT_OK


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "privatize": _cmd_privatize,
    "audit": _cmd_audit,
    "bound": _cmd_bound,
    "experiment": _cmd_experiment,
    "table": _cmd_table,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if argv and argv[0] in _COMMANDS and argv[0] != "experiment":
            subparser = _subparser_for(parser, argv[0])
            argv = [argv[0]] + _apply_config_file(subparser, argv[1:])
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def _subparser_for(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


if __name__ == "__main__":
    sys.exit(main())
