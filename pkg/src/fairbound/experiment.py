"""Sweep experiments and report serialization.

``run_experiment`` reproduces the envelope study at configurable scale: for
every point of a log-spaced grid over the sample size or the privacy budget
it trains the optimum, samples M private models, and records the attained
fairness range next to three certificates per group:

- the a-priori bound using the mechanism's high-probability distance lemma,
- the same gap bound at the measured distance of the farthest draw (the
  diagnostic available when the optimum is known), and
- the refined direction-aware bound for that farthest draw.

All CSV output is byte-reproducible: a metadata preamble carries the config
hash and seed, floats are printed in shortest round-trip form, and every
random draw comes from a substream keyed by (grid index, draw index).
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bounds_mod
from .config import parse_synthetic_spec, read_config
from .dataset import Dataset, load_csv, split, synthesize
from .exceptions import ConfigError, FairboundError
from .fairness import FairnessSpec, NOTIONS, coefficients, group_fairness_all
from .finite_sample import FiniteSampleParams, dependent_slack, independent_slack
from .model import LinearModel, distance
from .privacy import (
    DpSgdConfig,
    PrivacyParams,
    dpsgd,
    dpsgd_distance_bound,
    output_perturb,
)
from .trainer import constants, fit_erm

def _fmt(value) -> str:
    """Shortest round-trip decimal form for floats; str otherwise."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved sweep configuration; every field mirrors a config-file key
    (dashes in keys map to underscores here)."""

    data: str
    data_format: str  # "csv" | "synthetic"
    lam: float
    notions: tuple[str, ...]
    mechanism: str
    sweep_axis: str  # "n" | "epsilon"
    grid_start: float
    grid_stop: float
    grid_count: int
    draws: int
    zeta: float
    delta_policy: str  # "fixed" | "inverse_n_squared"
    seed: int
    epsilon: float = 1.0
    delta: float = 1e-6
    sensitive_col: str = "s"
    label_col: str = "y"
    desirable: frozenset[int] = frozenset({1})
    eval_split: str = "test"
    test_fraction: float = 0.1
    tol: float = 1e-10
    variant: str = "best"

    def __post_init__(self):
        if self.data_format not in ("csv", "synthetic"):
            raise ConfigError(f"unknown data format {self.data_format!r}")
        if self.sweep_axis not in ("n", "epsilon"):
            raise ConfigError(f"unknown sweep axis {self.sweep_axis!r}")
        if self.delta_policy not in ("fixed", "inverse_n_squared"):
            raise ConfigError(f"unknown delta policy {self.delta_policy!r}")
        if self.eval_split not in ("train", "test"):
            raise ConfigError(f"unknown eval split {self.eval_split!r}")
        if self.grid_count < 1:
            raise ConfigError("grid-count must be at least 1")
        if self.draws < 1:
            raise ConfigError("draws must be at least 1")
        if self.variant not in bounds_mod.VARIANTS:
            raise ConfigError(f"unknown bound variant {self.variant!r}")
        for notion in self.notions:
            if notion not in NOTIONS:
                raise ConfigError(f"unknown fairness notion {notion!r}")

    @classmethod
    def from_mapping(cls, values: dict[str, str], seed: int | None = None) -> "ExperimentConfig":
        def need(key: str) -> str:
            if key not in values:
                raise ConfigError(f"experiment config is missing {key!r}")
            return values[key]

        try:
            return cls(
                data=need("data"),
                data_format=values.get("data-format", "csv"),
                lam=float(need("lambda")),
                notions=tuple(t.strip() for t in need("notions").split(",") if t.strip()),
                mechanism=values.get("mechanism", "output_perturbation"),
                sweep_axis=need("sweep-axis"),
                grid_start=float(need("grid-start")),
                grid_stop=float(need("grid-stop")),
                grid_count=int(need("grid-count")),
                draws=int(need("draws")),
                zeta=float(values.get("zeta", "0.01")),
                delta_policy=values.get("delta-policy", "inverse_n_squared"),
                seed=seed if seed is not None else int(need("seed")),
                epsilon=float(values.get("epsilon", "1.0")),
                delta=float(values.get("delta", "1e-6")),
                sensitive_col=values.get("sensitive-col", "s"),
                label_col=values.get("label-col", "y"),
                desirable=frozenset(
                    int(t) for t in values.get("desirable", "1").split(",") if t.strip()
                ),
                eval_split=values.get("eval-split", "test"),
                test_fraction=float(values.get("test-fraction", "0.1")),
                tol=float(values.get("tol", "1e-10")),
                variant=values.get("variant", "best"),
            )
        except ValueError as exc:
            raise ConfigError(f"bad experiment config value: {exc}")

    def canonical_text(self) -> str:
        pairs = {
            "data": self.data,
            "data-format": self.data_format,
            "lambda": _fmt(self.lam),
            "notions": ",".join(self.notions),
            "mechanism": self.mechanism,
            "sweep-axis": self.sweep_axis,
            "grid-start": _fmt(self.grid_start),
            "grid-stop": _fmt(self.grid_stop),
            "grid-count": str(self.grid_count),
            "draws": str(self.draws),
            "zeta": _fmt(self.zeta),
            "delta-policy": self.delta_policy,
            "seed": str(self.seed),
            "epsilon": _fmt(self.epsilon),
            "delta": _fmt(self.delta),
            "sensitive-col": self.sensitive_col,
            "label-col": self.label_col,
            "desirable": ",".join(str(v) for v in sorted(self.desirable)),
            "eval-split": self.eval_split,
            "test-fraction": _fmt(self.test_fraction),
            "tol": _fmt(self.tol),
            "variant": self.variant,
        }
        return "\n".join(f"{k} = {v}" for k, v in sorted(pairs.items()))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


def load_experiment_config(path: str, seed: int | None = None) -> ExperimentConfig:
    return ExperimentConfig.from_mapping(read_config(path), seed=seed)


def _grid_values(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.grid_count == 1:
        return np.array([float(cfg.grid_start)])
    return np.exp(np.linspace(math.log(cfg.grid_start), math.log(cfg.grid_stop), cfg.grid_count))


def _load_base_data(cfg: ExperimentConfig) -> Dataset:
    if cfg.data_format == "synthetic":
        spec = parse_synthetic_spec(read_config(cfg.data), source=cfg.data)
        return synthesize(spec, seed=cfg.seed)
    return load_csv(cfg.data, cfg.sensitive_col, cfg.label_col)


def _delta_for(cfg: ExperimentConfig, n: int) -> float:
    if cfg.delta_policy == "inverse_n_squared":
        return 1.0 / n**2
    return cfg.delta


def _draw_private(
    hstar: LinearModel,
    train: Dataset,
    c,
    n: int,
    pp: PrivacyParams,
    substream: tuple[int, int],
) -> LinearModel:
    if pp.mechanism == "output_perturbation":
        return output_perturb(hstar, c, n, pp, substream=substream)
    schedule = dpsgd_distance_bound(hstar.num_params, c, n, pp)
    if schedule.steps == 0:
        cfg_sgd = DpSgdConfig(steps=0, step_size=0.5 / c.smoothness, noise_variance=0.0, radius=c.radius)
    else:
        cfg_sgd = DpSgdConfig.calibrated(c, n, pp, schedule.steps)
    return dpsgd(train, c, pp, cfg_sgd, substream=substream)


@dataclass
class ExperimentResult:
    sweep_path: str
    failures_path: str
    rows: int = 0
    failures: list[str] = field(default_factory=list)


SWEEP_COLUMNS = (
    "axis",
    "grid_value",
    "n",
    "epsilon",
    "delta",
    "notion",
    "k",
    "group",
    "f_star",
    "f_priv_min",
    "f_priv_max",
    "bound_lemma",
    "bound_measured",
    "bound_refined",
    "dist_lemma",
    "dist_measured",
    "dist_provenance",
    "flags",
)


def run_experiment(cfg: ExperimentConfig, out_dir: str) -> ExperimentResult:
    """Execute the sweep and write ``sweep.csv`` and ``failures.csv``.

    A failure at one grid point is recorded and the sweep continues; the
    whole run is deterministic given the config (including its seed).
    """
    os.makedirs(out_dir, exist_ok=True)
    base = _load_base_data(cfg)
    if cfg.eval_split == "test":
        train_all, eval_data = split(base, 1.0 - cfg.test_fraction, seed=cfg.seed)
    else:
        train_all, eval_data = base, base

    grid = _grid_values(cfg)
    header = [
        "# fairbound experiment",
        f"# config_hash={cfg.config_hash()}",
        f"# seed={cfg.seed}",
        "# substreams=(grid_index,draw_index)",
        f"# eval_split={cfg.eval_split}",
        f"# variant={cfg.variant}",
    ]
    lines = header + [",".join(SWEEP_COLUMNS)]
    failures: list[str] = []
    rows = 0

    for g, grid_value in enumerate(grid):
        try:
            new_rows = _run_grid_point(cfg, g, float(grid_value), train_all, eval_data)
            lines.extend(new_rows)
            rows += len(new_rows)
        except FairboundError as exc:
            failures.append(f"{g},{_fmt(float(grid_value))},{type(exc).__name__}: {exc}")
        except ValueError as exc:
            failures.append(f"{g},{_fmt(float(grid_value))},ValueError: {exc}")

    sweep_path = os.path.join(out_dir, "sweep.csv")
    with open(sweep_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")

    failures_path = os.path.join(out_dir, "failures.csv")
    with open(failures_path, "w", encoding="utf-8") as fh:
        fh.write("grid_index,grid_value,error\n")
        for row in failures:
            fh.write(row + "\n")

    return ExperimentResult(sweep_path=sweep_path, failures_path=failures_path, rows=rows, failures=failures)


def _run_grid_point(
    cfg: ExperimentConfig,
    g: int,
    grid_value: float,
    train_all: Dataset,
    eval_data: Dataset,
) -> list[str]:
    if cfg.sweep_axis == "n":
        n_g = int(round(grid_value))
        if n_g < 2 or n_g > train_all.n:
            raise ConfigError(f"grid n={n_g} outside [2, {train_all.n}]")
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(2, g)))
        idx = np.sort(rng.choice(train_all.n, size=n_g, replace=False))
        train = train_all.subset(idx)
        epsilon = cfg.epsilon
    else:
        train = train_all
        n_g = train.n
        epsilon = grid_value

    hstar = fit_erm(train, cfg.lam, tol=cfg.tol)
    c = constants(train, cfg.lam, hstar.radius)
    pp = PrivacyParams(
        epsilon=epsilon,
        delta=_delta_for(cfg, n_g),
        zeta=cfg.zeta,
        mechanism=cfg.mechanism,
        seed=cfg.seed,
    )

    models = [
        _draw_private(hstar, train, c, n_g, pp, substream=(g, j)) for j in range(cfg.draws)
    ]
    dists = [distance(hstar, m) for m in models]
    far_idx = int(np.argmax(dists))
    dist_measured = dists[far_idx]

    specs = {
        notion: coefficients(eval_data, notion, desirable=cfg.desirable if notion == "equality_of_opportunity" else None)
        for notion in cfg.notions
    }

    rows: list[str] = []
    for notion, spec in specs.items():
        f_star = group_fairness_all(hstar, eval_data, spec)
        f_draws = np.array([group_fairness_all(m, eval_data, spec) for m in models])
        lemma = bounds_mod.theorem3_report(hstar, eval_data, spec, c, n_g, pp)
        profile = bounds_mod.margin_profile(hstar, eval_data, spec.partition)
        measured = bounds_mod.bound_report(
            profile, spec, dist_measured, "measured", zeta=pp.zeta, mechanism=pp.mechanism
        )
        refined_profile = bounds_mod.refined_lipschitz_profile(
            hstar, models[far_idx], eval_data, spec.partition
        )
        refined = bounds_mod.bound_report(
            refined_profile, spec, dist_measured, "measured", zeta=pp.zeta, mechanism=pp.mechanism
        )
        for k in range(spec.num_groups):
            entry = lemma.entry(k)
            flags = ";".join(entry.flags + spec.flags)
            rows.append(
                ",".join(
                    [
                        cfg.sweep_axis,
                        _fmt(grid_value),
                        str(n_g),
                        _fmt(float(epsilon)),
                        _fmt(pp.delta),
                        notion,
                        str(k),
                        spec.partition.descriptions[k].replace(",", "/"),
                        _fmt(float(f_star[k])),
                        _fmt(float(np.min(f_draws[:, k]))),
                        _fmt(float(np.max(f_draws[:, k]))),
                        _fmt(_variant_value(entry, cfg.variant)),
                        _fmt(_variant_value(measured.entry(k), cfg.variant)),
                        _fmt(_variant_value(refined.entry(k), cfg.variant)),
                        _fmt(lemma.dist),
                        _fmt(dist_measured),
                        lemma.dist_provenance,
                        flags,
                    ]
                )
            )
    return rows


def _variant_value(entry: bounds_mod.BoundEntry, variant: str) -> float:
    return {
        "markov": entry.markov,
        "truncated": entry.truncated,
        "chernoff": entry.chernoff,
        "best": entry.best,
    }[variant]


TABLE_NOTIONS = (
    "equality_of_opportunity",
    "equalized_odds",
    "demographic_parity_binary",
    "accuracy_parity",
    "accuracy",
)


def table_report(
    hstar: LinearModel,
    train: Dataset,
    eval_data: Dataset,
    lam: float,
    epsilon: float = 1.0,
    zeta: float = 0.01,
    delta: float | None = None,
    desirable: frozenset[int] = frozenset({1}),
    dataset_name: str = "dataset",
    mechanism: str = "output_perturbation",
) -> dict[str, str]:
    """One summary row: the group-averaged best-variant certificate for each
    notion plus plain accuracy, at the given privacy parameters (delta
    defaults to 1/n^2 over the training size)."""
    if delta is None:
        delta = 1.0 / train.n**2
    c = constants(train, lam, hstar.radius)
    pp = PrivacyParams(epsilon=epsilon, delta=delta, zeta=zeta, mechanism=mechanism, seed=0)
    row: dict[str, str] = {"dataset": dataset_name}
    for notion in TABLE_NOTIONS:
        spec = coefficients(
            eval_data, notion, desirable=desirable if notion == "equality_of_opportunity" else None
        )
        report = bounds_mod.theorem3_report(hstar, eval_data, spec, c, train.n, pp)
        row[notion] = _fmt(report.aggregate)
    return row


def write_table_csv(rows: list[dict[str, str]], path: str) -> None:
    columns = ["dataset", *TABLE_NOTIONS]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(row[c] for c in columns) + "\n")


def write_bound_report_csv(
    report: bounds_mod.BoundReport,
    path: str,
    metadata: dict[str, str] | None = None,
    slack: np.ndarray | None = None,
    combined_confidence: float | None = None,
) -> None:
    """Serialize a bound report; columns follow the documented interface.

    When finite-sample ``slack`` values are supplied, three extra columns
    carry the slack, the best-variant bound plus slack, and the combined
    confidence level of that statement.
    """
    columns = ["notion", "k", "chi", "dist", "dist_provenance", "markov", "truncated", "chernoff", "best", "flags"]
    if slack is not None:
        columns += ["slack", "combined_bound", "combined_confidence"]
    lines = []
    for key, value in (metadata or {}).items():
        lines.append(f"# {key}={value}")
    lines.append(",".join(columns))
    for entry in report.entries:
        row = [
            report.notion,
            str(entry.group),
            _fmt(entry.chi),
            _fmt(report.dist),
            report.dist_provenance,
            _fmt(entry.markov),
            _fmt(entry.truncated),
            _fmt(entry.chernoff),
            _fmt(entry.best),
            ";".join(entry.flags + report.flags),
        ]
        if slack is not None:
            row += [
                _fmt(float(slack[entry.group])),
                _fmt(entry.best + float(slack[entry.group])),
                _fmt(combined_confidence if combined_confidence is not None else 0.0),
            ]
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_audit_csv(
    spec: FairnessSpec,
    fairness_values: np.ndarray,
    empty_groups: np.ndarray,
    path: str,
    metadata: dict[str, str] | None = None,
    slack: np.ndarray | None = None,
    combined_confidence: float | None = None,
) -> None:
    """Audit rows: (k, group description, fairness level, flags)."""
    columns = ["k", "group", "fairness", "flags"]
    if slack is not None:
        columns += ["slack", "combined_bound", "combined_confidence"]
    lines = []
    for key, value in (metadata or {}).items():
        lines.append(f"# {key}={value}")
    lines.append(",".join(columns))
    for k in range(spec.num_groups):
        flags = list(spec.flags)
        if empty_groups[k]:
            flags.append("empty_group")
        row = [
            str(k),
            spec.partition.descriptions[k].replace(",", "/"),
            _fmt(float(fairness_values[k])),
            ";".join(flags),
        ]
        if slack is not None:
            row += [
                _fmt(float(slack[k])),
                _fmt(abs(float(fairness_values[k])) + float(slack[k])),
                _fmt(combined_confidence if combined_confidence is not None else 0.0),
            ]
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def finite_sample_slacks(
    spec: FairnessSpec,
    n: int,
    delta: float,
    num_labels: int,
    num_features: int,
    mode: str,
    b3: float | None = None,
    b4: float = 2.0,
    natarajan_dim: float | None = None,
) -> np.ndarray:
    """Per-group slack values under the requested regime."""
    if mode not in ("independent", "dependent"):
        raise ConfigError(f"unknown finite-sample mode {mode!r}")
    fp = FiniteSampleParams.from_fairness_spec(
        spec, n, delta, num_labels=num_labels, num_features=num_features,
        b3=b3, b4=b4, natarajan_dim=natarajan_dim,
    )
    fn = independent_slack if mode == "independent" else dependent_slack
    return np.array([fn(fp, k) for k in range(spec.num_groups)])
