"""Command-line surface: simulate, train, evaluate-score,
evaluate-calibration, maxent.

All outputs are machine-readable (CSV/JSON) and bit-identical on one
platform for identical config and seed: every random stream is derived
from the top-level seed via documented labels, floats are printed with 17
significant digits, and JSON keys are sorted.

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import serialize
from .calibration import (EMPIRICAL_TOL, action_partition, calibration_residual)
from .data import fit_standardizer, load_csv, save_csv, split
from .data import interaction_features as add_interactions
from .decisions import Forecast, ip_score
from .entropy import solve_maxent
from .errors import (ConfigError, ConvergenceError, CredalcastError,
                     InvalidInputError, TrainingError)
from .gbr import gbr_forecast
from .losses import (LossMatrix, ParametricBinaryLoss, cost_sensitive_matrix,
                     discretize_action_space)
from .nslp import (GroupedDataset, NSLPSpec, dataset_from_outcomes,
                   empirical_group_credal, sample_nslp)
from .spaces import CredalSet, OutcomeSpace, ProbVec
from .training import (ModelParams, TrainConfig, fit_gbr, model_forecast,
                       train_dro, train_erm)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _schema() -> dict:
    text = resources.files("credalcast").joinpath(
        "schema/config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            config = json.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from None
    try:
        jsonschema.validate(config, _schema())
    except jsonschema.ValidationError as err:
        raise ConfigError(f"config rejected: {err.message}") from None
    return config


def _require(config: dict, *keys: str) -> None:
    for key in keys:
        if key not in config:
            raise ConfigError(f"this subcommand requires the {key!r} config section")


def _space(config: dict) -> OutcomeSpace:
    _require(config, "space")
    return OutcomeSpace.from_dict({
        "outcomes": config["space"]["outcomes"],
        "feature_of": config["space"]["feature_of"],
        **({"label_of": config["space"]["label_of"]}
           if "label_of" in config["space"] else {}),
    })


def _data_model(config: dict, space: OutcomeSpace) -> CredalSet:
    _require(config, "data_model")
    vertices = tuple(ProbVec(np.asarray(v, dtype=float))
                     for v in config["data_model"]["vertices"])
    return CredalSet(space, vertices)


def _loss_matrix(spec: dict, space: OutcomeSpace) -> tuple[str, LossMatrix]:
    loss = ParametricBinaryLoss.from_dict(
        {k: v for k, v in spec.items() if k != "grid_n"})
    if loss.kind == "cost_sensitive":
        return loss.loss_id, cost_sensitive_matrix(loss.c, space)
    grid_n = int(spec.get("grid_n", 101))
    return loss.loss_id, discretize_action_space(loss, grid_n, space)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    def fmt(value):
        if isinstance(value, float):
            return f"{value:.17g}"
        return value

    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


# -- subcommands ----------------------------------------------------------


def cmd_simulate(config: dict, out: Path, seed: int) -> None:
    space = _space(config)
    data_model = _data_model(config, space)
    _require(config, "simulate")
    sim = config["simulate"]
    spec = NSLPSpec(
        data_model=data_model,
        n=int(sim["n"]),
        seed=seed,
        selection=sim["selection"],
        sequence=tuple(sim["sequence"]) if "sequence" in sim else None,
    )
    outcomes, groups = sample_nslp(spec)
    ds = dataset_from_outcomes(outcomes, groups, space)
    save_csv(ds, out / "dataset.csv")
    serialize.dump({"spec": spec.metadata(), "space": space.to_dict()},
                   out / "metadata.json")
    print(f"wrote {out / 'dataset.csv'} ({ds.n_rows} rows)")


def _load_dataset(config: dict) -> GroupedDataset:
    _require(config, "dataset")
    section = config["dataset"]
    ds = load_csv(
        section["path"],
        label_col=section.get("label_col", "label"),
        group_col=section.get("group_col", "group"),
        feature_cols=section.get("feature_cols"),
    )
    if section.get("interactions", False):
        X, names = add_interactions(ds.features, ds.feature_names)
        ds = ds.with_features(X, names)
    return ds


def _split_dataset(config: dict, ds: GroupedDataset, seed: int):
    fraction = config["dataset"].get("test_fraction")
    if fraction is None:
        return ds, None
    return split(ds, float(fraction), seed)


def cmd_train(config: dict, out: Path, seed: int) -> None:
    _require(config, "train")
    ds = _load_dataset(config)
    train_ds, _ = _split_dataset(config, ds, seed)
    section = config["train"]
    loss = ParametricBinaryLoss.from_dict(section["loss"])
    overrides = dict(section.get("config", {}))
    overrides.setdefault("seed", seed)
    cfg = TrainConfig(**overrides)
    standardizer = None
    if config["dataset"].get("standardize", False):
        standardizer = fit_standardizer(train_ds.features)
        train_ds = train_ds.with_features(
            standardizer.transform(train_ds.features), train_ds.feature_names)
    model_id = section.get("id", f"{section['model']}_{loss.loss_id}")
    if section["model"] == "erm":
        params = train_erm(train_ds, loss, cfg)
        serialize.dump(params.to_dict(standardizer), out / f"{model_id}.json")
        print(f"wrote {out / (model_id + '.json')}")
    elif section["model"] == "dro":
        log_rows: list[list] = []

        def on_round(record):
            log_rows.append(
                [record["iter"], record["weighted_loss"]]
                + [float(v) for v in record["group_losses"]]
                + [float(v) for v in record["lam"]])

        params, trace = train_dro(train_ds, loss, cfg, on_round=on_round)
        serialize.dump(params.to_dict(standardizer), out / f"{model_id}.json")
        n_groups = train_ds.n_groups
        header = (["iter", "weighted_loss"]
                  + [f"loss_g{g}" for g in range(n_groups)]
                  + [f"lambda_g{g}" for g in range(n_groups)])
        _write_csv(out / f"{model_id}_runlog.csv", header, log_rows)
        _write_csv(out / f"{model_id}_lambda_trace.csv",
                   [f"lambda_g{g}" for g in range(n_groups)],
                   [list(map(float, row)) for row in trace])
        print(f"wrote {out / (model_id + '.json')} and run logs")
    else:
        models = fit_gbr(train_ds, loss, cfg)
        for g, params in enumerate(models):
            serialize.dump(params.to_dict(standardizer),
                           out / f"{model_id}_g{g}.json")
        print(f"wrote {len(models)} group models under {out}")


def _finite_alphabet_outcomes(ds: GroupedDataset, space: OutcomeSpace) -> np.ndarray:
    """Recover outcome indices from one-hot feature rows plus labels."""
    J = space.n_features
    X = ds.features
    if X.shape[1] != J or not np.all(np.isin(X, (0.0, 1.0))) or \
            not np.all(X.sum(axis=1) == 1.0):
        raise ConfigError(
            "evaluation needs the one-hot finite-alphabet layout written by "
            "`credalcast simulate` (one indicator column per feature value)")
    feature_value = X.argmax(axis=1)
    labels = space.binary_labels()
    lookup = -np.ones((J, 2), dtype=int)
    for omega in range(space.k):
        lookup[space.feature_of[omega], labels[omega]] = omega
    if np.any(lookup < 0):
        raise ConfigError("outcome space lacks an outcome for some (x, y) pair")
    return lookup[feature_value, ds.labels]


def _load_model_forecast(entry: dict, space: OutcomeSpace) -> Forecast:
    paths = entry.get("paths", [entry["path"]] if "path" in entry else None)
    if not paths:
        raise ConfigError(f"model {entry['id']!r} needs a path or paths")
    models = []
    standardizers = []
    for path in paths:
        if not Path(path).exists():
            raise ConfigError(f"model file not found: {path}")
        params, standardizer = ModelParams.from_dict(serialize.load(path))
        models.append(params)
        standardizers.append(standardizer)
    feature_matrix = np.eye(space.n_features)
    if standardizers[0] is not None:
        feature_matrix = standardizers[0].transform(feature_matrix)
    return model_forecast(space, models, feature_matrix)


def _evaluation_setup(config: dict, seed: int):
    space = _space(config)
    _require(config, "models", "losses")
    ds = _load_dataset(config)
    train_ds, test_ds = _split_dataset(config, ds, seed)
    outcomes_train = _finite_alphabet_outcomes(train_ds, space)
    models_train = dataset_from_outcomes(outcomes_train, train_ds.groups, space)
    data_models = {"train": empirical_group_credal(models_train, space)}
    if test_ds is not None:
        outcomes_test = _finite_alphabet_outcomes(test_ds, space)
        models_test = dataset_from_outcomes(outcomes_test, test_ds.groups, space)
        data_models["test"] = empirical_group_credal(models_test, space)
    forecasts = {}
    for entry in config["models"]:
        if entry["kind"] == "gbr" and "paths" not in entry:
            raise ConfigError(f"gbr model {entry['id']!r} needs 'paths'")
        forecasts[entry["id"]] = _load_model_forecast(entry, space)
    losses = [_loss_matrix(spec, space) for spec in config["losses"]]
    return space, data_models, forecasts, losses


def cmd_evaluate_score(config: dict, out: Path, seed: int) -> None:
    _, data_models, forecasts, losses = _evaluation_setup(config, seed)
    rows = []
    for forecast_id, forecast in forecasts.items():
        for loss_id, matrix in losses:
            train_score = ip_score(forecast, matrix, data_models["train"])
            test_score = (ip_score(forecast, matrix, data_models["test"])
                          if "test" in data_models else float("nan"))
            rows.append([forecast_id, loss_id, train_score, test_score])
    _write_csv(out / "scores.csv",
               ["forecast_id", "loss_id", "ip_score_train", "ip_score_test"],
               rows)
    print(f"wrote {out / 'scores.csv'} ({len(rows)} rows)")


def cmd_evaluate_calibration(config: dict, out: Path, seed: int,
                             tolerance: float) -> None:
    _, data_models, forecasts, losses = _evaluation_setup(config, seed)
    rows = []
    for forecast_id, forecast in forecasts.items():
        for loss_id, matrix in losses:
            for split_name, data in data_models.items():
                partitions = [(None, "all"),
                              (action_partition(forecast, matrix), None)]
                for partition, _ in partitions:
                    report = calibration_residual(
                        forecast, matrix, data, partition, tolerance=tolerance,
                        forecast_id=forecast_id, loss_id=loss_id,
                        data_model_id=split_name)
                    for block_label, block in report.per_block.items():
                        rows.append([
                            forecast_id, loss_id, split_name, block_label,
                            block.residual,
                            "" if block.diagnostic_II is None
                            else block.diagnostic_II,
                            int(block.is_subcalibrated),
                        ])
    _write_csv(out / "calibration.csv",
               ["forecast_id", "loss_id", "data_split", "block_label",
                "residual", "diagnostic_II", "subcalibrated"],
               rows)
    print(f"wrote {out / 'calibration.csv'} ({len(rows)} rows)")


def cmd_maxent(config: dict, out: Path, tolerance: float | None) -> None:
    space = _space(config)
    data_model = _data_model(config, space)
    if "loss_matrix" in config:
        matrix = LossMatrix.from_dict(config["loss_matrix"])
        loss_id = "matrix"
    else:
        _require(config, "loss")
        loss_id, matrix = _loss_matrix(config["loss"], space)
    result = solve_maxent(data_model, matrix,
                          tol=tolerance if tolerance is not None else 1e-8)
    doc = result.to_dict()
    doc["loss_id"] = loss_id
    serialize.dump(doc, out / "maxent.json")
    print(f"wrote {out / 'maxent.json'}")


# -- entry point ----------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="credalcast",
        description="imprecise-forecast toolkit: simulate, train, evaluate")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "train", "evaluate-score", "evaluate-calibration",
                 "maxent"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to run config JSON")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--tolerance", type=float, default=None,
                       help="override the config tolerance")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        seed = args.seed if args.seed is not None else int(config.get("seed", 0))
        tolerance = (args.tolerance if args.tolerance is not None
                     else config.get("tolerance"))
        if args.command == "simulate":
            cmd_simulate(config, out, seed)
        elif args.command == "train":
            cmd_train(config, out, seed)
        elif args.command == "evaluate-score":
            cmd_evaluate_score(config, out, seed)
        elif args.command == "evaluate-calibration":
            cmd_evaluate_calibration(
                config, out, seed,
                tolerance if tolerance is not None else EMPIRICAL_TOL)
        elif args.command == "maxent":
            cmd_maxent(config, out, tolerance)
    except (ConfigError, InvalidInputError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, TrainingError, CredalcastError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as err:
        print(f"io error: {err}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
