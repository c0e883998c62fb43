"""Command-line front end.

Every command resolves a configuration (defaults, then the ``--config`` JSON
file, then flags), prints it, runs, and writes JSON/CSV result files that
embed the resolved configuration. Exit codes: 0 success, 1 usage or input
error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .metrics import ExperimentReport, fdr_table, tpr_table, validation_study
from .network import NetworkParams, Task
from .optim import Mode, TrainConfig
from .pipeline import (
    CLASSIFICATION_GRID,
    REGRESSION_GRID,
    Grids,
    Method,
    run_pipeline,
    select_features,
    stability_run,
)
from .simgen import SimConfig, run_experiment
from .tabular import load_names, load_table, read_json, write_csv, write_json

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

COMMANDS = ("simulate", "fit", "cv", "select", "stability", "validate", "report")

# batch size when the config leaves it unset
_BATCH = {Task.REGRESSION: 200, Task.BINARY: 32}
_GRID = {Task.REGRESSION: REGRESSION_GRID, Task.BINARY: CLASSIFICATION_GRID}

_DATA_DEFAULTS = {
    "path": None,
    "delimiter": ",",
    "target_column": -1,
    "task": "regression",
    "header": None,
    "names": None,
}
_TOP_DEFAULTS = {
    "seed": 0,
    "jobs": 1,
    "method": Method.GL_AGL.value,
    "methods": [m.value for m in Method],
    "repeats": 100,
    "mask": None,
    "input": None,
}
_SECTIONS = {
    "train": {f.name for f in fields(TrainConfig)} - {"seed"},
    "sim": {f.name for f in fields(SimConfig)} - {"seed"},
    "grids": {f.name for f in fields(Grids)},
    "data": set(_DATA_DEFAULTS),
}

# keys of the resolved config that each command uses
_USES = {
    "simulate": ("seed", "jobs", "methods", "sim", "train", "grids"),
    "fit": ("seed", "jobs", "method", "data", "train", "grids"),
    "cv": ("seed", "jobs", "method", "data", "train", "grids"),
    "select": ("input", "grids", "data"),
    "stability": ("seed", "jobs", "method", "repeats", "data", "train", "grids"),
    "validate": ("seed", "jobs", "repeats", "mask", "data", "train"),
    "report": ("input",),
}

logger = logging.getLogger("aglnet")


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- configuration -----------------------------------------------------------

def check_config(raw: dict) -> dict:
    """Reject unknown keys at the top level and inside each section."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - set(_TOP_DEFAULTS) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for name, allowed in _SECTIONS.items():
        section = raw.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"config section {name!r} must be an object")
        bad = set(section) - allowed
        if bad:
            raise ConfigError(f"unknown keys in {name!r}: {sorted(bad)}")
    return raw


def _overrides(args) -> dict:
    out: dict = {}

    def put(section, key, value):
        if value is not None:
            (out.setdefault(section, {}) if section else out)[key] = value

    put(None, "seed", args.seed)
    put(None, "jobs", args.jobs)
    put(None, "method", getattr(args, "method", None))
    put(None, "repeats", getattr(args, "repeats", None))
    put(None, "input", getattr(args, "input", None))
    put(None, "mask", getattr(args, "mask", None))
    put("train", "epochs", args.epochs)
    put("train", "mode", args.mode)
    put("grids", "cutoff", args.cutoff)
    put("grids", "gamma", args.gamma)
    put("data", "path", getattr(args, "data", None))
    put("data", "delimiter", args.delimiter)
    put("data", "task", getattr(args, "task", None))
    put("data", "target_column", getattr(args, "target_column", None))
    put("data", "names", getattr(args, "names", None))
    return out


def _merge(base: dict, extra: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in extra.items():
        if key in _SECTIONS:
            merged.setdefault(key, {}).update(value)
        else:
            merged[key] = value
    return merged


def resolve_config(raw: dict, command: str) -> dict:
    """Fill defaults and validate by building the library config objects.

    The returned dict is plain JSON and holds only the keys ``command`` uses.
    """
    raw = check_config(raw)
    resolved = {**_TOP_DEFAULTS, **{k: v for k, v in raw.items() if k not in _SECTIONS}}
    data = {**_DATA_DEFAULTS, **raw.get("data", {})}
    task = Task.REGRESSION if command == "simulate" else Task(data["task"])
    data["task"] = task.value
    resolved["data"] = data
    seed = resolved["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    if not isinstance(resolved["jobs"], int) or resolved["jobs"] < 1:
        raise ConfigError("jobs must be a positive integer")

    train = TrainConfig(**{"batch_size": _BATCH[task], **raw.get("train", {}), "seed": seed})
    resolved["train"] = _train_dict(train)
    grids = Grids(**{"lam": _GRID[task], **raw.get("grids", {})})
    resolved["grids"] = _plain(asdict(grids))
    sim = SimConfig(**{**raw.get("sim", {}), "seed": seed})
    resolved["sim"] = {k: v for k, v in asdict(sim).items() if k != "seed"}
    resolved["method"] = Method(resolved["method"]).value
    resolved["methods"] = [Method(m).value for m in resolved["methods"]]
    return {k: resolved[k] for k in _USES[command]}


def _train_dict(cfg: TrainConfig) -> dict:
    d = asdict(cfg)
    del d["seed"]
    d["mode"] = cfg.mode.value
    d["loss"] = cfg.loss.value if cfg.loss is not None else None
    return d


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _train_cfg(resolved: dict) -> TrainConfig:
    return TrainConfig(**resolved["train"], seed=resolved["seed"])


def _grids(resolved: dict) -> Grids:
    return Grids(**resolved["grids"])


# -- inputs ------------------------------------------------------------------

def _load_data(resolved: dict):
    d = resolved["data"]
    if d["path"] is None:
        raise ConfigError("this command needs a dataset (--data or data.path)")
    data, header_names = load_table(d["path"], d["delimiter"], d["target_column"], d["task"], d["header"])
    names = load_names(d["names"], data.n_inputs) if d["names"] else header_names
    return data, names


def _load_mask(spec, n_inputs: int) -> np.ndarray:
    if spec is None:
        raise ConfigError("validate needs a feature mask (--mask or mask)")
    if isinstance(spec, str):
        doc = read_json(spec)
        spec = doc.get("selected", doc.get("result", {}).get("selected"))
        if spec is None:
            raise ConfigError("mask file has no 'selected' entry")
    mask = np.asarray(spec)
    if mask.dtype != bool:
        # a list of feature indices
        idx = mask.astype(int)
        mask = np.zeros(n_inputs, dtype=bool)
        mask[idx] = True
    if mask.shape != (n_inputs,):
        raise ConfigError(f"mask has {mask.shape[0]} entries for {n_inputs} features")
    return mask


def _feature_rows(names, *columns):
    n = len(columns[0])
    names = names or [""] * n
    return [(k, names[k], *(c[k] for c in columns)) for k in range(n)]


# -- commands ----------------------------------------------------------------

def cmd_simulate(resolved: dict, out: Path) -> int:
    sim = SimConfig(**resolved["sim"], seed=resolved["seed"])
    report = run_experiment(sim, resolved["methods"], _grids(resolved), _train_cfg(resolved), resolved["jobs"])
    report.config = resolved
    doc = report.to_dict()
    failed = [r for r in report.records if not r.ok]
    for rec in failed:
        logger.error("sigma2=%s method=%s replication=%d failed: %s",
                     rec.sigma2, rec.method, rec.replication, rec.error)
    if not failed:
        doc["fdr"] = [list(row) for row in fdr_table(report)]
        doc["tpr"] = [list(row) for row in tpr_table(report)]
        _write_rate_tables(out, doc["fdr"], doc["tpr"])
    write_json(out / "simulate.json", doc)
    return EXIT_NUMERIC if failed else EXIT_OK


def _write_rate_tables(out: Path, fdr, tpr) -> None:
    write_csv(out / "fdr.csv", ["sigma2", "method", "feature", "fdr"], fdr)
    write_csv(out / "tpr.csv", ["sigma2", "method", "feature", "tpr"], tpr)


def cmd_fit(resolved: dict, out: Path) -> int:
    data, names = _load_data(resolved)
    res = run_pipeline(data, resolved["method"], _grids(resolved), _train_cfg(resolved), resolved["jobs"])
    write_json(out / "fit.json", {"config": resolved, "feature_names": names, "result": res.to_dict()})
    write_csv(out / "selection.csv", ["feature", "name", "norm", "selected"],
              _feature_rows(names, res.norms.tolist(), [int(s) for s in res.selected]))
    return EXIT_OK


def cmd_cv(resolved: dict, out: Path) -> int:
    data, _ = _load_data(resolved)
    res = run_pipeline(data, resolved["method"], _grids(resolved), _train_cfg(resolved), resolved["jobs"])
    table = {k: [list(row) for row in v] for k, v in res.cv_table.items()}
    write_json(out / "cv.json", {
        "config": resolved,
        "chosen_lambda": res.chosen_lambda,
        "chosen_zeta": res.chosen_zeta,
        "cv_table": table,
    })
    rows = [(stage, value, loss) for stage, entries in table.items() for value, loss in entries]
    write_csv(out / "cv.csv", ["parameter", "value", "validation_loss"], rows)
    return EXIT_OK


def cmd_select(resolved: dict, out: Path) -> int:
    if resolved["input"] is None:
        raise ConfigError("select needs a saved fit (--input)")
    doc = read_json(resolved["input"])
    fitted = doc.get("result", doc).get("fitted")
    if fitted is None:
        raise ConfigError("input file holds no fitted network")
    params = NetworkParams.from_dict(fitted)
    cutoff = resolved["grids"]["cutoff"]
    selected = select_features(params, cutoff)
    norms = np.linalg.norm(params.first_layer, axis=0)
    names = doc.get("feature_names")
    if resolved["data"]["names"]:
        names = load_names(resolved["data"]["names"], params.n_inputs)
    write_json(out / "selection.json", {
        "config": resolved,
        "cutoff": cutoff,
        "feature_names": names,
        "norms": norms.tolist(),
        "selected": selected.tolist(),
    })
    write_csv(out / "selection.csv", ["feature", "name", "norm", "selected"],
              _feature_rows(names, norms.tolist(), [int(s) for s in selected]))
    return EXIT_OK


def cmd_stability(resolved: dict, out: Path) -> int:
    data, names = _load_data(resolved)
    freq = stability_run(data, resolved["method"], _grids(resolved), _train_cfg(resolved),
                         resolved["repeats"], resolved["jobs"])
    write_json(out / "stability.json", {"config": resolved, "feature_names": names, "frequency": freq.tolist()})
    write_csv(out / "stability.csv", ["feature", "name", "frequency"], _feature_rows(names, freq.tolist()))
    return EXIT_OK


def cmd_validate(resolved: dict, out: Path) -> int:
    data, names = _load_data(resolved)
    mask = _load_mask(resolved["mask"], data.n_inputs)
    full, sel = validation_study(data, mask, _train_cfg(resolved), resolved["repeats"], resolved["jobs"])
    write_json(out / "validate.json", {
        "config": resolved,
        "feature_names": names,
        "selected": mask.tolist(),
        "accuracy_full": full,
        "accuracy_selected": sel,
    })
    return EXIT_OK


def cmd_report(resolved: dict, out: Path) -> int:
    if resolved["input"] is None:
        raise ConfigError("report needs a simulate result (--input)")
    doc = read_json(resolved["input"])
    report = ExperimentReport.from_dict(doc)
    fdr = [list(row) for row in fdr_table(report)]
    tpr = [list(row) for row in tpr_table(report)]
    _write_rate_tables(out, fdr, tpr)
    write_json(out / "report.json", {"config": resolved, "source_config": report.config, "fdr": fdr, "tpr": tpr})
    return EXIT_OK


_HANDLERS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "cv": cmd_cv,
    "select": cmd_select,
    "stability": cmd_stability,
    "validate": cmd_validate,
    "report": cmd_report,
}


# -- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("--delimiter")
    common.add_argument("--cutoff", type=float)
    common.add_argument("--gamma", type=float)
    common.add_argument("--epochs", type=int)
    common.add_argument("--mode", choices=[m.value for m in Mode])

    data = _Parser(add_help=False)
    data.add_argument("--data", help="delimiter-separated dataset")
    data.add_argument("--task", choices=[t.value for t in Task])
    data.add_argument("--target-column", type=int)
    data.add_argument("--names", help="file with one feature name per line")

    method = _Parser(add_help=False)
    method.add_argument("--method", choices=[m.value for m in Method])

    repeats = _Parser(add_help=False)
    repeats.add_argument("--repeats", type=int)

    parser = _Parser(prog="aglnet", description="Adaptive group lasso feature selection for tanh networks.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="replicated selection study on synthetic data")
    sub.add_parser("fit", parents=[common, data, method], help="cross-validated fit and selection")
    sub.add_parser("cv", parents=[common, data, method], help="cross-validation tables")
    p = sub.add_parser("select", parents=[common, data], help="apply the cutoff to a saved fit")
    p.add_argument("--input", help="fit.json from the fit command")
    sub.add_parser("stability", parents=[common, data, method, repeats], help="selection frequencies")
    p = sub.add_parser("validate", parents=[common, data, repeats], help="accuracy of full vs selected model")
    p.add_argument("--mask", help="JSON file with a 'selected' list")
    p = sub.add_parser("report", parents=[common], help="re-render tables from simulate.json")
    p.add_argument("--input", help="simulate.json")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        raw = read_json(args.config) if args.config else {}
        raw = _merge(check_config(raw), _overrides(args))
        resolved = resolve_config(raw, args.command)
        print(json.dumps(resolved, indent=2, sort_keys=True))
        args.out.mkdir(parents=True, exist_ok=True)
        return _HANDLERS[args.command](resolved, args.out)
    except ArithmeticError as exc:
        print(f"aglnet: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError, KeyError, OSError) as exc:
        print(f"aglnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
