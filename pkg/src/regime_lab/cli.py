"""regime-lab command line.

    regime-lab <simulate|cluster|validate|score|sweep> --config <json> [--out <dir>] [--seed <u64>]

Exit status: 0 on success, 1 on a numerical failure, 2 on a config or I/O
error. Every JSON output carries the resolved config (seed included) under
``"config"``; CSV outputs start with a ``# config: {...}`` comment line.
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
import time

import numpy as np

from . import experiment as ex
from . import synthetic as syn
from .clustering import Clustering
from .errors import ConfigError, RegimeLabError
from .measures import WindowConfig, window_matrix, write_price_csv

log = logging.getLogger("regime_lab")

COMMANDS = ("simulate", "cluster", "validate", "score", "sweep")


# ----------------------------------------------------------------- output


def _plain(obj):
    """JSON-ready copy: numpy scalars/arrays unwrapped, NaN/inf as null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def dumps(obj) -> str:
    # repr-based float output is the shortest string that round-trips
    return json.dumps(_plain(obj), indent=1, allow_nan=False) + "\n"


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else "nan"
    return str(v)


def csv_text(header, rows, config) -> str:
    lines = ["# config: " + json.dumps(_plain(config), separators=(",", ":"), allow_nan=False), ",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_outputs(out_dir: str, files: dict) -> None:
    """Write all files at once, after every computation has succeeded."""
    try:
        os.makedirs(out_dir, exist_ok=True)
        for name, text in files.items():
            with open(os.path.join(out_dir, name), "w", newline="") as fh:
                fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write outputs to {out_dir}: {exc}") from exc


def load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


# --------------------------------------------------------------- commands


def cmd_simulate(config, seed, out):
    cfg = ex.resolve_simulate(config, seed)
    path = ex.simulate(cfg, cfg["seed"])
    buf = io.StringIO()
    write_price_csv(buf, path.prices)
    meta = path.metadata()
    if path.jump_counts is not None:
        meta["total_jumps"] = int(path.jump_counts.sum())
    files = {
        "path.csv": buf.getvalue(),
        "path.json": dumps({"config": cfg, **meta}),
    }
    write_outputs(out, files)
    return files


def cmd_cluster(config, seed, out):
    cfg = ex.resolve_cluster(config, seed)
    stream, path, windows, atoms, c = ex.run_cluster(cfg)
    col = ex.colouring(windows, c, len(stream) - 1)
    report = {
        "config": cfg,
        "n_returns": len(stream) - 1,
        "windows": windows,
        "centroid_mean_variance": c.centroid_mean_variance(),
        "clustering": c.to_dict(),
    }
    if path is not None:
        report["schedule"] = path.schedule.to_dict()
    files = {
        "clustering.json": dumps(report),
        "scatter.csv": csv_text(["start", "stop", "sd", "mean", "label"], ex.scatter_rows(windows, atoms, c), cfg),
        "colouring.csv": csv_text(
            ["return_index"] + [f"frac_{l}" for l in range(c.k)],
            [[i, *row] for i, row in enumerate(col)],
            cfg,
        ),
    }
    write_outputs(out, files)
    return files


def _reload(cluster_path):
    """Clustering plus the window atoms it was fitted on, rebuilt from the
    config embedded in ``clustering.json``."""
    doc = load_json(cluster_path)
    try:
        ccfg = ex.resolve_cluster(doc["config"])
        c = Clustering.from_dict(doc["clustering"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{cluster_path} is not a clustering output") from exc
    stream, path = ex.load_input(ccfg["input"], ccfg["seed"])
    returns = np.diff(np.log(stream.prices))
    windows, atoms = window_matrix(returns, WindowConfig(ccfg["window"]["h1"], ccfg["window"]["h2"]))
    if len(atoms) != len(c.assignments):
        raise ConfigError(f"{cluster_path}: input no longer matches the clustering")
    return doc, ccfg, c, windows, atoms, returns, path


def cmd_validate(config, seed, out):
    ex._no_unknown(config, {"clustering", "validation", "seed"})
    if "clustering" not in config:
        raise ConfigError("validate needs 'clustering': path to clustering.json")
    cfg = {
        "clustering": config["clustering"],
        "validation": ex.resolve_validation(config.get("validation")),
        "seed": ex.resolve_seed(config, seed),
    }
    _, ccfg, c, windows, atoms, _, _ = _reload(cfg["clustering"])
    res = ex.validate(c, atoms, cfg["validation"], cfg["seed"])
    hists = res.pop("histograms")
    files = {"validation.json": dumps({"config": cfg, "clustering_config": ccfg, **res})}
    for name, vals in hists.items():
        files[f"hist_{name}.csv"] = csv_text(["mmd2"], [[v] for v in vals], cfg)
    write_outputs(out, files)
    return files


def cmd_score(config, seed, out):
    ex._no_unknown(config, {"clustering", "schedule", "seed"})
    if "clustering" not in config:
        raise ConfigError("score needs 'clustering': path to clustering.json")
    cfg = {"clustering": config["clustering"], "schedule": config.get("schedule"), "seed": ex.resolve_seed(config, seed)}
    doc, ccfg, c, windows, atoms, returns, path = _reload(cfg["clustering"])
    if cfg["schedule"] is not None:
        sdoc = load_json(cfg["schedule"])
        try:
            schedule = syn.RegimeSchedule.from_dict(sdoc.get("schedule", sdoc))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{cfg['schedule']} holds no schedule") from exc
    elif path is not None:
        schedule = path.schedule
    else:
        raise ConfigError("score needs 'schedule' when the clustering input is a CSV")
    if schedule.total_steps != returns.size:
        raise ConfigError(f"schedule covers {schedule.total_steps} steps, stream has {returns.size} returns")
    scores = ex.score(c, windows, returns.size, schedule)
    files = {"accuracy.json": dumps({"config": cfg, "clustering_config": ccfg, "algorithm": c.algorithm, **scores})}
    write_outputs(out, files)
    return files


def cmd_sweep(config, seed, out):
    cfg = ex.resolve_sweep(config, seed)
    rows, raw = ex.run_sweep(cfg)
    header = ["h1", "h2", "algorithm", "TA", "TA_ci", "RONS", "RONS_ci", "ROFS", "ROFS_ci"]
    files = {
        "sweep.csv": csv_text(header, rows, cfg),
        "sweep.json": dumps({"config": cfg, "summary": [dict(zip(header, r)) for r in rows], "runs": raw}),
    }
    write_outputs(out, files)
    return files


HANDLERS = {
    "simulate": cmd_simulate,
    "cluster": cmd_cluster,
    "validate": cmd_validate,
    "score": cmd_score,
    "sweep": cmd_sweep,
}


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="regime-lab", description="Market regime clustering experiments.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", default="out", help="output directory (default: ./out)")
    parser.add_argument("--seed", type=_seed, default=None, help="override the config seed")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    t0 = time.perf_counter()
    try:
        config = load_json(args.config)
        if not isinstance(config, dict):
            raise ConfigError("config must be a JSON object")
        HANDLERS[args.command](config, args.seed, args.out)
    except ConfigError as exc:
        print(f"regime-lab: config error: {exc}", file=sys.stderr)
        return 2
    except (RegimeLabError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"regime-lab: numerical failure: {exc}", file=sys.stderr)
        return 1
    log.info("%s finished in %.2fs", args.command, time.perf_counter() - t0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
