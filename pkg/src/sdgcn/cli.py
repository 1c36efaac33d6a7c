"""Command-line entry point: ``sdgcn {verify,train,eval,sweep-q,sweep-ratio,export-laplacian}``.

Settings come from built-in defaults, then an optional TOML file given with
``--config``, then command-line flags (flags win).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
import tomli

from .graph import DEFAULT_SEEDS, EmptyGraphError, ParseError, StratificationError, load_edge_list, write_id_map
from .metrics import CSV_HEADER, METRICS, aggregate_runs, format_table
from .linalg import csr
from .spectral import (DENSE_CAP, Kind, MagneticLaplacian, PhaseParams, SizeError, export_matrix_market,
                       hermitian_adjacency, magnetic_laplacian, verify_psd)
from .train import (TrainConfig, TrainingDivergence, TrainResult, evaluate_split, history_csv,
                    load_checkpoint, prepare, save_checkpoint, train, write_atomic)

log = logging.getLogger("sdgcn")

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_DIVERGED = 0, 1, 2, 3
DEFAULT_Q_GRID = tuple(round(0.05 * k, 2) for k in range(11))  # multiples of pi
DEFAULT_RATIO_GRID = tuple(float(r) for r in range(1, 10))


class InputError(Exception):
    pass


def parse_q(text) -> float:
    """``0.1pi``, ``0.1π``, ``pi`` or a plain number of radians."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower().replace("π", "pi")
    m = re.fullmatch(r"([0-9.eE+-]*)\*?pi", s)
    try:
        if m:
            coef = m.group(1)
            return (float(coef) if coef else 1.0) * math.pi
        return float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse q value {text!r}") from None


def parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def parse_seeds(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(s) for s in text]
    try:
        return [int(s) for s in str(text).split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML file with default settings")
    p.add_argument("--dataset", help="edge-list file (.gz accepted)")
    p.add_argument("--format", choices=["csv", "tsv"], help="edge-list layout (default: detect per line)")
    p.add_argument("--q", action="append", type=parse_q, help="phase parameter, e.g. 0.1pi (repeatable for sweeps)")
    p.add_argument("--layers", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--weight-decay", type=float)
    p.add_argument("--ratio", action="append", type=float, help="positive sampling ratio (repeatable for sweeps)")
    p.add_argument("--seeds", type=parse_seeds, help="comma-separated seeds")
    p.add_argument("--epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--real-weights", type=parse_bool)
    p.add_argument("--features", choices=["gaussian", "degree"])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sdgcn", description="Spectral convolution for signed directed graphs.")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("verify", help="check PSD and [0, 2] eigenvalue bounds of the magnetic Laplacians")
    _add_common(p)
    p.add_argument("--sample-nodes", type=int, help="verify on an induced subgraph of this many random nodes")
    p.add_argument("--cap", type=int, default=DENSE_CAP)
    p.add_argument("--inject-corruption", action="store_true", help=argparse.SUPPRESS)
    p = sub.add_parser("train", help="train and evaluate one model per seed")
    _add_common(p)
    p = sub.add_parser("eval", help="re-evaluate a saved checkpoint on its test split")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p = sub.add_parser("sweep-q", help="train across a grid of q values")
    _add_common(p)
    p = sub.add_parser("sweep-ratio", help="train across positive sampling ratios")
    _add_common(p)
    p = sub.add_parser("export-laplacian", help="write a Laplacian in MatrixMarket format")
    _add_common(p)
    p.add_argument("--kind", choices=[k.value for k in Kind], default=Kind.NORMALIZED.value)
    return ap


_KEYS = ("dataset", "format", "q", "layers", "dim", "lr", "weight_decay", "ratio", "seeds",
         "epochs", "patience", "out", "real_weights", "features")


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the TOML config file and explicit flags."""
    settings: dict = {}
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                raw = tomli.load(fh)
        except (OSError, tomli.TOMLDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        for key, value in raw.items():
            key = key.replace("-", "_")
            if key not in _KEYS:
                raise InputError(f"unknown config key {key!r}")
            settings[key] = value
    if "q" in settings:
        qs = settings["q"] if isinstance(settings["q"], list) else [settings["q"]]
        settings["q"] = [parse_q(v) for v in qs]
    if "ratio" in settings:
        rs = settings["ratio"] if isinstance(settings["ratio"], list) else [settings["ratio"]]
        settings["ratio"] = [float(v) for v in rs]
    if "seeds" in settings:
        settings["seeds"] = parse_seeds(settings["seeds"])
    if "real_weights" in settings:
        settings["real_weights"] = parse_bool(settings["real_weights"])
    for key in _KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    settings.setdefault("seeds", list(DEFAULT_SEEDS))
    settings.setdefault("out", "runs")
    if not settings["seeds"]:
        raise InputError("seed list is empty")
    for q in settings.get("q", []):
        if not 0 <= q <= math.pi / 2 + 1e-12:
            raise InputError(f"q={q} outside [0, pi/2]")
    for r in settings.get("ratio", []):
        if r <= 0:
            raise InputError(f"ratio {r} must be positive")
    return settings


def _single(settings: dict, key: str, default):
    values = settings.get(key)
    if not values:
        return default
    if len(values) > 1:
        raise InputError(f"--{key} given {len(values)} times; use a sweep command for grids")
    return values[0]


def train_config(settings: dict, seed: int = 0) -> TrainConfig:
    base = TrainConfig()
    kw = dict(q=_single(settings, "q", base.q), ratio=_single(settings, "ratio", base.ratio), seed=seed)
    for key in ("layers", "dim", "lr", "weight_decay", "epochs", "patience", "real_weights", "features"):
        if key in settings:
            kw[key] = settings[key]
    if "dim" in kw:
        kw["hidden"] = kw["dim"]
    try:
        return replace(base, **kw)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def load_dataset(settings: dict):
    path = settings.get("dataset")
    if not path:
        raise InputError("--dataset is required")
    fmt = settings.get("format") or "auto"
    try:
        return load_edge_list(path, fmt)
    except FileNotFoundError as exc:
        raise InputError(f"dataset not found: {path}") from exc
    except (ParseError, EmptyGraphError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _out_dir(settings: dict) -> Path:
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _setup_log(out: Path) -> None:
    handler = logging.FileHandler(out / "run.log")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    root = logging.getLogger()
    root.addHandler(handler)
    root.setLevel(logging.INFO)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("SDGRAPH_THREADS", "1")))
    except ValueError:
        return 1


def _run_one(g, config: TrainConfig):
    try:
        return train(g, config)
    except TrainingDivergence as exc:
        return exc


def run_configs(g, configs: list[TrainConfig]) -> list:
    """Train every config; results (or ``TrainingDivergence``) in input order."""
    workers = min(_workers(), len(configs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_one, [g] * len(configs), configs))
    return [_run_one(g, c) for c in configs]


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_verify(settings: dict, sample_nodes: int | None = None, cap: int = DENSE_CAP,
               corrupt: bool = False) -> int:
    g = load_dataset(settings)
    out = _out_dir(settings)
    if sample_nodes:
        rng = np.random.default_rng(settings["seeds"][0])
        nodes = np.sort(rng.choice(g.num_nodes, size=min(sample_nodes, g.num_nodes), replace=False))
        g = g.induced(nodes)
    qs = settings.get("q") or [0.1 * math.pi]
    rows = []
    for q in qs:
        h = hermitian_adjacency(g, PhaseParams(q))
        for kind in (Kind.UNNORMALIZED, Kind.NORMALIZED):
            lap = magnetic_laplacian(h, kind)
            if corrupt:
                lap = _corrupt(lap)
            try:
                report = verify_psd(lap, cap=cap)
            except SizeError as exc:
                raise InputError(str(exc)) from exc
            rows.append(report.to_dict())
            log.info("verify q=%.6f kind=%s pass=%s", q, kind.value, report.passed)
    write_atomic(out / "verify_report.json", json.dumps(rows, indent=1, sort_keys=True) + "\n")
    for row in rows:
        print(f"q={row['q'] / math.pi:.3f}pi kind={row['kind']:<12} min={row['min_eig']!r} "
              f"max={row['max_eig']!r} dev={row['hermitian_dev']:.2e} {'PASS' if row['pass'] else 'FAIL'}")
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_FAIL


def _corrupt(lap: MagneticLaplacian) -> MagneticLaplacian:
    # breaks Hermitian symmetry of one off-diagonal entry
    m = lap.matrix.tolil(copy=True)
    n = m.shape[0]
    if n >= 2:
        m[0, 1] = m[0, 1] + 0.5j
    else:
        m[0, 0] = m[0, 0] + 0.5j
    return MagneticLaplacian(csr(m), lap.kind, lap.params)


def _dataset_name(settings: dict) -> str:
    name = Path(settings["dataset"]).name
    for suffix in (".gz", ".csv", ".tsv", ".txt"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    return name


def cmd_train(settings: dict) -> int:
    g = load_dataset(settings)
    out = _out_dir(settings)
    _setup_log(out)
    write_id_map(g, out / "node_id_map.tsv")
    name = _dataset_name(settings)
    seeds = settings["seeds"]
    try:
        configs = [train_config(settings, s) for s in seeds]
        results = run_configs(g, configs)
    except StratificationError as exc:
        raise InputError(str(exc)) from exc
    reports, rows, diverged = [], [], False
    for seed, res in zip(seeds, results):
        if isinstance(res, TrainingDivergence):
            log.error("seed %d diverged at epoch %d", seed, res.epoch)
            print(f"seed {seed}: diverged at epoch {res.epoch}", file=sys.stderr)
            diverged = True
            continue
        report = evaluate_split(res)
        reports.append(report)
        rows.append(report.csv_row(name))
        save_checkpoint(out / f"checkpoint_seed{seed}.json", res.model, res.config, res.best_epoch)
        write_atomic(out / f"history_seed{seed}.csv", history_csv(res.history))
        write_atomic(out / f"report_seed{seed}.json", report.to_json() + "\n")
        res.split.write_manifest(out / f"split_seed{seed}.json")
        log.info("seed %d: best epoch %d, test auc %.4f", seed, res.best_epoch, report.auc)
        print(f"seed {seed}: best_epoch={res.best_epoch} auc={report.auc:.4f} macro_f1={report.macro_f1:.4f} "
              f"micro_f1={report.micro_f1:.4f} binary_f1={report.binary_f1:.4f}")
    write_atomic(out / "reports.csv", _csv_text(CSV_HEADER, rows))
    if len(reports) >= 2:
        agg = aggregate_runs(reports)
        write_atomic(out / "summary.json", json.dumps(agg, indent=1, sort_keys=True) + "\n")
        table = format_table(name, agg)
        write_atomic(out / "summary.txt", table)
        print(table, end="")
    return EXIT_DIVERGED if diverged else EXIT_OK


def cmd_eval(settings: dict, checkpoint: str) -> int:
    g = load_dataset(settings)
    out = _out_dir(settings)
    try:
        model, config, _ = load_checkpoint(checkpoint)
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"cannot load checkpoint {checkpoint}: {exc}") from exc
    if config is None:
        raise InputError("checkpoint carries no training config")
    split, operator, x = prepare(g, config)
    result = TrainResult(model, [], 0, split, operator, x, config)
    report = evaluate_split(result)
    write_atomic(out / f"eval_seed{config.seed}.json", report.to_json() + "\n")
    print(report.to_json())
    return EXIT_OK


def _sweep(settings: dict, key: str, grid: list[float], filename: str) -> int:
    g = load_dataset(settings)
    out = _out_dir(settings)
    _setup_log(out)
    seeds = settings["seeds"]
    configs, labels = [], []
    for value in grid:
        local = dict(settings, **{key: [value]})
        for s in seeds:
            configs.append(train_config(local, s))
            labels.append((value, s))
    try:
        results = run_configs(g, configs)
    except StratificationError as exc:
        raise InputError(str(exc)) from exc
    diverged = False
    by_value: dict = {value: [] for value in grid}
    for (value, seed), res in zip(labels, results):
        if isinstance(res, TrainingDivergence):
            log.error("%s=%r seed %d diverged at epoch %d", key, value, seed, res.epoch)
            diverged = True
            continue
        by_value[value].append((seed, evaluate_split(res)))
    # per-seed rows of each grid value, followed by its mean and std rows
    rows = []
    for value, runs in by_value.items():
        for seed, report in runs:
            rows.append(_sweep_key(key, value) + [seed] + [repr(getattr(report, m)) for m in METRICS])
        if len(runs) >= 2:
            agg = aggregate_runs([r for _, r in runs])
            for stat in ("mean", "std"):
                rows.append(_sweep_key(key, value) + [stat] + [repr(agg[m][stat]) for m in METRICS])
    header = (["q_over_pi", "q"] if key == "q" else ["ratio"]) + ["seed", *METRICS]
    write_atomic(out / filename, _csv_text(header, rows))
    print(f"wrote {out / filename} ({len(rows)} rows)")
    return EXIT_DIVERGED if diverged else EXIT_OK


def _sweep_key(key: str, value: float) -> list:
    if key == "q":
        return [repr(round(value / math.pi, 12)), repr(value)]
    return [repr(value)]


def cmd_sweep_q(settings: dict) -> int:
    grid = settings.get("q") or [k * math.pi for k in DEFAULT_Q_GRID]
    return _sweep(settings, "q", grid, "sweep_q.csv")


def cmd_sweep_ratio(settings: dict) -> int:
    grid = settings.get("ratio") or list(DEFAULT_RATIO_GRID)
    return _sweep(settings, "ratio", grid, "sweep_ratio.csv")


def cmd_export_laplacian(settings: dict, kind: str) -> int:
    g = load_dataset(settings)
    out = _out_dir(settings)
    q = _single(settings, "q", 0.1 * math.pi)
    lap = magnetic_laplacian(hermitian_adjacency(g, PhaseParams(q)), kind)
    path = out / f"laplacian_{kind}_q{q / math.pi:.3f}pi.mtx"
    export_matrix_market(lap.matrix, path, comment=f"{kind} magnetic Laplacian, q={q!r}")
    print(path)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = resolve(args)
        if args.command == "verify":
            return cmd_verify(settings, args.sample_nodes, args.cap, args.inject_corruption)
        if args.command == "train":
            return cmd_train(settings)
        if args.command == "eval":
            return cmd_eval(settings, args.checkpoint)
        if args.command == "sweep-q":
            return cmd_sweep_q(settings)
        if args.command == "sweep-ratio":
            return cmd_sweep_ratio(settings)
        return cmd_export_laplacian(settings, args.kind)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
