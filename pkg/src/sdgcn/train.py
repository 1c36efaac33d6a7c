"""Training loop, evaluation, checkpoints and history files."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .graph import EdgeSplit, SignedDigraph, sample_training_batch, split_edges
from .metrics import EvalReport, UndefinedMetricError, auc, evaluate
from .model import (SdGcnModel, build_operator, forward, init_features, init_model,
                    loss, loss_and_grad, predict_link)
from .optim import Adam
from .spectral import PhaseParams

CHECKPOINT_FORMAT = "sdgcn-checkpoint"
CHECKPOINT_VERSION = 1
HISTORY_HEADER = ["epoch", "train_loss", "val_loss", "val_auc"]


class TrainingDivergence(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"loss became non-finite at epoch {epoch}")
        self.epoch = epoch


@dataclass
class TrainConfig:
    q: float = 0.1 * math.pi
    layers: int = 2
    hidden: int = 64
    dim: int = 64
    lr: float = 1e-3
    weight_decay: float = 1e-5
    ratio: float = 3.0
    epochs: int = 1000
    patience: int = 10
    seed: int = 0
    features: str = "degree"
    feature_dim: int = 64
    real_weights: bool = True
    epsilon: float = 1e-12

    def __post_init__(self):
        PhaseParams(self.q, self.epsilon)
        for name in ("layers", "hidden", "dim", "epochs", "patience", "feature_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.lr <= 0 or self.weight_decay < 0 or self.ratio <= 0:
            raise ValueError("lr and ratio must be positive, weight_decay non-negative")
        if self.features not in ("gaussian", "degree"):
            raise ValueError(f"unknown feature spec {self.features!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class TrainResult:
    model: SdGcnModel
    history: list
    best_epoch: int
    split: EdgeSplit
    operator: object
    features: np.ndarray
    config: TrainConfig

    def predict(self, edges: np.ndarray) -> np.ndarray:
        z, _ = forward(self.model, self.operator, self.features)
        return predict_link(self.model, z, edges[:, 0], edges[:, 1])


def _labels(edges: np.ndarray) -> np.ndarray:
    return (edges[:, 2] > 0).astype(np.int64)


def prepare(g: SignedDigraph, config: TrainConfig, split: EdgeSplit | None = None):
    """Split, propagation operator and input features, all built from training edges only."""
    split = split if split is not None else split_edges(g, config.seed)
    train_graph = g.subgraph(split.train)
    operator = build_operator(train_graph, PhaseParams(config.q, config.epsilon))
    features = init_features(train_graph, config.features, config.seed, config.feature_dim)
    return split, operator, features


def train(g: SignedDigraph, config: TrainConfig, split: EdgeSplit | None = None) -> TrainResult:
    """Full-batch Adam training with early stopping on validation loss.

    Each epoch takes one optimizer step on a freshly sampled batch (all
    negative training edges plus ``ratio`` times as many positives). The
    parameters with the lowest validation loss are kept; training stops once
    the validation loss has risen for more than ``patience`` epochs in a row.
    """
    split, operator, x = prepare(g, config, split)
    model = init_model(x.shape[1], config.layers, config.hidden, config.dim,
                       seed=config.seed, real_weights=config.real_weights)
    frozen = [k for k, v in model.params.items() if np.iscomplexobj(v)] if config.real_weights else []
    opt = Adam(model.params, lr=config.lr, weight_decay=config.weight_decay, frozen_imag=frozen)
    val = split.edges("validation")
    val_labels = _labels(val)
    history = []
    best_loss, best_epoch, best = math.inf, 0, model.copy()
    prev, rises = math.inf, 0
    # overflow shows up as a non-finite loss and is reported as TrainingDivergence
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, config.epochs + 1):
            batch = sample_training_batch(split, config.ratio, config.seed, epoch)
            train_loss, grads = loss_and_grad(model, operator, x, batch.edges)
            if not math.isfinite(train_loss):
                raise TrainingDivergence(epoch)
            opt.step(grads)
            z, _ = forward(model, operator, x)
            probs = predict_link(model, z, val[:, 0], val[:, 1])
            val_loss = loss(probs, val_labels)
            if not math.isfinite(val_loss):
                raise TrainingDivergence(epoch)
            try:
                val_auc = auc(probs[:, 0], val_labels)
            except UndefinedMetricError:
                val_auc = math.nan
            history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss, "val_auc": val_auc})
            if val_loss < best_loss:
                best_loss, best_epoch, best = val_loss, epoch, model.copy()
            rises = rises + 1 if val_loss > prev else 0
            prev = val_loss
            if rises > config.patience:
                break
    return TrainResult(best, history, best_epoch, split, operator, x, config)


def evaluate_split(result: TrainResult, part: str = "test") -> EvalReport:
    edges = result.split.edges(part)
    probs = result.predict(edges)
    return evaluate(probs[:, 0], _labels(edges), seed=result.split.seed)


def history_csv(history: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HISTORY_HEADER)
    for row in history:
        w.writerow([row["epoch"], repr(row["train_loss"]), repr(row["val_loss"]), repr(row["val_auc"])])
    return buf.getvalue()


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def checkpoint_dict(model: SdGcnModel, config: TrainConfig | None = None, best_epoch: int | None = None) -> dict:
    params = {}
    for name, value in model.params.items():
        entry = {"shape": list(value.shape)}
        if np.iscomplexobj(value):
            entry.update(dtype="complex128", re=value.real.ravel().tolist(), im=value.imag.ravel().tolist())
        else:
            entry.update(dtype="float64", data=value.ravel().tolist())
        params[name] = entry
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "hyper": model.hyper(),
        "config": asdict(config) if config is not None else None,
        "best_epoch": best_epoch,
        "params": params,
    }


def save_checkpoint(path, model: SdGcnModel, config: TrainConfig | None = None, best_epoch: int | None = None) -> None:
    write_atomic(path, json.dumps(checkpoint_dict(model, config, best_epoch), sort_keys=True))


def load_checkpoint(path) -> tuple[SdGcnModel, TrainConfig | None, dict]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("format") != CHECKPOINT_FORMAT or data.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: not a version {CHECKPOINT_VERSION} checkpoint")
    params = {}
    for name, entry in data["params"].items():
        shape = tuple(entry["shape"])
        if entry["dtype"] == "complex128":
            value = np.empty(len(entry["re"]), dtype=np.complex128)
            value.real = entry["re"]
            value.imag = entry["im"]
        else:
            value = np.array(entry["data"], dtype=np.float64)
        params[name] = value.reshape(shape)
    hyper = data["hyper"]
    model = SdGcnModel(tuple(hyper["widths"]), hyper["dim"], hyper["real_weights"], params)
    config = TrainConfig.from_dict(data["config"]) if data.get("config") else None
    return model, config, data
