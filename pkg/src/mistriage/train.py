"""Optimization loop: AdamW with decoupled weight decay, linear warmup
then linear decay, gradient clipping, early stopping on validation
macro F1. Single-threaded and fully determined by the seed."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .corpus import CleanCorpus
from .encoding import TokenSequence, encode_pair, encode_single
from .model import (
    ModelConfig,
    ModelParams,
    backward,
    decay_exempt,
    forward,
    init_params,
    loss,
    predict,
)
from .stats import confusion, class_metrics
from .tokenizer import Vocab


@dataclass(frozen=True)
class TrainConfig:
    base_lr: float = 3e-4  # desk-scale default; 2e-5 suits pretrained-size models
    warmup_frac: float = 0.10
    weight_decay: float = 0.01
    batch_size: int = 16
    max_epochs: int = 20
    patience: int = 3
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.warmup_frac < 1.0:
            raise ValueError("warmup_frac must be in [0, 1)")
        if self.base_lr <= 0 or self.batch_size <= 0 or self.max_epochs <= 0:
            raise ValueError("rates and counts must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_accuracy: float
    val_macro_f1: float
    lr: float

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "val_accuracy": self.val_accuracy,
            "val_macro_f1": self.val_macro_f1,
            "lr": self.lr,
        }


@dataclass
class TrainHistory:
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = -1
    stopped_early: bool = False

    def to_dict(self) -> dict:
        return {
            "epochs": [e.to_dict() for e in self.epochs],
            "best_epoch": self.best_epoch,
            "stopped_early": self.stopped_early,
        }


class TrainingDivergedError(RuntimeError):
    """Loss or a gradient went non-finite; carries the last good state."""

    def __init__(self, message: str, params: ModelParams | None, history: TrainHistory):
        super().__init__(message)
        self.params = params
        self.history = history


def derive_seed(seed: int, label: str) -> int:
    """Fan one top-level seed out into labeled independent streams."""
    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def lr_at(step: int, total_steps: int, cfg: TrainConfig) -> float:
    """Linear 0 -> base_lr over the warmup steps, then linear back to 0."""
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside 0..{total_steps}")
    warmup = math.ceil(cfg.warmup_frac * total_steps)
    if step <= warmup:
        return cfg.base_lr if warmup == 0 else cfg.base_lr * step / warmup
    return cfg.base_lr * (1.0 - (step - warmup) / (total_steps - warmup))


@dataclass
class AdamState:
    step: int
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]

    @classmethod
    def fresh(cls, params: ModelParams) -> "AdamState":
        return cls(
            step=0,
            m={k: np.zeros_like(t) for k, t in params.tensors.items()},
            v={k: np.zeros_like(t) for k, t in params.tensors.items()},
        )


def adamw_step(
    params: ModelParams,
    grads: ModelParams,
    state: AdamState,
    lr: float,
    cfg: TrainConfig,
) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update with decoupled weight decay.

    Decay applies to the pre-update parameter value and skips biases
    and layer-norm parameters. Updates in place and returns the pair.
    """
    state.step += 1
    bc1 = 1.0 - cfg.beta1**state.step
    bc2 = 1.0 - cfg.beta2**state.step
    for name, p in params.tensors.items():
        g = grads[name]
        if not np.isfinite(g).all():
            raise TrainingDivergedError(f"non-finite gradient in {name}", None, TrainHistory())
        m = state.m[name]
        v = state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * g * g
        update = lr * (m / bc1) / (np.sqrt(v / bc2) + cfg.epsilon)
        if cfg.weight_decay > 0.0 and not decay_exempt(name):
            update = update + lr * cfg.weight_decay * p
        p -= update
    return params, state


def clip_gradients(grads: ModelParams, max_norm: float) -> float:
    total = math.sqrt(sum(float((g * g).sum()) for g in grads.tensors.values()))
    if max_norm > 0 and total > max_norm:
        factor = max_norm / total
        for g in grads.tensors.values():
            g *= factor
    return total


def encode_corpus(
    corpus: CleanCorpus, vocab: Vocab, max_len: int, arm: str
) -> list[TokenSequence]:
    if arm == "pair":
        enc = encode_pair
    elif arm == "single":
        enc = encode_single
    else:
        raise ValueError(f"encoding arm must be 'pair' or 'single', got {arm!r}")
    return [
        enc(rec.title, rec.description, vocab, max_len, label=rec.info_type)
        for rec in corpus
    ]


def _evaluate_split(
    seqs: list[TokenSequence], params: ModelParams, config: ModelConfig, batch_size: int
) -> tuple[float, float]:
    preds: list[int] = []
    for start in range(0, len(seqs), batch_size):
        chunk = seqs[start : start + batch_size]
        preds.extend(cls for cls, _ in predict(chunk, params, config))
    pairs = [(int(s.label), p) for s, p in zip(seqs, preds)]
    metrics = class_metrics(confusion(pairs))
    return metrics.accuracy, metrics.macro_f1


def train(
    splits: tuple[CleanCorpus, CleanCorpus, CleanCorpus],
    vocab: Vocab,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    encoding: str = "pair",
) -> tuple[ModelParams, TrainHistory]:
    """Full training run; returns the parameters from the best epoch.

    Best epoch maximizes validation macro F1, earliest winning ties.
    Stops after `patience` epochs without improvement. Runs under a
    single BLAS thread: the loop is specified single-threaded
    deterministic, and the matrices are too small to parallelize anyway.
    """
    with threadpool_limits(limits=1):
        return _train_loop(splits, vocab, model_cfg, train_cfg, encoding)


def _train_loop(
    splits: tuple[CleanCorpus, CleanCorpus, CleanCorpus],
    vocab: Vocab,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    encoding: str,
) -> tuple[ModelParams, TrainHistory]:
    train_corpus, val_corpus, _ = splits
    train_seqs = encode_corpus(train_corpus, vocab, model_cfg.max_positions, encoding)
    val_seqs = encode_corpus(val_corpus, vocab, model_cfg.max_positions, encoding)

    params = init_model(model_cfg, train_cfg.seed)
    state = AdamState.fresh(params)
    dropout_rng = np.random.default_rng(derive_seed(train_cfg.seed, "dropout"))

    steps_per_epoch = math.ceil(len(train_seqs) / train_cfg.batch_size)
    total_steps = steps_per_epoch * train_cfg.max_epochs
    history = TrainHistory()
    best_params = params.copy()
    best_f1 = -1.0
    global_step = 0
    labels_all = np.array([int(s.label) for s in train_seqs], dtype=np.int64)

    for epoch in range(train_cfg.max_epochs):
        order = np.arange(len(train_seqs))
        shuffle_rng = np.random.default_rng(derive_seed(train_cfg.seed, f"shuffle:{epoch}"))
        shuffle_rng.shuffle(order)
        losses: list[float] = []
        lr = 0.0
        for start in range(0, len(order), train_cfg.batch_size):
            idx = order[start : start + train_cfg.batch_size]
            batch = [train_seqs[i] for i in idx]
            labels = labels_all[idx]
            global_step += 1
            lr = lr_at(global_step, total_steps, train_cfg)
            try:
                logits, cache = forward(
                    batch, params, model_cfg, mode="train", dropout_rng=dropout_rng
                )
            except FloatingPointError as exc:
                raise TrainingDivergedError(str(exc), best_params, history) from exc
            batch_loss = loss(logits, labels)
            if not math.isfinite(batch_loss):
                raise TrainingDivergedError(
                    f"non-finite loss at step {global_step}", best_params, history
                )
            losses.append(batch_loss)
            grads = backward(labels, params, model_cfg, logits, cache)
            clip_gradients(grads, train_cfg.clip_norm)
            try:
                params, state = adamw_step(params, grads, state, lr, train_cfg)
            except TrainingDivergedError as exc:
                raise TrainingDivergedError(str(exc), best_params, history) from exc

        val_acc, val_f1 = _evaluate_split(val_seqs, params, model_cfg, train_cfg.batch_size)
        history.epochs.append(
            EpochStats(
                epoch=epoch,
                train_loss=float(np.mean(losses)),
                val_accuracy=val_acc,
                val_macro_f1=val_f1,
                lr=lr,
            )
        )
        if val_f1 > best_f1:
            best_f1 = val_f1
            best_params = params.copy()
            history.best_epoch = epoch
        elif epoch - history.best_epoch > train_cfg.patience:
            history.stopped_early = True
            break

    return best_params, history


def init_model(model_cfg: ModelConfig, seed: int) -> ModelParams:
    return init_params(model_cfg, derive_seed(seed, "init"))
