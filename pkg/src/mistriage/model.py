"""Desk-scale transformer encoder classifier with exact analytic gradients.

Token + position + segment embeddings feed a stack of post-norm blocks
(masked multi-head self-attention, GELU feed-forward); a linear head
reads the hidden state at position 0. Everything runs in float64 numpy
so that gradients can be verified against central differences.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.special import erf

from .encoding import TokenSequence

LN_EPS = 1e-12
_MASK_BIAS = -1e30
_SQRT_2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class NonFiniteError(FloatingPointError):
    def __init__(self, where: str):
        super().__init__(f"non-finite values in {where}")
        self.where = where


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    max_positions: int
    layers: int = 2
    heads: int = 4
    hidden: int = 64
    ff_dim: int = 256
    type_vocab: int = 2
    classes: int = 3
    dropout_rate: float = 0.1

    def __post_init__(self):
        if self.hidden % self.heads != 0:
            raise ValueError(f"hidden {self.hidden} not divisible by heads {self.heads}")
        for name in ("vocab_size", "max_positions", "layers", "heads", "hidden", "ff_dim"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.classes != 3:
            raise ValueError("classifier is three-way")

    @property
    def head_dim(self) -> int:
        return self.hidden // self.heads


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Parameter tensors in their declared (checkpoint) order."""
    d, f = config.hidden, config.ff_dim
    shapes: dict[str, tuple[int, ...]] = {
        "tok_emb": (config.vocab_size, d),
        "pos_emb": (config.max_positions, d),
        "type_emb": (config.type_vocab, d),
    }
    for i in range(config.layers):
        p = f"layer{i}."
        shapes[p + "wq"] = (d, d)
        shapes[p + "wk"] = (d, d)
        shapes[p + "wv"] = (d, d)
        shapes[p + "wo"] = (d, d)
        shapes[p + "ln1_g"] = (d,)
        shapes[p + "ln1_b"] = (d,)
        shapes[p + "w1"] = (d, f)
        shapes[p + "w2"] = (f, d)
        shapes[p + "ln2_g"] = (d,)
        shapes[p + "ln2_b"] = (d,)
    shapes["head_w"] = (d, config.classes)
    shapes["head_b"] = (config.classes,)
    return shapes


def decay_exempt(name: str) -> bool:
    """Layer-norm scales/shifts and biases are never weight-decayed."""
    return name.endswith(("_g", "_b"))


@dataclass
class ModelParams:
    tensors: dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def copy(self) -> "ModelParams":
        return ModelParams({k: v.copy() for k, v in self.tensors.items()})

    def zeros_like(self) -> "ModelParams":
        return ModelParams({k: np.zeros_like(v) for k, v in self.tensors.items()})


def init_params(config: ModelConfig, seed: int) -> ModelParams:
    """normal(0, 0.02) weights; zero shifts/biases; unit layer-norm scales."""
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(config).items():
        if name.endswith("_g"):
            tensors[name] = np.ones(shape)
        elif name.endswith("_b"):
            tensors[name] = np.zeros(shape)
        else:
            tensors[name] = rng.normal(0.0, 0.02, size=shape)
    return ModelParams(tensors)


def stack_batch(batch: list[TokenSequence], config: ModelConfig):
    ids = np.array([s.ids for s in batch], dtype=np.int64)
    type_ids = np.array([s.type_ids for s in batch], dtype=np.int64)
    mask = np.array([s.attention_mask for s in batch], dtype=np.float64)
    if ids.shape[1] != config.max_positions:
        raise ValueError(
            f"sequence length {ids.shape[1]} != max_positions {config.max_positions}"
        )
    if ids.max(initial=0) >= config.vocab_size:
        raise ValueError("token id out of vocabulary range")
    return ids, type_ids, mask


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / _SQRT_2))


def _gelu_grad(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + erf(x / _SQRT_2)) + x * _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def _layer_norm(x: np.ndarray, g: np.ndarray, b: np.ndarray):
    mu = x.mean(-1, keepdims=True)
    var = x.var(-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * inv
    return g * xhat + b, xhat, inv


def _layer_norm_grad(dy, xhat, inv, g):
    dg = (dy * xhat).sum((0, 1))
    db = dy.sum((0, 1))
    dxhat = dy * g
    dx = inv * (
        dxhat
        - dxhat.mean(-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(-1, keepdims=True)
    )
    return dx, dg, db


def _split_heads(x: np.ndarray, heads: int) -> np.ndarray:
    b, s, d = x.shape
    return x.reshape(b, s, heads, d // heads).transpose(0, 2, 1, 3)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    b, h, s, hd = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, s, h * hd)


def _dropout_mask(rng: np.random.Generator, shape, rate: float) -> np.ndarray:
    return (rng.random(shape) >= rate) / (1.0 - rate)


def forward(
    batch: list[TokenSequence],
    params: ModelParams,
    config: ModelConfig,
    mode: str = "eval",
    dropout_rng: np.random.Generator | None = None,
):
    """Run the encoder; returns (logits, cache). cache is None in eval mode.

    Attention gives exactly zero weight to mask-0 positions. Dropout is
    applied only in train mode, from the supplied seeded generator.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    train = mode == "train"
    use_dropout = train and config.dropout_rate > 0.0
    if use_dropout and dropout_rng is None:
        raise ValueError("train mode with dropout requires a generator")

    ids, type_ids, mask = stack_batch(batch, config)
    b, s = ids.shape
    h, hd = config.heads, config.head_dim
    scale = 1.0 / np.sqrt(hd)
    key_bias = np.where(mask > 0, 0.0, _MASK_BIAS)[:, None, None, :]

    x = params["tok_emb"][ids] + params["pos_emb"][:s] + params["type_emb"][type_ids]
    if not np.isfinite(x).all():
        raise NonFiniteError("embeddings")

    cache: dict = {"ids": ids, "type_ids": type_ids, "mask": mask, "layers": []}
    for i in range(config.layers):
        p = f"layer{i}."
        q = _split_heads(x @ params[p + "wq"], h)
        k = _split_heads(x @ params[p + "wk"], h)
        v = _split_heads(x @ params[p + "wv"], h)
        scores = q @ k.transpose(0, 1, 3, 2) * scale + key_bias
        scores -= scores.max(-1, keepdims=True)
        attn = np.exp(scores)
        attn /= attn.sum(-1, keepdims=True)
        ctx = _merge_heads(attn @ v)
        attn_out = ctx @ params[p + "wo"]
        m1 = None
        if use_dropout:
            m1 = _dropout_mask(dropout_rng, attn_out.shape, config.dropout_rate)
            attn_out = attn_out * m1
        x1, xhat1, inv1 = _layer_norm(x + attn_out, params[p + "ln1_g"], params[p + "ln1_b"])

        f1 = x1 @ params[p + "w1"]
        g1 = _gelu(f1)
        f2 = g1 @ params[p + "w2"]
        m2 = None
        if use_dropout:
            m2 = _dropout_mask(dropout_rng, f2.shape, config.dropout_rate)
            f2 = f2 * m2
        x2, xhat2, inv2 = _layer_norm(x1 + f2, params[p + "ln2_g"], params[p + "ln2_b"])
        if not np.isfinite(x2).all():
            raise NonFiniteError(f"layer{i}")
        if train:
            cache["layers"].append(
                dict(x=x, q=q, k=k, v=v, attn=attn, ctx=ctx, m1=m1,
                     xhat1=xhat1, inv1=inv1, x1=x1, f1=f1, g1=g1, m2=m2,
                     xhat2=xhat2, inv2=inv2)
            )
        x = x2

    cls = x[:, 0, :]
    logits = cls @ params["head_w"] + params["head_b"]
    if not np.isfinite(logits).all():
        raise NonFiniteError("classifier head")
    if train:
        cache["cls"] = cls
        return logits, cache
    return logits, None


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(-1, keepdims=True)


def loss(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean softmax cross-entropy with uniform class weights."""
    labels = np.asarray(labels, dtype=np.int64)
    z = logits - logits.max(-1, keepdims=True)
    lse = np.log(np.exp(z).sum(-1))
    return float(np.mean(lse - z[np.arange(len(labels)), labels]))


def backward(
    labels: np.ndarray,
    params: ModelParams,
    config: ModelConfig,
    logits: np.ndarray,
    cache: dict,
) -> ModelParams:
    """Exact gradients of loss() w.r.t. every parameter tensor."""
    labels = np.asarray(labels, dtype=np.int64)
    b = logits.shape[0]
    h = config.heads
    scale = 1.0 / np.sqrt(config.head_dim)
    grads = params.zeros_like()
    gt = grads.tensors

    dlogits = softmax(logits)
    dlogits[np.arange(b), labels] -= 1.0
    dlogits /= b

    gt["head_w"] += cache["cls"].T @ dlogits
    gt["head_b"] += dlogits.sum(0)
    dx = np.zeros((b, config.max_positions, config.hidden))
    dx[:, 0, :] = dlogits @ params["head_w"].T

    for i in reversed(range(config.layers)):
        p = f"layer{i}."
        c = cache["layers"][i]

        dr2, dg2, db2 = _layer_norm_grad(dx, c["xhat2"], c["inv2"], params[p + "ln2_g"])
        gt[p + "ln2_g"] += dg2
        gt[p + "ln2_b"] += db2
        dx1 = dr2.copy()
        df2 = dr2 if c["m2"] is None else dr2 * c["m2"]
        gt[p + "w2"] += np.tensordot(c["g1"], df2, axes=([0, 1], [0, 1]))
        dg1 = df2 @ params[p + "w2"].T
        df1 = dg1 * _gelu_grad(c["f1"])
        gt[p + "w1"] += np.tensordot(c["x1"], df1, axes=([0, 1], [0, 1]))
        dx1 += df1 @ params[p + "w1"].T

        dr1, dgl1, dbl1 = _layer_norm_grad(dx1, c["xhat1"], c["inv1"], params[p + "ln1_g"])
        gt[p + "ln1_g"] += dgl1
        gt[p + "ln1_b"] += dbl1
        dx = dr1.copy()
        dattn_out = dr1 if c["m1"] is None else dr1 * c["m1"]
        gt[p + "wo"] += np.tensordot(c["ctx"], dattn_out, axes=([0, 1], [0, 1]))
        dctx = _split_heads(dattn_out @ params[p + "wo"].T, h)

        dattn = dctx @ c["v"].transpose(0, 1, 3, 2)
        dv = c["attn"].transpose(0, 1, 3, 2) @ dctx
        dscores = c["attn"] * (dattn - (dattn * c["attn"]).sum(-1, keepdims=True))
        dq = dscores @ c["k"] * scale
        dk = dscores.transpose(0, 1, 3, 2) @ c["q"] * scale

        x_in = c["x"]
        for dproj, wname in ((dq, "wq"), (dk, "wk"), (dv, "wv")):
            dflat = _merge_heads(dproj)
            gt[p + wname] += np.tensordot(x_in, dflat, axes=([0, 1], [0, 1]))
            dx += dflat @ params[p + wname].T

    np.add.at(gt["tok_emb"], cache["ids"], dx)
    gt["pos_emb"][: dx.shape[1]] += dx.sum(0)
    np.add.at(gt["type_emb"], cache["type_ids"], dx)
    return grads


def predict(
    batch: list[TokenSequence], params: ModelParams, config: ModelConfig
) -> list[tuple[int, tuple[float, float, float]]]:
    """Eval-mode class predictions; argmax ties go to the lowest class code."""
    logits, _ = forward(batch, params, config, mode="eval")
    probs = softmax(logits)
    return [(int(np.argmax(p)), tuple(float(v) for v in p)) for p in probs]


# -- checkpoint container ----------------------------------------------------
#
# Header line of JSON (sorted keys) followed by raw little-endian float64
# buffers in declared parameter order. No timestamps: byte-identical for
# identical contents.

CHECKPOINT_FORMAT = "mistriage-checkpoint"
CHECKPOINT_VERSION = 1


def save_checkpoint(
    path: str | Path, params: ModelParams, config: ModelConfig, meta: dict
) -> None:
    shapes = param_shapes(config)
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": asdict(config),
        "meta": meta,
        "tensors": [{"name": n, "shape": list(s)} for n, s in shapes.items()],
        "dtype": "<f8",
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8"))
        fh.write(b"\n")
        for name, shape in shapes.items():
            arr = np.ascontiguousarray(params[name], dtype="<f8")
            if arr.shape != shape:
                raise ValueError(f"tensor {name} has shape {arr.shape}, expected {shape}")
            fh.write(arr.tobytes())


def load_checkpoint(path: str | Path) -> tuple[ModelParams, ModelConfig, dict]:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        header = json.loads(header_line.decode("utf-8"))
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} file")
        config = ModelConfig(**header["config"])
        tensors: dict[str, np.ndarray] = {}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            n = int(np.prod(shape))
            buf = fh.read(n * 8)
            if len(buf) != n * 8:
                raise ValueError(f"{path}: truncated tensor {entry['name']}")
            tensors[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return ModelParams(tensors), config, header["meta"]
