"""Context-aware self-attention segmentation head, forward and exact backward.

All arithmetic is float64; parameters are plain numpy arrays in a flat named
dict. The architecture is pre-norm: linear input projection of the context
rows, sinusoidal positions, L blocks of (LayerNorm -> multi-head attention ->
residual, LayerNorm -> ReLU feed-forward -> residual), then a scalar
projection and sigmoid per block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..corpus import Segmentation
from ..embedio import BlockEmbeddingSequence

LN_EPS = 1e-5
BCE_EPS = 1e-7


@dataclass(frozen=True)
class HeadConfig:
    d: int = 1024
    h: int = 256
    layers: int = 2
    heads: int = 4
    ff_mult: int = 4
    dropout: float = 0.1
    max_blocks: int = 2048

    def __post_init__(self):
        for name in ("d", "h", "layers", "heads", "ff_mult", "max_blocks"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.h % self.heads != 0:
            raise ValueError(f"h={self.h} not divisible by heads={self.heads}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


@dataclass
class HeadModel:
    config: HeadConfig
    params: dict[str, np.ndarray] = field(default_factory=dict)


@dataclass(frozen=True)
class ContextSequence:
    """n rows of width 3d: row k is (z_{k-1}, z_k, z_{k+1}), zeros at the edges."""

    rows: np.ndarray
    d: int

    @property
    def n(self) -> int:
        return self.rows.shape[0]


def build_context(z: BlockEmbeddingSequence) -> ContextSequence:
    """Concatenate each block embedding with its neighbors (zero-padded ends)."""
    data = z.data.astype(np.float64)
    n, d = data.shape
    if n < 1:
        raise ValueError("empty embedding sequence")
    prev = np.vstack((np.zeros((1, d)), data[:-1]))
    nxt = np.vstack((data[1:], np.zeros((1, d))))
    return ContextSequence(rows=np.hstack((prev, data, nxt)), d=d)


def param_spec(cfg: HeadConfig) -> dict[str, tuple[int, ...]]:
    """Name -> shape for every trainable tensor; a pure function of config."""
    spec: dict[str, tuple[int, ...]] = {"in_proj": (3 * cfg.d, cfg.h)}
    for i in range(cfg.layers):
        p = f"layers.{i}"
        for w in ("wq", "wk", "wv", "wo"):
            spec[f"{p}.attn.{w}"] = (cfg.h, cfg.h)
        spec[f"{p}.ln1.gain"] = (cfg.h,)
        spec[f"{p}.ln1.bias"] = (cfg.h,)
        spec[f"{p}.ff.w1"] = (cfg.h, cfg.ff_mult * cfg.h)
        spec[f"{p}.ff.w2"] = (cfg.ff_mult * cfg.h, cfg.h)
        spec[f"{p}.ln2.gain"] = (cfg.h,)
        spec[f"{p}.ln2.bias"] = (cfg.h,)
    spec["out.weight"] = (cfg.h,)
    spec["out.bias"] = ()
    return spec


def param_count(cfg: HeadConfig) -> int:
    return sum(int(np.prod(shape, dtype=np.int64)) for shape in param_spec(cfg).values())


def init_model(cfg: HeadConfig, seed: int) -> HeadModel:
    """Glorot-normal matrices, unit layer-norm gains, zero biases."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in param_spec(cfg).items():
        if name.endswith(".gain"):
            params[name] = np.ones(shape)
        elif name.endswith("bias"):
            params[name] = np.zeros(shape)
        elif name == "out.weight":
            std = math.sqrt(2.0 / (cfg.h + 1))
            params[name] = rng.normal(0.0, std, shape)
        else:
            std = math.sqrt(2.0 / (shape[0] + shape[1]))
            params[name] = rng.normal(0.0, std, shape)
    return HeadModel(config=cfg, params=params)


def positional_encoding(n: int, h: int) -> np.ndarray:
    pos = np.arange(n, dtype=np.float64)[:, None]
    half = (h + 1) // 2
    freqs = 1.0 / (10000.0 ** (2.0 * np.arange(half) / h))
    angles = pos * freqs[None, :]
    pe = np.zeros((n, h))
    pe[:, 0::2] = np.sin(angles)
    pe[:, 1::2] = np.cos(angles[:, : h // 2])
    return pe


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _ln_forward(x, gain, bias):
    mu = x.mean(axis=1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return gain * xhat + bias, (xhat, inv)


def _ln_backward(dy, gain, cache):
    xhat, inv = cache
    dgain = (dy * xhat).sum(axis=0)
    dbias = dy.sum(axis=0)
    dxhat = dy * gain
    m1 = dxhat.mean(axis=1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=1, keepdims=True)
    dx = inv * (dxhat - m1 - xhat * m2)
    return dx, dgain, dbias


def _split_heads(x, heads):
    n, h = x.shape
    return x.reshape(n, heads, h // heads).transpose(1, 0, 2)


def _merge_heads(x):
    heads, n, dk = x.shape
    return x.transpose(1, 0, 2).reshape(n, heads * dk)


def _softmax(x):
    shifted = x - x.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=-1, keepdims=True)


def _attn_forward(a, params, prefix, cfg):
    q = a @ params[f"{prefix}.wq"]
    k = a @ params[f"{prefix}.wk"]
    v = a @ params[f"{prefix}.wv"]
    qh = _split_heads(q, cfg.heads)
    kh = _split_heads(k, cfg.heads)
    vh = _split_heads(v, cfg.heads)
    scale = 1.0 / math.sqrt(cfg.h // cfg.heads)
    weights = _softmax(qh @ kh.transpose(0, 2, 1) * scale)
    merged = _merge_heads(weights @ vh)
    out = merged @ params[f"{prefix}.wo"]
    return out, (a, qh, kh, vh, weights, merged, scale)


def _attn_backward(dout, params, prefix, cfg, cache, grads):
    a, qh, kh, vh, weights, merged, scale = cache
    grads[f"{prefix}.wo"] = merged.T @ dout
    dmerged = dout @ params[f"{prefix}.wo"].T
    dctx = _split_heads(dmerged, cfg.heads)
    dweights = dctx @ vh.transpose(0, 2, 1)
    dvh = weights.transpose(0, 2, 1) @ dctx
    dscores = weights * (dweights - (dweights * weights).sum(axis=2, keepdims=True))
    dqh = dscores @ kh * scale
    dkh = dscores.transpose(0, 2, 1) @ qh * scale
    dq = _merge_heads(dqh)
    dk = _merge_heads(dkh)
    dv = _merge_heads(dvh)
    grads[f"{prefix}.wq"] = a.T @ dq
    grads[f"{prefix}.wk"] = a.T @ dk
    grads[f"{prefix}.wv"] = a.T @ dv
    return (
        dq @ params[f"{prefix}.wq"].T
        + dk @ params[f"{prefix}.wk"].T
        + dv @ params[f"{prefix}.wv"].T
    )


def _dropout_mask(shape, p, rng):
    return (rng.random(shape) >= p) / (1.0 - p)


def _forward(
    ctx: ContextSequence,
    model: HeadModel,
    train_mode: bool,
    rng: np.random.Generator | None,
):
    cfg = model.config
    if ctx.rows.shape[1] != 3 * cfg.d:
        raise ValueError(
            f"context width {ctx.rows.shape[1]} != 3*d = {3 * cfg.d}"
        )
    if ctx.n > cfg.max_blocks:
        raise ValueError(
            f"sequence of {ctx.n} blocks exceeds positional capacity "
            f"{cfg.max_blocks}"
        )
    if train_mode and cfg.dropout > 0.0 and rng is None:
        raise ValueError("train_mode dropout requires an rng")
    params = model.params
    x = ctx.rows @ params["in_proj"] + positional_encoding(ctx.n, cfg.h)
    layer_caches = []
    for i in range(cfg.layers):
        p = f"layers.{i}"
        a_norm, ln1_cache = _ln_forward(x, params[f"{p}.ln1.gain"], params[f"{p}.ln1.bias"])
        attn_out, attn_cache = _attn_forward(a_norm, params, f"{p}.attn", cfg)
        mask1 = None
        if train_mode and cfg.dropout > 0.0:
            mask1 = _dropout_mask(attn_out.shape, cfg.dropout, rng)
            attn_out = attn_out * mask1
        x = x + attn_out
        f_norm, ln2_cache = _ln_forward(x, params[f"{p}.ln2.gain"], params[f"{p}.ln2.bias"])
        u_pre = f_norm @ params[f"{p}.ff.w1"]
        u = np.maximum(u_pre, 0.0)
        ff_out = u @ params[f"{p}.ff.w2"]
        mask2 = None
        if train_mode and cfg.dropout > 0.0:
            mask2 = _dropout_mask(ff_out.shape, cfg.dropout, rng)
            ff_out = ff_out * mask2
        x = x + ff_out
        layer_caches.append(
            (ln1_cache, attn_cache, mask1, ln2_cache, f_norm, u_pre, u, mask2)
        )
    logits = x @ params["out.weight"] + params["out.bias"]
    probs = _sigmoid(logits)
    return probs, (x, logits, layer_caches)


def head_forward(
    ctx: ContextSequence,
    model: HeadModel,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Per-block topic-change probabilities, shape (n,), all in (0, 1)."""
    probs, _ = _forward(ctx, model, train_mode, rng)
    return probs


def _gap_targets(target: Segmentation) -> np.ndarray:
    y = np.zeros(target.n_units - 1)
    for g in target.boundaries:
        y[g - 1] = 1.0
    return y


def bce_loss(probabilities: np.ndarray, target: Segmentation) -> float:
    """Mean binary cross entropy over gaps 1..n-1; the final block is excluded."""
    probs = np.asarray(probabilities, dtype=np.float64)
    n = probs.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 blocks for a gap loss, got {n}")
    if target.n_units != n:
        raise ValueError(
            f"unit count mismatch: target {target.n_units} vs probabilities {n}"
        )
    y = _gap_targets(target)
    p = np.clip(probs[: n - 1], BCE_EPS, 1.0 - BCE_EPS)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))


def head_backward(
    ctx: ContextSequence,
    model: HeadModel,
    target: Segmentation,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and exact analytic gradients of bce_loss w.r.t. every parameter."""
    cfg = model.config
    params = model.params
    probs, (x_final, logits, layer_caches) = _forward(ctx, model, train_mode, rng)
    n = ctx.n
    if n < 2:
        raise ValueError(f"need at least 2 blocks for a gap loss, got {n}")
    loss = bce_loss(probs, target)

    y = _gap_targets(target)
    dlogits = np.zeros(n)
    gap_p = probs[: n - 1]
    in_range = (gap_p > BCE_EPS) & (gap_p < 1.0 - BCE_EPS)
    dlogits[: n - 1] = np.where(in_range, (gap_p - y) / (n - 1), 0.0)

    grads: dict[str, np.ndarray] = {
        "out.weight": x_final.T @ dlogits,
        "out.bias": np.asarray(dlogits.sum()),
    }
    dx = np.outer(dlogits, params["out.weight"])
    for i in reversed(range(cfg.layers)):
        p = f"layers.{i}"
        ln1_cache, attn_cache, mask1, ln2_cache, f_norm, u_pre, u, mask2 = layer_caches[i]
        dff_out = dx if mask2 is None else dx * mask2
        grads[f"{p}.ff.w2"] = u.T @ dff_out
        du = dff_out @ params[f"{p}.ff.w2"].T
        du_pre = du * (u_pre > 0.0)
        grads[f"{p}.ff.w1"] = f_norm.T @ du_pre
        df_norm = du_pre @ params[f"{p}.ff.w1"].T
        dx_ln2, dg2, db2 = _ln_backward(df_norm, params[f"{p}.ln2.gain"], ln2_cache)
        grads[f"{p}.ln2.gain"] = dg2
        grads[f"{p}.ln2.bias"] = db2
        dx = dx + dx_ln2

        dattn_out = dx if mask1 is None else dx * mask1
        da_norm = _attn_backward(dattn_out, params, f"{p}.attn", cfg, attn_cache, grads)
        dx_ln1, dg1, db1 = _ln_backward(da_norm, params[f"{p}.ln1.gain"], ln1_cache)
        grads[f"{p}.ln1.gain"] = dg1
        grads[f"{p}.ln1.bias"] = db1
        dx = dx + dx_ln1

    grads["in_proj"] = ctx.rows.T @ dx
    return loss, grads
