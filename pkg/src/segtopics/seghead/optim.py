"""Adam with bias correction and the reduce-on-plateau learning rate rule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def init_like(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_step(
    model,
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    eps: float = ADAM_EPS,
) -> None:
    """One bias-corrected Adam update, applied to the model in place."""
    params = model.params
    if set(grads) != set(params):
        raise ValueError("gradient names do not match parameters")
    state.step += 1
    t = state.step
    for name, p in params.items():
        g = grads[name]
        if np.shape(g) != np.shape(p):
            raise ValueError(
                f"gradient shape {np.shape(g)} != parameter shape {np.shape(p)} "
                f"for {name}"
            )
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * np.square(g)
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        p -= lr * m_hat / (np.sqrt(v_hat) + eps)


def plateau_scheduler(
    history: list[float],
    lr0: float,
    factor: float = 0.5,
    patience: int = 2,
    min_lr: float = 1e-5,
    min_delta: float = 1e-5,
) -> float:
    """Learning rate after observing `history` of per-epoch dev losses.

    The rate is multiplied by `factor` whenever the loss has not improved by
    more than `min_delta` for `patience` consecutive epochs, and never drops
    below `min_lr`. Pure replay, so the op is a function of its inputs.
    """
    lr = lr0
    best = float("inf")
    bad = 0
    for loss in history:
        if loss < best - min_delta:
            best = loss
            bad = 0
        else:
            bad += 1
            if bad >= patience:
                lr = max(min_lr, lr * factor)
                bad = 0
    return lr
