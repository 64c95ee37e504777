"""Training loop (batch size one), inference, and threshold sweeping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpus import Segmentation
from ..embedio import BlockEmbeddingSequence
from ..metrics import compute_k, pk
from ..texttiling import GapScores
from .model import (
    HeadConfig,
    HeadModel,
    bce_loss,
    build_context,
    head_backward,
    head_forward,
    init_model,
)
from .optim import AdamState, adam_step, plateau_scheduler

Example = tuple[BlockEmbeddingSequence, Segmentation]

THRESHOLD_GRID = tuple(i / 20.0 for i in range(1, 20))


@dataclass(frozen=True)
class TrainConfig:
    lr0: float = 1e-3
    factor: float = 0.5
    patience: int = 2
    min_lr: float = 1e-5
    min_delta: float = 1e-5
    max_epochs: int = 30
    early_stop_patience: int = 5
    seed: int = 0
    inference_threshold: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.factor < 1.0:
            raise ValueError("factor must be in (0, 1)")
        if not self.lr0 > self.min_lr:
            raise ValueError("lr0 must exceed min_lr")
        if not 0.0 < self.inference_threshold < 1.0:
            raise ValueError("inference_threshold must be in (0, 1)")


def infer(
    z: BlockEmbeddingSequence, model: HeadModel, threshold: float = 0.5
) -> tuple[Segmentation, GapScores]:
    """Boundary at gap k iff probability_k >= threshold; also returns raw scores."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    if z.d != model.config.d:
        raise ValueError(
            f"embedding width {z.d} != model input width {model.config.d}"
        )
    probs = head_forward(build_context(z), model, train_mode=False)
    gap_probs = probs[:-1]
    boundaries = frozenset(int(g + 1) for g in np.flatnonzero(gap_probs >= threshold))
    return (
        Segmentation(n_units=z.n, boundaries=boundaries),
        GapScores(values=gap_probs, kind="probability"),
    )


def _mean_dev_pk(dev: list[Example], model: HeadModel, threshold: float) -> float:
    scores = []
    for z, ref in dev:
        if ref.n_units < 2:
            continue
        hyp, _ = infer(z, model, threshold)
        scores.append(pk(ref, hyp, compute_k(ref)))
    return float(np.mean(scores)) if scores else 0.0


def _mean_dev_loss(dev: list[Example], model: HeadModel) -> float:
    losses = []
    for z, ref in dev:
        if z.n < 2:
            continue
        probs = head_forward(build_context(z), model, train_mode=False)
        losses.append(bce_loss(probs, ref))
    return float(np.mean(losses)) if losses else 0.0


def _validate_corpus(name: str, examples: list[Example], d: int) -> None:
    for i, (z, seg) in enumerate(examples):
        if z.d != d:
            raise ValueError(
                f"{name}[{i}]: embedding width {z.d} != corpus width {d}"
            )
        if seg.n_units != z.n:
            raise ValueError(
                f"{name}[{i}]: label units {seg.n_units} != blocks {z.n}"
            )


def train(
    corpus: list[Example],
    dev: list[Example],
    cfg: TrainConfig,
    head: HeadConfig | None = None,
) -> tuple[HeadModel, list[dict]]:
    """Train the head one recording per step; returns the best-dev-Pk checkpoint.

    Bit-reproducible for a fixed seed: one rng drives init, epoch shuffles,
    and dropout in sequence.
    """
    if not corpus:
        raise ValueError("empty training corpus")
    if not dev:
        raise ValueError("empty dev set")
    d = corpus[0][0].d
    _validate_corpus("corpus", corpus, d)
    _validate_corpus("dev", dev, d)
    if head is None:
        head = HeadConfig(d=d)
    elif head.d != d:
        raise ValueError(f"head expects d={head.d}, corpus has d={d}")

    rng = np.random.default_rng(cfg.seed)
    model = init_model(head, seed=int(rng.integers(2**63)))
    adam = AdamState.init_like(model.params)

    log: list[dict] = []
    dev_loss_history: list[float] = []
    lr = cfg.lr0
    best_pk = float("inf")
    best_params = {k: v.copy() for k, v in model.params.items()}
    bad_epochs = 0

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(corpus))
        epoch_losses = []
        for idx in order:
            z, seg = corpus[idx]
            if z.n < 2:
                continue
            loss, grads = head_backward(
                build_context(z), model, seg, train_mode=True, rng=rng
            )
            adam_step(model, grads, adam, lr)
            epoch_losses.append(loss)
        train_loss = float(np.mean(epoch_losses)) if epoch_losses else 0.0
        dev_loss = _mean_dev_loss(dev, model)
        dev_pk = _mean_dev_pk(dev, model, cfg.inference_threshold)
        log.append(
            {
                "epoch": epoch,
                "train_loss": train_loss,
                "dev_loss": dev_loss,
                "dev_pk": dev_pk,
                "lr": lr,
            }
        )
        if dev_pk < best_pk:
            best_pk = dev_pk
            best_params = {k: v.copy() for k, v in model.params.items()}
            bad_epochs = 0
        else:
            bad_epochs += 1
        dev_loss_history.append(dev_loss)
        lr = plateau_scheduler(
            dev_loss_history,
            cfg.lr0,
            factor=cfg.factor,
            patience=cfg.patience,
            min_lr=cfg.min_lr,
            min_delta=cfg.min_delta,
        )
        if bad_epochs >= cfg.early_stop_patience:
            break

    return HeadModel(config=head, params=best_params), log


def sweep_threshold(dev: list[Example], model: HeadModel) -> float:
    """Grid 0.05..0.95 step 0.05; argmin of mean dev Pk, ties to the lower value."""
    if not dev:
        raise ValueError("empty dev set")
    scored = []
    for z, ref in dev:
        if ref.n_units < 2:
            continue
        probs = head_forward(build_context(z), model, train_mode=False)
        scored.append((probs[:-1], ref))
    return _sweep_scored(scored)


def _sweep_scored(scored: list[tuple[np.ndarray, Segmentation]]) -> float:
    best_t = THRESHOLD_GRID[0]
    best_pk = float("inf")
    for t in THRESHOLD_GRID:
        pks = []
        for gap_probs, ref in scored:
            boundaries = frozenset(
                int(g + 1) for g in np.flatnonzero(gap_probs >= t)
            )
            hyp = Segmentation(n_units=ref.n_units, boundaries=boundaries)
            pks.append(pk(ref, hyp, compute_k(ref)))
        mean_pk = float(np.mean(pks)) if pks else 0.0
        if mean_pk < best_pk:
            best_pk = mean_pk
            best_t = t
    return best_t
