"""Training-set construction and the optimization loop."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import torch

from .crf import LinearChainCRF  # noqa: F401  (re-exported for callers)
from .mask_codec import (
    AlignmentError,
    derive_ground_truth_mask,
    encode_mask,
    pad_to_multiple_of_four,
)
from .model import BcdTagger, ModelConfig
from .vocab import PAD_ID, Vocabulary

logger = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; carries the offending epoch and step."""


@dataclass
class TrainConfig:
    batch_size: int = 16
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    epochs: int = 10
    per_template_cap: int = 50
    seed: int = 0
    clip_grad_norm: float | None = None  # off by default

    def __post_init__(self) -> None:
        if min(self.batch_size, self.epochs, self.per_template_cap) < 1:
            raise ValueError("batch_size, epochs, per_template_cap must be >= 1")
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ValueError("learning_rate must be > 0, weight_decay >= 0")


@dataclass
class TrainingExample:
    message: str
    gold_template: str
    gold_mask: list[int]
    gold_bcd: list[int]


@dataclass
class AlignmentFailure:
    message: str
    template: str
    reason: str


@dataclass
class TrainResult:
    model: BcdTagger
    epoch_losses: list[float] = field(default_factory=list)


def build_training_set(
    corpus: Iterable[tuple[str, str]], cap: int, seed: int
) -> tuple[list[TrainingExample], list[AlignmentFailure]]:
    """Cap each template's message count and derive gold masks.

    At most ``cap`` messages per distinct template are kept, chosen by seeded
    uniform sampling without replacement (templates are visited in first-seen
    order, so the selection is deterministic for a given seed). Pairs whose
    template cannot be aligned to the message are excluded and returned as
    failures rather than silently dropped.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    groups: dict[str, list[str]] = {}
    total = 0
    for message, template in corpus:
        total += 1
        groups.setdefault(template, []).append(message)
    if total == 0:
        raise ValueError("training corpus is empty")

    rng = random.Random(seed)
    examples: list[TrainingExample] = []
    failures: list[AlignmentFailure] = []
    skipped_empty = 0
    for template, messages in groups.items():
        if len(messages) > cap:
            keep = sorted(rng.sample(range(len(messages)), cap))
            chosen = [messages[i] for i in keep]
        else:
            chosen = messages
        for message in chosen:
            if message == "":
                skipped_empty += 1
                continue
            try:
                mask = derive_ground_truth_mask(message, template)
            except AlignmentError as exc:
                failures.append(AlignmentFailure(message, template, exc.reason))
                continue
            examples.append(
                TrainingExample(message, template, mask, encode_mask(mask))
            )
    if skipped_empty:
        logger.warning("skipped %d empty messages", skipped_empty)
    if failures:
        logger.warning(
            "excluded %d/%d pairs that failed template alignment",
            len(failures), total,
        )
    return examples, failures


def _prepare(
    examples: Sequence[TrainingExample], vocab: Vocabulary, max_seq_len: int
) -> list[tuple[list[int], int, list[int]]]:
    """Encode examples once: (ids of own-padded message, padded length, gold digits)."""
    usable = (max_seq_len // 4) * 4
    prepared = []
    for ex in examples:
        head = ex.message[:usable]
        if len(head) < len(ex.message):
            logger.warning(
                "training message truncated from %d to %d characters",
                len(ex.message), usable,
            )
        padded = pad_to_multiple_of_four(head)
        digits = encode_mask(ex.gold_mask[: len(head)])
        prepared.append((vocab.encode(padded), len(padded), digits))
    return prepared


def _collate(
    batch: Sequence[tuple[list[int], int, list[int]]], device: torch.device
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    max_chars = max(length for _, length, _ in batch)
    max_groups = max_chars // 4
    ids = torch.full((len(batch), max_chars), PAD_ID, dtype=torch.long)
    labels = torch.zeros((len(batch), max_groups), dtype=torch.long)
    lengths = torch.zeros(len(batch), dtype=torch.long)
    for row, (enc, length, digits) in enumerate(batch):
        ids[row, :length] = torch.tensor(enc, dtype=torch.long)
        labels[row, : len(digits)] = torch.tensor(digits, dtype=torch.long)
        lengths[row] = length
    group_lengths = lengths // 4
    return ids.to(device), lengths.to(device), labels.to(device), group_lengths.to(device)


def train(
    examples: Sequence[TrainingExample],
    vocab: Vocabulary,
    model_config: ModelConfig,
    train_config: TrainConfig,
) -> TrainResult:
    """Minimize mean per-example CRF NLL with AdamW (decoupled weight decay).

    Mini-batches of ``batch_size`` are reshuffled each epoch with a seeded RNG;
    within a batch, sequences are right-padded to the batch maximum and each
    sequence's NLL is computed over its own group count only, so padding
    carries no probability mass. Deterministic for a fixed seed when torch
    runs single-threaded.
    """
    if not examples:
        raise ValueError("no training examples")
    torch.manual_seed(train_config.seed)
    device = torch.device("cpu")
    model = BcdTagger(model_config, vocab.num_ids).to(device)
    optimizer = torch.optim.AdamW(
        model.parameters(),
        lr=train_config.learning_rate,
        weight_decay=train_config.weight_decay,
    )
    prepared = _prepare(examples, vocab, model_config.max_seq_len)
    order_rng = random.Random(train_config.seed)
    bs = train_config.batch_size
    epoch_losses: list[float] = []

    model.train()
    for epoch in range(train_config.epochs):
        order = list(range(len(prepared)))
        order_rng.shuffle(order)
        nll_sum = 0.0
        for start in range(0, len(order), bs):
            batch = [prepared[i] for i in order[start : start + bs]]
            ids, lengths, labels, group_lengths = _collate(batch, device)
            emissions = model(ids, lengths)
            nll = model.crf.nll(emissions, labels, group_lengths)
            loss = nll.mean()
            if not torch.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss {loss.item()!r} at epoch {epoch + 1}, "
                    f"batch starting at index {start} "
                    f"(lr={train_config.learning_rate}, batch_size={bs})"
                )
            optimizer.zero_grad()
            loss.backward()
            if train_config.clip_grad_norm is not None:
                torch.nn.utils.clip_grad_norm_(
                    model.parameters(), train_config.clip_grad_norm
                )
            optimizer.step()
            nll_sum += float(nll.detach().sum())
        mean_loss = nll_sum / len(prepared)
        epoch_losses.append(mean_loss)
        logger.info("epoch %d/%d mean NLL %.6f", epoch + 1, train_config.epochs, mean_loss)
    model.eval()
    return TrainResult(model=model, epoch_losses=epoch_losses)


def evaluate_loss(
    model: BcdTagger,
    vocab: Vocabulary,
    examples: Sequence[TrainingExample],
    batch_size: int = 16,
) -> float:
    """Mean per-example NLL with dropout off."""
    if not examples:
        raise ValueError("no examples to evaluate")
    prepared = _prepare(examples, vocab, model.config.max_seq_len)
    device = next(model.parameters()).device
    was_training = model.training
    model.eval()
    total = 0.0
    try:
        with torch.no_grad():
            for start in range(0, len(prepared), batch_size):
                batch = prepared[start : start + batch_size]
                ids, lengths, labels, group_lengths = _collate(batch, device)
                nll = model.crf.nll(model(ids, lengths), labels, group_lengths)
                total += float(nll.sum())
    finally:
        if was_training:
            model.train()
    return total / len(prepared)
