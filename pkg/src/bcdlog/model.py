"""The character tagger and its checkpoint format.

Pipeline per character sequence (length already padded to a multiple of 4):

    ids -> embedding -> + sinusoidal position table (dropout 0.1 in training)
        -> residual self-attention block (pre-norm attention, pre-norm MLP)
        -> 1-D convolution, kernel 4, stride 4 (one feature per 4-char group)
        -> dropout 0.4
        -> BiLSTM with a residual connection from the convolution output
        -> layer norm -> dropout 0.4 -> linear projection to 16 label scores

The 16 scores per group feed the CRF head in ``crf``. The position table is a
fixed sinusoidal buffer, not a learned parameter, which keeps the learnable
parameter count at ~313k for the default configuration.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import torch
import torch.nn as nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from .crf import LinearChainCRF
from .mask_codec import decode_bcd, pad_to_multiple_of_four
from .vocab import VOCAB_SIZE, Vocabulary

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "bcdlog-checkpoint"
CHECKPOINT_VERSION = 1


class CheckpointError(Exception):
    """Checkpoint file is missing, corrupt, or from an unsupported version."""


@dataclass
class ModelConfig:
    embed_dim: int = 128
    attn_heads: int = 8
    attn_layers: int = 1
    mlp_hidden: int = 256
    conv_filters: int = 128
    conv_kernel: int = 4
    conv_stride: int = 4
    lstm_hidden: int = 64  # per direction
    num_classes: int = 16
    dropout: float = 0.4
    pos_dropout: float = 0.1
    max_seq_len: int = 2048

    def __post_init__(self) -> None:
        if self.conv_kernel != 4 or self.conv_stride != 4:
            raise ValueError("convolution kernel and stride are fixed at 4")
        if self.num_classes != 16:
            raise ValueError("the label alphabet is fixed at 16 classes")
        if self.embed_dim % self.attn_heads != 0:
            raise ValueError("embed_dim must be divisible by attn_heads")
        if self.embed_dim % 2 != 0:
            raise ValueError("embed_dim must be even for the position table")
        if self.attn_layers != 1:
            raise ValueError("only a single attention layer is supported")
        if self.conv_filters != 2 * self.lstm_hidden:
            raise ValueError(
                "conv_filters must equal 2 * lstm_hidden for the residual add"
            )
        if self.max_seq_len < 4 or self.max_seq_len % 4 != 0:
            raise ValueError("max_seq_len must be a positive multiple of 4")


def tiny_config() -> ModelConfig:
    """Small double-precision-friendly config for numeric verification."""
    return ModelConfig(
        embed_dim=8,
        attn_heads=2,
        mlp_hidden=8,
        conv_filters=8,
        lstm_hidden=4,
        max_seq_len=64,
    )


def sinusoidal_table(max_len: int, dim: int) -> torch.Tensor:
    """Classic fixed sin/cos absolute position table, shape (max_len, dim)."""
    position = torch.arange(max_len, dtype=torch.float64).unsqueeze(1)
    div = torch.exp(
        torch.arange(0, dim, 2, dtype=torch.float64) * (-math.log(10000.0) / dim)
    )
    table = torch.zeros(max_len, dim, dtype=torch.float64)
    table[:, 0::2] = torch.sin(position * div)
    table[:, 1::2] = torch.cos(position * div)
    return table.to(torch.float32)


class BcdTagger(nn.Module):
    def __init__(self, config: ModelConfig, vocab_size: int = VOCAB_SIZE):
        super().__init__()
        self.config = config
        e = config.embed_dim
        self.embed = nn.Embedding(vocab_size, e)
        # Not persisted: the table is a pure function of (max_seq_len, embed_dim),
        # so checkpoints stay loadable when max_seq_len is overridden.
        self.register_buffer(
            "pos_table", sinusoidal_table(config.max_seq_len, e), persistent=False
        )
        self.pos_dropout = nn.Dropout(config.pos_dropout)
        self.ln_attn = nn.LayerNorm(e)
        self.attn = nn.MultiheadAttention(e, config.attn_heads, batch_first=True)
        self.ln_mlp = nn.LayerNorm(e)
        self.mlp = nn.Sequential(
            nn.Linear(e, config.mlp_hidden),
            nn.ReLU(),
            nn.Linear(config.mlp_hidden, e),
        )
        self.conv = nn.Conv1d(
            e, config.conv_filters, kernel_size=config.conv_kernel,
            stride=config.conv_stride,
        )
        self.conv_dropout = nn.Dropout(config.dropout)
        self.lstm = nn.LSTM(
            config.conv_filters, config.lstm_hidden,
            batch_first=True, bidirectional=True,
        )
        self.ln_out = nn.LayerNorm(config.conv_filters)
        self.out_dropout = nn.Dropout(config.dropout)
        self.emission = nn.Linear(config.conv_filters, config.num_classes)
        self.crf = LinearChainCRF(config.num_classes)

    def forward(self, ids: torch.Tensor, lengths: torch.Tensor) -> torch.Tensor:
        """Emission scores, shape (B, L/4, 16).

        ``ids`` is (B, L) with L a multiple of 4 and at most max_seq_len;
        ``lengths`` holds each sequence's own padded character count (also a
        multiple of 4). Positions beyond a sequence's length are batch padding:
        they are masked out of attention and skipped by the LSTM, so per-row
        outputs within each sequence's own groups do not depend on how the
        batch was assembled.
        """
        batch, total = ids.shape
        if total == 0 or total % 4 != 0:
            raise ValueError(f"input length {total} is not a positive multiple of 4")
        if total > self.config.max_seq_len:
            raise ValueError(
                f"input length {total} exceeds max_seq_len {self.config.max_seq_len}"
            )
        if torch.any(lengths < 4) or torch.any(lengths > total):
            raise ValueError("sequence lengths must lie in [4, L]")
        if torch.any(lengths % 4 != 0):
            raise ValueError("sequence lengths must be multiples of 4")

        x = self.embed(ids) + self.pos_table[:total].to(ids.device)
        x = self.pos_dropout(x)

        pad_mask = (
            torch.arange(total, device=ids.device).unsqueeze(0)
            >= lengths.unsqueeze(1)
        )
        normed = self.ln_attn(x)
        attn_out, _ = self.attn(
            normed, normed, normed, key_padding_mask=pad_mask, need_weights=False
        )
        x = x + attn_out
        x = x + self.mlp(self.ln_mlp(x))

        x = self.conv(x.transpose(1, 2)).transpose(1, 2)  # (B, L/4, F)
        x = self.conv_dropout(x)

        group_lengths = torch.div(lengths, 4, rounding_mode="floor")
        packed = pack_padded_sequence(
            x, group_lengths.cpu(), batch_first=True, enforce_sorted=False
        )
        lstm_out, _ = self.lstm(packed)
        lstm_out, _ = pad_packed_sequence(
            lstm_out, batch_first=True, total_length=total // 4
        )
        x = lstm_out + x
        x = self.out_dropout(self.ln_out(x))
        return self.emission(x)


def count_learnable_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters() if p.requires_grad)


def with_max_seq_len(model: BcdTagger, max_seq_len: int) -> BcdTagger:
    """Copy of the model accepting inputs up to ``max_seq_len`` characters."""
    if max_seq_len == model.config.max_seq_len:
        return model
    config = ModelConfig(**{**asdict(model.config), "max_seq_len": max_seq_len})
    clone = BcdTagger(config, model.embed.num_embeddings)
    clone.load_state_dict(model.state_dict())
    clone.eval()
    return clone


def emissions_for_message(
    model: BcdTagger, vocab: Vocabulary, message: str
) -> torch.Tensor:
    """Inference-mode emission scores for one already-truncated message."""
    padded = pad_to_multiple_of_four(message)
    if len(padded) == 0:
        raise ValueError("message is empty")
    device = next(model.parameters()).device
    ids = torch.tensor([vocab.encode(padded)], dtype=torch.long, device=device)
    lengths = torch.tensor([len(padded)], dtype=torch.long, device=device)
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            emissions = model(ids, lengths)[0]
    finally:
        if was_training:
            model.train()
    return emissions


def predict_mask(model: BcdTagger, vocab: Vocabulary, message: str) -> list[int]:
    """Predict the per-character parameter mask for a message.

    Messages longer than max_seq_len are truncated for the network; the
    untouched tail is labeled static (0) and a warning is emitted.
    """
    if message == "":
        return []
    usable = (model.config.max_seq_len // 4) * 4
    head = message[:usable]
    tail = len(message) - len(head)
    if tail:
        logger.warning(
            "message of %d characters truncated to %d; tail labeled static",
            len(message), usable,
        )
    emissions = emissions_for_message(model, vocab, head)
    digits = model.crf.viterbi(emissions)
    mask = decode_bcd(digits, len(head))
    return mask + [0] * tail


def save_checkpoint(model: BcdTagger, vocab: Vocabulary, path) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "model_config": asdict(model.config),
        "vocab": {"char_to_id": vocab.to_dict(), "num_ids": vocab.num_ids},
        "state_dict": model.state_dict(),
    }
    torch.save(payload, path)


def load_checkpoint(path) -> tuple[BcdTagger, Vocabulary]:
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:  # unreadable, truncated, or not a torch file
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a recognized checkpoint file")
    version = payload.get("version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint version {version!r} unsupported "
            f"(expected {CHECKPOINT_VERSION})"
        )
    try:
        config = ModelConfig(**payload["model_config"])
        vocab = Vocabulary.from_dict(
            payload["vocab"]["char_to_id"], payload["vocab"]["num_ids"]
        )
        model = BcdTagger(config, vocab.num_ids)
        model.load_state_dict(payload["state_dict"])
    except CheckpointError:
        raise
    except Exception as exc:
        raise CheckpointError(f"checkpoint {path} is malformed: {exc}") from exc
    model.eval()
    return model, vocab
