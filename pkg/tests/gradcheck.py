"""Central finite-difference verification of the end-to-end loss gradient.

Used by both the unit suite and the acceptance suite: builds the small
double-precision configuration, computes the autograd gradient of the CRF
negative log-likelihood through the whole network, and compares it against
central differences on a seeded sample of entries in every parameter tensor.
"""

from __future__ import annotations

import numpy as np
import torch

from bcdlog.mask_codec import pad_to_multiple_of_four
from bcdlog.model import BcdTagger, tiny_config
from bcdlog.vocab import build_vocabulary

FD_STEP = 1e-5


def _loss(model, ids, lengths, labels, group_lengths):
    emissions = model(ids, lengths)
    return model.crf.nll(emissions, labels, group_lengths).mean()


def relative_errors_by_parameter(
    seed: int, max_entries_per_tensor: int = 48
) -> dict[str, float]:
    """Norm-based relative error per parameter tensor, analytic vs central FD."""
    torch.manual_seed(seed)
    model = BcdTagger(tiny_config()).double().eval()  # dropout off, float64

    vocab = build_vocabulary(["abcdefgh 0123 xyz=/."])
    rng = np.random.default_rng(seed)
    alphabet = [ch for ch in vocab.char_to_id if ch != " "]
    message = "".join(rng.choice(alphabet) for _ in range(11))
    padded = pad_to_multiple_of_four(message)
    ids = torch.tensor([vocab.encode(padded)], dtype=torch.long)
    lengths = torch.tensor([len(padded)], dtype=torch.long)
    n_groups = len(padded) // 4
    labels = torch.tensor([rng.integers(0, 16, size=n_groups).tolist()])
    group_lengths = torch.tensor([n_groups], dtype=torch.long)

    model.zero_grad()
    loss = _loss(model, ids, lengths, labels, group_lengths)
    loss.backward()

    errors: dict[str, float] = {}
    for name, param in model.named_parameters():
        assert param.grad is not None, name
        flat = param.detach().view(-1)
        grad = param.grad.detach().view(-1)
        count = flat.numel()
        picks = (
            np.arange(count)
            if count <= max_entries_per_tensor
            else np.sort(rng.choice(count, size=max_entries_per_tensor, replace=False))
        )
        analytic = np.empty(len(picks))
        numeric = np.empty(len(picks))
        with torch.no_grad():
            for row, index in enumerate(picks):
                original = float(flat[index])
                flat[index] = original + FD_STEP
                up = float(_loss(model, ids, lengths, labels, group_lengths))
                flat[index] = original - FD_STEP
                down = float(_loss(model, ids, lengths, labels, group_lengths))
                flat[index] = original
                analytic[row] = float(grad[index])
                numeric[row] = (up - down) / (2 * FD_STEP)
        denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
        errors[name] = float(np.linalg.norm(analytic - numeric) / denom)
    return errors
