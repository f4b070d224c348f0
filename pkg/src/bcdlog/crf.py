"""Linear-chain CRF over the 16 packed-bit label classes.

Scores a label path y_1..y_N as

    start[y_1] + sum_n emissions[n, y_n] + sum_n trans[y_n, y_{n+1}] + end[y_N]

and normalizes over all paths with the exact forward algorithm in log space.
Decoding uses Viterbi with ties broken toward the lowest label index at every
backtracking step, which makes decoding fully deterministic.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import torch
import torch.nn as nn


class LinearChainCRF(nn.Module):
    def __init__(self, num_labels: int):
        super().__init__()
        if num_labels <= 0:
            raise ValueError(f"invalid number of labels: {num_labels}")
        self.num_labels = num_labels
        self.transitions = nn.Parameter(torch.empty(num_labels, num_labels))
        self.start_transitions = nn.Parameter(torch.empty(num_labels))
        self.end_transitions = nn.Parameter(torch.empty(num_labels))
        self.reset_parameters()

    def reset_parameters(self) -> None:
        nn.init.uniform_(self.transitions, -0.1, 0.1)
        nn.init.uniform_(self.start_transitions, -0.1, 0.1)
        nn.init.uniform_(self.end_transitions, -0.1, 0.1)

    def nll(
        self,
        emissions: torch.Tensor,
        labels: torch.Tensor,
        lengths: torch.Tensor,
    ) -> torch.Tensor:
        """Per-sequence negative log-likelihood.

        emissions: (B, N, C) scores, labels: (B, N) gold indices, lengths: (B,)
        valid step counts. Positions at or beyond a sequence's length are
        ignored entirely; label values there only need to be valid indices.
        """
        if emissions.dim() != 3 or emissions.size(2) != self.num_labels:
            raise ValueError(f"emissions must be (B, N, {self.num_labels})")
        if labels.shape != emissions.shape[:2]:
            raise ValueError("labels shape must match emissions (B, N)")
        if torch.any(lengths < 1) or torch.any(lengths > emissions.size(1)):
            raise ValueError("lengths must lie in [1, N]")
        return self._log_partition(emissions, lengths) - self._path_score(
            emissions, labels, lengths
        )

    def sequence_nll(self, emissions: torch.Tensor, labels: Sequence[int]) -> float:
        """NLL of one unbatched (N, C) emission matrix against a label list."""
        if emissions.dim() != 2:
            raise ValueError("sequence emissions must be (N, C)")
        n = emissions.size(0)
        if len(labels) != n:
            raise ValueError(f"got {len(labels)} labels for {n} emission rows")
        lab = torch.as_tensor(list(labels), dtype=torch.long).unsqueeze(0)
        lens = torch.tensor([n], dtype=torch.long)
        return float(self.nll(emissions.unsqueeze(0), lab, lens)[0].detach())

    def _path_score(
        self, emissions: torch.Tensor, labels: torch.Tensor, lengths: torch.Tensor
    ) -> torch.Tensor:
        batch, n, _ = emissions.shape
        step = torch.arange(n, device=emissions.device)
        valid = (step.unsqueeze(0) < lengths.unsqueeze(1)).to(emissions.dtype)
        emit = emissions.gather(2, labels.unsqueeze(2)).squeeze(2)
        score = self.start_transitions[labels[:, 0]] + (emit * valid).sum(dim=1)
        if n > 1:
            trans = self.transitions[labels[:, :-1], labels[:, 1:]]
            score = score + (trans * valid[:, 1:]).sum(dim=1)
        last = (lengths - 1).clamp(min=0)
        last_labels = labels.gather(1, last.unsqueeze(1)).squeeze(1)
        return score + self.end_transitions[last_labels]

    def _log_partition(
        self, emissions: torch.Tensor, lengths: torch.Tensor
    ) -> torch.Tensor:
        batch, n, _ = emissions.shape
        alpha = self.start_transitions.unsqueeze(0) + emissions[:, 0]
        for step in range(1, n):
            inner = alpha.unsqueeze(2) + self.transitions.unsqueeze(0)
            nxt = torch.logsumexp(inner, dim=1) + emissions[:, step]
            active = (lengths > step).unsqueeze(1)
            alpha = torch.where(active, nxt, alpha)
        return torch.logsumexp(alpha + self.end_transitions.unsqueeze(0), dim=1)

    @torch.no_grad()
    def viterbi(self, emissions: torch.Tensor) -> list[int]:
        """Best label path for one (N, C) emission matrix.

        Runs in float64 numpy so argmax tie handling (first, i.e. lowest,
        index wins) is identical everywhere.
        """
        if emissions.dim() != 2 or emissions.size(1) != self.num_labels:
            raise ValueError(f"emissions must be (N, {self.num_labels})")
        n = emissions.size(0)
        if n == 0:
            raise ValueError("cannot decode empty emissions")
        em = emissions.detach().cpu().numpy().astype(np.float64)
        trans = self.transitions.detach().cpu().numpy().astype(np.float64)
        start = self.start_transitions.detach().cpu().numpy().astype(np.float64)
        end = self.end_transitions.detach().cpu().numpy().astype(np.float64)

        score = start + em[0]
        back = np.zeros((n, self.num_labels), dtype=np.int64)
        for step in range(1, n):
            cand = score[:, None] + trans
            back[step] = np.argmax(cand, axis=0)
            score = cand[back[step], np.arange(self.num_labels)] + em[step]
        last = int(np.argmax(score + end))
        path = [last]
        for step in range(n - 1, 0, -1):
            path.append(int(back[step, path[-1]]))
        path.reverse()
        return path
