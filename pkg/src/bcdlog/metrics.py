"""Parse-quality metrics over paired predicted and ground-truth corpora.

Three headline numbers:

* parsing accuracy: fraction of messages whose predicted template string
  equals the ground-truth template string exactly, no normalization;
* template F1: a predicted template counts as correct when its string equals
  some ground-truth template and (by default) it covers exactly the same set
  of messages; precision and recall are over distinct template strings;
* mask agreement: fraction of messages whose predicted parameter mask equals
  the ground-truth mask at every character, with the per-character agreement
  rate reported alongside as an auxiliary view.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping, Sequence


@dataclass(frozen=True)
class ParseEntry:
    message_id: int
    message: str
    template: str


class ParsedCorpus:
    """Ordered parse results plus an index from template to covered ids."""

    def __init__(self, entries: Sequence[ParseEntry]):
        self.entries = list(entries)
        seen: set[int] = set()
        index: dict[str, set[int]] = {}
        for entry in self.entries:
            if entry.message_id in seen:
                raise ValueError(f"duplicate message_id {entry.message_id}")
            seen.add(entry.message_id)
            index.setdefault(entry.template, set()).add(entry.message_id)
        self.template_index: dict[str, frozenset[int]] = {
            t: frozenset(ids) for t, ids in index.items()
        }

    def __len__(self) -> int:
        return len(self.entries)

    def template_of(self) -> dict[int, str]:
        return {e.message_id: e.template for e in self.entries}


def _check_same_ids(pred: ParsedCorpus, gt: ParsedCorpus) -> None:
    pred_ids = {e.message_id for e in pred.entries}
    gt_ids = {e.message_id for e in gt.entries}
    if pred_ids != gt_ids:
        missing = sorted(gt_ids - pred_ids)[:5]
        extra = sorted(pred_ids - gt_ids)[:5]
        raise ValueError(
            f"corpora cover different messages (missing {missing}, extra {extra})"
        )
    if not pred_ids:
        raise ValueError("corpora are empty")


def parsing_accuracy(pred: ParsedCorpus, gt: ParsedCorpus) -> float:
    _check_same_ids(pred, gt)
    gt_templates = gt.template_of()
    correct = sum(
        1 for e in pred.entries if e.template == gt_templates[e.message_id]
    )
    return correct / len(pred)


def template_f1(
    pred: ParsedCorpus, gt: ParsedCorpus, string_only: bool = False
) -> tuple[float, float, float]:
    """(precision, recall, f1) over distinct templates.

    ``string_only`` relaxes correctness to string equality with any
    ground-truth template, ignoring message grouping.
    """
    _check_same_ids(pred, gt)
    correct = 0
    for template, covered in pred.template_index.items():
        gt_covered = gt.template_index.get(template)
        if gt_covered is None:
            continue
        if string_only or covered == gt_covered:
            correct += 1
    precision = correct / len(pred.template_index)
    recall = correct / len(gt.template_index)
    if precision + recall == 0:
        return 0.0, 0.0, 0.0
    f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def parameter_mask_agreement(
    pred_masks: Sequence[Sequence[int]], gt_masks: Sequence[Sequence[int]]
) -> tuple[float, float]:
    """(exact per-message agreement, per-character agreement)."""
    if len(pred_masks) != len(gt_masks):
        raise ValueError(
            f"{len(pred_masks)} predicted masks vs {len(gt_masks)} ground-truth"
        )
    if not pred_masks:
        raise ValueError("no masks to compare")
    exact = 0
    matching_chars = 0
    total_chars = 0
    for row, (pm, gm) in enumerate(zip(pred_masks, gt_masks)):
        if len(pm) != len(gm):
            raise ValueError(f"mask length mismatch at row {row}")
        hits = sum(1 for a, b in zip(pm, gm) if a == b)
        matching_chars += hits
        total_chars += len(pm)
        if hits == len(pm):
            exact += 1
    pma = exact / len(pred_masks)
    per_char = matching_chars / total_chars if total_chars else 1.0
    return pma, per_char


@dataclass
class EvalReport:
    pa: float
    fta_precision: float
    fta_recall: float
    fta: float
    pma: float
    per_char: float
    messages: int
    gt_templates: int
    predicted_templates: int
    alignment_failures: int

    CSV_COLUMNS = (
        "pa", "fta_precision", "fta_recall", "fta", "pma", "per_char",
        "messages", "gt_templates", "predicted_templates", "alignment_failures",
    )

    def to_text(self) -> str:
        lines = [
            "metric                      value",
            f"parsing accuracy (PA)       {self.pa:.4f}",
            f"template precision          {self.fta_precision:.4f}",
            f"template recall             {self.fta_recall:.4f}",
            f"template F1 (FTA)           {self.fta:.4f}",
            f"mask agreement (PMA)        {self.pma:.4f}",
            f"per-char agreement          {self.per_char:.4f}",
            f"messages                    {self.messages}",
            f"ground-truth templates      {self.gt_templates}",
            f"predicted templates         {self.predicted_templates}",
            f"alignment failures          {self.alignment_failures}",
        ]
        return "\n".join(lines)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(self.CSV_COLUMNS)
        writer.writerow(
            [
                f"{self.pa:.6f}", f"{self.fta_precision:.6f}",
                f"{self.fta_recall:.6f}", f"{self.fta:.6f}",
                f"{self.pma:.6f}", f"{self.per_char:.6f}",
                self.messages, self.gt_templates,
                self.predicted_templates, self.alignment_failures,
            ]
        )
        return buffer.getvalue()


def build_report(
    pred: ParsedCorpus,
    gt: ParsedCorpus,
    pred_masks: Mapping[int, Sequence[int]] | None = None,
    gt_masks: Mapping[int, Sequence[int]] | None = None,
    alignment_failures: int = 0,
    string_only: bool = False,
) -> EvalReport:
    """Aggregate the three metrics plus corpus counts.

    Masks are keyed by message id; PMA is computed over the ids present in
    both mappings (ids whose ground-truth mask could not be derived are the
    alignment failures, counted but excluded from PMA).
    """
    pa = parsing_accuracy(pred, gt)
    precision, recall, f1 = template_f1(pred, gt, string_only=string_only)
    if pred_masks and gt_masks:
        shared = sorted(set(pred_masks) & set(gt_masks))
        pma, per_char = parameter_mask_agreement(
            [pred_masks[i] for i in shared], [gt_masks[i] for i in shared]
        )
    else:
        pma, per_char = 0.0, 0.0
    return EvalReport(
        pa=pa,
        fta_precision=precision,
        fta_recall=recall,
        fta=f1,
        pma=pma,
        per_char=per_char,
        messages=len(pred),
        gt_templates=len(gt.template_index),
        predicted_templates=len(pred.template_index),
        alignment_failures=alignment_failures,
    )
