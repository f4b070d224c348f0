"""Command-line surface: train, parse, eval, and bench subcommands.

Input is a structured-log CSV with a ``Content`` column (the raw message) and,
for train/eval, an ``EventTemplate`` column (the annotated template). Errors
exit nonzero after printing a single machine-readable JSON line to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

import torch

from .cache import ParseCache, parse_messages
from .mask_codec import AlignmentError, derive_ground_truth_mask, mask_to_string
from .metrics import ParseEntry, ParsedCorpus, build_report
from .model import (
    BcdTagger,
    ModelConfig,
    load_checkpoint,
    predict_mask,
    save_checkpoint,
    with_max_seq_len,
)
from .training import TrainConfig, build_training_set, train
from .vocab import Vocabulary, build_vocabulary


class CliError(Exception):
    pass


@dataclass
class LoghubRecord:
    line_id: int
    content: str
    event_template: str | None = None


@dataclass
class RunConfig:
    input: str | None = None
    checkpoint: str | None = None
    out: str | None = None
    seed: int = 0
    cache: bool = True
    max_seq_len: int | None = None  # None: keep the checkpoint's value
    batch_size: int = 16
    threads: int = 1
    fta_string_only: bool = False

    def __post_init__(self) -> None:
        if self.threads < 1 or self.batch_size < 1:
            raise CliError("threads and batch_size must be >= 1")
        if self.max_seq_len is not None and (
            self.max_seq_len < 4 or self.max_seq_len % 4 != 0
        ):
            raise CliError("max_seq_len must be a positive multiple of 4")


def ingest_csv(path: str, require_template: bool) -> list[LoghubRecord]:
    """Read records in file order; quoting and embedded commas per RFC 4180."""
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot open {path}: {exc}") from exc
    with handle:
        reader = csv.DictReader(handle)
        columns = reader.fieldnames or []
        if "Content" not in columns:
            raise CliError(f"{path} has no Content column (found {columns})")
        if require_template and "EventTemplate" not in columns:
            raise CliError(f"{path} has no EventTemplate column (found {columns})")
        records = []
        for row_num, row in enumerate(reader, start=1):
            content = row.get("Content")
            if content is None:
                raise CliError(f"{path} row {row_num}: missing Content field")
            raw_id = row.get("LineId")
            try:
                line_id = int(raw_id) if raw_id not in (None, "") else row_num
            except ValueError:
                line_id = row_num
            template = row.get("EventTemplate")
            if require_template and template is None:
                raise CliError(f"{path} row {row_num}: missing EventTemplate field")
            records.append(LoghubRecord(line_id, content, template))
    return records


def _section(raw: dict, name: str, allowed: set[str]) -> dict:
    section = raw.get(name, {})
    if not isinstance(section, dict):
        raise CliError(f"config section {name!r} must be an object")
    unknown = set(section) - allowed
    if unknown:
        raise CliError(f"unknown keys in config section {name!r}: {sorted(unknown)}")
    return section


def load_config_file(path: str) -> dict:
    """JSON config with optional ``run``, ``model``, and ``train`` sections."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise CliError("config file must contain a JSON object")
    unknown = set(raw) - {"run", "model", "train"}
    if unknown:
        raise CliError(f"unknown config sections: {sorted(unknown)}")
    return {
        "run": _section(raw, "run", {f.name for f in fields(RunConfig)}),
        "model": _section(raw, "model", {f.name for f in fields(ModelConfig)}),
        "train": _section(raw, "train", {f.name for f in fields(TrainConfig)}),
    }


def _resolve(args: argparse.Namespace) -> tuple[RunConfig, dict, dict]:
    file_cfg = (
        load_config_file(args.config)
        if getattr(args, "config", None)
        else {"run": {}, "model": {}, "train": {}}
    )
    run_kwargs = dict(file_cfg["run"])
    for key in ("input", "checkpoint", "out", "seed", "threads", "max_seq_len"):
        value = getattr(args, key, None)
        if value is not None:
            run_kwargs[key] = value
    if getattr(args, "no_cache", False):
        run_kwargs["cache"] = False
    if getattr(args, "fta_string_only", False):
        run_kwargs["fta_string_only"] = True
    try:
        run = RunConfig(**run_kwargs)
    except TypeError as exc:
        raise CliError(f"bad run configuration: {exc}") from exc
    return run, file_cfg["model"], file_cfg["train"]


def _build_model_config(run: RunConfig, model_section: dict) -> ModelConfig:
    kwargs = dict(model_section)
    if run.max_seq_len is not None:
        kwargs["max_seq_len"] = run.max_seq_len
    try:
        return ModelConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad model configuration: {exc}") from exc


def _build_train_config(run: RunConfig, train_section: dict) -> TrainConfig:
    kwargs = dict(train_section)
    kwargs.setdefault("seed", run.seed)
    kwargs.setdefault("batch_size", run.batch_size)
    try:
        return TrainConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad train configuration: {exc}") from exc


def _load_model(run: RunConfig) -> tuple[BcdTagger, Vocabulary]:
    if not run.checkpoint:
        raise CliError("--checkpoint is required")
    model, vocab = load_checkpoint(run.checkpoint)
    if run.max_seq_len is not None:
        model = with_max_seq_len(model, run.max_seq_len)
    return model, vocab


def _require_input(run: RunConfig) -> str:
    if not run.input:
        raise CliError("--input is required")
    return run.input


def cmd_train(run: RunConfig, model_section: dict, train_section: dict) -> int:
    records = ingest_csv(_require_input(run), require_template=True)
    if not records:
        raise CliError("training input is empty")
    if not run.checkpoint:
        raise CliError("--checkpoint (output path) is required for train")
    train_config = _build_train_config(run, train_section)
    model_config = _build_model_config(run, model_section)
    corpus = [(r.content, r.event_template or "") for r in records]
    examples, failures = build_training_set(
        corpus, cap=train_config.per_template_cap, seed=train_config.seed
    )
    if not examples:
        raise CliError("no alignable training examples")
    vocab = build_vocabulary(ex.message for ex in examples)
    result = train(examples, vocab, model_config, train_config)
    save_checkpoint(result.model, vocab, run.checkpoint)
    print(
        f"trained on {len(examples)} examples "
        f"({len(failures)} alignment failures excluded), "
        f"final mean NLL {result.epoch_losses[-1]:.4f}, "
        f"checkpoint written to {run.checkpoint}"
    )
    return 0


def _run_pipeline(
    run: RunConfig, records: Sequence[LoghubRecord]
) -> tuple[list, ParseCache | None]:
    model, vocab = _load_model(run)
    cache = ParseCache() if run.cache else None
    outcomes = parse_messages(
        (r.content for r in records),
        lambda message: predict_mask(model, vocab, message),
        cache,
    )
    return outcomes, cache


def _write_parse_outputs(
    out_dir: str, records: Sequence[LoghubRecord], outcomes: Sequence
) -> tuple[Path, int]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    parsed_path = out / "parsed.csv"
    with open(parsed_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["LineId", "Content", "EventTemplate"])
        for record, outcome in zip(records, outcomes):
            writer.writerow([record.line_id, record.content, outcome.template])
    seen: dict[str, None] = {}
    for outcome in outcomes:
        seen.setdefault(outcome.template, None)
    with open(out / "templates.txt", "w", encoding="utf-8") as handle:
        for template in seen:
            handle.write(template + "\n")
    with open(out / "masks.txt", "w", encoding="utf-8") as handle:
        for outcome in outcomes:
            handle.write(mask_to_string(outcome.mask) + "\n")
    return parsed_path, len(seen)


def cmd_parse(run: RunConfig, model_section: dict, train_section: dict) -> int:
    records = ingest_csv(_require_input(run), require_template=False)
    if not run.out:
        raise CliError("--out is required for parse")
    outcomes, cache = _run_pipeline(run, records)
    parsed_path, n_templates = _write_parse_outputs(run.out, records, outcomes)
    line = f"parsed {len(records)} lines into {n_templates} templates -> {parsed_path}"
    if cache is not None:
        line += f" (cache hit rate {cache.stats.hit_rate:.3f})"
    print(line)
    return 0


def cmd_eval(run: RunConfig, model_section: dict, train_section: dict) -> int:
    records = ingest_csv(_require_input(run), require_template=True)
    if not records:
        raise CliError("eval input is empty")
    outcomes, _ = _run_pipeline(run, records)
    pred = ParsedCorpus(
        [ParseEntry(r.line_id, r.content, o.template) for r, o in zip(records, outcomes)]
    )
    gt = ParsedCorpus(
        [ParseEntry(r.line_id, r.content, r.event_template or "") for r in records]
    )
    pred_masks = {r.line_id: o.mask for r, o in zip(records, outcomes)}
    gt_masks = {}
    failures = 0
    for record in records:
        try:
            gt_masks[record.line_id] = derive_ground_truth_mask(
                record.content, record.event_template or ""
            )
        except AlignmentError:
            failures += 1
    report = build_report(
        pred, gt, pred_masks, gt_masks,
        alignment_failures=failures, string_only=run.fta_string_only,
    )
    print(report.to_text())
    if run.out:
        out = Path(run.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(report.to_text() + "\n", encoding="utf-8")
        (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    return 0


@dataclass
class BenchReport:
    lines: int
    cacheless_seconds: float
    cached_seconds: float
    cacheless_lps: float
    cached_lps: float
    speedup: float
    hit_rate: float

    def to_text(self) -> str:
        return "\n".join(
            [
                f"lines                 {self.lines}",
                f"cacheless lines/sec   {self.cacheless_lps:.1f}",
                f"cached lines/sec      {self.cached_lps:.1f}",
                f"speedup               {self.speedup:.2f}x",
                f"cache hit rate        {self.hit_rate:.3f}",
            ]
        )


def run_bench(messages: Sequence[str], predict_fn, warmup: int = 16) -> BenchReport:
    """Time the parse loop only; a short untimed warm-up precedes measurement.

    Both timed passes run over the full message list: first cacheless, then
    with a fresh cache (so the hit rate reflects a cold-start replay).
    """
    if not messages:
        raise ValueError("benchmark corpus is empty")
    parse_messages(messages[: min(warmup, len(messages))], predict_fn, None)

    start = time.perf_counter()
    parse_messages(messages, predict_fn, None)
    cacheless = time.perf_counter() - start

    cache = ParseCache()
    start = time.perf_counter()
    parse_messages(messages, predict_fn, cache)
    cached = time.perf_counter() - start

    return BenchReport(
        lines=len(messages),
        cacheless_seconds=cacheless,
        cached_seconds=cached,
        cacheless_lps=len(messages) / cacheless,
        cached_lps=len(messages) / cached,
        speedup=cacheless / cached,
        hit_rate=cache.stats.hit_rate,
    )


def cmd_bench(run: RunConfig, model_section: dict, train_section: dict) -> int:
    records = ingest_csv(_require_input(run), require_template=False)
    if not records:
        raise CliError("benchmark input is empty")
    model, vocab = _load_model(run)
    report = run_bench(
        [r.content for r in records],
        lambda message: predict_mask(model, vocab, message),
    )
    print(report.to_text())
    if run.out:
        out = Path(run.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "bench.csv", "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(
                ["lines", "cacheless_lps", "cached_lps", "speedup", "hit_rate"]
            )
            writer.writerow(
                [
                    report.lines, f"{report.cacheless_lps:.3f}",
                    f"{report.cached_lps:.3f}", f"{report.speedup:.3f}",
                    f"{report.hit_rate:.4f}",
                ]
            )
    return 0


COMMANDS = {
    "train": cmd_train,
    "parse": cmd_parse,
    "eval": cmd_eval,
    "bench": cmd_bench,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bcdlog",
        description="Character-level log template extraction with a parsing cache",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("train", "train a tagger on an annotated CSV and write a checkpoint"),
        ("parse", "extract templates for a CSV of raw messages"),
        ("eval", "parse and score against annotated templates"),
        ("bench", "measure cached vs cacheless throughput"),
    ]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--input", help="input CSV path")
        cmd.add_argument("--checkpoint", help="checkpoint path (output for train)")
        cmd.add_argument("--out", help="output directory")
        cmd.add_argument("--config", help="JSON config file with run/model/train sections")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--threads", type=int, default=None)
        cmd.add_argument("--max-seq-len", dest="max_seq_len", type=int, default=None)
        cmd.add_argument(
            "--no-cache", dest="no_cache", action="store_true",
            help="disable the parsing cache",
        )
        cmd.add_argument(
            "--fta-string-only", dest="fta_string_only", action="store_true",
            help="count a template correct on string match alone",
        )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run, model_section, train_section = _resolve(args)
        torch.set_num_threads(run.threads)
        return COMMANDS[args.command](run, model_section, train_section)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
