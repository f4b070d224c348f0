"""Synthetic annotated log corpora for demos, tests, and benchmarks."""

from __future__ import annotations

import csv
import random
from typing import Callable, Sequence

Filler = Callable[[random.Random], str]


def _digits(width: int) -> Filler:
    return lambda rng: "".join(rng.choice("0123456789") for _ in range(width))


def _hexes(width: int) -> Filler:
    return lambda rng: "".join(rng.choice("0123456789abcdef") for _ in range(width))


def _word(width: int) -> Filler:
    return lambda rng: "".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(width))


def _octets(rng: random.Random) -> str:
    return ".".join(f"{rng.randrange(256):03d}" for _ in range(4))


# Each entry: (template string, fillers for its placeholders, in order).
# Heads are distinct literals so no template can match another's messages,
# and every parameter is a whole token of fixed width.
BASE_TEMPLATES: list[tuple[str, tuple[Filler, ...]]] = [
    ("core0 boot completed in <*> ms", (_digits(4),)),
    ("user <*> logged in from <*>", (_word(6), _octets)),
    ("disk sda1 usage at <*> percent", (_digits(2),)),
    ("session <*> closed after <*> seconds", (_hexes(8), _digits(3))),
    ("service restart requested by <*>", (_word(5),)),
    ("packet drop on eth0 count <*>", (_digits(5),)),
    ("job <*> finished with status <*>", (_hexes(6), _word(4))),
    ("cache flush took <*> ms for <*> entries", (_digits(3), _digits(4))),
    ("link up on port <*> speed <*> mbps", (_digits(2), _digits(4))),
    ("temp sensor <*> reads <*> celsius", (_digits(2), _digits(2))),
    ("auth failure for <*> from host <*>", (_word(6), _hexes(8))),
    ("backup volume <*> verified", (_word(4),)),
]


def render_line(
    template: str, fillers: Sequence[Filler], rng: random.Random
) -> str:
    parts = template.split("<*>")
    out = [parts[0]]
    for literal, filler in zip(parts[1:], fillers):
        out.append(filler(rng))
        out.append(literal)
    return "".join(out)


def generate_corpus(
    num_templates: int,
    lines_per_template: int,
    seed: int,
    shuffle: bool = True,
) -> list[tuple[str, str]]:
    """(message, template) pairs drawn from the base template pool."""
    if not 1 <= num_templates <= len(BASE_TEMPLATES):
        raise ValueError(f"num_templates must be in [1, {len(BASE_TEMPLATES)}]")
    rng = random.Random(seed)
    rows: list[tuple[str, str]] = []
    for template, fillers in BASE_TEMPLATES[:num_templates]:
        for _ in range(lines_per_template):
            rows.append((render_line(template, fillers, rng), template))
    if shuffle:
        rng.shuffle(rows)
    return rows


def generate_unique_corpus(num_lines: int, seed: int) -> list[tuple[str, str]]:
    """One message per template, each template distinct (cold-cache workload)."""
    rng = random.Random(seed)
    rows = []
    for i in range(num_lines):
        template = f"task{i:05d} step <*> completed with code <*>"
        fillers = (_digits(3), _digits(2))
        rows.append((render_line(template, fillers, rng), template))
    return rows


def corpus_to_csv(rows: Sequence[tuple[str, str]], path) -> None:
    """Write a structured-log CSV with LineId, Content, EventTemplate columns."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["LineId", "Content", "EventTemplate"])
        for i, (message, template) in enumerate(rows, start=1):
            writer.writerow([i, message, template])
