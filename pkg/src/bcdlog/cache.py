"""Fixed-depth prefix-tree cache of previously produced templates.

The tree is three levels deep: token count, then first token, then second
token. Placeholder tokens (exactly ``<*>``) occupy a wildcard branch at their
level; lookups walk both the literal branch for the message's token and the
wildcard branch. Messages or templates with fewer than two tokens simply stop
at the deepest level they reach, so short inputs are still cacheable.

A hit is only reported when the candidate template's alignment mask renders
back to that exact template, which keeps every hit consistent with what the
model-side pipeline would emit for a message of that shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .mask_codec import (
    AlignmentError,
    PLACEHOLDER,
    derive_ground_truth_mask,
    render_template,
)

TREE_DEPTH = 3  # token count plus two token levels


def tokenize(text: str) -> list[str]:
    """Split on runs of whitespace. ``<*>`` is always its own token."""
    return text.split()


def match_template(template: str, message: str) -> list[int] | None:
    """Mask aligning ``template`` over ``message``, or None if it does not fit.

    The mask must render back to the template; alignments that only succeed by
    letting a placeholder cover the empty string are rejected, since their
    rendered template would drop that placeholder.
    """
    try:
        mask = derive_ground_truth_mask(message, template)
    except AlignmentError:
        return None
    if render_template(message, mask) != template:
        return None
    return mask


@dataclass
class CacheStats:
    hits: int = 0
    misses: int = 0
    ambiguous_hits: int = 0

    @property
    def lookups(self) -> int:
        return self.hits + self.misses

    @property
    def hit_rate(self) -> float:
        return self.hits / self.lookups if self.lookups else 0.0


class _Node:
    __slots__ = ("children", "leaf")

    def __init__(self) -> None:
        self.children: dict[str, _Node] = {}
        self.leaf: list[tuple[int, str]] = []  # (insertion order, template)


class ParseCache:
    """Single-writer, multi-reader template store.

    Lookups never mutate the tree; inserts are idempotent per template string.
    """

    def __init__(self) -> None:
        self._by_count: dict[int, _Node] = {}
        self._known: set[str] = set()
        self._templates: list[str] = []
        self.stats = CacheStats()

    def __len__(self) -> int:
        return len(self._templates)

    def templates(self) -> list[str]:
        """Stored templates in insertion order."""
        return list(self._templates)

    def insert(self, template: str) -> None:
        if template in self._known:
            return
        order = len(self._templates)
        self._known.add(template)
        self._templates.append(template)
        tokens = tokenize(template)
        node = self._by_count.setdefault(len(tokens), _Node())
        for token in tokens[: TREE_DEPTH - 1]:
            node = node.children.setdefault(token, _Node())
        node.leaf.append((order, template))

    def lookup(self, message: str) -> tuple[str, list[int]] | None:
        tokens = tokenize(message)
        root = self._by_count.get(len(tokens))
        if root is None:
            self.stats.misses += 1
            return None
        frontier = [root]
        for token in tokens[: TREE_DEPTH - 1]:
            nxt = []
            for node in frontier:
                child = node.children.get(token)
                if child is not None:
                    nxt.append(child)
                wild = node.children.get(PLACEHOLDER)
                if wild is not None and wild is not child:
                    nxt.append(wild)
            frontier = nxt
            if not frontier:
                break
        candidates = sorted(
            (entry for node in frontier for entry in node.leaf),
            key=lambda entry: entry[0],
        )
        best: tuple[str, list[int]] | None = None
        matched = 0
        for _, template in candidates:
            mask = match_template(template, message)
            if mask is not None:
                matched += 1
                if best is None:
                    best = (template, mask)
        if best is None:
            self.stats.misses += 1
            return None
        self.stats.hits += 1
        if matched > 1:
            self.stats.ambiguous_hits += 1
        return best

    def dump(self, path) -> None:
        """One template per line, insertion order (warm-start format)."""
        with open(path, "w", encoding="utf-8") as handle:
            for template in self._templates:
                handle.write(template + "\n")

    @classmethod
    def load(cls, path) -> "ParseCache":
        cache = cls()
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                cache.insert(line.rstrip("\n"))
        return cache


@dataclass
class ParseOutcome:
    template: str
    mask: list[int]
    from_cache: bool


def parse_messages(
    messages: Iterable[str],
    predict_fn: Callable[[str], list[int]],
    cache: ParseCache | None = None,
) -> list[ParseOutcome]:
    """Run the parse loop: cache lookup, on miss predict and insert.

    With ``cache=None`` this is the cacheless pipeline. ``predict_fn`` maps a
    message to its parameter mask.
    """
    results: list[ParseOutcome] = []
    for message in messages:
        if cache is not None:
            hit = cache.lookup(message)
            if hit is not None:
                template, mask = hit
                results.append(ParseOutcome(template, mask, True))
                continue
        mask = predict_fn(message)
        template = render_template(message, mask)
        if cache is not None:
            cache.insert(template)
        results.append(ParseOutcome(template, mask, False))
    return results
