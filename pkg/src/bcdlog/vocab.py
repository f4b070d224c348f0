"""Fixed-size character vocabulary with reserved padding and unknown ids."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .mask_codec import PAD_CHAR

PAD_ID = 0  # whitespace doubles as the padding character
UNK_ID = 1
VOCAB_SIZE = 100
_RESERVED = 2


@dataclass(frozen=True)
class Vocabulary:
    """Maps code points to ids in [0, num_ids). Unknown characters encode to UNK.

    The id space is fixed at ``num_ids`` regardless of how many characters the
    corpus actually contained; the embedding table always has that many rows.
    """

    char_to_id: dict[str, int]
    num_ids: int = field(default=VOCAB_SIZE)

    def __post_init__(self) -> None:
        if self.char_to_id.get(PAD_CHAR) != PAD_ID:
            raise ValueError("whitespace must map to the PAD id")
        for ch, i in self.char_to_id.items():
            if len(ch) != 1:
                raise ValueError(f"vocabulary key {ch!r} is not a single code point")
            if i == UNK_ID:
                raise ValueError("no character may claim the UNK id")
            if not 0 <= i < self.num_ids:
                raise ValueError(f"id {i} for {ch!r} outside [0, {self.num_ids})")

    @property
    def size(self) -> int:
        return self.num_ids

    def encode(self, text: str) -> list[int]:
        get = self.char_to_id.get
        return [get(ch, UNK_ID) for ch in text]

    def to_dict(self) -> dict[str, int]:
        return dict(self.char_to_id)

    @classmethod
    def from_dict(cls, mapping: dict[str, int], num_ids: int = VOCAB_SIZE) -> "Vocabulary":
        return cls(char_to_id=dict(mapping), num_ids=num_ids)


def build_vocabulary(corpus: Iterable[str], num_ids: int = VOCAB_SIZE) -> Vocabulary:
    """Build a vocabulary from the most frequent characters of a corpus.

    Whitespace always occupies the PAD slot and UNK is reserved, leaving
    ``num_ids - 2`` slots for the most frequent other characters. Ties are
    broken by ascending code point so the result is deterministic.
    """
    counts: Counter[str] = Counter()
    n_seqs = 0
    for seq in corpus:
        n_seqs += 1
        counts.update(seq)
    if n_seqs == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    counts.pop(PAD_CHAR, None)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], ord(kv[0])))
    char_to_id = {PAD_CHAR: PAD_ID}
    for offset, (ch, _) in enumerate(ranked[: num_ids - _RESERVED]):
        char_to_id[ch] = _RESERVED + offset
    return Vocabulary(char_to_id=char_to_id, num_ids=num_ids)
