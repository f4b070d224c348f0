"""Parameter masks and their 4-bit group encoding.

A log message is treated as a sequence of Unicode code points. Its parameter
mask is a same-length sequence of bits: 1 where the character belongs to a
variable (parameter) region, 0 where it is static template text. Groups of
four consecutive bits are packed into a single decimal digit in [0, 15], which
is the label alphabet the tagger predicts over.

Templates are plain strings in which each maximal run of variable characters
is collapsed to the placeholder token ``<*>``.
"""

from __future__ import annotations

from typing import Sequence

PLACEHOLDER = "<*>"
PAD_CHAR = " "

__all__ = [
    "PLACEHOLDER",
    "PAD_CHAR",
    "MaskCodecError",
    "InvalidMaskError",
    "InvalidDigitError",
    "LengthMismatchError",
    "AlignmentError",
    "pad_to_multiple_of_four",
    "encode_mask",
    "decode_bcd",
    "render_template",
    "derive_ground_truth_mask",
    "mask_to_string",
    "mask_from_string",
]


class MaskCodecError(ValueError):
    """Base class for mask/codec contract violations."""


class InvalidMaskError(MaskCodecError):
    """A mask element is outside {0, 1}."""


class InvalidDigitError(MaskCodecError):
    """A packed digit is outside [0, 15]."""


class LengthMismatchError(MaskCodecError):
    """Sequence and mask (or digits and target length) disagree on length."""


class AlignmentError(Exception):
    """A template's literal segments cannot be placed over a message.

    Carries the offending pair so callers can log, skip, or abort.
    """

    def __init__(self, message: str, template: str, reason: str = ""):
        self.message_text = message
        self.template = template
        self.reason = reason
        detail = f": {reason}" if reason else ""
        super().__init__(
            f"cannot align template {template!r} to message {message!r}{detail}"
        )


def pad_to_multiple_of_four(seq: str) -> str:
    """Right-pad with whitespace to the smallest multiple-of-4 length."""
    return seq + PAD_CHAR * (-len(seq) % 4)


def _check_bits(mask: Sequence[int]) -> None:
    for b in mask:
        if b not in (0, 1):
            raise InvalidMaskError(f"mask element {b!r} is not 0 or 1")


def encode_mask(mask: Sequence[int]) -> list[int]:
    """Pack mask bits into per-4-bit-group decimal digits.

    The mask is zero-padded on the right to a multiple of 4 (mirroring the
    whitespace padding of the character sequence), then each group of four
    bits b0 b1 b2 b3 becomes the digit b0*8 + b1*4 + b2*2 + b3.
    """
    _check_bits(mask)
    bits = list(mask) + [0] * (-len(mask) % 4)
    return [
        bits[i] * 8 + bits[i + 1] * 4 + bits[i + 2] * 2 + bits[i + 3]
        for i in range(0, len(bits), 4)
    ]


def decode_bcd(digits: Sequence[int], original_length: int) -> list[int]:
    """Unpack digits back into mask bits, truncated to ``original_length``."""
    if original_length < 0:
        raise LengthMismatchError("original_length must be >= 0")
    if original_length > 4 * len(digits):
        raise LengthMismatchError(
            f"{len(digits)} digits cover {4 * len(digits)} bits, "
            f"need {original_length}"
        )
    bits: list[int] = []
    for d in digits:
        if not isinstance(d, int) or d < 0 or d > 15:
            raise InvalidDigitError(f"digit {d!r} is outside [0, 15]")
        bits.extend(((d >> 3) & 1, (d >> 2) & 1, (d >> 1) & 1, d & 1))
    return bits[:original_length]


def render_template(seq: str, mask: Sequence[int]) -> str:
    """Replace each maximal run of mask-1 characters with one ``<*>``."""
    if len(seq) != len(mask):
        raise LengthMismatchError(
            f"sequence length {len(seq)} != mask length {len(mask)}"
        )
    _check_bits(mask)
    out: list[str] = []
    in_run = False
    for ch, bit in zip(seq, mask):
        if bit == 0:
            out.append(ch)
            in_run = False
        elif not in_run:
            out.append(PLACEHOLDER)
            in_run = True
    return "".join(out)


def derive_ground_truth_mask(message: str, template: str) -> list[int]:
    """Align a template to a message and return the per-character mask.

    The template's literal segments (split on ``<*>``) are placed over the
    message in order, anchored at both ends. Placement is leftmost with
    backtracking, so repeated literals are handled correctly. Placeholders are
    first required to cover at least one character; only if no such placement
    exists is a second pass run in which placeholders may cover the empty
    string. Characters under literals get 0, the rest get 1.

    Raises AlignmentError when no placement exists. Worst case is exponential
    in the number of repeated literal occurrences, which is irrelevant at log
    message sizes.
    """
    literals = template.split(PLACEHOLDER)
    if len(literals) == 1:
        if message == template:
            return [0] * len(message)
        raise AlignmentError(message, template, "no placeholders and text differs")
    starts = _place_literals(message, literals, allow_empty=False)
    if starts is None:
        starts = _place_literals(message, literals, allow_empty=True)
    if starts is None:
        raise AlignmentError(message, template, "literal segments cannot be placed")
    mask = [1] * len(message)
    for start, lit in zip(starts, literals):
        for i in range(start, start + len(lit)):
            mask[i] = 0
    return mask


def _place_literals(
    message: str, literals: Sequence[str], allow_empty: bool
) -> list[int] | None:
    """Leftmost backtracking placement of literal segments; None on failure.

    First and last literals are anchored to the message boundaries. ``gap`` is
    the minimum width of the placeholder span between consecutive literals.
    """
    k = len(literals)
    if not message.startswith(literals[0]):
        return None
    last_start = len(message) - len(literals[-1])
    if last_start < 0 or not message.endswith(literals[-1]):
        return None
    gap = 0 if allow_empty else 1
    starts = [0] * k
    starts[-1] = last_start

    def place(i: int, min_start: int) -> bool:
        if i == k - 1:
            return min_start <= last_start
        pos = message.find(literals[i], min_start)
        while pos != -1:
            starts[i] = pos
            if place(i + 1, pos + len(literals[i]) + gap):
                return True
            pos = message.find(literals[i], pos + 1)
        return False

    if place(1, len(literals[0]) + gap):
        return list(starts)
    return None


def mask_to_string(mask: Sequence[int]) -> str:
    """Serialize a mask as a '0'/'1' string (fixture format)."""
    _check_bits(mask)
    return "".join(str(b) for b in mask)


def mask_from_string(text: str) -> list[int]:
    """Parse the '0'/'1' fixture format back into a mask."""
    mask: list[int] = []
    for ch in text:
        if ch == "0":
            mask.append(0)
        elif ch == "1":
            mask.append(1)
        else:
            raise InvalidMaskError(f"mask character {ch!r} is not '0' or '1'")
    return mask
