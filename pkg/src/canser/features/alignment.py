"""Word-level alignment tables (start, end, word) in 10 ms units."""

import math
import re
from dataclasses import dataclass
from typing import NamedTuple

from ..errors import InvalidInputError, ParseError, ValidationError

#: Alignment times count 10 ms frames.
UNITS_PER_SECOND = 100

SENTENCE_START = "<s>"
SENTENCE_END = "</s>"
SILENCE = "<sil>"
SPECIAL_TOKENS = frozenset({SENTENCE_START, SENTENCE_END, SILENCE})

_VARIANT_SUFFIX = re.compile(r"\(\d+\)$")


class Span(NamedTuple):
    start: int
    end: int
    word: str

    @property
    def length(self):
        return self.end - self.start + 1


def is_special(word):
    return word.lower() in SPECIAL_TOKENS


def normalize_word(word):
    """Lowercase and drop pronunciation-variant suffixes such as ``THE(2)``."""
    return _VARIANT_SUFFIX.sub("", word.strip()).lower()


@dataclass(frozen=True)
class AlignmentTable:
    """Ordered spans. Starts and ends strictly increase; after
    :func:`apply_overlap` neighbors may share units."""

    spans: tuple

    def __post_init__(self):
        object.__setattr__(self, "spans", tuple(Span(*s) for s in self.spans))
        if not self.spans:
            raise ValidationError("alignment table is empty")
        validate_spans(self.spans, allow_overlap=True)

    def __len__(self):
        return len(self.spans)

    def __iter__(self):
        return iter(self.spans)

    def __getitem__(self, i):
        return self.spans[i]

    @property
    def words(self):
        return [s.word for s in self.spans]

    @property
    def start(self):
        return self.spans[0].start

    @property
    def end(self):
        return self.spans[-1].end


def validate_spans(spans, allow_overlap=False):
    """Check ordering: ``end >= start`` and, unless overlaps are allowed,
    each span starts after the previous one ends."""
    for i, span in enumerate(spans):
        if span.start < 0 or span.end < span.start:
            raise ValidationError(f"span {i} {tuple(span)} has end before start")
        if i == 0:
            continue
        prev = spans[i - 1]
        if allow_overlap:
            ok = span.start > prev.start and span.end > prev.end
        else:
            ok = span.start > prev.end
        if not ok:
            raise ValidationError(
                f"span {i} {tuple(span)} is out of order after {tuple(prev)}"
            )


def parse_alignment(lines):
    """Parse ``start end word`` records (tab or space separated).

    A first line whose numeric fields do not parse is treated as a header.
    Blank lines are skipped. Gaps between spans are tolerated and later
    handled like silence; overlaps and reordering are rejected.
    """
    if isinstance(lines, str):
        lines = lines.splitlines()
    spans = []
    seen_content = False
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        first_content = not seen_content
        seen_content = True
        if len(fields) != 3:
            if first_content and not _is_int(fields[0]):
                continue
            raise ParseError(f"expected 3 fields, got {len(fields)}: {raw!r}", number)
        start, end, word = fields
        if not (_is_int(start) and _is_int(end)):
            if first_content:
                continue
            raise ParseError(f"start/end must be integers: {raw!r}", number)
        spans.append(Span(int(start), int(end), word))
    if not spans:
        raise ParseError("no alignment records found")
    validate_spans(spans)
    return AlignmentTable(tuple(spans))


def _is_int(text):
    try:
        int(text)
    except ValueError:
        return False
    return True


def format_alignment(table):
    return "".join(f"{s.start}\t{s.end}\t{s.word}\n" for s in table)


def read_alignment(path):
    with open(path, encoding="utf-8") as fh:
        return parse_alignment(fh.read())


def write_alignment(path, table):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_alignment(table))


def absorb_special_tokens(table):
    """Remove special tokens, handing their time to the neighboring words.

    Time between two words is split at its midpoint, the odd unit going to
    the right word. Leading and trailing special time goes entirely to the
    first and last word. The result tiles ``[table.start, table.end]``.
    """
    words = [list(s) for s in table if not is_special(s.word)]
    if not words:
        raise InvalidInputError("alignment table contains no words")
    words[0][0] = table.start
    words[-1][1] = table.end
    for left, right in zip(words, words[1:]):
        gap = right[0] - left[1] - 1
        if gap > 0:
            left[1] += gap // 2
            right[0] = left[1] + 1
    return AlignmentTable(tuple(Span(*w) for w in words))


def overlap_units(ratio, left_len, right_len):
    """Overlap (in units) for one boundary: half-up rounding of ratio x shorter span."""
    return int(math.floor(ratio * min(left_len, right_len) + 0.5))


def apply_overlap(table, ratio):
    """Widen every interior boundary so neighbors share ``ratio`` of the shorter span.

    The left span gains ``k // 2`` units and the right span ``k - k // 2``
    where ``k`` is the overlap for that boundary. Sizes come from the input
    table, so one span's two boundaries do not influence each other. The
    outer edges never move.
    """
    if not 0.0 <= ratio < 0.5:
        raise InvalidInputError(f"overlap ratio must lie in [0, 0.5), got {ratio}")
    spans = [list(s) for s in table]
    lo, hi = table.start, table.end
    for i in range(len(table) - 1):
        left, right = table[i], table[i + 1]
        k = overlap_units(ratio, left.length, right.length)
        spans[i][1] = min(hi, left.end + k // 2)
        spans[i + 1][0] = max(lo, right.start - (k - k // 2))
    return AlignmentTable(tuple(Span(*s) for s in spans))


def equal_segmentation(table):
    """Replace word spans with ``L`` equal pieces of the same overall range.

    Piece ``k`` starts at ``start + floor(k * N / L)`` where ``N`` is the
    number of units covered; words keep their order.
    """
    n_words = len(table)
    total = table.end - table.start + 1
    if total < n_words:
        raise InvalidInputError(
            f"cannot split {total} units into {n_words} non-empty pieces"
        )
    bounds = [table.start + (k * total) // n_words for k in range(n_words + 1)]
    return AlignmentTable(
        tuple(
            Span(bounds[k], bounds[k + 1] - 1, span.word)
            for k, span in enumerate(table)
        )
    )
