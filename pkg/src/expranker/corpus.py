"""Review corpus ingestion: JSON-lines records and rule-based sentence splitting."""

from __future__ import annotations

import gzip
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .text import normalize_ws

log = logging.getLogger(__name__)


class CorpusError(ValueError):
    """A corpus line could not be turned into a record."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno
        self.message = message


@dataclass(frozen=True)
class RawRecord:
    user_id: str
    item_id: str
    rating: int
    timestamp: int
    review_text: str
    heading: Optional[str] = None

    def __post_init__(self):
        if not self.user_id or not self.item_id:
            raise ValueError("user_id and item_id must be non-empty")
        if self.rating not in (1, 2, 3, 4, 5):
            raise ValueError(f"rating {self.rating!r} outside 1..5")
        if not self.review_text and not self.heading:
            raise ValueError("record has neither review text nor heading")


@dataclass(frozen=True)
class Sentence:
    sentence_id: int
    record_ref: int
    text: str


def _as_int(value, field):
    if isinstance(value, bool):
        raise ValueError(f"{field} must be an integer")
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"{field} must be an integer, got {value}")
        return int(value)
    if isinstance(value, str):
        return int(value.strip())
    if isinstance(value, int):
        return value
    raise ValueError(f"{field} must be an integer")


def parse_line(line: str, lineno: int) -> RawRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusError(lineno, f"invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise CorpusError(lineno, "record is not a JSON object")
    missing = [k for k in ("user", "item", "rating", "timestamp") if k not in obj]
    if missing:
        raise CorpusError(lineno, f"missing field(s): {', '.join(missing)}")
    try:
        title = obj.get("title")
        return RawRecord(
            user_id=str(obj["user"]),
            item_id=str(obj["item"]),
            rating=_as_int(obj["rating"], "rating"),
            timestamp=_as_int(obj["timestamp"], "timestamp"),
            review_text=str(obj.get("text") or ""),
            heading=str(title) if title else None,
        )
    except ValueError as exc:
        raise CorpusError(lineno, str(exc)) from None


def parse_corpus(
    lines: Iterable[str], on_error: str = "skip", errors: Optional[list] = None
) -> list[RawRecord]:
    """Parse JSON-lines records in file order.

    ``on_error="skip"`` logs each malformed line and moves on (the
    :class:`CorpusError` is appended to *errors* when given); ``"abort"``
    raises the first one.
    """
    if on_error not in ("skip", "abort"):
        raise ValueError("on_error must be 'skip' or 'abort'")
    records = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(parse_line(line, lineno))
        except CorpusError as exc:
            if on_error == "abort":
                raise
            log.warning("skipping %s", exc)
            if errors is not None:
                errors.append(exc)
    return records


def open_text(path) -> Iterator[str]:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rt", encoding="utf-8") as fh:
        yield from fh


def read_corpus(path, on_error: str = "skip", errors: Optional[list] = None) -> list[RawRecord]:
    return parse_corpus(open_text(path), on_error=on_error, errors=errors)


def concat_text(record: RawRecord) -> str:
    if record.heading:
        if record.review_text:
            return f"{record.review_text} {record.heading}"
        return record.heading
    return record.review_text


# Words that end in a period without ending the sentence.
ABBREVIATIONS = frozenset(
    "mr mrs ms dr prof sr jr st vs mt ft no vol approx dept est fig inc ltd co "
    "jan feb mar apr jun jul aug sep sept oct nov dec e.g i.e".split()
)

_BOUNDARY = re.compile(r"[.!?]+(?=\s|$)")


def _guarded(text: str, end: int) -> bool:
    """True if the period ending at *end* belongs to an abbreviation or initial."""
    if text[end - 1] != ".":
        return False
    start = end - 1
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    word = text[start:end].rstrip(".").lstrip("(\"'").lower()
    if word in ABBREVIATIONS:
        return True
    return len(word) == 1 and word.isalpha() and text[start:end].rstrip(".")[-1:].isupper()


def split_sentences(text: str) -> list[str]:
    """Split on runs of ``.``, ``!``, ``?`` followed by whitespace or end of text.

    Terminal punctuation stays with its sentence; the whitespace between
    sentences is the delimiter and is dropped.
    """
    out = []
    start = 0
    for m in _BOUNDARY.finditer(text):
        if _guarded(text, m.end()):
            continue
        piece = normalize_ws(text[start : m.end()])
        if piece:
            out.append(piece)
        start = m.end()
    tail = normalize_ws(text[start:])
    if tail:
        out.append(tail)
    return out


def extract_sentences(records: Iterable[RawRecord], start_id: int = 0) -> list[Sentence]:
    """Number every sentence of every record with a global counter in input order."""
    sentences = []
    next_id = start_id
    for ref, record in enumerate(records):
        for text in split_sentences(concat_text(record)):
            sentences.append(Sentence(next_id, ref, text))
            next_id += 1
    return sentences
