"""Reading fixation logs, word layouts and test scores.

All coordinates are page coordinates (scroll-compensated). Fixation files
recorded in viewport coordinates must carry a ``scroll_y_px`` column; its
value is added to ``y_px`` on ingest.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from collections import defaultdict
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import IO, Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import ParseError, ValidationError

logger = logging.getLogger(__name__)

Source = Union[str, bytes, os.PathLike, IO[bytes], IO[str]]

FIXATION_COLUMNS = ("participant_id", "page_id", "t_start_ms", "duration_ms", "x_px", "y_px")
SCORE_COLUMNS = ("participant_id", "mcq_pre", "mcq_post", "essay_pre", "essay_post")


class PageKind(str, Enum):
    CONTENT = "content"
    SERP = "serp"
    VIDEO = "video"
    OTHER = "other"


@dataclass(frozen=True)
class Fixation:
    participant_id: str
    page_id: str
    t_start: float
    duration: float
    x: float
    y: float

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration


@dataclass(frozen=True)
class WordBox:
    page_id: str
    word_index: int
    text: str
    bbox: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        x0, y0, x1, y1 = self.bbox
        if not all(math.isfinite(v) for v in self.bbox):
            raise ValidationError(f"word {self.word_index} on page {self.page_id!r}: non-finite bbox")
        if not (x0 < x1 and y0 < y1):
            raise ValidationError(
                f"word {self.word_index} on page {self.page_id!r}: inverted bbox {self.bbox}"
            )

    @property
    def center(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.bbox
        return (x0 + x1) / 2.0, (y0 + y1) / 2.0


@dataclass(frozen=True)
class PageLayout:
    page_id: str
    page_kind: PageKind
    words: tuple[WordBox, ...]

    def __post_init__(self) -> None:
        indices = [w.word_index for w in self.words]
        if len(set(indices)) != len(indices):
            raise ValidationError(f"page {self.page_id!r}: duplicate word_index")
        if indices != sorted(indices):
            raise ValidationError(f"page {self.page_id!r}: words not sorted by word_index")
        if indices and indices[-1] - indices[0] != len(indices) - 1:
            raise ValidationError(f"page {self.page_id!r}: word indices are not contiguous")

    @cached_property
    def boxes(self) -> np.ndarray:
        """``(n, 4)`` array of word bounding boxes, row order = ``words``."""
        if not self.words:
            return np.empty((0, 4))
        return np.array([w.bbox for w in self.words], dtype=float)

    @cached_property
    def indices(self) -> np.ndarray:
        return np.array([w.word_index for w in self.words], dtype=np.int64)

    def word(self, word_index: int) -> WordBox:
        return self.words[word_index - self.words[0].word_index]


@dataclass(frozen=True)
class Scores:
    mcq_pre: float
    mcq_post: float
    essay_pre: float
    essay_post: float


@dataclass(frozen=True)
class PageStream:
    """Time-ordered fixations of one participant on one page."""

    layout: PageLayout
    fixations: tuple[Fixation, ...]

    @property
    def page_id(self) -> str:
        return self.layout.page_id


@dataclass(frozen=True)
class Session:
    participant_id: str
    pages: tuple[PageStream, ...]
    scores: Scores | None = None
    dropped_fixations: int = 0

    @property
    def n_fixations(self) -> int:
        return sum(len(p.fixations) for p in self.pages)


# --- low level input handling -------------------------------------------------


def read_text(source: Source) -> str:
    if isinstance(source, bytes):
        data = source
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
        if isinstance(data, str):
            return data
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8 ({exc})") from None


def _sniff_delimiter(header: str) -> str:
    return "\t" if "\t" in header else ","


def table_rows(text: str, required: Sequence[str]) -> tuple[list[str], Iterable[tuple[int, dict[str, str]]]]:
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("missing header row", line=1)
    reader = csv.reader(io.StringIO(text), delimiter=_sniff_delimiter(lines[0]))
    header = [h.strip() for h in next(reader)]
    missing = [c for c in required if c not in header]
    if missing:
        raise ParseError(f"missing required columns {missing}", line=1)

    def gen():
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
            yield lineno, dict(zip(header, (cell.strip() for cell in row)))

    return header, gen()


def _number(row: Mapping[str, str], column: str, lineno: int) -> float:
    raw = row[column]
    try:
        value = float(raw)
    except ValueError:
        raise ParseError(f"not a number: {raw!r}", line=lineno, column=column) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {raw!r}", line=lineno, column=column)
    return value


# --- fixations ----------------------------------------------------------------


def parse_fixations(source: Source) -> list[Fixation]:
    """Parse a comma- or tab-delimited fixation file.

    The result is grouped by (participant, page) in order of first
    appearance, each group sorted by onset; ties keep file order.
    """
    _, rows = table_rows(read_text(source), FIXATION_COLUMNS)
    groups: dict[tuple[str, str], list[Fixation]] = {}
    for lineno, row in rows:
        pid, page = row["participant_id"], row["page_id"]
        if not pid:
            raise ParseError("empty participant_id", line=lineno, column="participant_id")
        if not page:
            raise ParseError("empty page_id", line=lineno, column="page_id")
        duration = _number(row, "duration_ms", lineno)
        if duration < 0:
            raise ParseError(f"negative duration {row['duration_ms']!r}", line=lineno, column="duration_ms")
        y = _number(row, "y_px", lineno)
        if row.get("scroll_y_px"):
            y += _number(row, "scroll_y_px", lineno)
        fix = Fixation(
            participant_id=pid,
            page_id=page,
            t_start=_number(row, "t_start_ms", lineno),
            duration=duration,
            x=_number(row, "x_px", lineno),
            y=y,
        )
        groups.setdefault((pid, page), []).append(fix)
    out: list[Fixation] = []
    for stream in groups.values():
        out.extend(sorted(stream, key=lambda f: f.t_start))
    return out


def write_fixations(fixations: Iterable[Fixation], fh: IO[str]) -> None:
    """Write fixations in page coordinates (no scroll column)."""
    writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
    writer.writerow(FIXATION_COLUMNS)
    for f in fixations:
        writer.writerow([f.participant_id, f.page_id, repr(f.t_start), repr(f.duration), repr(f.x), repr(f.y)])


# --- layouts --------------------------------------------------------------------


def _layout_from_obj(obj: Mapping, position: int) -> PageLayout:
    where = f"pages[{position}]"
    try:
        page_id = str(obj["page_id"])
        kind = PageKind(obj.get("page_kind", "content"))
        raw_words = obj.get("words", [])
    except (KeyError, ValueError, TypeError, AttributeError) as exc:
        raise ValidationError(f"{where}: bad page record ({exc})") from None
    words = []
    for j, w in enumerate(raw_words):
        try:
            bbox = tuple(float(v) for v in w["bbox"])
            index = w["index"]
            if isinstance(index, bool) or not isinstance(index, int) or index < 0:
                raise ValueError(f"index must be a non-negative integer, got {index!r}")
            if len(bbox) != 4:
                raise ValueError("bbox must have 4 numbers")
            words.append(WordBox(page_id=page_id, word_index=index, text=str(w.get("text", "")), bbox=bbox))
        except (KeyError, ValueError, TypeError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"{where}.words[{j}]: {exc}") from None
    indices = [w.word_index for w in words]
    if len(set(indices)) != len(indices):
        raise ValidationError(f"page {page_id!r}: duplicate word_index")
    words.sort(key=lambda w: w.word_index)
    return PageLayout(page_id=page_id, page_kind=kind, words=tuple(words))


def parse_layout(source: Source) -> list[PageLayout]:
    """Parse a JSON layout document ``{"pages": [...]}``."""
    try:
        doc = json.loads(read_text(source))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    pages = doc.get("pages") if isinstance(doc, dict) else None
    if not isinstance(pages, list):
        raise ValidationError("layout document must be an object with a 'pages' list")
    layouts = [_layout_from_obj(p, i) for i, p in enumerate(pages)]
    ids = [p.page_id for p in layouts]
    if len(set(ids)) != len(ids):
        raise ValidationError("layout document lists a page_id more than once")
    return layouts


def layout_to_obj(layouts: Iterable[PageLayout]) -> dict:
    return {
        "pages": [
            {
                "page_id": p.page_id,
                "page_kind": p.page_kind.value,
                "words": [{"index": w.word_index, "text": w.text, "bbox": list(w.bbox)} for w in p.words],
            }
            for p in layouts
        ]
    }


def write_layout(layouts: Iterable[PageLayout], fh: IO[str]) -> None:
    json.dump(layout_to_obj(layouts), fh, indent=1, ensure_ascii=False)
    fh.write("\n")


# --- scores --------------------------------------------------------------------


def parse_scores(source: Source) -> dict[str, Scores]:
    _, rows = table_rows(read_text(source), SCORE_COLUMNS)
    out: dict[str, Scores] = {}
    for lineno, row in rows:
        pid = row["participant_id"]
        if pid in out:
            raise ParseError(f"duplicate participant {pid!r}", line=lineno, column="participant_id")
        values = {}
        for col in SCORE_COLUMNS[1:]:
            v = _number(row, col, lineno)
            if v < 0:
                raise ParseError(f"negative score {row[col]!r}", line=lineno, column=col)
            values[col] = v
        out[pid] = Scores(**values)
    return out


def write_scores(scores: Mapping[str, Scores], fh: IO[str]) -> None:
    writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
    writer.writerow(SCORE_COLUMNS)
    for pid, s in scores.items():
        writer.writerow([pid, repr(s.mcq_pre), repr(s.mcq_post), repr(s.essay_pre), repr(s.essay_post)])


# --- sessions ------------------------------------------------------------------


def build_sessions(
    fixations: Iterable[Fixation],
    layouts: Iterable[PageLayout],
    scores: Mapping[str, Scores] | None = None,
) -> list[Session]:
    """Group fixations into one session per participant, sorted by id.

    Raises ValidationError when a fixation names a page with no layout.
    """
    by_id = {p.page_id: p for p in layouts}
    streams: dict[str, dict[str, list[Fixation]]] = defaultdict(dict)
    for f in fixations:
        if f.page_id not in by_id:
            raise ValidationError(f"fixation of {f.participant_id!r} on unknown page {f.page_id!r}")
        streams[f.participant_id].setdefault(f.page_id, []).append(f)
    sessions = []
    for pid in sorted(streams):
        pages = tuple(
            PageStream(layout=by_id[page], fixations=tuple(sorted(fs, key=lambda f: f.t_start)))
            for page, fs in streams[pid].items()
        )
        sessions.append(Session(participant_id=pid, pages=pages, scores=(scores or {}).get(pid)))
    return sessions


def filter_content_pages(session: Session) -> Session:
    """Keep only fixation streams on content pages.

    The number of dropped fixations accumulates in ``dropped_fixations``.
    """
    kept = tuple(p for p in session.pages if p.layout.page_kind is PageKind.CONTENT)
    dropped = sum(len(p.fixations) for p in session.pages if p.layout.page_kind is not PageKind.CONTENT)
    if dropped:
        logger.info("%s: dropped %d fixations on non-content pages", session.participant_id, dropped)
    if not kept and session.pages:
        logger.warning("%s: no content pages left after filtering", session.participant_id)
    if len(kept) == len(session.pages):
        return session
    return replace(session, pages=kept, dropped_fixations=session.dropped_fixations + dropped)
