"""Per-participant reading features over content pages."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import IO, Iterable, Mapping, Sequence

from .alignment import AlignedFixation
from .errors import ParseError
from .ingest import PageStream, Session, Source, read_text, table_rows
from .sequences import ReadingSequence

logger = logging.getLogger(__name__)


class NWordsPolicy(str, Enum):
    """How words are counted as read.

    ``TRAVERSED``: a forward step of k words reads k words (skipped ones
    included); first fixations and regressions read one word; refixating
    the same word reads none. ``FIXATED``: each reading fixation reads
    exactly the word it was assigned.
    """

    TRAVERSED = "traversed"
    FIXATED = "fixated"


class TimeBase(str, Enum):
    """Denominator of the per-second rates.

    ``READING`` is the summed duration of reading fixations; ``WALLCLOCK``
    is the summed first-onset-to-last-offset span of each content page.
    """

    READING = "reading"
    WALLCLOCK = "wallclock"


@dataclass(frozen=True)
class SessionFeatures:
    participant_id: str
    sum_RFix_dur: float
    avg_RFix_dur_per_page: float
    avg_n_RFix: float
    n_CP_visited: int
    avg_Fix_dur: float
    dur_per_RSeq: float
    n_RSeq: int
    avg_RFix_dur: float
    n_RFix: int
    n_Reg: int
    n_Reg_per_sec: float
    n_unique_word: int
    n_words: int
    words_per_sec: float
    max_y_of_RFix: float
    avg_y_of_RFix: float
    flags: tuple[str, ...] = field(default=(), compare=False)

    def values(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in FEATURE_NAMES}


FEATURE_NAMES: tuple[str, ...] = tuple(
    f.name for f in fields(SessionFeatures) if f.name not in ("participant_id", "flags")
)


@dataclass
class ReadingTotals:
    """Additive accumulator behind :class:`SessionFeatures`."""

    n_pages: int = 0
    n_fix: int = 0
    sum_fix_dur: float = 0.0
    n_rfix: int = 0
    sum_rfix_dur: float = 0.0
    n_rseq: int = 0
    sum_rseq_dur: float = 0.0
    n_reg: int = 0
    n_words: int = 0
    words: set = field(default_factory=set)
    max_y: float | None = None
    sum_y: float = 0.0
    wallclock: float = 0.0

    def __add__(self, other: ReadingTotals) -> ReadingTotals:
        max_ys = [v for v in (self.max_y, other.max_y) if v is not None]
        return ReadingTotals(
            n_pages=self.n_pages + other.n_pages,
            n_fix=self.n_fix + other.n_fix,
            sum_fix_dur=self.sum_fix_dur + other.sum_fix_dur,
            n_rfix=self.n_rfix + other.n_rfix,
            sum_rfix_dur=self.sum_rfix_dur + other.sum_rfix_dur,
            n_rseq=self.n_rseq + other.n_rseq,
            sum_rseq_dur=self.sum_rseq_dur + other.sum_rseq_dur,
            n_reg=self.n_reg + other.n_reg,
            n_words=self.n_words + other.n_words,
            words=self.words | other.words,
            max_y=max(max_ys) if max_ys else None,
            sum_y=self.sum_y + other.sum_y,
            wallclock=self.wallclock + other.wallclock,
        )


def reading_fixations(seqs: Iterable[ReadingSequence]) -> list[AlignedFixation]:
    """All sequence members in temporal order."""
    out = [a for s in seqs for a in s.members]
    out.sort(key=lambda a: a.fixation.t_start)
    return out


def words_read(seq: ReadingSequence, policy: NWordsPolicy = NWordsPolicy.TRAVERSED) -> list[int]:
    """Word indices read by ``seq``, with multiplicity."""
    idx = seq.indices
    if policy is NWordsPolicy.FIXATED:
        return list(idx)
    out = [idx[0]]
    for prev, cur in zip(idx, idx[1:]):
        if cur > prev:
            out.extend(range(prev + 1, cur + 1))
        elif cur < prev:
            out.append(cur)
    return out


def page_totals(
    stream: PageStream,
    seqs: Sequence[ReadingSequence],
    nwords: NWordsPolicy = NWordsPolicy.TRAVERSED,
) -> ReadingTotals:
    fixes = stream.fixations
    tot = ReadingTotals()
    if not fixes:
        return tot
    tot.n_pages = 1
    tot.n_fix = len(fixes)
    tot.sum_fix_dur = sum(f.duration for f in fixes)
    tot.wallclock = max(f.t_end for f in fixes) - min(f.t_start for f in fixes)
    for s in seqs:
        tot.n_rseq += 1
        tot.sum_rseq_dur += s.duration
        tot.n_reg += s.n_regressions
        read = words_read(s, nwords)
        tot.n_words += len(read)
        tot.words.update((stream.page_id, i) for i in read)
    rfix = reading_fixations(seqs)
    tot.n_rfix = len(rfix)
    tot.sum_rfix_dur = sum(a.fixation.duration for a in rfix)
    if rfix:
        tot.max_y = max(a.fixation.y for a in rfix)
        tot.sum_y = sum(a.fixation.y for a in rfix)
    return tot


def finalize(participant_id: str, tot: ReadingTotals, time_base: TimeBase = TimeBase.READING) -> SessionFeatures:
    def ratio(num: float, den: float) -> float:
        return num / den if den else 0.0

    time_ms = tot.sum_rfix_dur if time_base is TimeBase.READING else tot.wallclock
    seconds = time_ms / 1000.0
    flags = []
    if seconds <= 0:
        flags.append("zero_time_base")
        logger.warning("%s: zero %s time; per-second rates set to 0", participant_id, time_base.value)
    return SessionFeatures(
        participant_id=participant_id,
        sum_RFix_dur=tot.sum_rfix_dur,
        avg_RFix_dur_per_page=ratio(tot.sum_rfix_dur, tot.n_pages),
        avg_n_RFix=ratio(tot.n_rfix, tot.n_pages),
        n_CP_visited=tot.n_pages,
        avg_Fix_dur=ratio(tot.sum_fix_dur, tot.n_fix),
        dur_per_RSeq=ratio(tot.sum_rseq_dur, tot.n_rseq),
        n_RSeq=tot.n_rseq,
        avg_RFix_dur=ratio(tot.sum_rfix_dur, tot.n_rfix),
        n_RFix=tot.n_rfix,
        n_Reg=tot.n_reg,
        n_Reg_per_sec=ratio(tot.n_reg, seconds),
        n_unique_word=len(tot.words),
        n_words=tot.n_words,
        words_per_sec=ratio(tot.n_words, seconds),
        max_y_of_RFix=tot.max_y if tot.max_y is not None else 0.0,
        avg_y_of_RFix=ratio(tot.sum_y, tot.n_rfix),
        flags=tuple(flags),
    )


def compute_features(
    session: Session,
    seqs_by_page: Mapping[str, Sequence[ReadingSequence]],
    nwords: NWordsPolicy | str = NWordsPolicy.TRAVERSED,
    time_base: TimeBase | str = TimeBase.READING,
) -> SessionFeatures:
    """Feature vector for a (content-filtered) session.

    ``seqs_by_page`` maps page ids to that page's reading sequences; pages
    absent from it contribute fixations but no reading.
    """
    nwords, time_base = NWordsPolicy(nwords), TimeBase(time_base)
    tot = ReadingTotals()
    for stream in session.pages:
        tot = tot + page_totals(stream, seqs_by_page.get(stream.page_id, ()), nwords)
    return finalize(session.participant_id, tot, time_base)


def write_feature_matrix(rows: Iterable[SessionFeatures], fh: IO[str]) -> None:
    writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
    writer.writerow(("participant_id",) + FEATURE_NAMES)
    for r in sorted(rows, key=lambda r: r.participant_id):
        writer.writerow([r.participant_id] + [repr(v) for v in r.values().values()])


def read_feature_matrix(source: Source) -> dict[str, dict[str, float]]:
    _, rows = table_rows(read_text(source), ("participant_id",) + FEATURE_NAMES)
    out: dict[str, dict[str, float]] = {}
    for lineno, row in rows:
        values = {}
        for name in FEATURE_NAMES:
            try:
                values[name] = float(row[name])
            except ValueError:
                raise ParseError(f"not a number: {row[name]!r}", line=lineno, column=name) from None
        out[row["participant_id"]] = values
    return out
