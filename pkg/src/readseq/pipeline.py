"""Per-session orchestration: alignment, sequences and features."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .alignment import AlignedFixation, TransitionForm, align_page
from .features import NWordsPolicy, SessionFeatures, TimeBase, compute_features
from .geometry import RegionRadii
from .ingest import Session, filter_content_pages
from .sequences import ReadingSequence, build_sequences


@dataclass(frozen=True)
class Policies:
    transition: TransitionForm = TransitionForm.DIFFERENCE
    nwords: NWordsPolicy = NWordsPolicy.TRAVERSED
    time_base: TimeBase = TimeBase.READING
    min_seq_len: int = 2
    min_seq_words: int = 2


@dataclass(frozen=True)
class SessionResult:
    session: Session
    aligned: dict[str, list[AlignedFixation]]
    sequences: dict[str, list[ReadingSequence]]
    features: SessionFeatures


def analyze_session(session: Session, radii: RegionRadii, policies: Policies = Policies()) -> SessionResult:
    session = filter_content_pages(session)
    aligned, seqs = {}, {}
    for stream in session.pages:
        al = align_page(stream.fixations, stream.layout, radii, policies.transition)
        aligned[stream.page_id] = al
        seqs[stream.page_id] = build_sequences(al, policies.min_seq_len, policies.min_seq_words)
    feats = compute_features(session, seqs, policies.nwords, policies.time_base)
    return SessionResult(session, aligned, seqs, feats)


def analyze_sessions(
    sessions: Sequence[Session],
    radii: RegionRadii,
    policies: Policies = Policies(),
    threads: int = 1,
) -> list[SessionResult]:
    """Analyze sessions, in input order; ``threads > 1`` runs them concurrently."""
    if threads <= 1:
        return [analyze_session(s, radii, policies) for s in sessions]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda s: analyze_session(s, radii, policies), sessions))


ALIGNED_COLUMNS = ("participant_id", "page_id", "line_id", "t_start_ms", "x_px", "y_px", "word_index", "rank", "cost")
SEQUENCE_COLUMNS = (
    "participant_id", "page_id", "start_ms", "end_ms", "n_fixations",
    "min_index", "max_index", "n_regressions",
)


def write_aligned(results: Iterable[SessionResult], fh: IO[str]) -> None:
    writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
    writer.writerow(ALIGNED_COLUMNS)
    for res in results:
        for page_id, rows in res.aligned.items():
            for a in rows:
                f = a.fixation
                writer.writerow([
                    f.participant_id, page_id, a.line_id, repr(f.t_start), repr(f.x), repr(f.y),
                    a.word_index, a.rank, repr(a.cost),
                ])


def write_sequences(results: Iterable[SessionResult], fh: IO[str]) -> None:
    writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
    writer.writerow(SEQUENCE_COLUMNS)
    for res in results:
        for page_id, seqs in res.sequences.items():
            for s in seqs:
                writer.writerow([
                    res.session.participant_id, page_id, repr(s.start), repr(s.end), len(s),
                    s.min_index, s.max_index, s.n_regressions,
                ])
