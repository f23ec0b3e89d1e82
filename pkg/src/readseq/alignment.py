"""Fixation-to-word alignment.

A fixation stream on one page is cut into reading lines (each fixation
must land in its predecessor's parafoveal region), and a dynamic program
then picks one candidate word per fixation inside every line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ContractError
from .geometry import RegionRadii
from .ingest import Fixation, PageLayout, WordBox


class TransitionForm(str, Enum):
    """Form of the word-spacing term between consecutive fixations.

    ``DIFFERENCE`` prices ``(1 - (next - cur))**2`` and is zero when gaze
    advances by exactly one word. ``PRINTED`` prices ``(1 - next - cur)**2``
    literally.
    """

    DIFFERENCE = "difference"
    PRINTED = "printed"


@dataclass(frozen=True)
class ParafovealRegion:
    center: tuple[float, float]
    extent_right: float
    extent_left: float
    extent_up: float
    extent_down: float

    @classmethod
    def around(cls, f: Fixation, radii: RegionRadii) -> ParafovealRegion:
        r = radii.r_foveal_px
        return cls((f.x, f.y), radii.r_parafoveal_px, r, r, r)

    def contains(self, x: float, y: float) -> bool:
        cx, cy = self.center
        return (cx - self.extent_left <= x <= cx + self.extent_right
                and cy - self.extent_up <= y <= cy + self.extent_down)


@dataclass(frozen=True)
class Candidate:
    word_index: int
    distance: float


@dataclass(frozen=True)
class CandidateSet:
    """Words near a fixation; position in ``ranked`` is the candidate rank."""

    fixation: Fixation
    ranked: tuple[Candidate, ...]

    def __len__(self) -> int:
        return len(self.ranked)

    def __bool__(self) -> bool:
        return bool(self.ranked)

    @property
    def word_indices(self) -> tuple[int, ...]:
        return tuple(c.word_index for c in self.ranked)


@dataclass(frozen=True)
class ReadingLine:
    line_id: int
    entries: tuple[CandidateSet, ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ContractError("a reading line needs at least one fixation")
        if any(not c for c in self.entries):
            raise ContractError("every fixation in a reading line needs a candidate")

    @property
    def fixations(self) -> tuple[Fixation, ...]:
        return tuple(c.fixation for c in self.entries)


@dataclass(frozen=True)
class AlignedFixation:
    fixation: Fixation
    word_index: int
    rank: int
    line_id: int
    cost: float = 0.0  # rank**2 plus the transition into the next fixation of the line


def word_distance(f: Fixation, w: WordBox) -> float:
    """Euclidean distance from the fixation to the nearest point of the word box."""
    x0, y0, x1, y1 = w.bbox
    dx = max(x0 - f.x, 0.0, f.x - x1)
    dy = max(y0 - f.y, 0.0, f.y - y1)
    return math.hypot(dx, dy)


def candidates(f: Fixation, layout: PageLayout, radii: RegionRadii) -> CandidateSet:
    """Words within ``2 * r_foveal`` of ``f``, nearest first.

    Equal distances rank the lower word index first. An empty set marks a
    fixation that was not on text.
    """
    boxes = layout.boxes
    if not len(boxes):
        return CandidateSet(f, ())
    dx = np.maximum.reduce([boxes[:, 0] - f.x, np.zeros(len(boxes)), f.x - boxes[:, 2]])
    dy = np.maximum.reduce([boxes[:, 1] - f.y, np.zeros(len(boxes)), f.y - boxes[:, 3]])
    dist = np.hypot(dx, dy)
    hit = np.flatnonzero(dist <= radii.candidate_radius_px)
    idx = layout.indices[hit]
    d = dist[hit]
    order = np.lexsort((idx, d))
    return CandidateSet(f, tuple(Candidate(int(idx[k]), float(d[k])) for k in order))


def segment_lines(sets: Sequence[CandidateSet], radii: RegionRadii) -> list[ReadingLine]:
    """Greedy split of a time-ordered stream into reading lines.

    A fixation continues the open line when it lies in the previous
    fixation's parafoveal region. Off-text fixations (no candidates) close
    the open line and belong to none.
    """
    lines: list[ReadingLine] = []
    current: list[CandidateSet] = []
    prev: Fixation | None = None

    def close():
        if current:
            lines.append(ReadingLine(len(lines), tuple(current)))
            current.clear()

    for cs in sets:
        if not cs:
            close()
            prev = None
            continue
        f = cs.fixation
        if prev is not None and not ParafovealRegion.around(prev, radii).contains(f.x, f.y):
            close()
        current.append(cs)
        prev = f
    close()
    return lines


def transition_cost(cur: int, nxt: int, form: TransitionForm = TransitionForm.DIFFERENCE) -> int:
    if form is TransitionForm.PRINTED:
        return (1 - nxt - cur) ** 2
    return (1 - (nxt - cur)) ** 2


def path_cost(line: ReadingLine, ranks: Sequence[int], form: TransitionForm = TransitionForm.DIFFERENCE) -> int:
    """Total cost of choosing candidate ``ranks[t]`` for every fixation of ``line``."""
    words = [line.entries[t].ranked[r].word_index for t, r in enumerate(ranks)]
    cost = sum(r * r for r in ranks)
    cost += sum(transition_cost(a, b, form) for a, b in zip(words, words[1:]))
    return cost


def viterbi_assign(line: ReadingLine, form: TransitionForm | str = TransitionForm.DIFFERENCE) -> list[AlignedFixation]:
    """Minimum-cost word assignment for one reading line.

    Every fixation pays ``rank**2`` for its chosen candidate and every
    consecutive pair pays the transition term. Among equal-cost paths the
    one with the lexicographically smallest rank vector wins, so a
    noiseless line whose rank-0 path is optimal keeps it.
    """
    form = TransitionForm(form)
    if not isinstance(line, ReadingLine) or not line.entries:
        raise ContractError("viterbi_assign needs a non-empty ReadingLine")
    entries = line.entries
    n = len(entries)
    words = [np.array(cs.word_indices, dtype=np.int64) for cs in entries]
    emit = [np.arange(len(w), dtype=np.int64) ** 2 for w in words]

    # Backward pass so that forward tracing with first-index argmin yields the
    # lexicographically smallest rank vector among optimal paths.
    best = emit[-1].copy()
    choice: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    for t in range(n - 2, -1, -1):
        cur = words[t][:, None]
        nxt = words[t + 1][None, :]
        trans = (1 - nxt - cur) ** 2 if form is TransitionForm.PRINTED else (1 - (nxt - cur)) ** 2
        total = trans + best[None, :]
        choice[t] = np.argmin(total, axis=1)
        best = emit[t] + total[np.arange(len(words[t])), choice[t]]

    ranks = [int(np.argmin(best))]
    for t in range(n - 1):
        ranks.append(int(choice[t][ranks[-1]]))

    chosen = [int(words[t][r]) for t, r in enumerate(ranks)]
    out = []
    for t, r in enumerate(ranks):
        cost = r * r
        if t + 1 < n:
            cost += transition_cost(chosen[t], chosen[t + 1], form)
        out.append(AlignedFixation(entries[t].fixation, chosen[t], r, line.line_id, float(cost)))
    return out


def align_page(
    fixations: Sequence[Fixation],
    layout: PageLayout,
    radii: RegionRadii,
    form: TransitionForm | str = TransitionForm.DIFFERENCE,
) -> list[AlignedFixation]:
    """Candidates, line segmentation and word assignment for one page stream."""
    sets = [candidates(f, layout, radii) for f in fixations]
    aligned: list[AlignedFixation] = []
    for line in segment_lines(sets, radii):
        aligned.extend(viterbi_assign(line, form))
    return aligned
