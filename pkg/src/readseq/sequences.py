"""Reading sequences from word-assigned fixations.

A fixation extends the open sequence when it lands at most
``MAX_FORWARD_STEP`` words ahead of the previous member (forward rule), or
anywhere inside the span already covered by the sequence (regression rule).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .alignment import AlignedFixation

MAX_FORWARD_STEP = 4


@dataclass(frozen=True)
class RegressionEvent:
    position: int  # index of the regressing fixation within the sequence
    from_index: int
    to_index: int


@dataclass(frozen=True)
class ReadingSequence:
    members: tuple[AlignedFixation, ...]
    regressions: tuple[RegressionEvent, ...] = field(default=())

    @property
    def indices(self) -> list[int]:
        return [a.word_index for a in self.members]

    @property
    def min_index(self) -> int:
        return min(self.indices)

    @property
    def max_index(self) -> int:
        return max(self.indices)

    @property
    def start(self) -> float:
        return self.members[0].fixation.t_start

    @property
    def end(self) -> float:
        return max(a.fixation.t_end for a in self.members)

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def n_regressions(self) -> int:
        return len(self.regressions)

    def __len__(self) -> int:
        return len(self.members)


def forward_ok(prev: int, cur: int) -> bool:
    return prev <= cur <= prev + MAX_FORWARD_STEP


def admits(prev: int, lo: int, hi: int, cur: int) -> bool:
    """Whether ``cur`` may join a sequence with last member ``prev`` and span [lo, hi]."""
    return forward_ok(prev, cur) or lo <= cur <= hi


def build_sequences(
    aligned: Sequence[AlignedFixation],
    min_length: int = 2,
    min_words: int = 2,
) -> list[ReadingSequence]:
    """Greedy temporal scan of one page's aligned fixations.

    Runs with fewer than ``min_length`` fixations or fewer than
    ``min_words`` distinct words are dropped. A backward move admitted only
    by the regression rule is recorded as a regression event.
    """
    if min_length < 1 or min_words < 1:
        raise ValueError("min_length and min_words must be positive")
    runs: list[tuple[list[AlignedFixation], list[RegressionEvent]]] = []
    members: list[AlignedFixation] = []
    events: list[RegressionEvent] = []
    lo = hi = 0
    for a in aligned:
        i = a.word_index
        if members:
            prev = members[-1].word_index
            if forward_ok(prev, i):
                pass
            elif lo <= i <= hi:
                if i < prev:
                    events.append(RegressionEvent(len(members), prev, i))
            else:
                runs.append((members, events))
                members, events = [], []
        if not members:
            lo = hi = i
        members.append(a)
        lo, hi = min(lo, i), max(hi, i)
    if members:
        runs.append((members, events))

    return [
        ReadingSequence(tuple(m), tuple(e))
        for m, e in runs
        if len(m) >= min_length and len({a.word_index for a in m}) >= min_words
    ]


def count_regressions(seqs: Iterable[ReadingSequence]) -> int:
    return sum(s.n_regressions for s in seqs)
