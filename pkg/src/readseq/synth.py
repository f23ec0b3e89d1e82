"""Synthetic reading data with known word assignments.

The generator lays out a single page of text, plays a reading plan over it
(forward steps of 1-4 words, regressions into the span already read, jumps
that start a new sequence, glances off the text) and places each fixation at
its target word's centre plus isotropic Gaussian jitter. The plan and the
jitter draw from independent streams, so for a fixed seed changing ``sigma``
moves the same fixations further from their words.

The defaults keep the noiseless case identifiable. Two things defeat exact
recovery even at ``sigma = 0``: line spacing below ``r_foveal`` (a move to an
adjacent line stays inside the parafoveal region, so the transition term
sees a jump of a whole line of words), and 3-4 word skips inside one
reading line, where a rank-1 neighbour plus a one-word step is cheaper than
the true skip.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Sequence

import numpy as np

from .alignment import AlignedFixation
from .errors import ValidationError
from .ingest import Fixation, PageKind, PageLayout, WordBox

PAGE_ID = "synth-page"
PARTICIPANT_ID = "synth"


@dataclass(frozen=True)
class SynthConfig:
    n_lines: int = 40
    words_per_line: int = 12
    word_width: tuple[float, float] = (40.0, 110.0)  # uniform range, px
    word_height: float = 20.0
    word_gap: float = 12.0
    line_spacing: float = 48.0  # > r_foveal, so a jump to the next line starts a new reading line
    margin: tuple[float, float] = (100.0, 150.0)  # left, top
    forward_steps: tuple[float, float, float, float] = (0.8, 0.2, 0.0, 0.0)  # P(step = 1..4 words)
    regression_prob: float = 0.08
    skip_prob: float = 0.04
    off_text_prob: float = 0.03
    n_fixations: int = 500
    sigma: float = 0.0
    duration_mean: float = 220.0
    duration_sd: float = 50.0
    duration_min: float = 60.0
    saccade_ms: float = 30.0
    seed: int = 0

    def __post_init__(self) -> None:
        probs = (self.regression_prob, self.skip_prob, self.off_text_prob)
        if any(not 0.0 <= p <= 1.0 for p in probs + tuple(self.forward_steps)):
            raise ValidationError("probabilities must lie in [0, 1]")
        if sum(probs) > 1.0:
            raise ValidationError("regression, skip and off-text probabilities must sum to at most 1")
        if len(self.forward_steps) != 4 or not np.isclose(sum(self.forward_steps), 1.0):
            raise ValidationError("forward_steps must be 4 probabilities summing to 1")
        if self.sigma < 0:
            raise ValidationError("sigma must be non-negative")
        if self.n_lines < 1 or self.words_per_line < 2 or self.n_fixations < 0:
            raise ValidationError("layout needs >= 1 line of >= 2 words")
        lo, hi = self.word_width
        if not 0 < lo <= hi:
            raise ValidationError("word_width must be a positive (min, max) range")


@dataclass(frozen=True)
class TruthRecord:
    fixation: Fixation
    word_index: int | None  # None: deliberately off text
    sequence_id: int | None
    regression: bool = False


@dataclass(frozen=True)
class SynthData:
    layout: PageLayout
    fixations: tuple[Fixation, ...]
    truth: tuple[TruthRecord, ...]
    config: SynthConfig = field(repr=False, default=None)

    @property
    def n_regressions(self) -> int:
        return sum(t.regression for t in self.truth)

    @property
    def n_sequences(self) -> int:
        return len({t.sequence_id for t in self.truth if t.sequence_id is not None})


def make_layout(config: SynthConfig, rng: np.random.Generator) -> PageLayout:
    words = []
    left, top = config.margin
    for line in range(config.n_lines):
        x = left
        y0 = top + line * config.line_spacing
        for _ in range(config.words_per_line):
            w = float(rng.uniform(*config.word_width))
            idx = len(words)
            words.append(WordBox(PAGE_ID, idx, f"w{idx}", (x, y0, x + w, y0 + config.word_height)))
            x += w + config.word_gap
    return PageLayout(PAGE_ID, PageKind.CONTENT, tuple(words))


def _plan(config: SynthConfig, n_words: int, rng: np.random.Generator):
    """Yield ``(word_index | None, sequence_id | None, is_regression)`` per fixation."""
    steps = np.arange(1, 5)
    seq_id = 0
    cur = lo = hi = 0
    members = 1
    yield cur, seq_id, False
    emitted = 1
    while emitted < config.n_fixations:
        u = rng.random()
        if u < config.off_text_prob:
            yield None, None, False
            emitted += 1
            continue
        u -= config.off_text_prob
        regression = False
        if members >= 2 and u < config.regression_prob and cur > lo:
            nxt = int(rng.integers(lo, cur))
            regression = True
        elif members >= 2 and u < config.regression_prob + config.skip_prob:
            nxt = None
        else:
            nxt = cur + int(rng.choice(steps, p=config.forward_steps))
            if nxt >= n_words:
                if members < 2:
                    nxt = n_words - 1
                else:
                    nxt = None
        if nxt is None:
            # new sequence: outside the forward window and the current span,
            # with room for at least one forward step
            options = [i for i in range(n_words - 1) if i < lo or i > hi + 4]
            if not options:
                return
            nxt = int(rng.choice(options))
            seq_id += 1
            lo = hi = nxt
            members = 0
        cur = nxt
        lo, hi = min(lo, cur), max(hi, cur)
        members += 1
        yield cur, seq_id, regression
        emitted += 1


def generate(
    config: SynthConfig,
    layout: PageLayout | None = None,
    participant_id: str = PARTICIPANT_ID,
) -> SynthData:
    """Deterministic synthetic page, fixation stream and ground truth.

    Pass ``layout`` to read an existing page (e.g. several simulated readers
    of one page); otherwise the page is drawn from the seed.
    """
    plan_rng, noise_rng, layout_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(3))
    if layout is None:
        layout = make_layout(config, layout_rng)
    right = float(layout.boxes[:, 2].max())
    off_x = right + 300.0

    fixations, truth = [], []
    t = 0.0
    for idx, seq, reg in _plan(config, len(layout.words), plan_rng):
        jitter = noise_rng.standard_normal(2) * config.sigma
        dur = max(config.duration_min, float(plan_rng.normal(config.duration_mean, config.duration_sd)))
        if idx is None:
            y = truth[-1].fixation.y if truth else config.margin[1]
            x, y = off_x, y
        else:
            x, y = layout.words[idx].center
            idx = layout.words[idx].word_index
        f = Fixation(participant_id, layout.page_id, t, dur, float(x + jitter[0]), float(y + jitter[1]))
        fixations.append(f)
        truth.append(TruthRecord(f, idx, seq, reg))
        t += dur + config.saccade_ms
    # the stream may stop right after a sequence opened; one fixation is no sequence
    sizes = Counter(rec.sequence_id for rec in truth if rec.sequence_id is not None)
    truth = [replace(rec, sequence_id=None) if sizes.get(rec.sequence_id, 2) < 2 else rec for rec in truth]
    return SynthData(layout, tuple(fixations), tuple(truth), config)


def recovery_rate(truth: Sequence[TruthRecord], aligned: Sequence[AlignedFixation]) -> float:
    """Share of on-text fixations whose assigned word is the intended one."""
    assigned = {a.fixation.t_start: a.word_index for a in aligned}
    on_text = [t for t in truth if t.word_index is not None]
    if not on_text:
        return 1.0
    hits = sum(assigned.get(t.fixation.t_start) == t.word_index for t in on_text)
    return hits / len(on_text)


def false_positive_rate(truth: Sequence[TruthRecord], aligned: Sequence[AlignedFixation]) -> float:
    """Share of off-text fixations that were nevertheless assigned a word."""
    assigned = {a.fixation.t_start for a in aligned}
    off = [t for t in truth if t.word_index is None]
    if not off:
        return 0.0
    return sum(t.fixation.t_start in assigned for t in off) / len(off)


def write_truth(truth: Iterable[TruthRecord], fh: IO[str]) -> None:
    """Ground truth as delimited text; empty cells mean off text / no sequence."""
    writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
    writer.writerow(("participant_id", "page_id", "t_start_ms", "word_index", "sequence_id", "regression"))
    for t in truth:
        f = t.fixation
        writer.writerow([
            f.participant_id, f.page_id, repr(f.t_start),
            "" if t.word_index is None else t.word_index,
            "" if t.sequence_id is None else t.sequence_id,
            int(t.regression),
        ])
