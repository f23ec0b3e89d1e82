"""Low/High group splits and Mann-Whitney U comparisons."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import ContractError, DegenerateSplitError, ValidationError
from .ingest import Scores

EXACT_MAX_MIN_N = 8


class ScoreKind(str, Enum):
    MCQ = "mcq"
    ESSAY = "essay"


class Phase(str, Enum):
    PRE = "pre"
    POST = "post"
    KG = "kg"


class EqualPolicy(str, Enum):
    """Where participants scoring exactly the mean go."""

    EXCLUDE = "exclude"
    LOW = "low"
    HIGH = "high"


class Tier(str, Enum):
    NS = "ns"
    MARGINAL = "marginal"
    SIGNIFICANT = "significant"
    VERY_SIGNIFICANT = "very_significant"

    @property
    def marker(self) -> str:
        return {"ns": "", "marginal": "_", "significant": "*", "very_significant": "_*"}[self.value]


def significance_tier(p: float) -> Tier:
    """Map a p-value to the underline/bold convention.

    The bands overlap at 0.05 and leave a hole at 0.01; both boundary values
    are assigned to SIGNIFICANT.
    """
    if p < 0.01:
        return Tier.VERY_SIGNIFICANT
    if p <= 0.05:
        return Tier.SIGNIFICANT
    if p < 0.1:
        return Tier.MARGINAL
    return Tier.NS


def _exact(x) -> Fraction:
    # repr() is the shortest decimal that round-trips, so 0.1 stays 1/10
    return Fraction(repr(float(x)))


def score_of(s: Scores, kind: ScoreKind | str, phase: Phase | str) -> Fraction:
    kind, phase = ScoreKind(kind), Phase(phase)
    pre = _exact(getattr(s, f"{kind.value}_pre"))
    post = _exact(getattr(s, f"{kind.value}_post"))
    return {Phase.PRE: pre, Phase.POST: post, Phase.KG: post - pre}[phase]


@dataclass(frozen=True)
class GroupSplit:
    score_kind: ScoreKind
    phase: Phase
    low: frozenset[str]
    high: frozenset[str]
    threshold: float
    n_equal: int = 0


def split_groups(
    scores: Mapping[str, Scores],
    score_kind: ScoreKind | str,
    phase: Phase | str,
    equal: EqualPolicy | str = EqualPolicy.EXCLUDE,
) -> GroupSplit:
    """Split participants at the mean score (exact decimal arithmetic)."""
    kind, phase, equal = ScoreKind(score_kind), Phase(phase), EqualPolicy(equal)
    if len(scores) < 2:
        raise DegenerateSplitError(f"need at least 2 participants with scores, got {len(scores)}")
    values = {pid: score_of(s, kind, phase) for pid, s in scores.items()}
    mean = sum(values.values()) / len(values)
    low = {pid for pid, v in values.items() if v < mean}
    high = {pid for pid, v in values.items() if v > mean}
    ties = {pid for pid, v in values.items() if v == mean}
    if not low and not high:
        raise DegenerateSplitError(
            f"all {kind.value}/{phase.value} scores equal {float(mean)}; no comparison possible"
        )
    if equal is EqualPolicy.LOW:
        low |= ties
    elif equal is EqualPolicy.HIGH:
        high |= ties
    return GroupSplit(kind, phase, frozenset(low), frozenset(high), float(mean), len(ties))


# --- Mann-Whitney U ---------------------------------------------------------------


@dataclass(frozen=True)
class MannWhitneyResult:
    u: float  # U of the first sample: pairs (a > b) plus half the ties
    p_value: float
    method: str


def midranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(len(v))
    sv = v[order]
    i = 0
    while i < len(sv):
        j = i
        while j + 1 < len(sv) and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _rank_sum_counts(doubled_ranks: np.ndarray, k: int) -> np.ndarray:
    """Number of size-``k`` subsets for every possible doubled rank sum."""
    top = int(doubled_ranks.sum())
    total = math.comb(len(doubled_ranks), k)
    dtype = np.int64 if total < 2**62 else object
    counts = np.zeros((k + 1, top + 1), dtype=dtype)
    counts[0, 0] = 1
    for r in doubled_ranks.astype(int):
        # descending k so each item is used at most once
        counts[1:, r:] = counts[1:, r:] + counts[:-1, : top + 1 - r]
    return counts[k]


def _exact_p(ranks_a: np.ndarray, ranks_all: np.ndarray, alternative: str) -> float:
    n_a, n = len(ranks_a), len(ranks_all)
    doubled = np.rint(2 * ranks_all).astype(int)
    obs = int(np.rint(2 * ranks_a.sum()))
    counts = _rank_sum_counts(doubled, n_a)
    sums = np.arange(len(counts))
    center = n_a * (n + 1)  # doubled expected rank sum
    if alternative == "two-sided":
        mask = np.abs(sums - center) >= abs(obs - center)
    elif alternative == "greater":
        mask = sums >= obs
    else:
        mask = sums <= obs
    hits = sum(int(c) for c in counts[mask])
    return min(1.0, hits / math.comb(n, n_a))


def _normal_p(u: float, n_a: int, n_b: int, ranks_all: np.ndarray, alternative: str) -> float:
    n = n_a + n_b
    _, tie_counts = np.unique(ranks_all, return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts)) / (n * (n - 1)) if n > 1 else 0.0
    var = n_a * n_b / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        return 1.0
    sd = math.sqrt(var)
    mean = n_a * n_b / 2.0
    if alternative == "two-sided":
        z = (abs(u - mean) - 0.5) / sd
        p = math.erfc(z / math.sqrt(2.0))
    elif alternative == "greater":
        z = (u - mean - 0.5) / sd
        p = 0.5 * math.erfc(z / math.sqrt(2.0))
    else:
        z = (u - mean + 0.5) / sd
        p = 0.5 * math.erfc(-z / math.sqrt(2.0))
    return min(1.0, max(0.0, p))


def mann_whitney_u(
    sample_a: Sequence[float],
    sample_b: Sequence[float],
    alternative: str = "two-sided",
    method: str = "auto",
) -> MannWhitneyResult:
    """Mann-Whitney U test with midrank ties.

    ``method="auto"`` enumerates the permutation distribution exactly when
    the smaller sample has at most 8 values and otherwise uses the normal
    approximation with tie-corrected variance and continuity correction.
    ``alternative="greater"`` tests whether ``sample_a`` tends to be larger.
    """
    if alternative not in ("two-sided", "greater", "less"):
        raise ValueError(f"unknown alternative {alternative!r}")
    if method not in ("auto", "exact", "normal"):
        raise ValueError(f"unknown method {method!r}")
    a = [float(v) for v in sample_a]
    b = [float(v) for v in sample_b]
    if not a or not b:
        raise ContractError("Mann-Whitney U needs two non-empty samples")
    if not all(math.isfinite(v) for v in a + b):
        raise ValidationError("Mann-Whitney U samples must be finite")
    n_a, n_b = len(a), len(b)
    ranks = midranks(a + b)
    u = float(ranks[:n_a].sum() - n_a * (n_a + 1) / 2.0)
    if method == "auto":
        method = "exact" if min(n_a, n_b) <= EXACT_MAX_MIN_N else "normal"
    if method == "exact":
        if n_a <= n_b:
            p = _exact_p(ranks[:n_a], ranks, alternative)
        else:
            flipped = {"greater": "less", "less": "greater"}.get(alternative, alternative)
            p = _exact_p(ranks[n_a:], ranks, flipped)
    else:
        p = _normal_p(u, n_a, n_b, ranks, alternative)
    return MannWhitneyResult(u, p, method)


# --- comparisons -----------------------------------------------------------------


@dataclass(frozen=True)
class GroupComparison:
    feature: str
    mean_low: float
    mean_high: float
    u: float
    p_value: float
    tier: Tier
    n_low: int
    n_high: int


def _feature_values(row) -> Mapping[str, float]:
    return row.values() if hasattr(row, "participant_id") else row


def compare_all(
    features: Mapping[str, object],
    split: GroupSplit,
    feature_names: Sequence[str] | None = None,
    alternative: str = "two-sided",
) -> list[GroupComparison]:
    """One Mann-Whitney comparison (low vs high) per feature column.

    ``features`` maps participant id to a SessionFeatures or a plain
    ``{feature: value}`` mapping.
    """
    for pid in sorted(split.low | split.high):
        if pid not in features:
            raise ValidationError(f"participant {pid!r} has no feature row")
    rows = {pid: _feature_values(features[pid]) for pid in split.low | split.high}
    if feature_names is None:
        from .features import FEATURE_NAMES

        feature_names = FEATURE_NAMES
    low_ids, high_ids = sorted(split.low), sorted(split.high)
    out = []
    for name in feature_names:
        lo = [float(rows[p][name]) for p in low_ids]
        hi = [float(rows[p][name]) for p in high_ids]
        res = mann_whitney_u(lo, hi, alternative=alternative)
        out.append(
            GroupComparison(
                feature=name,
                mean_low=math.fsum(lo) / len(lo),
                mean_high=math.fsum(hi) / len(hi),
                u=res.u,
                p_value=res.p_value,
                tier=significance_tier(res.p_value),
                n_low=len(lo),
                n_high=len(hi),
            )
        )
    return out


REPORT_COLUMNS = ("score_kind", "phase", "feature", "n_low", "n_high", "mean_low", "mean_high", "U", "p", "tier")


def write_comparisons(
    blocks: Iterable[tuple[GroupSplit, Sequence[GroupComparison]]],
    fh: IO[str],
) -> None:
    """Delimited comparison report, one row per (split, feature)."""
    writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for split, comps in blocks:
        for c in comps:
            writer.writerow([
                split.score_kind.value, split.phase.value, c.feature, c.n_low, c.n_high,
                repr(c.mean_low), repr(c.mean_high), repr(c.u), repr(c.p_value), c.tier.value,
            ])


def _fmt(v: float) -> str:
    if v == 0 or 0.01 <= abs(v) < 1e5:
        return f"{v:.4g}"
    return f"{v:.3e}"


def format_table(blocks: Sequence[tuple[GroupSplit, Sequence[GroupComparison]]]) -> str:
    """Human-readable side-by-side table, one column group per split.

    Markers: ``_`` 0.05 <= p < 0.1, ``*`` 0.01 <= p <= 0.05, ``_*`` p < 0.01.
    """
    if not blocks:
        return ""
    names = [c.feature for c in blocks[0][1]]
    by_split = [{c.feature: c for c in comps} for _, comps in blocks]
    head1 = f"{'':<22}" + "".join(
        f"{(s.score_kind.value.upper() + '/' + s.phase.value.upper()):^32}" for s, _ in blocks
    )
    head2 = f"{'feature':<22}" + "".join(
        f"{'Low':>10}{'High':>10}{'p':>12}" for _ in blocks
    )
    sizes = f"{'n':<22}" + "".join(
        f"{len(s.low):>10}{len(s.high):>10}{'':>12}" for s, _ in blocks
    )
    lines = [head1, head2, sizes]
    for name in names:
        cells = []
        for comp in by_split:
            c = comp[name]
            cells.append(f"{_fmt(c.mean_low):>10}{_fmt(c.mean_high):>10}{(f'{c.p_value:.3f}' + c.tier.marker):>12}")
        lines.append(f"{name:<22}" + "".join(cells))
    return "\n".join(lines) + "\n"
