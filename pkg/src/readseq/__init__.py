"""Reading-sequence detection from eye-tracking fixations on rendered web pages."""

__version__ = "0.1.0"

from .alignment import align_page, candidates, segment_lines, viterbi_assign, word_distance
from .features import SessionFeatures, compute_features
from .geometry import DisplayGeometry, RegionRadii, compute_radii, pixels_per_cm
from .ingest import Fixation, PageLayout, WordBox, filter_content_pages, parse_fixations, parse_layout
from .sequences import ReadingSequence, build_sequences, count_regressions
from .stats import compare_all, mann_whitney_u, split_groups

__all__ = [
    "DisplayGeometry", "Fixation", "PageLayout", "ReadingSequence", "RegionRadii", "SessionFeatures", "WordBox",
    "align_page", "build_sequences", "candidates", "compare_all", "compute_features", "compute_radii",
    "count_regressions", "filter_content_pages", "mann_whitney_u", "parse_fixations", "parse_layout",
    "pixels_per_cm", "segment_lines", "split_groups", "viterbi_assign", "word_distance",
]
