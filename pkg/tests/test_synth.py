import io

import numpy as np
import pytest

from readseq.alignment import align_page
from readseq.errors import ValidationError
from readseq.ingest import parse_fixations, parse_layout, write_fixations, write_layout
from readseq.sequences import build_sequences, count_regressions
from readseq.synth import SynthConfig, false_positive_rate, generate, recovery_rate, write_truth

# Measured once for seed 12345 at sigma = r_foveal / 2 with the default plan.
BASELINE_SEED = 12345
BASELINE_RECOVERY = 0.846


def run(cfg, radii):
    d = generate(cfg)
    al = align_page(d.fixations, d.layout, radii)
    return d, al, build_sequences(al)


def test_reproducible():
    a = generate(SynthConfig(seed=4, sigma=12.0))
    b = generate(SynthConfig(seed=4, sigma=12.0))
    assert a.fixations == b.fixations and a.truth == b.truth and a.layout == b.layout
    assert generate(SynthConfig(seed=5)).fixations != a.fixations


def test_sigma_only_moves_fixations():
    a = generate(SynthConfig(seed=4, sigma=0.0))
    b = generate(SynthConfig(seed=4, sigma=20.0))
    assert [t.word_index for t in a.truth] == [t.word_index for t in b.truth]
    assert [f.t_start for f in a.fixations] == [f.t_start for f in b.fixations]


def test_pure_forward_ten_words(default_radii):
    cfg = SynthConfig(n_fixations=10, regression_prob=0, skip_prob=0, off_text_prob=0,
                      forward_steps=(1.0, 0, 0, 0))
    d, al, seqs = run(cfg, default_radii)
    assert [t.word_index for t in d.truth] == list(range(10))
    assert recovery_rate(d.truth, al) == 1.0
    assert [s.indices for s in seqs] == [list(range(10))]


def test_one_regression_noiseless(default_radii):
    for seed in range(200):
        cfg = SynthConfig(n_fixations=30, regression_prob=0.03, skip_prob=0, off_text_prob=0, seed=seed)
        d = generate(cfg)
        if d.n_regressions == 1:
            break
    else:
        pytest.fail("no seed produced exactly one regression")
    d, al, seqs = run(cfg, default_radii)
    assert count_regressions(seqs) == 1


def test_off_text_fixations_not_assigned(default_radii):
    d, al, _ = run(SynthConfig(seed=2, off_text_prob=0.2), default_radii)
    assert any(t.word_index is None for t in d.truth)
    assert false_positive_rate(d.truth, al) == 0.0


def test_pinned_baseline(default_radii):
    cfg = SynthConfig(seed=BASELINE_SEED, sigma=default_radii.r_foveal_px / 2, n_fixations=500)
    d, al, _ = run(cfg, default_radii)
    assert len(d.fixations) == 500
    assert recovery_rate(d.truth, al) >= BASELINE_RECOVERY


def test_formats_roundtrip():
    d = generate(SynthConfig(seed=1, n_fixations=50))
    buf = io.StringIO()
    write_fixations(d.fixations, buf)
    assert tuple(parse_fixations(buf.getvalue().encode())) == d.fixations
    buf = io.StringIO()
    write_layout([d.layout], buf)
    assert parse_layout(buf.getvalue().encode()) == [d.layout]
    buf = io.StringIO()
    write_truth(d.truth, buf)
    assert len(buf.getvalue().splitlines()) == 51


@pytest.mark.parametrize(
    "kwargs",
    [{"sigma": -1}, {"regression_prob": 1.5}, {"regression_prob": 0.6, "skip_prob": 0.5},
     {"forward_steps": (0.5, 0.2, 0, 0)}, {"word_width": (0, 10)}],
)
def test_invalid_config(kwargs):
    with pytest.raises(ValidationError):
        SynthConfig(**kwargs)
