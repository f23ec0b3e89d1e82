"""Command-line front end.

Exit codes: 0 ok, 2 missing input file (or bad usage), 3 parse/validation
error, 4 degenerate statistics.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .alignment import TransitionForm
from .errors import DegenerateSplitError, ReadseqError
from .features import NWordsPolicy, TimeBase, read_feature_matrix, write_feature_matrix
from .geometry import DisplayGeometry, RadiiForm, compute_radii
from .ingest import Scores, build_sessions, parse_fixations, parse_layout, parse_scores, write_fixations, write_layout, write_scores
from .pipeline import Policies, analyze_sessions, write_aligned, write_sequences
from .stats import EqualPolicy, Phase, ScoreKind, compare_all, format_table, split_groups, write_comparisons
from .synth import SynthConfig, generate, make_layout, write_truth

logger = logging.getLogger("readseq")

SUBCOMMANDS = ("align", "features", "compare", "synth", "pipeline")
GEOMETRY_KEYS = {f.name for f in dataclasses.fields(DisplayGeometry)}


class MissingInput(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    out: str = "out"
    fixations: str | None = None
    layout: str | None = None
    scores: str | None = None
    features: str | None = None
    geometry: DisplayGeometry = field(default_factory=DisplayGeometry)
    radii_form: RadiiForm = RadiiForm.ADDITIVE
    transition_form: TransitionForm = TransitionForm.DIFFERENCE
    nwords: NWordsPolicy = NWordsPolicy.TRAVERSED
    time_base: TimeBase = TimeBase.READING
    min_seq_len: int = 2
    min_seq_words: int = 2
    equal_mean: EqualPolicy = EqualPolicy.EXCLUDE
    alternative: str = "two-sided"
    score_kind: str = "all"
    phase: str = "all"
    threads: int = 1
    seed: int = 0
    sigma: float = 0.0
    n_fixations: int = 500
    participants: int = 1
    verbose: int = 0

    def echo(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, DisplayGeometry):
                v = dataclasses.asdict(v)
                v["resolution_px"] = list(v["resolution_px"])
            elif hasattr(v, "value"):
                v = v.value
            out[f.name] = v
        return out


_ENUMS = {
    "radii_form": RadiiForm, "transition_form": TransitionForm, "nwords": NWordsPolicy,
    "time_base": TimeBase, "equal_mean": EqualPolicy,
}


def _geometry_from(values: dict) -> DisplayGeometry:
    unknown = set(values) - GEOMETRY_KEYS
    if unknown:
        raise ValueError(f"unknown geometry keys {sorted(unknown)}")
    kw = dict(values)
    if "resolution_px" in kw:
        res = kw["resolution_px"]
        if isinstance(res, str):
            res = res.lower().replace("x", ",").split(",")
        kw["resolution_px"] = tuple(int(v) for v in res)
    for k in GEOMETRY_KEYS - {"resolution_px"}:
        if k in kw:
            kw[k] = float(kw[k])
    return DisplayGeometry(**kw)


def _parse_geometry_flag(text: str) -> dict:
    """``diagonal_inches=24,viewing_distance_cm=65,resolution_px=1920x1080``."""
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        # resolution may be written 1920,1080 after the key; fold stray numbers back
        if "=" not in part:
            if "resolution_px" in out and isinstance(out["resolution_px"], str):
                out["resolution_px"] += "," + part
                continue
            raise ValueError(f"bad --geometry item {part!r}; expected key=value")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="readseq", description="Reading-sequence detection and reading-feature analysis.")
    p.add_argument("--version", action="version", version=f"readseq {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)

    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--config", help="JSON file with RunConfig keys (flags override it)")
    common.add_argument("--out", default=S, help="output directory")
    common.add_argument("--geometry", default=S, help="key=value list, e.g. diagonal_inches=24,resolution_px=1920x1080")
    common.add_argument("--radii-form", dest="radii_form", choices=[e.value for e in RadiiForm], default=S)
    common.add_argument("--transition-form", "--eq1-form", dest="transition_form", choices=[e.value for e in TransitionForm], default=S)
    common.add_argument("--nwords", choices=[e.value for e in NWordsPolicy], default=S)
    common.add_argument("--time-base", dest="time_base", choices=[e.value for e in TimeBase], default=S)
    common.add_argument("--min-seq-len", dest="min_seq_len", type=int, default=S)
    common.add_argument("--min-seq-words", dest="min_seq_words", type=int, default=S)
    common.add_argument("--equal-mean", dest="equal_mean", choices=[e.value for e in EqualPolicy], default=S)
    common.add_argument("--alternative", choices=["two-sided", "greater", "less"], default=S)
    common.add_argument("--threads", type=int, default=S)
    common.add_argument("--seed", type=int, default=S)
    common.add_argument("-v", "--verbose", action="count", default=S)

    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument("--fixations", default=S, help="fixation file (csv/tsv)")
    inputs.add_argument("--layout", default=S, help="word layout JSON")

    splits = argparse.ArgumentParser(add_help=False)
    splits.add_argument("--score-kind", dest="score_kind", choices=["all"] + [e.value for e in ScoreKind], default=S)
    splits.add_argument("--phase", choices=["all"] + [e.value for e in Phase], default=S)

    sub.add_parser("align", parents=[common, inputs], help="write per-fixation word assignments and sequences")
    sub.add_parser("features", parents=[common, inputs], help="write the per-participant feature matrix")
    cp = sub.add_parser("compare", parents=[common, splits], help="Low/High Mann-Whitney comparison of a feature matrix")
    cp.add_argument("--features", default=S)
    cp.add_argument("--scores", default=S)
    sp = sub.add_parser("synth", parents=[common], help="generate synthetic fixations, layout and ground truth")
    sp.add_argument("--sigma", type=float, default=S, help="gaze jitter in px")
    sp.add_argument("--n-fixations", dest="n_fixations", type=int, default=S)
    sp.add_argument("--participants", type=int, default=S)
    pp = sub.add_parser("pipeline", parents=[common, inputs, splits], help="align, features and (with --scores) compare")
    pp.add_argument("--scores", default=S)
    return p


def resolve_config(argv: list[str] | None = None) -> RunConfig:
    """Defaults < config file < command-line flags."""
    ns = vars(build_parser().parse_args(argv))
    merged: dict = {}
    geometry: dict = {}
    if ns.get("config"):
        path = ns.pop("config")
        if not os.path.exists(path):
            raise MissingInput(path)
        with open(path, encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        geometry.update(file_cfg.pop("geometry", {}) or {})
        merged.update(file_cfg)
    else:
        ns.pop("config", None)
    if "geometry" in ns:
        geometry.update(_parse_geometry_flag(ns.pop("geometry")))
    merged.update(ns)
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ValueError(f"unknown configuration keys {sorted(unknown)}")
    for k, enum in _ENUMS.items():
        if k in merged:
            merged[k] = enum(merged[k])
    cfg = RunConfig(geometry=_geometry_from(geometry), **merged)
    if cfg.min_seq_len < 1 or cfg.min_seq_words < 1 or cfg.threads < 1 or cfg.participants < 1:
        raise ValueError("min-seq-len, min-seq-words, threads and participants must be positive")
    return cfg


# --- output helpers ---------------------------------------------------------------


def _atomic_write(path: Path, render: Callable[[io.StringIO], None]) -> None:
    buf = io.StringIO()
    render(buf)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _require(cfg: RunConfig, *names: str) -> list[str]:
    paths = []
    for name in names:
        path = getattr(cfg, name)
        if path is None:
            raise ValueError(f"--{name} is required for '{cfg.subcommand}'")
        if not os.path.exists(path):
            raise MissingInput(path)
        paths.append(path)
    return paths


def _manifest(cfg: RunConfig, inputs: list[str], outputs: list[str], extra: dict | None = None) -> dict:
    radii = compute_radii(cfg.geometry, cfg.radii_form)
    doc = {
        "tool": "readseq",
        "version": __version__,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "config": cfg.echo(),
        "radii": {
            "r_foveal_px": radii.r_foveal_px,
            "r_parafoveal_px": radii.r_parafoveal_px,
            "candidate_radius_px": radii.candidate_radius_px,
            "r_foveal_px_rounded": round(radii.r_foveal_px),
            "r_parafoveal_px_rounded": round(radii.r_parafoveal_px),
        },
        "inputs": {p: _sha256(p) for p in inputs},
        "outputs": outputs,
    }
    if extra:
        doc.update(extra)
    return doc


def _write_manifest(out: Path, doc: dict) -> None:
    _atomic_write(out / "manifest.json", lambda fh: (json.dump(doc, fh, indent=2, sort_keys=True), fh.write("\n")))


# --- subcommands ---------------------------------------------------------------


def _policies(cfg: RunConfig) -> Policies:
    return Policies(cfg.transition_form, cfg.nwords, cfg.time_base, cfg.min_seq_len, cfg.min_seq_words)


def _analyze(cfg: RunConfig, scores=None):
    fix_path, layout_path = _require(cfg, "fixations", "layout")
    sessions = build_sessions(parse_fixations(fix_path), parse_layout(layout_path), scores)
    radii = compute_radii(cfg.geometry, cfg.radii_form)
    logger.info("r_foveal=%.2f px r_parafoveal=%.2f px", radii.r_foveal_px, radii.r_parafoveal_px)
    return [fix_path, layout_path], analyze_sessions(sessions, radii, _policies(cfg), cfg.threads)


def _selected(cfg: RunConfig) -> list[tuple[ScoreKind, Phase]]:
    kinds = list(ScoreKind) if cfg.score_kind == "all" else [ScoreKind(cfg.score_kind)]
    phases = list(Phase) if cfg.phase == "all" else [Phase(cfg.phase)]
    return [(k, ph) for ph in phases for k in kinds]


def _compare(cfg: RunConfig, features: dict, scores: dict, out: Path) -> tuple[list[str], dict]:
    blocks = []
    for kind, phase in _selected(cfg):
        split = split_groups(scores, kind, phase, cfg.equal_mean)
        blocks.append((split, compare_all(features, split, alternative=cfg.alternative)))

    def groups(fh):
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(("score_kind", "phase", "threshold", "n_low", "n_high", "n_equal"))
        for s, _ in blocks:
            w.writerow((s.score_kind.value, s.phase.value, repr(s.threshold), len(s.low), len(s.high), s.n_equal))

    _atomic_write(out / "comparison.tsv", lambda fh: write_comparisons(blocks, fh))
    _atomic_write(out / "groups.tsv", groups)
    text = []
    for phase in dict.fromkeys(s.phase for s, _ in blocks):
        text.append(f"== {phase.value.upper()} ==\n" + format_table([b for b in blocks if b[0].phase is phase]))
    _atomic_write(out / "comparison.txt", lambda fh: fh.write("\n".join(text)))
    summary = {f"{s.score_kind.value}/{s.phase.value}": {"n_low": len(s.low), "n_high": len(s.high), "n_equal": s.n_equal}
               for s, _ in blocks}
    return ["comparison.tsv", "comparison.txt", "groups.tsv"], {"group_sizes": summary}


def cmd_align(cfg: RunConfig, out: Path) -> None:
    inputs, results = _analyze(cfg)
    _atomic_write(out / "aligned.tsv", lambda fh: write_aligned(results, fh))
    _atomic_write(out / "sequences.tsv", lambda fh: write_sequences(results, fh))
    _write_manifest(out, _manifest(cfg, inputs, ["aligned.tsv", "sequences.tsv"]))


def cmd_features(cfg: RunConfig, out: Path) -> None:
    inputs, results = _analyze(cfg)
    _atomic_write(out / "features.tsv", lambda fh: write_feature_matrix([r.features for r in results], fh))
    _write_manifest(out, _manifest(cfg, inputs, ["features.tsv"]))


def cmd_compare(cfg: RunConfig, out: Path) -> None:
    feat_path, score_path = _require(cfg, "features", "scores")
    outputs, extra = _compare(cfg, read_feature_matrix(feat_path), parse_scores(score_path), out)
    _write_manifest(out, _manifest(cfg, [feat_path, score_path], outputs, extra))


def cmd_pipeline(cfg: RunConfig, out: Path) -> None:
    scores = None
    score_inputs = []
    if cfg.scores is not None:
        (score_path,) = _require(cfg, "scores")
        scores = parse_scores(score_path)
        score_inputs = [score_path]
    inputs, results = _analyze(cfg, scores)
    features = {r.session.participant_id: r.features for r in results}
    _atomic_write(out / "aligned.tsv", lambda fh: write_aligned(results, fh))
    _atomic_write(out / "sequences.tsv", lambda fh: write_sequences(results, fh))
    _atomic_write(out / "features.tsv", lambda fh: write_feature_matrix(features.values(), fh))
    outputs, extra = ["aligned.tsv", "sequences.tsv", "features.tsv"], {}
    if scores is not None:
        more, extra = _compare(cfg, features, scores, out)
        outputs += more
    _write_manifest(out, _manifest(cfg, inputs + score_inputs, outputs, extra))


def cmd_synth(cfg: RunConfig, out: Path) -> None:
    base = SynthConfig(seed=cfg.seed, sigma=cfg.sigma, n_fixations=cfg.n_fixations)
    layout = make_layout(base, np.random.default_rng(cfg.seed))
    datasets = [
        generate(dataclasses.replace(base, seed=cfg.seed + i + 1), layout=layout, participant_id=f"p{i:03d}")
        for i in range(cfg.participants)
    ]
    # arbitrary but seeded test scores so that `compare` has something to split
    rng = np.random.default_rng(cfg.seed)
    scores = {}
    for i in range(cfg.participants):
        mcq_pre, essay_pre = (float(v) for v in rng.integers(0, 10, size=2))
        mcq_gain, essay_gain = (float(v) for v in rng.integers(0, 8, size=2))
        scores[f"p{i:03d}"] = Scores(mcq_pre, mcq_pre + mcq_gain, essay_pre, essay_pre + essay_gain)
    _atomic_write(out / "fixations.tsv", lambda fh: write_fixations([f for d in datasets for f in d.fixations], fh))
    _atomic_write(out / "layout.json", lambda fh: write_layout([layout], fh))
    _atomic_write(out / "truth.tsv", lambda fh: write_truth([t for d in datasets for t in d.truth], fh))
    _atomic_write(out / "scores.tsv", lambda fh: write_scores(scores, fh))
    regressions = {f"p{i:03d}": d.n_regressions for i, d in enumerate(datasets)}
    _write_manifest(out, _manifest(cfg, [], ["fixations.tsv", "layout.json", "truth.tsv", "scores.tsv"],
                                   {"planned_regressions": regressions}))


COMMANDS = {
    "align": cmd_align, "features": cmd_features, "compare": cmd_compare,
    "synth": cmd_synth, "pipeline": cmd_pipeline,
}


def run(cfg: RunConfig) -> int:
    """Execute ``cfg`` and return the process exit status."""
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[cfg.subcommand](cfg, out)
    except MissingInput as exc:
        print(f"readseq: input file not found: {exc}", file=sys.stderr)
        return 2
    except DegenerateSplitError as exc:
        print(f"readseq: degenerate statistics: {exc}", file=sys.stderr)
        return 4
    except (ReadseqError, ValueError) as exc:
        print(f"readseq: {exc}", file=sys.stderr)
        return 3
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = resolve_config(argv)
    except MissingInput as exc:
        print(f"readseq: input file not found: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        print(f"readseq: bad configuration: {exc}", file=sys.stderr)
        return 3
    logging.basicConfig(level=logging.WARNING - 10 * min(cfg.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
