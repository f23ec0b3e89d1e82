import json
import os

import pytest

from readseq.cli import main, resolve_config
from readseq.geometry import RadiiForm


@pytest.fixture
def synth_dir(tmp_path):
    out = tmp_path / "syn"
    assert main(["synth", "--out", str(out), "--participants", "8", "--seed", "7", "--n-fixations", "200"]) == 0
    return out


def pipeline(synth_dir, out, *extra):
    return main([
        "pipeline", "--fixations", str(synth_dir / "fixations.tsv"), "--layout", str(synth_dir / "layout.json"),
        "--scores", str(synth_dir / "scores.tsv"), "--out", str(out), *extra,
    ])


def read_table(path):
    lines = path.read_text().splitlines()
    header = lines[0].split("\t")
    return [dict(zip(header, line.split("\t"))) for line in lines[1:]]


def test_pipeline_noiseless_regressions(synth_dir, tmp_path):
    assert pipeline(synth_dir, tmp_path / "run") == 0
    planned = json.loads((synth_dir / "manifest.json").read_text())["planned_regressions"]
    rows = read_table(tmp_path / "run" / "features.tsv")
    assert {r["participant_id"]: int(r["n_Reg"]) for r in rows} == planned


def test_manifest_records_radii_and_policies(synth_dir, tmp_path):
    assert main(["align", "--fixations", str(synth_dir / "fixations.tsv"), "--layout",
                 str(synth_dir / "layout.json"), "--out", str(tmp_path / "a")]) == 0
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["radii"]["r_foveal_px_rounded"] == 41
    assert man["radii"]["r_parafoveal_px_rounded"] == 185
    for key in ("transition_form", "radii_form", "nwords", "time_base", "min_seq_len", "equal_mean", "geometry"):
        assert key in man["config"]
    assert set(man["inputs"]) == {str(synth_dir / "fixations.tsv"), str(synth_dir / "layout.json")}
    assert (tmp_path / "a" / "aligned.tsv").exists() and (tmp_path / "a" / "sequences.tsv").exists()


def test_threads_do_not_change_output(synth_dir, tmp_path):
    assert pipeline(synth_dir, tmp_path / "one") == 0
    assert pipeline(synth_dir, tmp_path / "four", "--threads", "4") == 0
    for name in ("aligned.tsv", "sequences.tsv", "features.tsv", "comparison.tsv", "comparison.txt", "groups.tsv"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "four" / name).read_bytes()


def test_compare_identical_rows_all_ns(tmp_path):
    feats = tmp_path / "f.tsv"
    scores = tmp_path / "s.tsv"
    from readseq.features import FEATURE_NAMES

    header = "participant_id\t" + "\t".join(FEATURE_NAMES)
    rows = [f"p{i}\t" + "\t".join("1.5" for _ in FEATURE_NAMES) for i in range(10)]
    feats.write_text("\n".join([header] + rows) + "\n")
    scores.write_text("participant_id,mcq_pre,mcq_post,essay_pre,essay_post\n"
                      + "".join(f"p{i},{i % 3},{i},{i % 2},{9 - i}\n" for i in range(10)))
    assert main(["compare", "--features", str(feats), "--scores", str(scores), "--out", str(tmp_path / "c")]) == 0
    table = read_table(tmp_path / "c" / "comparison.tsv")
    assert len(table) == 6 * len(FEATURE_NAMES)
    assert {r["tier"] for r in table} == {"ns"}


def test_missing_file_exit_2(tmp_path, capsys):
    assert main(["features", "--fixations", str(tmp_path / "nope.tsv"), "--layout", "x", "--out", str(tmp_path)]) == 2
    assert "nope.tsv" in capsys.readouterr().err


def test_parse_error_exit_3(tmp_path, capsys):
    fx = tmp_path / "f.csv"
    fx.write_text("participant_id,page_id,t_start_ms,duration_ms,x_px,y_px\np,a,0,-5,1,1\n")
    lay = tmp_path / "l.json"
    lay.write_text('{"pages": [{"page_id": "a", "page_kind": "content", "words": []}]}')
    assert main(["features", "--fixations", str(fx), "--layout", str(lay), "--out", str(tmp_path / "o")]) == 3
    assert "line 2" in capsys.readouterr().err


def test_degenerate_exit_4(synth_dir, tmp_path):
    scores = tmp_path / "s.tsv"
    ids = sorted({line.split("\t")[0] for line in (synth_dir / "fixations.tsv").read_text().splitlines()[1:]})
    scores.write_text("participant_id,mcq_pre,mcq_post,essay_pre,essay_post\n" + "".join(f"{p},1,1,1,1\n" for p in ids))
    code = main(["pipeline", "--fixations", str(synth_dir / "fixations.tsv"), "--layout", str(synth_dir / "layout.json"),
                 "--scores", str(scores), "--out", str(tmp_path / "o")])
    assert code == 4


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps({"min_seq_len": 3, "radii_form": "direct",
                                    "geometry": {"viewing_distance_cm": 50}}))
    cfg = resolve_config(["align", "--config", str(cfg_file)])
    assert cfg.min_seq_len == 3 and cfg.radii_form is RadiiForm.DIRECT
    assert cfg.geometry.viewing_distance_cm == 50.0
    cfg = resolve_config(["align", "--config", str(cfg_file), "--min-seq-len", "4",
                          "--geometry", "viewing_distance_cm=60,resolution_px=1280x720"])
    assert cfg.min_seq_len == 4 and cfg.radii_form is RadiiForm.DIRECT
    assert cfg.geometry.viewing_distance_cm == 60.0 and cfg.geometry.resolution_px == (1280, 720)
    default = resolve_config(["align"])
    assert default.geometry.diagonal_inches == 24.0 and default.geometry.resolution_px == (1920, 1080)


def test_bad_geometry_exit_3(tmp_path):
    assert main(["align", "--geometry", "foveal_diameter_deg=9", "--out", str(tmp_path)]) == 3


def test_no_temp_files_left(synth_dir, tmp_path):
    assert pipeline(synth_dir, tmp_path / "run") == 0
    assert not [n for n in os.listdir(tmp_path / "run") if n.startswith(".")]
