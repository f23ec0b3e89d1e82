import io
import json
import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from readseq.errors import ParseError, ValidationError
from readseq.ingest import (
    Fixation,
    PageKind,
    Scores,
    build_sessions,
    filter_content_pages,
    parse_fixations,
    parse_layout,
    parse_scores,
    write_fixations,
    write_layout,
    write_scores,
)

HEADER = "participant_id,page_id,t_start_ms,duration_ms,x_px,y_px\n"


def layout_doc(*pages):
    return json.dumps({"pages": list(pages)}).encode()


def page(page_id, n, kind="content", start=0):
    return {
        "page_id": page_id,
        "page_kind": kind,
        "words": [{"index": start + i, "text": f"w{i}", "bbox": [i * 50, 0, i * 50 + 40, 20]} for i in range(n)],
    }


def test_three_rows_sorted_by_time():
    data = HEADER + "p1,a,300,100,1,2\np1,a,100,100,3,4\np1,a,200,100,5,6\n"
    fixes = parse_fixations(data.encode())
    assert [f.t_start for f in fixes] == [100, 200, 300]
    assert fixes[0] == Fixation("p1", "a", 100.0, 100.0, 3.0, 4.0)


def test_header_only_is_empty():
    assert parse_fixations(HEADER.encode()) == []


def test_negative_duration_names_row_and_field():
    data = HEADER + "p1,a,0,100,1,2\np1,a,5,-5,1,2\n"
    with pytest.raises(ParseError) as err:
        parse_fixations(data.encode())
    assert err.value.line == 3
    assert err.value.column == "duration_ms"


def test_malformed_number():
    with pytest.raises(ParseError) as err:
        parse_fixations((HEADER + "p1,a,0,100,abc,2\n").encode())
    assert (err.value.line, err.value.column) == (2, "x_px")


def test_wrong_field_count():
    with pytest.raises(ParseError) as err:
        parse_fixations((HEADER + "p1,a,0,100\n").encode())
    assert err.value.line == 2


def test_missing_column():
    with pytest.raises(ParseError, match="x_px"):
        parse_fixations(b"participant_id,page_id,t_start_ms,duration_ms,y_px\n")


def test_tab_delimiter_and_scroll_offset():
    data = "participant_id\tpage_id\tt_start_ms\tduration_ms\tx_px\ty_px\tscroll_y_px\np\ta\t0\t10\t5\t100\t900\n"
    (f,) = parse_fixations(data.encode())
    assert f.y == 1000.0


def test_stable_ties_and_streams():
    data = HEADER + "p1,a,10,1,1,0\np2,a,5,1,2,0\np1,a,10,1,3,0\np1,b,0,1,4,0\n"
    fixes = parse_fixations(data.encode())
    assert [f.x for f in fixes] == [1, 3, 2, 4]


def test_accepts_path_and_text_stream(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text(HEADER + "p,a,0,1,1,1\n", encoding="utf-8")
    assert len(parse_fixations(str(path))) == 1
    assert len(parse_fixations(io.StringIO(HEADER + "p,a,0,1,1,1\n"))) == 1


def test_non_utf8():
    with pytest.raises(ParseError, match="UTF-8"):
        parse_fixations(HEADER.encode() + b"p\xff,a,0,1,1,1\n")


def test_layout_accepts_contiguous():
    (layout,) = parse_layout(layout_doc(page("a", 5)))
    assert [w.word_index for w in layout.words] == [0, 1, 2, 3, 4]
    assert layout.page_kind is PageKind.CONTENT


def test_layout_gap_rejected():
    doc = page("a", 4)
    doc["words"] = [w for w in doc["words"] if w["index"] != 2]
    with pytest.raises(ValidationError, match="contiguous"):
        parse_layout(layout_doc(doc))


def test_layout_duplicate_rejected():
    doc = page("a", 3)
    doc["words"][2]["index"] = 1
    with pytest.raises(ValidationError, match="duplicate"):
        parse_layout(layout_doc(doc))


def test_layout_inverted_bbox_rejected():
    doc = page("a", 3)
    doc["words"][1]["bbox"] = [100, 0, 90, 20]
    with pytest.raises(ValidationError, match="inverted"):
        parse_layout(layout_doc(doc))


def test_layout_two_pages_and_unsorted_words():
    doc = page("b", 3, kind="serp")
    doc["words"].reverse()
    layouts = parse_layout(layout_doc(page("a", 2), doc))
    assert [p.page_id for p in layouts] == ["a", "b"]
    assert layouts[1].page_kind is PageKind.SERP
    assert [w.word_index for w in layouts[1].words] == [0, 1, 2]


def test_layout_bad_json():
    with pytest.raises(ParseError):
        parse_layout(b"{not json")


def _session(kinds):
    pages = [page(f"pg{i}", 3, kind=k) for i, k in enumerate(kinds)]
    layouts = parse_layout(layout_doc(*pages))
    fixes = [Fixation("p", f"pg{i}", float(t), 100.0, 10.0, 10.0) for i in range(len(kinds)) for t in range(2)]
    (session,) = build_sessions(fixes, layouts)
    return session


def test_filter_drops_serp():
    s = filter_content_pages(_session(["content", "serp", "content"]))
    assert [p.page_id for p in s.pages] == ["pg0", "pg2"]
    assert s.dropped_fixations == 2


def test_filter_only_serp_warns(caplog):
    with caplog.at_level(logging.WARNING):
        s = filter_content_pages(_session(["serp", "video"]))
    assert s.pages == ()
    assert "no content pages" in caplog.text


def test_filter_identity_and_idempotent():
    s = _session(["content", "content"])
    assert filter_content_pages(s) == s
    mixed = filter_content_pages(_session(["content", "other"]))
    assert filter_content_pages(mixed) == mixed


def test_unknown_page_rejected():
    layouts = parse_layout(layout_doc(page("a", 2)))
    with pytest.raises(ValidationError, match="unknown page"):
        build_sessions([Fixation("p", "zz", 0, 1, 0, 0)], layouts)


def test_scores_roundtrip():
    scores = {"p1": Scores(1.0, 3.0, 2.0, 4.5), "p2": Scores(0.0, 0.0, 1.25, 2.0)}
    buf = io.StringIO()
    write_scores(scores, buf)
    assert parse_scores(buf.getvalue().encode()) == scores


def test_scores_negative_rejected():
    with pytest.raises(ParseError) as err:
        parse_scores(b"participant_id,mcq_pre,mcq_post,essay_pre,essay_post\np,1,-2,0,0\n")
    assert err.value.column == "mcq_post"


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=60)
@given(st.lists(st.tuples(st.sampled_from(["p1", "p2"]), st.sampled_from(["a", "b"]),
                          st.integers(0, 10**6), st.floats(0, 5e3), finite, finite), max_size=30))
def test_fixation_roundtrip(rows):
    fixes = [Fixation(p, g, float(t), d, x, y) for p, g, t, d, x, y in rows]
    first = parse_fixations(_dump(fixes))
    again = parse_fixations(_dump(first))
    assert again == first
    assert sorted(first, key=repr) == sorted(fixes, key=repr)


def _dump(fixes):
    buf = io.StringIO()
    write_fixations(fixes, buf)
    return buf.getvalue().encode()


@settings(max_examples=30)
@given(st.integers(1, 20), st.integers(0, 50), st.floats(0.5, 80))
def test_layout_roundtrip(n, start, width):
    doc = page("a", n, start=start)
    for w in doc["words"]:
        w["bbox"][2] = w["bbox"][0] + width
    layouts = parse_layout(layout_doc(doc))
    buf = io.StringIO()
    write_layout(layouts, buf)
    assert parse_layout(buf.getvalue().encode()) == layouts
