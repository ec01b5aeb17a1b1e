import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gestaug.core import HardLabel
from gestaug.datasets import (
    DHG,
    SHREC17,
    ParseError,
    SkeletonSequence,
    export_normalized,
    from_jhmdb_positions,
    import_normalized,
    parse_skeleton_text,
    parse_split_index,
    read_index_file,
    write_index_file,
    write_skeleton_text,
)


def test_zero_file(tmp_path):
    p = tmp_path / "skel.txt"
    p.write_text(("0 " * 66).strip() + "\n" + ("0 " * 66).strip() + "\n")
    seq = parse_skeleton_text(p)
    assert seq.frames.shape == (2, 22, 3)
    assert not seq.frames.any()


def test_wrong_token_count_names_line(tmp_path):
    p = tmp_path / "skel.txt"
    p.write_text(" ".join(["1"] * 65) + "\n")
    with pytest.raises(ParseError) as info:
        parse_skeleton_text(p)
    assert info.value.line == 1
    assert ":1:" in str(info.value)


def test_non_numeric_token_names_line(tmp_path):
    p = tmp_path / "skel.txt"
    good = " ".join(["1"] * 66)
    p.write_text(good + "\n" + good + "\n" + good.replace("1", "x", 1) + "\n")
    with pytest.raises(ParseError) as info:
        parse_skeleton_text(p)
    assert info.value.line == 3
    assert "'x'" in str(info.value)


def test_blank_lines_skipped_and_numbering_kept(tmp_path):
    p = tmp_path / "skel.txt"
    p.write_text("\n" + " ".join(["0"] * 66) + "\n\n" + "1 2\n")
    with pytest.raises(ParseError) as info:
        parse_skeleton_text(p)
    assert info.value.line == 4


def test_text_round_trip_through_normalized(tmp_path):
    frames = np.array([[[t, j, 0] for j in range(22)] for t in range(5)], dtype=float)
    write_skeleton_text(SkeletonSequence(frames), tmp_path / "s.txt")
    seq = parse_skeleton_text(tmp_path / "s.txt")
    export_normalized(tmp_path / "s.json", seq, "x")
    rec = import_normalized(tmp_path / "s.json")
    np.testing.assert_array_equal(rec.sequence.frames, frames)


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.sampled_from([15, 22]), st.just(3)), elements=finite))
def test_normalized_round_trip(tmp_path_factory, frames):
    p = tmp_path_factory.mktemp("n") / "seq.json"
    seq = SkeletonSequence(frames, 30.0)
    export_normalized(p, seq, "id", {14: HardLabel(2, 14)}, {"k": 1})
    rec = import_normalized(p, joint_count=frames.shape[1])
    assert np.abs(rec.sequence.frames - frames).max(initial=0) <= 1e-9
    assert rec.labels == {14: HardLabel(2, 14)} and rec.sample_id == "id" and rec.meta == {"k": 1}
    assert rec.sequence.frame_rate == 30.0


def test_normalized_missing_coordinates(tmp_path):
    frames = np.zeros((2, 22, 3))
    export_normalized(tmp_path / "s.json", SkeletonSequence(frames))
    doc = json.loads((tmp_path / "s.json").read_text())
    for j in range(3):
        doc["frames"][1][j] = doc["frames"][1][j][:2]
    (tmp_path / "s.json").write_text(json.dumps(doc))
    with pytest.raises(ParseError, match="frame 1 joint 0"):
        import_normalized(tmp_path / "s.json")


def test_normalized_rejects_version_and_format(tmp_path):
    p = tmp_path / "s.json"
    export_normalized(p, SkeletonSequence(np.zeros((1, 22, 3))))
    doc = json.loads(p.read_text())
    p.write_text(json.dumps(dict(doc, schema_version=2)))
    with pytest.raises(ParseError, match="schema_version"):
        import_normalized(p)
    p.write_text(json.dumps(dict(doc, format="x")))
    with pytest.raises(ParseError):
        import_normalized(p)


def test_jhmdb_fixture(tmp_path):
    t = 4
    pos = np.stack([np.arange(15 * t).reshape(15, t), -np.arange(15 * t).reshape(15, t)]).astype(float)
    seq = from_jhmdb_positions(pos, 30.0)
    assert seq.frames.shape == (t, 15, 3)
    assert seq.frames[2, 7].tolist() == [pos[0, 7, 2], pos[1, 7, 2], 0.0]
    export_normalized(tmp_path / "j.json", seq, "jhmdb/clip", {21: HardLabel(0, 21)})
    assert import_normalized(tmp_path / "j.json", joint_count=15).sequence == seq
    with pytest.raises(ParseError):
        import_normalized(tmp_path / "j.json", joint_count=22)


# -- split index -------------------------------------------------------------------------

FIVE_ROWS = """\
1 1 1 1 1 1 120
3 2 5 4 3 6 80
10 1 12 2 10 19 64
14 2 28 5 14 28 50
7 1 2 3 7 13 99
"""


def test_five_row_fixture(tmp_path):
    p = tmp_path / "train_gestures.txt"
    p.write_text(FIVE_ROWS)
    idx = parse_split_index(p, split="train")
    assert len(idx) == 5
    first, second, last = idx[0], idx[1], idx[3]
    assert first.sample_id == "shrec17/g01/f1/s01/e1"
    assert first.sequence_path == "gesture_1/finger_1/subject_1/essai_1/skeletons_world.txt"
    assert first.labels == {14: HardLabel(0, 14), 28: HardLabel(0, 28)}
    assert second.labels == {14: HardLabel(2, 14), 28: HardLabel(5, 28)}
    assert (second.subject, second.trial, second.split) == (5, 4, "train")
    assert last.labels == {14: HardLabel(13, 14), 28: HardLabel(27, 28)}
    assert last.sample_id == "shrec17/g14/f2/s28/e5"


def test_label_out_of_range_names_row(tmp_path):
    p = tmp_path / "idx.txt"
    p.write_text("1 1 1 1 1 1 10\n15 1 1 1 15 1 10\n")
    with pytest.raises(ParseError) as info:
        parse_split_index(p, scheme=14)
    assert info.value.line == 2
    assert "0..13" in str(info.value)


def test_empty_index_warns(tmp_path, caplog):
    p = tmp_path / "idx.txt"
    p.write_text("")
    with caplog.at_level(logging.WARNING):
        assert parse_split_index(p) == []
    assert "no rows" in caplog.text


def test_short_row_and_non_integer(tmp_path):
    p = tmp_path / "idx.txt"
    p.write_text("1 1 1\n")
    with pytest.raises(ParseError) as info:
        parse_split_index(p)
    assert info.value.line == 1
    p.write_text("1 1 1 1 1 1\n1 a 1 1 1 1\n")
    with pytest.raises(ParseError) as info:
        parse_split_index(p)
    assert info.value.line == 2


def test_dhg_derived_labels(tmp_path):
    p = tmp_path / "informations_troncage_sequences.txt"
    p.write_text("5 2 3 1 10 50\n")
    (e,) = parse_split_index(p, profile=DHG)
    assert e.labels == {14: HardLabel(4, 14), 28: HardLabel(9, 28)}
    assert e.sample_id == "dhg/g05/f2/s03/e1"


def test_unsupported_scheme(tmp_path):
    p = tmp_path / "idx.txt"
    p.write_text(FIVE_ROWS)
    with pytest.raises(ValueError):
        parse_split_index(p, scheme=21, profile=SHREC17)


def test_index_file_round_trip(tmp_path):
    rows = [{"sample_id": "b", "x": 1}, {"sample_id": "a", "x": 2}]
    write_index_file(tmp_path / "index.jsonl", rows, "shrec17")
    header, got = read_index_file(tmp_path)
    assert header["count"] == 2 and header["profile"] == "shrec17"
    assert [r["sample_id"] for r in got] == ["a", "b"]
