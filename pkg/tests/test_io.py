import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from labelling import io
from labelling.feature import whitened_monomial_map
from labelling.noise import uniform_box
from labelling.search import SearchConfig, label_search, membership

from conftest import circle_points

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(arrays(np.float64, st.tuples(st.integers(1, 20), st.integers(1, 4)), elements=finite))
def test_points_round_trip_bit_exact(points):
    back = io.parse_points(io.points_to_csv(points))
    assert back.shape == points.shape
    assert np.array_equal(back.view(np.int64), points.view(np.int64))


def test_points_file_round_trip(tmp_path):
    pts = np.random.default_rng(0).normal(size=(50, 2))
    path = io.write_points(tmp_path / "sub" / "p.csv", pts)
    assert np.array_equal(io.read_points(path), pts)


@pytest.mark.parametrize("text,fragment", [
    ("", "empty file"),
    ("x0,x1\n", "no data rows"),
    ("a,b\n1,2\n", ":1:"),
    ("x0,x1\n1,2\n3\n", ":3:"),
    ("x0,x1\n1,2\n3,abc\n", ":3:"),
    ("x0,x1\n1,nan\n", "non-finite"),
])
def test_parse_errors_name_the_line(text, fragment):
    with pytest.raises(io.DatasetParseError, match=fragment):
        io.parse_points(text)


def test_blank_lines_are_skipped():
    assert io.parse_points("x0\n1\n\n2\n").ravel().tolist() == [1.0, 2.0]


def test_membership_round_trip(tmp_path):
    ids = [[0], [], [0, 2], [1]]
    io.write_membership(tmp_path / "m.csv", ids)
    assert io.read_membership(tmp_path / "m.csv") == ids
    assert (tmp_path / "m.csv").read_text().splitlines()[3] == "2,0;2"


def test_atomic_write_leaves_no_temp_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "out.json"
    target.write_text("old")

    def boom(*a):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(OSError):
        io.atomic_write_text(target, "new")
    assert target.read_text() == "old"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["out.json"]


def test_json_handles_numpy():
    text = io.dumps({"b": np.arange(3), "a": np.float64(0.5), "c": np.int32(4)})
    assert text.index('"a"') < text.index('"b"')
    assert '"c": 4' in text


def test_atlas_document_round_trip(tmp_path):
    box = uniform_box((-1, -1), (1, 1))
    fmap = whitened_monomial_map(2, 2, box, seed=0)
    pts = circle_points(60)
    atlas = label_search(pts, fmap, box, SearchConfig(n0=10, iterations=3, seed=2))
    io.write_json(tmp_path / "a.json", io.atlas_document(atlas, fmap, box))
    back, fmap2, box2 = io.load_atlas_document(io.read_json(tmp_path / "a.json"))
    assert np.array_equal(fmap2.transform, fmap.transform)
    assert box2.to_dict() == box.to_dict()
    assert back.dataset_fingerprint == atlas.dataset_fingerprint
    assert back.config == atlas.config
    assert [r.members for r in back] == [r.members for r in atlas]
    assert np.array_equal(back.records[0].label.ell, atlas.records[0].label.ell)
    assert membership(back, len(pts)) == membership(atlas, len(pts))
