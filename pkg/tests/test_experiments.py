import numpy as np
import pytest

from labelling.data import GroundTruth, PendulumSpec, match_label_to_truth
from labelling.experiments import (EXPERIMENTS, evaluate_conics, evaluate_pendulums,
                                   feature_map, generate, get_experiment, run_experiment,
                                   write_bundle)
from labelling.labelcore import LabelCheck, base_coefficients, label_from_coefficients
from labelling.noise import Interval, MassEstimate
from labelling.search import LabelAtlas, LabelRecord


def _record(members, coeffs, fmap):
    label = label_from_coefficients(coeffs, fmap)
    return LabelRecord(members, label, LabelCheck(True, Interval(0, 0), MassEstimate(0, 1000),
                                                  0.0, label))


def test_presets_and_alias():
    assert set(EXPERIMENTS) == {"two-circles", "two-circles-noise", "two-circles-lowsnr",
                                "three-conics-lowsnr", "pendulums"}
    assert get_experiment("two-circles-noisy") is EXPERIMENTS["two-circles-noise"]
    with pytest.raises(KeyError, match="unknown experiment"):
        get_experiment("nope")


def test_overrides_leave_preset_untouched():
    base = get_experiment("two-circles")
    exp = base.with_overrides(seed=7, iterations=3, delta=None)
    assert (exp.search.seed, exp.search.iterations) == (7, 3)
    assert exp.search.delta == base.search.delta
    assert base.search.iterations == 500
    assert base.with_overrides() is base


@pytest.mark.parametrize("name,size,noise", [("two-circles", 200, 0),
                                             ("two-circles-noise", 300, 100),
                                             ("two-circles-lowsnr", 280, 200)])
def test_dataset_sizes(name, size, noise):
    pts, truth = generate(get_experiment(name))
    assert pts.shape == (size, 2)
    assert len(truth.noise_members) == noise
    assert np.all(np.abs(pts) <= 1 + 0.1)


def test_evaluate_conics_on_hand_built_atlas():
    exp = get_experiment("two-circles-noise")
    pts, truth = generate(exp)
    fmap = feature_map()
    c0 = truth.members_of(0)
    good = _record(np.concatenate([c0[:85], truth.noise_members[:5]]),
                   truth.specs[0].monomial_coefficients, fmap)
    thin = _record(truth.members_of(1)[:50], truth.specs[1].monomial_coefficients, fmap)
    junk = _record(truth.noise_members[:30], np.array([0.1, 1, -1, 0.3, 0.2, 0.0]), fmap)
    atlas = LabelAtlas([good, thin, junk], "x")
    m = evaluate_conics(exp, atlas, fmap, truth)
    s0, s1 = m["structures"]
    assert s0["recovered"] and s0["member_fraction"] == pytest.approx(0.85)
    assert s0["noise_absent_fraction"] == pytest.approx(0.95)
    assert not s1["recovered"] and s1["member_fraction"] == pytest.approx(0.5)
    assert m["spurious_records"] == 1 and not m["passed"]


def test_evaluate_pendulums_exact_labels():
    exp = get_experiment("pendulums")
    pts, truth = generate(exp)
    fmap = feature_map()
    atlas = LabelAtlas([_record(truth.members_of(k), s.monomial_coefficients, fmap)
                        for k, s in enumerate(truth.specs)], "x")
    m = evaluate_pendulums(exp, atlas, fmap, truth)
    assert m["passed"]
    for entry in m["pendulums"]:
        assert max(entry["relative_error"].values()) < 1e-9


def test_evaluate_pendulums_skips_non_ellipses():
    exp = get_experiment("pendulums")
    _, truth = generate(exp)
    fmap = feature_map()
    spec = truth.specs[0]
    hyperbola = spec.monomial_coefficients.copy()
    hyperbola[5] = -hyperbola[5]
    atlas = LabelAtlas([_record([0, 1, 2, 3, 4, 5], hyperbola, fmap)], "x")
    m = evaluate_pendulums(exp, atlas, fmap, truth)
    assert not m["passed"]
    assert all(e["record"] is None for e in m["pendulums"])


def test_short_run_and_dedupe_view(tmp_path):
    r = run_experiment("two-circles", iterations=120)
    assert r.passed
    compact = r.metrics["deduplicated"]
    assert compact["passed"] and compact["records"] < r.metrics["records"]
    for rec in r.atlas.records[:5]:
        coords = base_coefficients(rec.label, r.fmap)
        assert 0 <= match_label_to_truth(coords, r.truth.specs[0].monomial_coefficients) <= 1
    files = write_bundle(r, tmp_path, figures=False)
    assert sorted(p.name for p in files) == sorted(["dataset.csv", "truth.json", "atlas.json",
                                                    "membership.csv", "metrics.json"])


def test_ground_truth_kept_apart_from_points():
    pts, truth = generate(get_experiment("two-circles"))
    assert isinstance(pts, np.ndarray) and isinstance(truth, GroundTruth)
    assert pts.dtype == float and pts.ndim == 2


def test_table_pendulums_are_the_originals():
    specs = get_experiment("pendulums").specs
    assert [(s.centre, s.amplitude, s.mass) for s in specs] == [
        (0.1015, 0.6945, 3.6181), (0.1703, 0.4131, 6.1357), (-0.3155, 0.5519, 9.1091)]
    assert all(isinstance(s, PendulumSpec) and s.n == 100 for s in specs)
