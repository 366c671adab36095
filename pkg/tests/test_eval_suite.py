import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glyphforge.errors import (DimMismatch, GroundTruthUnrecognizable, KeyMismatch, NumericalFailure,
                               TooFewSamples)
from glyphforge.eval_suite import (EmbeddingSet, GlyphPair, ParseFailure, ScoreConfig, evaluate,
                                   frechet_distance, load_external_scores, perfect_recognizer,
                                   prediction_path, r_acc, score_pair)
from glyphforge.manifest_io import dumps_jsonl
from glyphforge.path_model import parse_path
from glyphforge.recognizer import MockRecognizer

from conftest import ORACLES

SQUARE = "M 0.0 0.0 L 100.0 0.0 L 100.0 100.0 L 0.0 100.0 Z"
TRI = "M 0.0 0.0 L 120.0 0.0 L 40.0 90.0 Z"


def shifted(d, dx, dy):
    return parse_path(d).translated(dx * 10, dy * 10)


# --- r_acc ---------------------------------------------------------------------

def test_r_acc_examples():
    assert r_acc(list("ab"), list("ab"), list("ab")) == 100.0
    assert r_acc(["a", "x"], ["a", "b"], ["a", "b"]) == 50.0
    t = list("a" * 20)
    gen = ["a"] * 19 + ["x"]
    gt = ["a"] * 18 + ["x", "x"]
    assert round(r_acc(gen, gt, t), 2) == ORACLES["r_acc_95_over_90"]
    assert r_acc(["A"], ["a"], ["a"], cased=True) == 0.0
    assert r_acc(["A"], ["a"], ["a"], cased=False) == 100.0
    assert r_acc(["ABSTAIN"], ["a"], ["a"], cased=False) == 0.0


def test_r_acc_needs_recognizable_gt():
    with pytest.raises(GroundTruthUnrecognizable):
        r_acc(["a"], ["x"], ["a"])
    with pytest.raises(ValueError):
        r_acc(["a"], [], ["a"])


# --- score_pair ----------------------------------------------------------------

def test_identity_pair():
    s = score_pair(GlyphPair("x", "a", parse_path(TRI), parse_path(TRI)))
    assert s["cd"] == s["cd_t"] == s["cd_st"] == 0.0
    assert s["l2"] == 0.0 and s["psnr"] == 99.0 and abs(s["ssim"] - 1) < 1e-9


def test_translated_pair_gt_frame():
    s = score_pair(GlyphPair("x", "a", parse_path(TRI), shifted(TRI, 50, -30)))
    assert s["cd"] > 1.0
    assert s["cd_t"] < 1e-3 and s["cd_st"] <= s["cd_t"]


def test_scaled_pair_needs_scale():
    big = parse_path("M 0.0 0.0 L 240.0 0.0 L 80.0 180.0 Z")
    s = score_pair(GlyphPair("x", "a", parse_path(TRI), big))
    assert s["cd_st"] < 1e-3 < s["cd_t"] <= s["cd"]


def test_independent_frame_ignores_translation():
    s = score_pair(GlyphPair("x", "a", parse_path(TRI), shifted(TRI, 50, -30)), ScoreConfig(frame="independent"))
    assert s["cd"] < 1e-6
    with pytest.raises(ValueError):
        ScoreConfig(frame="other")


def test_parse_failure_gets_sentinel():
    s = score_pair(GlyphPair("x", "a", parse_path(TRI), ParseFailure("UnsupportedCommand")))
    assert (s["cd"], s["cd_t"], s["cd_st"], s["l2"], s["psnr"], s["ssim"]) == (100.0, 100.0, 100.0, 1.0, 0.0, 0.0)
    assert s["parse_failure"] == "UnsupportedCommand"


def test_degenerate_prediction_gets_sentinel():
    s = score_pair(GlyphPair("x", "a", parse_path(TRI), parse_path("M 5 5 L 5 5 Z")))
    assert s["cd"] == 100.0 and s["parse_failure"].startswith("EmptyOutline")


def test_prediction_path_sources():
    assert prediction_path({"d": TRI}) == parse_path(TRI)
    assert prediction_path({"d_abs": TRI}) == parse_path(TRI)
    raw = f'Sure!\n<path d="M 0 0 C 1 1 2 2 3 3 Z"/>\n<path d="{TRI}"/>'
    assert prediction_path({"raw_completion": raw}) == parse_path(TRI)
    assert isinstance(prediction_path({"raw_completion": "no paths"}), ParseFailure)
    assert "UnsupportedCommand" in prediction_path({"d": "M 0 0 C 1 1 2 2 3 3"}).error
    assert isinstance(prediction_path({}), ParseFailure)


# --- Frechet distance ----------------------------------------------------------

def test_fid_self_is_zero():
    x = np.random.default_rng(0).normal(size=(200, 16))
    e = EmbeddingSet("x", x)
    assert abs(frechet_distance(e, e)) <= 1e-8


def test_fid_exact_moment_sets():
    # two points at +-h have sample sd (ddof=1) h*sqrt(2)
    h = np.sqrt(0.5)
    unit = np.array([[-h], [h]])
    shift = EmbeddingSet("a", unit), EmbeddingSet("b", unit + 1.0)
    assert frechet_distance(*shift) == pytest.approx(ORACLES["frechet_mean_shift_1d"], abs=1e-6)
    spread = EmbeddingSet("a", unit), EmbeddingSet("b", 2 * unit)
    assert frechet_distance(*spread) == pytest.approx(ORACLES["frechet_sigma_double_1d"], abs=1e-6)


def test_fid_closed_form_1d():
    rng = np.random.default_rng(3)
    for _ in range(10):
        a, b = rng.normal(size=(50, 1)), rng.normal(2, 3, size=(70, 1))
        want = (a.mean() - b.mean()) ** 2 + (a.std(ddof=1) - b.std(ddof=1)) ** 2
        assert frechet_distance(EmbeddingSet("a", a), EmbeddingSet("b", b)) == pytest.approx(want, abs=1e-5)


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_fid_symmetric_nonnegative(seed):
    rng = np.random.default_rng(seed)
    a = EmbeddingSet("a", rng.normal(size=(20, 4)))
    b = EmbeddingSet("b", rng.normal(1, 2, size=(25, 4)))
    ab, ba = frechet_distance(a, b), frechet_distance(b, a)
    assert ab >= -1e-8 and abs(ab - ba) < 1e-6 * max(1.0, ab)


def test_fid_errors():
    rng = np.random.default_rng(0)
    with pytest.raises(DimMismatch):
        frechet_distance(EmbeddingSet("a", rng.normal(size=(10, 3))), EmbeddingSet("b", rng.normal(size=(10, 4))))
    with pytest.raises(TooFewSamples):
        frechet_distance(EmbeddingSet("a", rng.normal(size=(3, 3))), EmbeddingSet("b", rng.normal(size=(10, 3))))
    with pytest.raises(ValueError):
        EmbeddingSet("a", np.array([[np.nan]]))
    assert issubclass(NumericalFailure, Exception)


def test_embedding_io(tmp_path):
    x = np.random.default_rng(1).normal(size=(7, 3)).astype(np.float32)
    e = EmbeddingSet("x", x)
    (tmp_path / "e.bin").write_bytes(e.to_bytes())
    np.testing.assert_array_equal(EmbeddingSet.load(tmp_path / "e.bin").vectors, x)
    np.savetxt(tmp_path / "e.csv", x, delimiter=",")
    np.testing.assert_allclose(EmbeddingSet.load(tmp_path / "e.csv").vectors, x, rtol=1e-6)
    (tmp_path / "bad.bin").write_bytes(e.to_bytes()[:-4])
    with pytest.raises(ValueError):
        EmbeddingSet.load(tmp_path / "bad.bin")


# --- evaluate ------------------------------------------------------------------

def gt_rows():
    shapes = {"a": TRI, "b": SQUARE, "c": "M 0.0 0.0 L 50.0 0.0 L 50.0 150.0 Z"}
    return [{"font_id": "f0", "char": ch, "d_abs": d} for ch, d in shapes.items()]


def test_evaluate_identity():
    gt = gt_rows()
    rep = evaluate(gt, gt, recognizer=perfect_recognizer(gt))
    a = rep["aggregates"]
    assert a["r_acc"] == a["r_acc_u"] == 100.0
    assert a["cd"] == a["cd_t"] == a["cd_st"] == a["l2"] == 0.0 and a["ssim"] == pytest.approx(1.0)
    assert rep["counts"] == {"pairs": 3, "parse_failures": 0, "unmatched_gt": 0}
    json.dumps(rep)


def test_evaluate_parse_failure_and_unmatched():
    gt = gt_rows()
    preds = [{"font_id": "f0", "char": "a", "raw_completion": "I cannot draw that."}]
    rep = evaluate(preds, gt, recognizer=perfect_recognizer(gt))
    assert rep["counts"] == {"pairs": 1, "parse_failures": 1, "unmatched_gt": 2}
    assert rep["aggregates"]["r_acc"] == 0.0 and rep["aggregates"]["cd"] == 100.0
    assert rep["aggregates_valid"]["cd"] is None
    assert rep["pairs"][0]["recognized"] == "ABSTAIN"


def test_evaluate_key_mismatch():
    with pytest.raises(KeyMismatch):
        evaluate([{"font_id": "zz", "char": "a", "d": TRI}], gt_rows())


def test_r_acc_is_scale_free():
    gt = gt_rows()
    preds = [dict(r) for r in gt]
    preds[0]["d_abs"] = SQUARE
    rep = evaluate(preds, gt, recognizer=perfect_recognizer(gt))
    # a recognizer that only reads half the ground truth doubles nothing: ratio is unchanged
    assert rep["aggregates"]["r_acc"] == pytest.approx(200 / 3)
    double = evaluate(preds + [dict(r, font_id="f1") for r in preds], gt + [dict(r, font_id="f1") for r in gt],
                      recognizer=perfect_recognizer(gt))
    assert double["aggregates"]["r_acc"] == pytest.approx(rep["aggregates"]["r_acc"])


def test_evaluate_external_and_fid(tmp_path):
    gt = gt_rows()
    p = tmp_path / "clip.jsonl"
    p.write_text(dumps_jsonl([{"font_id": "f0", "char": "a", "score": 0.5}, {"font_id": "f0", "char": "b", "score": 1.0}]))
    x = np.random.default_rng(0).normal(size=(10, 2))
    rep = evaluate(gt, gt, external_scores={"clip": load_external_scores(p)},
                   embeddings=(EmbeddingSet("g", x), EmbeddingSet("r", x)))
    assert rep["external"] == {"clip": 0.75}
    assert rep["pairs"][2]["clip"] is None
    assert abs(rep["aggregates"]["fid"]) < 1e-8
    assert rep["aggregates"]["r_acc"] is None


def test_mock_default_label():
    gt = gt_rows()
    rep = evaluate(gt, gt, recognizer=MockRecognizer({}, default="a"))
    assert rep["aggregates"]["r_acc"] == pytest.approx(100.0)
