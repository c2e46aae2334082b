from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_instance
from oracles import staircase_ap
from udet.detect import Detection, GroundTruthBox
from udet.errors import UndefinedMetricError
from udet.evaluation import (
    ErrorType,
    average_precision,
    average_precision_exact,
    classify_error,
    error_breakdown,
    evaluate,
    match_detections,
    mean_ap,
    parse_similar,
    pr_curve,
)
from udet.evaluation.metrics import FALSE_POSITIVE, TRUE_POSITIVE, MatchResult


def gt(cls, x0, y0, x1, y1):
    return GroundTruthBox.from_corners(cls, x0, y0, x1, y1)


def det(cls, score, x0, y0, x1, y1, image="im"):
    return Detection(cls, score, x0, y0, x1, y1, image)


def outcomes(seq):
    return [MatchResult("im", 0, 1.0 - i / 100, TRUE_POSITIVE if hit else FALSE_POSITIVE) for i, hit in enumerate(seq)]


# --- matching ---


def test_match_examples():
    d = det(0, 0.9, 0, 0, 1, 1)
    assert [m.is_tp for m in match_detections([d], {})] == [False]
    assert [m.is_tp for m in match_detections([d], {"im": [gt(0, 0, 0, 1, 1)]})] == [True]
    two = [replace(d, score=0.8), d]
    ms = match_detections(two, {"im": [gt(0, 0, 0, 1, 1)]})
    assert [(m.score, m.is_tp) for m in ms] == [(0.9, True), (0.8, False)]


def test_match_ignores_other_class():
    ms = match_detections([det(1, 0.9, 0, 0, 1, 1)], {"im": [gt(0, 0, 0, 1, 1)]})
    assert not ms[0].is_tp


def test_match_tie_lower_index():
    gts = {"im": [gt(0, 0, 0, 0.5, 1), gt(0, 0.5, 0, 1, 1)]}
    (m,) = match_detections([det(0, 0.9, 0.25, 0, 0.75, 1)], gts, 0.3)
    assert m.matched_gt == 0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_each_gt_matched_at_most_once(seed):
    dets, gts = random_instance(np.random.default_rng(seed), 15)
    ms = match_detections(dets, gts)
    keys = [(m.image_id, m.matched_gt) for m in ms if m.is_tp]
    assert len(keys) == len(set(keys))
    assert len(keys) <= sum(len(v) for v in gts.values())


# --- AP ---


def test_ap_examples():
    assert average_precision(outcomes([True, True]), 2) == 1.0
    assert average_precision([], 3) == 0.0
    assert average_precision_exact(outcomes([True, False]), 2) == Fraction(1, 2)
    assert average_precision([], 0) == 0.0


def test_ap_interpolates_envelope():
    # TP FP TP with 2 gts: points (1/2, 1), (1/2, 1/2), (1, 2/3) -> 1/2 * 1 + 1/2 * 2/3
    assert average_precision_exact(outcomes([True, False, True]), 2) == Fraction(5, 6)


def test_eleven_point():
    # TP FP with 2 gts: precision 1 up to recall 0.5 -> 6 of 11 points
    assert average_precision_exact(outcomes([True, False]), 2, eleven_point=True) == Fraction(6, 11)


def test_ap_matches_staircase_oracle():
    rng = np.random.default_rng(20240601)
    for _ in range(200):
        dets, gts = random_instance(rng)
        ms = match_detections(dets, gts)
        n = sum(len(v) for v in gts.values())
        assert average_precision_exact(ms, n) == staircase_ap([m.is_tp for m in ms], n)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_ap_ranking_only(seed):
    dets, gts = random_instance(np.random.default_rng(seed))
    n = sum(len(v) for v in gts.values())
    base = average_precision_exact(match_detections(dets, gts), n)
    squashed = [replace(d, score=float(np.exp(3 * d.score)) + 5) for d in dets]
    assert average_precision_exact(match_detections(squashed, gts), n) == base


@given(st.lists(st.booleans(), max_size=12), st.integers(0, 5))
def test_ap_appending(seq, extra):
    n = sum(seq) + extra
    base = average_precision_exact(outcomes(seq), n)
    assert average_precision_exact(outcomes(seq + [False]), n) <= base
    if extra:
        recall = pr_curve(outcomes(seq + [True]), n)[-1][0]
        assert recall >= (pr_curve(outcomes(seq), n)[-1][0] if seq else 0)
    assert 0 <= base <= 1


def test_mean_ap():
    assert mean_ap({0: 0.7}) == 0.7
    assert mean_ap({0: 1.0, 1: 0.0}) == 0.5
    assert mean_ap({0: 1.0, 1: 0.0, 2: 0.0}, {0: 3, 1: 1, 2: 0}) == 0.5
    with pytest.raises(UndefinedMetricError):
        mean_ap({0: 0.0}, {0: 0})


def test_pr_curve_examples():
    assert pr_curve(outcomes([True]), 1) == [(1.0, 1.0)]
    assert pr_curve(outcomes([False]), 1) == [(0.0, 0.0)]
    assert pr_curve(outcomes([True, False]), 1) == [(1.0, 1.0), (1.0, 0.5)]


def test_evaluate_perfect_and_empty():
    gts = {"a": [gt(0, 0.1, 0.1, 0.4, 0.4), gt(2, 0.5, 0.5, 0.9, 0.8)], "b": [gt(1, 0.2, 0.2, 0.6, 0.6)]}
    perfect = [det(g.class_id, 0.9, *g.corners, image=im) for im, boxes in gts.items() for g in boxes]
    results, mAP = evaluate(perfect, gts, 3)
    assert mAP == 1.0 and [r.ap for r in results.values()] == [1.0, 1.0, 1.0]
    assert evaluate([], gts, 3)[1] == 0.0
    with pytest.raises(UndefinedMetricError):
        evaluate([], {"a": []}, 3)


# --- error taxonomy ---


def test_classify_examples():
    unit = det(0, 0.9, 0, 0, 1, 1)
    assert classify_error(unit, [gt(0, 0, 0, 1, 1)]) is ErrorType.CORRECT
    assert classify_error(unit, [gt(0, 0, 0, 0.3, 1)]) is ErrorType.LOCALIZATION
    assert classify_error(unit, [gt(0, 0.8, 0.8, 0.9, 0.9)]) is ErrorType.BACKGROUND
    assert classify_error(unit, []) is ErrorType.BACKGROUND


def test_classify_boundaries():
    unit = det(0, 0.9, 0, 0, 1, 1)
    assert classify_error(unit, [gt(0, 0, 0, 0.5, 1)]) is ErrorType.CORRECT  # IOU exactly .5
    assert classify_error(unit, [gt(0, 0, 0, 0.1, 1)]) is ErrorType.BACKGROUND  # IOU exactly .1
    assert classify_error(unit, [gt(1, 0, 0, 0.1, 1)]) is ErrorType.BACKGROUND


def test_classify_similar_and_other():
    unit = det(0, 0.9, 0, 0, 1, 1)
    similar = parse_similar("0:1")
    assert (1, 0) in similar
    assert classify_error(unit, [gt(1, 0, 0, 1, 1)], similar) is ErrorType.SIMILAR
    assert classify_error(unit, [gt(2, 0, 0, 1, 1)], similar) is ErrorType.OTHER
    assert classify_error(unit, [gt(1, 0, 0, 1, 1)]) is ErrorType.OTHER
    # a same-class localization beats a better-overlapping wrong class
    assert classify_error(unit, [gt(0, 0, 0, 0.3, 1), gt(2, 0, 0, 1, 1)]) is ErrorType.LOCALIZATION


def test_breakdown_half_half():
    gts = {"im": [gt(0, 0, 0, 0.2, 0.2), gt(0, 0.5, 0.5, 0.7, 0.7)]}
    dets = [det(0, 0.9, 0, 0, 0.2, 0.2), det(0, 0.8, 0.3, 0.0, 0.4, 0.1), det(0, 0.1, 0.5, 0.5, 0.7, 0.7)]
    per_class, average = error_breakdown(dets, gts)
    assert per_class[0][ErrorType.CORRECT] == 50.0
    assert per_class[0][ErrorType.BACKGROUND] == 50.0
    assert average == per_class[0]


def test_breakdown_all_correct():
    gts = {"im": [gt(1, 0, 0, 0.5, 0.5)]}
    per_class, _ = error_breakdown([det(1, 0.5, 0, 0, 0.5, 0.5)], gts)
    assert per_class == {1: {t: (100.0 if t is ErrorType.CORRECT else 0.0) for t in ErrorType}}


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_breakdown_partition(seed):
    rng = np.random.default_rng(seed)
    gts = {}
    dets = []
    for im in range(3):
        gts[f"i{im}"] = [gt(int(rng.integers(3)), *(lambda x, y: (x, y, x + 0.3, y + 0.3))(*rng.uniform(0, 0.7, 2))) for _ in range(rng.integers(0, 4))]
        for _ in range(rng.integers(0, 8)):
            x, y = rng.uniform(0, 0.7, 2)
            dets.append(det(int(rng.integers(3)), float(rng.random()), x, y, x + 0.3, y + 0.3, f"i{im}"))
    similar = parse_similar("0:1")
    for d in dets:
        kinds = [t for t in ErrorType if classify_error(d, gts[d.image_id], similar) is t]
        assert len(kinds) == 1
    per_class, average = error_breakdown(dets, gts, similar)
    for pct in list(per_class.values()) + ([average] if per_class else []):
        assert abs(sum(pct.values()) - 100.0) <= 1e-9
