"""Tests for rfid_missing_tags.analysis."""

import math

import numpy as np
import pytest

from rfid_missing_tags.analysis import (
    ARRANGEMENT_MS_PER_TAG,
    PRINTED_STRING_SLOT_MS,
    REFERENCE_TIMES_S,
    TIMING,
    EfficiencyPoint,
    TimingModel,
    efficiency_curve,
    golden_section_max,
    grid_argmax,
    ismti_efficiency,
    ismti_p_opt,
    ssmti_arrangement_cost,
    ssmti_efficiency,
    ssmti_p_opt,
    ssmti_predicted_time,
    vector_broadcast_time,
)
from rfid_missing_tags.core import InvalidParameterError


def _sign_changes(values: np.ndarray) -> int:
    signs = np.sign(np.diff(values))
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


# ── TimingModel ──────────────────────────────────────────────────────────

class TestTimingModel:
    def test_one_bit_string_is_short_message(self):
        assert TIMING.t_w(1) == pytest.approx(TIMING.t_s)

    def test_full_string(self):
        assert TIMING.t_w(96) == pytest.approx(2.775)

    def test_affine_in_w(self):
        steps = [TIMING.t_w(w + 1) - TIMING.t_w(w) for w in range(1, 96)]
        assert steps == pytest.approx([0.025] * 95)

    def test_custom_model(self):
        model = TimingModel(t_s=1.0, t_tag=3.0, per_bit=0.5)
        assert model.t_w(3) == pytest.approx(2.0)

    def test_zero_length_rejected(self):
        with pytest.raises(InvalidParameterError):
            TIMING.t_w(0)


# ── vector_broadcast_time ────────────────────────────────────────────────

class TestVectorBroadcastTime:
    def test_empty(self):
        assert vector_broadcast_time(0) == 0

    def test_one_message(self):
        assert vector_broadcast_time(96) == pytest.approx(2.4)

    def test_ceiling(self):
        assert vector_broadcast_time(97) == pytest.approx(4.8)

    def test_negative_rejected(self):
        with pytest.raises(InvalidParameterError):
            vector_broadcast_time(-1)


# ── golden_section_max ───────────────────────────────────────────────────

class TestGoldenSection:
    def test_parabola(self):
        assert golden_section_max(lambda x: -(x - 2.3) ** 2, 0, 5) == pytest.approx(2.3, abs=1e-5)

    def test_maximum_at_boundary(self):
        assert golden_section_max(lambda x: x, 0, 1) == pytest.approx(1, abs=1e-5)

    def test_swapped_bounds(self):
        assert golden_section_max(lambda x: -abs(x - 1), 3, -1) == pytest.approx(1, abs=1e-5)


# ── SSMTI efficiency ─────────────────────────────────────────────────────

class TestSsmtiEfficiency:
    def test_vanishes_near_zero(self):
        assert ssmti_efficiency(1e-9) < 1e-6

    def test_domain(self):
        with pytest.raises(InvalidParameterError):
            ssmti_efficiency(0)
        with pytest.raises(InvalidParameterError):
            ssmti_efficiency(-1)

    def test_maximum_near_one_and_a_half(self):
        assert ssmti_p_opt() == pytest.approx(1.5, abs=0.01)

    def test_matches_grid(self):
        assert ssmti_p_opt() == pytest.approx(grid_argmax(ssmti_efficiency, 0.1, 10.0), abs=0.01)

    def test_stable_under_tighter_tolerance(self):
        coarse = ssmti_efficiency(ssmti_p_opt())
        fine = ssmti_efficiency(ssmti_p_opt(tol=1e-8))
        assert fine == pytest.approx(coarse, rel=1e-9)

    def test_implied_frame(self):
        assert 9000 / ssmti_p_opt() == pytest.approx(6000, rel=0.002)

    def test_arrangement_cost(self):
        assert ssmti_arrangement_cost() == pytest.approx(ARRANGEMENT_MS_PER_TAG, rel=0.01)

    def test_unimodal(self):
        ps = np.linspace(0.1, 10, 10_000)
        assert _sign_changes(np.array([ssmti_efficiency(p) for p in ps])) == 1


# ── SSMTI predicted time ─────────────────────────────────────────────────

class TestSsmtiPredictedTime:
    def test_headline(self):
        assert ssmti_predicted_time(10_000) == pytest.approx(623 + 105 * 2.775)

    def test_printed_slot_constant(self):
        assert ssmti_predicted_time(10_000, string_slot_ms=PRINTED_STRING_SLOT_MS) == pytest.approx(
            623 + 105 * 2.375
        )
        assert 860 <= ssmti_predicted_time(10_000, string_slot_ms=PRINTED_STRING_SLOT_MS) <= 960

    def test_one_verification_slot(self):
        assert ssmti_predicted_time(96) == pytest.approx(0.0623 * 96 + 2.775)

    def test_domain(self):
        with pytest.raises(InvalidParameterError):
            ssmti_predicted_time(0)


# ── ISMTI efficiency ─────────────────────────────────────────────────────

class TestIsmtiEfficiency:
    def test_no_missing_reduces_to_singletons(self):
        p = 0.7
        expected = 96 * p * math.exp(-p) / (2.4 + 2.775)
        assert ismti_efficiency(p, 0.0) == pytest.approx(expected)

    def test_all_missing_dominates(self):
        for p in np.linspace(0.05, 30, 300):
            assert ismti_efficiency(p, 1.0) >= ismti_efficiency(p, 0.0)

    def test_domain(self):
        with pytest.raises(InvalidParameterError):
            ismti_efficiency(0, 0.5)
        with pytest.raises(InvalidParameterError):
            ismti_efficiency(1, 1.5)

    @pytest.mark.parametrize("q", [0.0, 0.1, 0.3, 0.5, 0.7, 0.9])
    def test_unimodal(self, q):
        ps = np.linspace(0.1, 30, 10_000)
        assert _sign_changes(np.array([ismti_efficiency(p, q) for p in ps])) <= 1


class TestIsmtiPopt:
    def test_no_missing(self):
        assert ismti_p_opt(0.0) == pytest.approx(1.0, abs=0.01)

    def test_half_missing_matches_grid(self):
        oracle = grid_argmax(lambda p: ismti_efficiency(p, 0.5), 0.1, 30.0, points=30_000)
        assert ismti_p_opt(0.5) == pytest.approx(oracle, abs=0.01)

    def test_high_missing_rate_packs_more_tags(self):
        assert ismti_p_opt(0.9) > 1.0
        assert ismti_p_opt(0.95) > ismti_p_opt(0.5)

    def test_monotone_in_q(self):
        values = [ismti_p_opt(round(q, 2)) for q in np.arange(0.0, 0.951, 0.05)]
        assert all(b >= a - 1e-4 for a, b in zip(values, values[1:]))

    def test_domain(self):
        with pytest.raises(InvalidParameterError):
            ismti_p_opt(-0.1)


# ── curves and references ────────────────────────────────────────────────

class TestCurves:
    def test_ssmti_curve(self):
        points = efficiency_curve("ssmti", [0.5, 1.5])
        assert [pt.q for pt in points] == [None, None]
        assert points[1].efficiency > points[0].efficiency

    def test_ismti_curve_grid(self):
        points = efficiency_curve("ismti", [0.5, 1.0, 2.0], [0.1, 0.9])
        assert len(points) == 6
        assert points[0] == EfficiencyPoint(p=0.5, q=0.1, efficiency=ismti_efficiency(0.5, 0.1))

    def test_unknown_protocol(self):
        with pytest.raises(InvalidParameterError):
            efficiency_curve("edfsa", [1.0])

    def test_reference_table(self):
        assert REFERENCE_TIMES_S["EDFSA"] == 58.75
        assert REFERENCE_TIMES_S["CR-MTI"] == 1.51
