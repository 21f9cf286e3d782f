"""holonomy 단위 테스트

𝓗 닫힌 식, 수치 적분 교차검증, BS 열거와 레벨 분해를 테스트합니다.
"""

import math

import numpy as np
import pytest

from src.core.holonomy import (
    BSPoint,
    BSSummary,
    BSWindow,
    HolonomyError,
    bs_level_decompose,
    bs_level_for,
    bs_points_ov,
    bs_points_semiflat,
    bs_table_rows,
    divisors,
    holonomy_H,
    holonomy_H_numeric,
    holonomy_vector,
)

UNIT_CELL = BSWindow.half_open((0.0, 0.0), (1.0, 1.0))


class TestHolonomyH:
    """𝓗 테스트"""

    def test_origin(self, ov_params):
        """𝓗(0, 0) = 0"""
        assert holonomy_H(0.0, 0.0, ov_params) == 0.0

    def test_known_value(self, ov_params):
        """𝓗(0, 0.1) = 0.1(1 + log10)/2π ≈ 0.052562"""
        expected = 0.1 * (1 + math.log(10)) / (2 * math.pi)
        assert holonomy_H(0.0, 0.1, ov_params) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.052562, abs=1e-6)

    def test_monotone_along_u2(self, ov_params):
        """u₁ = 0 에서 u₂ 에 대해 증가"""
        u2 = np.linspace(-0.49, 0.49, 99)
        values = holonomy_H(np.zeros_like(u2), u2, ov_params)
        assert np.all(np.diff(values) > 0)

    @pytest.mark.parametrize("params_name", ["ov_params", "ov_params_shifted"])
    @pytest.mark.parametrize("u", [(0.1, 0.2), (-0.05, 0.03), (0.02, -0.3)])
    def test_closed_form_matches_numeric(self, params_name, u, request):
        """닫힌 식과 −∫∂₂φ dt + u₁Im𝒱 일치 (1e-6)"""
        params = request.getfixturevalue(params_name)
        closed = holonomy_H(*u, params)
        numeric = holonomy_H_numeric(*u, params)
        assert closed == pytest.approx(numeric, abs=1e-6)

    def test_vector(self, ov_params):
        """작용 좌표 = (u₁ + a₁, 𝓗 + a₂)"""
        hol = holonomy_vector(0.1, 0.2, ov_params, offsets=(0.5, 0.25))
        assert hol.x1 == 0.1
        assert hol.action == pytest.approx((0.6, holonomy_H(0.1, 0.2, ov_params) + 0.25))


class TestLevels:
    """레벨 판정 테스트"""

    def test_divisors(self):
        """약수 목록"""
        assert divisors(12) == [1, 2, 3, 4, 6, 12]
        assert divisors(1) == [1]

    def test_level_for(self):
        """m·x ∈ ℤ² 인 최소 m"""
        assert bs_level_for((0.0, 0.0), 4) == 1
        assert bs_level_for((0.5, 0.0), 4) == 2
        assert bs_level_for((0.25, 0.5), 4) == 4
        assert bs_level_for((0.3, 0.0), 4) is None

    def test_decompose_rejects_foreign_level(self):
        """k 를 나누지 않는 레벨은 HolonomyError"""
        with pytest.raises(HolonomyError):
            bs_level_decompose([BSPoint(base=0j, level=3, strict=False)], 4)


class TestSemiFlatBS:
    """준평탄 BS 열거 테스트"""

    @pytest.mark.parametrize(
        "k,expected",
        [
            (1, {1: 1}),
            (2, {1: 1, 2: 3}),
            (3, {1: 1, 3: 8}),
            (4, {1: 1, 2: 3, 4: 12}),
        ],
    )
    def test_level_counts(self, k, expected):
        """단위 칸 안 k² 개 점의 레벨 분포"""
        points = bs_points_semiflat(UNIT_CELL, k)
        assert len(points) == k * k
        assert BSSummary.from_points(points, k).counts == expected

    def test_strict_flag(self):
        """strict ⇔ level == k"""
        for p in bs_points_semiflat(UNIT_CELL, 4):
            assert p.strict == (p.level == 4)

    def test_offsets(self):
        """a = (1/2, 0), k = 1 → 점 (1/2, 0) 하나"""
        points = bs_points_semiflat(UNIT_CELL, 1, offsets=(0.5, 0.0))
        assert len(points) == 1
        assert points[0].base == pytest.approx(0.5 + 0j)

    def test_half_open_window(self):
        """반열린 창은 상단 경계를 제외"""
        closed = BSWindow((0.0, 0.0), (1.0, 1.0), closed_lo=True, closed_hi=True)
        assert len(bs_points_semiflat(closed, 2)) == 9
        assert len(bs_points_semiflat(BSWindow.open((0.0, 0.0), (1.0, 1.0)), 2)) == 1

    def test_rows(self):
        """CSV 행 (y_re, y_im, level, strict)"""
        rows = bs_table_rows(bs_points_semiflat(UNIT_CELL, 2))
        assert (0.0, 0.0, 1, False) in rows
        assert (0.5, 0.5, 2, True) in rows

    def test_invalid_k(self):
        """k < 1 이면 HolonomyError"""
        with pytest.raises(HolonomyError):
            bs_points_semiflat(UNIT_CELL, 0)


class TestOoguriVafaBS:
    """OV 차트 BS 열거 테스트"""

    def test_origin_only_for_k1(self, ov_params):
        """a = 0, k = 1 이면 원점 하나 (|𝓗| < 1 이므로)"""
        points = bs_points_ov(1, (0.0, 0.0), ov_params)
        assert len(points) == 1
        assert abs(points[0].base) < 1e-9
        assert points[0].level == 1

    def test_no_origin_with_half_offset(self, ov_params):
        """a = (1/2, 0), k = 1 → 원점 없음"""
        points = bs_points_ov(1, (0.5, 0.0), ov_params)
        assert not any(p.singular for p in points)

    def test_planted_root(self, ov_params):
        """𝓗(0.25, 0.2) + a₂ = 0 이 되도록 놓은 근을 1e-10 안에서 복원"""
        target = complex(0.25, 0.2)
        a2 = -holonomy_H(target.real, target.imag, ov_params)
        points = bs_points_ov(4, (0.0, a2), ov_params)
        nearest = min(points, key=lambda p: abs(p.base - target))
        assert abs(nearest.base - target) < 1e-10
        assert nearest.level == 4
        assert nearest.strict

    def test_points_inside_chart(self, ov_params):
        """열거된 점은 모두 |y| < δ₀"""
        for p in bs_points_ov(3, (0.1, 0.2), ov_params):
            assert abs(p.base) < ov_params.delta0
            assert 3 % p.level == 0
