"""magnetic 단위 테스트

평탄 아벨/일반 준평탄/OV 창 모델의 축약 연산자, 영점 근처 개수, 하한을 테스트합니다.
"""

import math

import numpy as np
import pytest

from src.core.geometry import ModelParams
from src.core.magnetic import (
    GridResolutionError,
    MagneticSolverError,
    abelian_cell,
    abelian_well_width,
    abelian_window,
    assemble_reduced_laplacian,
    dbar_spectrum,
    fit_power_law,
    general,
    laplacian_spectrum,
    near_zero_count,
    ov_window,
    verify_lower_bound,
)
from src.core.semiflat import LatticeFamily


class TestAbelianModel:
    """평탄 아벨 모델 테스트"""

    def test_well_width(self, abelian_params):
        """ℓ = √(s/k)/2π"""
        assert abelian_well_width(abelian_params) == pytest.approx(math.sqrt(0.2) / (2 * math.pi))

    def test_cell_wells(self):
        """주기 셀 안 우물 k² 개"""
        model = abelian_cell(ModelParams(s=0.2, k=2))
        assert len(model.wells) == 4
        assert model.boundary == "periodic"
        assert model.mode_center in model.modes

    def test_mode_blocks_symmetric(self, abelian_params):
        """모드 블록은 대칭"""
        op = assemble_reduced_laplacian(abelian_cell(abelian_params))
        block = op.block(op.modes[0]).matrix
        assert abs(block - block.T).max() < 1e-10
        assert op.dimension == op.block_dimension * len(op.modes)

    def test_resolution(self, abelian_params):
        """우물 폭당 8점 미만이면 GridResolutionError"""
        with pytest.raises(GridResolutionError):
            assemble_reduced_laplacian(abelian_cell(abelian_params, points_per_well=4))

    @pytest.mark.parametrize("k", [1, 2])
    def test_near_zero_count(self, k):
        """영점 근처 고윳값 개수 = k²"""
        model = abelian_cell(ModelParams(s=0.2, k=k))
        result = dbar_spectrum(model, n_eigs=k * k + 3)
        assert result.count_below() == k * k
        assert result.meta["near_zero"] == k * k

    @pytest.mark.slow
    def test_near_zero_count_k3(self):
        """k = 3 에서 9개"""
        assert near_zero_count(abelian_cell(ModelParams(s=0.2, k=3))) == 9

    def test_first_gap(self, abelian_params):
        """Δ_{k,∂̄} 의 첫 간격 ≈ k"""
        values = dbar_spectrum(abelian_cell(abelian_params), n_eigs=4).eigenvalues
        assert abs(values[0]) < 0.1
        assert values[1] == pytest.approx(1.0, abs=0.15)

    def test_laplacian_shift(self, abelian_params):
        """Δ^{ρ_k} 최저값 ≈ k² + 2k"""
        values = laplacian_spectrum(abelian_cell(abelian_params), n_eigs=2).eigenvalues
        assert values[0] == pytest.approx(3.0, abs=0.2)


class TestGeneralModel:
    """일반 준평탄 모델 테스트"""

    def test_matches_abelian(self, abelian_params):
        """τ₂ = i 상수 격자는 평탄 아벨 창과 같은 스펙트럼"""
        flat = abelian_window(abelian_params, half_width=0.25)
        model = general(abelian_params, LatticeFamily.abelian(), chart=0.1j, half_width=0.25)
        assert model.well_width == pytest.approx(flat.well_width)
        a = dbar_spectrum(flat, n_eigs=3).eigenvalues
        b = dbar_spectrum(model, n_eigs=3).eigenvalues
        assert np.allclose(a, b, atol=1e-7)

    def test_single_well(self, abelian_params):
        """창 [−1/4, 1/4)² 안 우물은 원점 하나"""
        model = general(abelian_params, LatticeFamily.constant(0.3 + 1.2j), chart=0.1j, half_width=0.25)
        assert model.wells == [(0.0, 0.0)]
        assert near_zero_count(model) == 1


class TestOoguriVafaWindow:
    """OV 창 모델 테스트"""

    def test_window_outside_chart(self):
        """s(3R)² > log2/8π 이면 GridResolutionError"""
        with pytest.raises(GridResolutionError):
            ov_window(ModelParams(s=0.05, k=1), R=1.0)

    @pytest.mark.slow
    def test_no_wells_for_half_offset(self):
        """k·a₁ ∉ ℤ 이면 우물도 영점 근처 모드도 없음"""
        model = ov_window(ModelParams(s=1e-3, k=1), R=1.0, offsets=(0.5, 0.0))
        assert model.wells == []
        assert near_zero_count(model, n_eigs=3) == 0

    @pytest.mark.slow
    def test_origin_well(self):
        """a = 0, k = 1 이면 원점 우물 하나"""
        model = ov_window(ModelParams(s=1e-3, k=1), R=1.0)
        assert len(model.wells) == 1
        assert near_zero_count(model) == 1


class TestLowerBound:
    """BS 공 밖 하한 테스트"""

    @pytest.fixture
    def window(self, abelian_params):
        return abelian_window(abelian_params, metric_half_width=8.0)

    def test_infimum_above_floor(self, window):
        """이산 최저 고윳값 ≥ k² + K"""
        report = verify_lower_bound(window, R=2.0)
        assert report.infimum >= report.floor * (1 - 1e-9)
        assert report.K == pytest.approx(report.K_lemma, rel=1e-9)
        assert report.holds
        assert report.bound_2pi == pytest.approx(2 * math.pi * report.bound)

    def test_K_grows_with_R(self, window):
        """R 이 커지면 K 증가"""
        small = verify_lower_bound(window, R=2.0)
        large = verify_lower_bound(window, R=3.0)
        assert large.K > small.K
        assert large.n_retained < small.n_retained

    def test_delta(self, window):
        """δ > 0 이면 bound 가 (1+δ)² 만큼 작아짐"""
        plain = verify_lower_bound(window, R=2.0)
        relaxed = verify_lower_bound(window, R=2.0, delta=0.1)
        assert relaxed.bound == pytest.approx(plain.bound / 1.21)

    def test_too_large_R(self, window):
        """남은 노드가 없으면 MagneticSolverError"""
        with pytest.raises(MagneticSolverError):
            verify_lower_bound(window, R=100.0)

    def test_delta_zero_2pi(self, window):
        """δ = 0: 2π·inf ≥ 2π(k² + K) (이산 h² 여유 안)"""
        report = verify_lower_bound(window, R=3.0, delta=0.0)
        assert report.bound == pytest.approx(report.floor, rel=1e-9)
        assert report.bound_2pi == pytest.approx(2 * math.pi * (1 + report.K))
        h = 1.0 / window.points_per_well
        assert 2 * math.pi * report.infimum >= report.bound_2pi - h * h

    @pytest.mark.slow
    def test_exponent_sweep(self):
        """R = 4, 6, 8: K ∝ R², inf − k² 지수는 에어리 층 때문에 2 보다 작음

        s = 0.02 이면 이웃 우물이 계량 거리 44 밖이라 창 안에서는 원점 우물만 보입니다.
        inf − k² ≈ R² + 2.338·(2R)^{2/3} 의 맞춤 지수는 약 1.64 입니다.
        """
        model = abelian_window(ModelParams(s=0.02, k=1), metric_half_width=12.0)
        radii = [4.0, 6.0, 8.0]
        reports = [verify_lower_bound(model, R=R) for R in radii]
        assert all(r.holds for r in reports)
        k_exponent, _ = fit_power_law(radii, [r.K for r in reports])
        assert k_exponent == pytest.approx(2.0, abs=0.2)
        exponent, _ = fit_power_law(radii, [r.infimum - 1.0 for r in reports])
        assert 1.45 <= exponent <= 1.85


class TestPowerLaw:
    """거듭제곱 맞춤 테스트"""

    def test_fit(self):
        """3R² 복원"""
        exponent, coefficient = fit_power_law([1.0, 2.0, 4.0], [3.0, 12.0, 48.0])
        assert exponent == pytest.approx(2.0)
        assert coefficient == pytest.approx(3.0)

    def test_invalid(self):
        """값이 2개 미만이거나 양수가 아니면 에러"""
        with pytest.raises(MagneticSolverError):
            fit_power_law([1.0], [1.0])
        with pytest.raises(MagneticSolverError):
            fit_power_law([1.0, 2.0], [0.0, 1.0])
