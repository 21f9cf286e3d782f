"""ooguri_vafa 단위 테스트

주기 단극자 퍼텐셜, 준평탄 평균, 켈러 퍼텐셜 기울기, 계량과 비교 통계를 테스트합니다.
"""

import math

import numpy as np
import pytest

from src.core.harmonic import HarmonicShift
from src.core.ooguri_vafa import (
    ChartDomainError,
    OVParams,
    OVPoint,
    SingularPointError,
    calV,
    closeness_statistic,
    euler_gamma,
    fiber_diameter,
    flat_torus_diameter,
    gamma_perp_bound,
    gamma_sandwich,
    log_branch,
    measure_pushforward_bounds,
    on_branch_cut,
    orbit_length,
    ov_a_s,
    ov_compare,
    ov_F,
    ov_gamma_norms,
    ov_metric,
    ov_phi,
    ov_phi_gradient,
    ov_potential,
    ov_potential_bessel,
    ov_psi,
    ov_vsf,
    phi_gradient_arrays,
)


class TestNormalization:
    """a_s 테스트"""

    def test_euler_gamma(self):
        """오일러 상수"""
        assert euler_gamma() == pytest.approx(0.5772156649015329, abs=1e-13)

    def test_half(self):
        """a_{1/2} = γ/π ≈ 0.18374"""
        assert ov_a_s(0.5) == pytest.approx(euler_gamma() / math.pi)
        assert ov_a_s(0.5) == pytest.approx(0.18374, abs=1e-5)

    def test_log_minus_one(self):
        """a_{1/2e} = (γ + 1)e/π"""
        assert ov_a_s(1 / (2 * math.e)) == pytest.approx((euler_gamma() + 1) * math.e / math.pi)


class TestPotential:
    """V_s 테스트"""

    def test_symmetry(self, ov_params):
        """V(u₁,u₂,−u₃) = V(u₁,u₂,u₃)"""
        a = ov_potential([0.01, 0.02, 0.013], ov_params)
        b = ov_potential([0.01, 0.02, -0.013], ov_params)
        assert a == pytest.approx(b, rel=1e-12)

    def test_periodicity(self, ov_params):
        """V(u₃ + s) = V(u₃)"""
        s = ov_params.s
        pts = np.array([[0.01, 0.02, 0.013], [0.08, -0.02, 0.004]])
        shifted = pts + np.array([0.0, 0.0, s])
        assert np.allclose(ov_potential(pts, ov_params), ov_potential(shifted, ov_params), rtol=1e-12)

    def test_fiber_average(self, ov_params):
        """(1/s)∫₀^s V dt = V^sf (y=0.1, s=0.05, h=0)"""
        s = ov_params.s
        u3 = np.linspace(0.0, s, 64, endpoint=False)
        pts = np.column_stack([np.full(64, 0.1), np.zeros(64), u3])
        for method in ("lattice", "bessel"):
            mean = float(np.mean(ov_potential(pts, ov_params, method=method)))
            assert abs(mean - ov_vsf(0.1, ov_params)) < 1e-8

    def test_lattice_matches_bessel(self, ov_params):
        """격자합과 베셀 표현의 일치"""
        pts = np.array([[0.03, 0.0, 0.01], [0.0, 0.06, 0.02], [0.04, 0.04, -0.02]])
        lattice = ov_potential(pts, ov_params, method="lattice")
        bessel = ov_potential(pts, ov_params, method="bessel")
        assert np.allclose(lattice, bessel, rtol=1e-9)

    def test_bessel_truncated(self, ov_params):
        """항 수를 지정한 베셀 합도 수렴"""
        p = [0.1, 0.0, 0.01]
        assert ov_potential_bessel(p, ov_params, n_terms=30) == pytest.approx(ov_potential(p, ov_params), rel=1e-12)
        with pytest.raises(ChartDomainError):
            ov_potential_bessel([0.0, 0.0, 0.01], ov_params)

    def test_bessel_tiny_radius(self, ov_params):
        """|y| ≪ s 에서는 항 수 상한 대신 격자합으로 평가"""
        pts = np.array([[1e-6, 0.0, 0.01], [0.0, 2e-7, -0.02], [0.03, 0.0, 0.01]])
        bessel = ov_potential(pts, ov_params, method="bessel")
        lattice = ov_potential(pts, ov_params, method="lattice")
        assert np.allclose(bessel, lattice, rtol=1e-9)
        assert np.allclose(ov_F(pts, ov_params, method="bessel"), ov_F(pts, ov_params, method="lattice"), atol=1e-10)
        with pytest.raises(ChartDomainError):
            ov_potential_bessel(pts[0], ov_params)
        with pytest.raises(ChartDomainError):
            closeness_statistic(1e-6j, 0.0, ov_params.s)

    def test_harmonic(self, ov_params):
        """7점 이산 라플라시안 ≈ 0"""
        p = np.array([0.03, 0.02, 0.01])
        h = 1e-3
        center = ov_potential(p, ov_params)
        total = -6 * center
        for axis in range(3):
            e = np.zeros(3)
            e[axis] = h
            total += ov_potential(p + e, ov_params) + ov_potential(p - e, ov_params)
        assert abs(total) / center < 1e-4

    def test_monopole(self, ov_params):
        """단극자 점에서 SingularPointError"""
        with pytest.raises(SingularPointError):
            ov_potential([0.0, 0.0, 0.0], ov_params)
        with pytest.raises(SingularPointError):
            ov_potential([0.0, 0.0, ov_params.s], ov_params)
        assert OVPoint((0.0, 0.0, 2 * ov_params.s)).is_monopole(ov_params.s)


class TestSemiFlat:
    """V^sf 테스트"""

    def test_value(self, ov_params):
        """y=0.1, s=0.05 → log10/(2π·0.05) ≈ 7.3286"""
        assert ov_vsf(0.1, ov_params) == pytest.approx(math.log(10) / (2 * math.pi * 0.05))
        assert ov_vsf(0.1, ov_params) == pytest.approx(7.3286, abs=1e-4)

    def test_constant_shift(self):
        """상수 c 를 더하면 c/s 증가"""
        base = OVParams(s=0.05)
        shifted = OVParams(s=0.05, shift=HarmonicShift.constant(0.01))
        assert ov_vsf(0.2j, shifted) - ov_vsf(0.2j, base) == pytest.approx(0.01 / 0.05)

    def test_lower_bound_at_edge(self):
        """|y| = δ₀ 에서 V^sf ≥ 2log δ₀⁻¹/(5πs)"""
        params = OVParams(s=0.05, delta0=0.4, shift=HarmonicShift.constant(-0.02))
        value = ov_vsf(0.4j, params)
        assert value >= 2 * math.log(1 / 0.4) / (5 * math.pi * 0.05)

    def test_domain(self, ov_params):
        """y=0, |y|>δ₀ 에서 ChartDomainError"""
        with pytest.raises(ChartDomainError):
            ov_vsf(0j, ov_params)
        with pytest.raises(ChartDomainError):
            ov_vsf(0.6, ov_params)


class TestBranches:
    """로그 분지 테스트"""

    def test_inverse_branch(self):
        """Im(log y⁻¹) ∈ [0, 2π)"""
        for y in (0.1j, -0.1, -0.1j, 0.1 + 1e-9j):
            assert 0 <= -log_branch(y, "inverse").imag < 2 * math.pi

    def test_e2_branch(self):
        """Im(log y) ∈ [π/2, 5π/2)"""
        for y in (0.1j, -0.1, -0.1j, 0.1):
            assert math.pi / 2 <= log_branch(y, "e2").imag < 5 * math.pi / 2

    def test_cut(self):
        """절단선 판정"""
        assert on_branch_cut(0.1 + 0j, "inverse")
        assert not on_branch_cut(0.1j, "inverse")
        assert on_branch_cut(0.1j, "e2")

    def test_calV_real_part(self, ov_params):
        """Re𝒱 = log|y|⁻¹/2π 는 분지와 무관"""
        y = -0.05 + 0.02j
        a = calV(y, ov_params, "inverse")
        b = calV(y, ov_params, "e2")
        assert a.real == pytest.approx(b.real)
        assert a.real == pytest.approx(-math.log(abs(y)) / (2 * math.pi))


class TestKahlerPotential:
    """φ_s 와 γ_s 테스트"""

    def test_d1(self, ov_params):
        """∂φ/∂u₁ = −u₁V"""
        sample = ov_phi_gradient([0.03, 0.02, 0.01], ov_params)
        assert sample.dphi[0] == pytest.approx(-0.03 * sample.potential)

    def test_F_zero_on_symmetric_slices(self, ov_params):
        """h=0 에서 u₃ ∈ {0, s/2} 이면 ∂φ/∂u₃ = 0"""
        s = ov_params.s
        pts = np.array([[0.01, u2, u3] for u2 in (0.0, 0.02, 0.1) for u3 in (0.0, s / 2)])
        assert np.max(np.abs(ov_F(pts, ov_params))) < 1e-12

    def test_F_bound(self, ov_params):
        """|∂φ/∂u₃| ≤ 1/2π"""
        rng = np.random.default_rng(11)
        r = 0.45 * np.sqrt(rng.random(1000))
        theta = 2 * math.pi * rng.random(1000)
        pts = np.column_stack([r * np.cos(theta), r * np.sin(theta), ov_params.s * rng.random(1000)])
        assert np.max(np.abs(ov_F(pts, ov_params))) <= 1 / (2 * math.pi) + 1e-12

    def test_F_lattice_matches_bessel(self, ov_params):
        """F 의 두 표현 일치"""
        pts = np.array([[0.06, 0.0, 0.01], [0.0, 0.08, 0.02]])
        assert np.allclose(ov_F(pts, ov_params, method="lattice"), ov_F(pts, ov_params, method="bessel"), atol=1e-10)

    @pytest.mark.parametrize("params_name", ["ov_params", "ov_params_shifted"])
    def test_gradient_matches_phi(self, params_name, request):
        """φ 의 중심 차분과 기울기 일치"""
        params = request.getfixturevalue(params_name)
        p = np.array([0.03, 0.02, 0.01])
        grad = ov_phi_gradient(p, params).dphi
        h = 1e-5
        for axis in range(3):
            e = np.zeros(3)
            e[axis] = h
            numeric = (ov_phi(p + e, params) - ov_phi(p - e, params)) / (2 * h)
            assert numeric == pytest.approx(grad[axis], abs=1e-5)

    def test_psi_equation(self, ov_params):
        """∂²ψ/∂u₂² + ∂²ψ/∂u₃² = −V(0, u₂, u₃)"""
        u2, u3, h = 0.02, 0.01, 2e-4
        lap = (
            ov_psi(u2 + h, u3, ov_params) + ov_psi(u2 - h, u3, ov_params)
            + ov_psi(u2, u3 + h, ov_params) + ov_psi(u2, u3 - h, ov_params)
            - 4 * ov_psi(u2, u3, ov_params)
        ) / h**2
        assert lap == pytest.approx(-ov_potential([0.0, u2, u3], ov_params), rel=1e-3)

    def test_gamma_perp_bound(self, ov_params):
        """|γ_⊥|² ≤ 5s/(2π log δ₀⁻¹)"""
        bound = gamma_perp_bound(ov_params)
        rng = np.random.default_rng(5)
        for _ in range(50):
            r, th = 0.45 * math.sqrt(rng.random()), 2 * math.pi * rng.random()
            p = [r * math.cos(th), r * math.sin(th), ov_params.s * rng.random()]
            if r == 0:
                continue
            _, perp = ov_gamma_norms(p, ov_params)
            assert perp <= bound

    def test_arrays(self, ov_params):
        """배열 기울기와 단일 점 기울기 일치"""
        d1, d2, d3, V = phi_gradient_arrays([0.03], [0.02], [0.01], ov_params)
        sample = ov_phi_gradient([0.03, 0.02, 0.01], ov_params)
        assert (d1[0], d2[0], d3[0]) == pytest.approx(sample.dphi)
        assert V[0] == pytest.approx(sample.potential)


class TestMetric:
    """g_OV 테스트"""

    def test_determinant(self, ov_params):
        """틀 대각 계량의 행렬식 = V²"""
        p = [0.05, 0.02, 0.01]
        sample = ov_metric(p, ov_params)
        V = ov_potential(p, ov_params)
        assert sample.determinant == pytest.approx(V**2)
        assert sample.is_positive_definite()

    def test_orbit_length(self, ov_params):
        """S¹ 궤도 길이 = V^{−1/2}"""
        p = [0.05, 0.02, 0.01]
        assert orbit_length(p, ov_params) == pytest.approx(ov_potential(p, ov_params) ** -0.5)

    def test_flat_torus_diameter(self):
        """정사각 토러스 지름 = π√2·a"""
        a = 0.3
        assert flat_torus_diameter(a**2 * np.eye(2)) == pytest.approx(math.pi * math.sqrt(2) * a)

    def test_fiber_diameter_scaling(self):
        """fiber_diameter/√(s log s⁻¹) 가 2배 띠 안"""
        ratios = [fiber_diameter(0.1j, OVParams(s=s)) / math.sqrt(s * math.log(1 / s)) for s in (1e-2, 1e-3, 1e-4)]
        assert max(ratios) / min(ratios) < 2.0


class TestComparison:
    """V_s 와 V^sf 비교 테스트"""

    def test_bounds(self, ov_params):
        """하한 V ≥ log|y|⁻¹/(10πs), 상한 V ≤ V^sf + 1/(2π|y|)"""
        for y in (0.1j, 0.02 + 0.01j, 0.3):
            cmp = ov_compare(y, ov_params.s, ov_params)
            assert cmp.lower_ratio_min >= 1.0
            assert cmp.upper_ratio_min >= 1.0

    def test_ratio_tends_to_one(self, ov_params):
        """s=1e-3, y=0.1 에서 V/V^sf 가 1e-3 안"""
        cmp = ov_compare(0.1j, 1e-3, ov_params)
        assert abs(cmp.sf_ratio_max - 1) < 1e-3
        assert abs(cmp.sf_ratio_min - 1) < 1e-3

    def test_closeness_constant(self):
        """s·e^{2π|y|/s}|V − V^sf| 는 유계이고 s 가 줄면 증가하지 않음"""
        values = [float(np.max(closeness_statistic(0.1j, np.linspace(0, s, 32), s))) for s in (0.05, 0.02, 0.01)]
        assert all(v < 1.0 for v in values)
        assert values[0] >= values[1] >= values[2]

    def test_sandwich_tightens(self):
        """|γ_f|²/(V^sf|y|²) 범위가 s→0 에서 좁아짐"""
        lo1, hi1 = gamma_sandwich(OVParams(s=1e-3), 1.0)
        lo2, hi2 = gamma_sandwich(OVParams(s=1e-6), 1.0)
        assert 0 < lo1 <= hi1
        assert hi2 / lo2 <= hi1 / lo1

    def test_sandwich_window(self):
        """s(3R)² > log2/8π 이면 ChartDomainError"""
        with pytest.raises(ChartDomainError):
            gamma_sandwich(OVParams(s=0.05), 3.0)

    def test_measure_bounds(self):
        """s=1e-12, R=1 에서 밀도 ∈ [1, 1.05]"""
        lo, hi = measure_pushforward_bounds(OVParams(s=1e-12), 1.0)
        assert lo >= 1.0
        assert hi < 1.05
