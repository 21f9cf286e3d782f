"""준평탄(semi-flat) 모델 모듈

정칙 격자족으로부터 표준 준평탄 초켈러 계량과 작용-각 표현을 계산합니다.
상수 격자 τ₂ = i 는 정확히 셀 수 있는 아벨 모델 프리셋으로 제공합니다.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from src.core.logger import get_logger

logger = get_logger("semiflat")

FD_STEP = 1e-5
FOUR_PI_SQ = 4.0 * math.pi**2


class SemiFlatError(Exception):
    """준평탄 모델 에러"""

    pass


class DegenerateLatticeError(SemiFlatError, ValueError):
    """퇴화 격자 에러 (Im(τ̄₁τ₂) ≤ 0)"""

    pass


ComplexFn = Callable[[complex], complex]


@dataclass(frozen=True)
class LatticeFamily:
    """정칙 격자족 {τ₁(y), τ₂(y)}

    도함수를 주지 않으면 중심차분(h=1e-5)으로 계산합니다.
    """

    tau1: ComplexFn
    tau2: ComplexFn
    dtau1: Optional[ComplexFn] = None
    dtau2: Optional[ComplexFn] = None
    name: str = "custom"

    @classmethod
    def constant(cls, tau2: complex, tau1: complex = 1.0) -> "LatticeFamily":
        t1, t2 = complex(tau1), complex(tau2)
        return cls(
            tau1=lambda y: t1,
            tau2=lambda y: t2,
            dtau1=lambda y: 0j,
            dtau2=lambda y: 0j,
            name=f"constant({t2})",
        )

    @classmethod
    def abelian(cls) -> "LatticeFamily":
        """평탄 아벨 프리셋 τ₁ = 1, τ₂ = i"""
        lattice = cls.constant(1j)
        return cls(lattice.tau1, lattice.tau2, lattice.dtau1, lattice.dtau2, name="abelian")

    @classmethod
    def ov_matching(cls, shift=None, branch: str = "inverse") -> "LatticeFamily":
        """OV 주기와 맞는 격자 τ₂ = log y/(2π√−1) + √−1 ĥ(y)"""
        from src.core.harmonic import HarmonicShift
        from src.core.ooguri_vafa import log_branch

        shift = shift or HarmonicShift.zero()
        logger.debug(f"OV 정합 격자족: branch={branch}")

        def tau2(y):
            return log_branch(y, branch) / (2j * math.pi) + 1j * shift.holomorphic(y)

        def dtau2(y):
            return 1.0 / (2j * math.pi * y) + 1j * shift.holomorphic_derivative(y)

        return cls(
            tau1=lambda y: 1.0 + 0j,
            tau2=tau2,
            dtau1=lambda y: 0j,
            dtau2=dtau2,
            name="ov-matching",
        )

    def derivative(self, which: int, y: complex) -> complex:
        fn = self.tau1 if which == 1 else self.tau2
        analytic = self.dtau1 if which == 1 else self.dtau2
        if analytic is not None:
            return complex(analytic(y))
        logger.debug(f"{self.name}: τ{which}' 중심차분 (h={FD_STEP})")
        # 정칙 함수이므로 실수 방향 차분으로 충분
        return (complex(fn(y + FD_STEP)) - complex(fn(y - FD_STEP))) / (2 * FD_STEP)

    def orientation(self, y: complex) -> float:
        """Im(τ̄₁τ₂)"""
        return float((np.conj(self.tau1(y)) * self.tau2(y)).imag)

    def normalized_tau(self, y: complex) -> complex:
        """τ = τ₂/τ₁ (τ₁ ≡ 1 정규화)"""
        return complex(self.tau2(y)) / complex(self.tau1(y))


def _checked_orientation(y: complex, lattice: LatticeFamily) -> float:
    value = lattice.orientation(y)
    if not value > 0:
        logger.warning(f"퇴화 격자: Im(τ̄₁τ₂) = {value:.3g} (y={y}, {lattice.name})")
        raise DegenerateLatticeError(f"Im(τ̄₁τ₂) = {value} ≤ 0 (y={y}, {lattice.name})")
    return value


def sf_potential(
    y: complex, lattice: LatticeFamily, s: float, x: complex = 0j
) -> Tuple[float, complex]:
    """표준 준평탄 계량의 (W, b)

    Args:
        y: 기저 좌표
        lattice: 격자족
        s: 붕괴 파라미터
        x: 섬유 복소 좌표 (b는 x에 실선형으로 의존)

    Returns:
        (W, b)

    Raises:
        DegenerateLatticeError: Im(τ̄₁τ₂) ≤ 0
    """
    W = s / _checked_orientation(y, lattice)
    tau1, tau2 = complex(lattice.tau1(y)), complex(lattice.tau2(y))
    x = complex(x)
    b = -(W / s) * (
        (tau2 * x.conjugate()).imag * lattice.derivative(1, y)
        + (tau1.conjugate() * x).imag * lattice.derivative(2, y)
    )
    return W, b


def sf_frame10(y: complex, lattice: LatticeFamily, s: float) -> np.ndarray:
    """J₁에 대한 (1,0) 틀의 계수 행렬 A (2×2 복소)

    틀: dy₁ + A₁₁dv₁ + A₁₂dv₂, dY₁ + A₂₁dv₁ + A₂₂dv₂
    """
    _checked_orientation(y, lattice)
    tau = lattice.normalized_tau(y)
    sym = np.array([[1.0, tau.real], [tau.real, abs(tau) ** 2]]) / tau.imag
    return 1j * s * sym


def sf_frame_rows(y: complex, lattice: LatticeFamily, s: float) -> np.ndarray:
    """(dy₁, dY₁, dv₁, dv₂) 여틀에서의 두 틀 행"""
    A = sf_frame10(y, lattice, s)
    rows = np.zeros((2, 4), dtype=complex)
    rows[0, 0] = 1.0
    rows[1, 1] = 1.0
    rows[:, 2:] = A
    return rows


def frame_is_10(y: complex, lattice: LatticeFamily, s: float) -> float:
    """두 틀 행이 J₁-(1,0) 여공간에 놓이는지 최소제곱 잔차로 확인"""
    tau = lattice.normalized_tau(y)
    c = math.sqrt(s / tau.imag)
    d = 1.0 / math.sqrt(s * tau.imag)
    # 기저: P = −c(dv₁+τdv₂) + d(τdy₁ − dY₁), Q = −c(dv₁+τ̄dv₂) + d(−τ̄dy₁ + dY₁)
    P = np.array([d * tau, -d, -c, -c * tau])
    Q = np.array([-d * tau.conjugate(), d, -c, -c * tau.conjugate()])
    basis = np.stack([P, Q], axis=1)
    residual = 0.0
    for row in sf_frame_rows(y, lattice, s):
        coef, *_ = np.linalg.lstsq(basis, row, rcond=None)
        residual = max(residual, float(np.linalg.norm(basis @ coef - row)))
    return residual


def sf_fiber_metric(y: complex, lattice: LatticeFamily, s: float) -> np.ndarray:
    """θ 좌표(주기 2π)에서의 섬유 토러스 계량 (2×2)

    W|τ₁dv₁ + τ₂dv₂|², θ = 2πv. s에 대해 선형입니다.
    """
    W = s / _checked_orientation(y, lattice)
    tau1, tau2 = complex(lattice.tau1(y)), complex(lattice.tau2(y))
    cross = (tau1.conjugate() * tau2).real
    gram = np.array([[abs(tau1) ** 2, cross], [cross, abs(tau2) ** 2]])
    return W * gram / FOUR_PI_SQ


def max_fiber_eigenvalue(y: complex, lattice: LatticeFamily, s: float) -> float:
    """섬유 계량의 최대 고유값 N_b"""
    return float(np.linalg.eigvalsh(sf_fiber_metric(y, lattice, s))[-1])


def abelian_fiber_metric(s: float) -> np.ndarray:
    """평탄 아벨 모델의 섬유 계량 (s/4π²)·I"""
    return np.eye(2) * s / FOUR_PI_SQ


def action_base_metric(fiber_metric: np.ndarray) -> np.ndarray:
    """ω = Σdx∧dθ 와 양립하는 작용 좌표 기저 계량 (섬유 계량의 역행렬)"""
    return np.linalg.inv(fiber_metric)


def sf_metric(y: complex, lattice: LatticeFamily, s: float, v=(0.0, 0.0)) -> np.ndarray:
    """(y₁, y₂, v₁, v₂) 차트의 4×4 실 계량

    g = W|dx + b dy|² + W⁻¹|dy|², x = −(v₁τ₁ + v₂τ₂)
    """
    v1, v2 = float(v[0]), float(v[1])
    tau1, tau2 = complex(lattice.tau1(y)), complex(lattice.tau2(y))
    x = -(v1 * tau1 + v2 * tau2)
    W, b = sf_potential(y, lattice, s, x)
    dy = np.array([1.0, 1j, 0.0, 0.0])
    dtau = v1 * lattice.derivative(1, y) + v2 * lattice.derivative(2, y)
    dx = -dtau * dy + np.array([0.0, 0.0, -tau1, -tau2])
    form = dx + b * dy
    G = W * np.outer(form, form.conj()).real + np.outer(dy, dy.conj()).real / W
    return 0.5 * (G + G.T)


def _wirtinger(fn: Callable[[complex], complex], z: complex, h: float = FD_STEP) -> complex:
    """∂f/∂z = (∂_re − √−1 ∂_im)/2, 중심차분"""
    d_re = (fn(z + h) - fn(z - h)) / (2 * h)
    d_im = (fn(z + 1j * h) - fn(z - 1j * h)) / (2 * h)
    return 0.5 * (d_re - 1j * d_im)


def kahler_residuals(
    y: complex, x: complex, lattice: LatticeFamily, s: float, h: float = FD_STEP
) -> Tuple[float, float]:
    """켈러 조건 두 식의 차분 잔차

    ∂W/∂y = ∂(Wb)/∂x,  ∂(W b̄)/∂y = ∂/∂x {W(W⁻² + |b|²)}
    """

    def W_of(yy):
        return sf_potential(yy, lattice, s, x)[0]

    def Wb_of_x(xx):
        W, b = sf_potential(y, lattice, s, xx)
        return W * b

    def Wbbar_of_y(yy):
        W, b = sf_potential(yy, lattice, s, x)
        return W * np.conj(b)

    def energy_of_x(xx):
        W, b = sf_potential(y, lattice, s, xx)
        return W * (W**-2 + abs(b) ** 2)

    r1 = _wirtinger(W_of, y, h) - _wirtinger(Wb_of_x, x, h)
    r2 = _wirtinger(Wbbar_of_y, y, h) - _wirtinger(energy_of_x, x, h)
    return abs(r1), abs(r2)


def _wedge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.outer(a, b) - np.outer(b, a)


def _pfaffian4(M: np.ndarray) -> complex:
    return M[0, 1] * M[2, 3] - M[0, 2] * M[1, 3] + M[0, 3] * M[1, 2]


def eta_squared_check(y: complex, x: complex, lattice: LatticeFamily, s: float) -> Tuple[float, float, float]:
    """(x₁, x₂, y₁, y₂) 좌표에서 η², Re(Θ)², Im(Θ)²의 Pfaffian"""
    W, b = sf_potential(y, lattice, s, x)
    dx = np.array([1.0, 1j, 0.0, 0.0])
    dy = np.array([0.0, 0.0, 1.0, 1j])
    form = dx + b * dy
    eta = 0.5j * (W * _wedge(form, form.conj()) + _wedge(dy, dy.conj()) / W)
    theta = _wedge(dx, dy)
    return (
        float(_pfaffian4(eta).real),
        float(_pfaffian4(theta.real).real),
        float(_pfaffian4(theta.imag).real),
    )
