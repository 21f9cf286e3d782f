"""Ooguri–Vafa 모델 모듈

주기 단극자 퍼텐셜 V_s (정규화 상수 a_s), 준평탄 평균 V_s^sf, 켈러 퍼텐셜 φ_s,
1-형식 γ_s 성분, 계량 텐서와 비교 통계를 계산합니다.

격자합은 (n, −n) 쌍으로 묶어 절대수렴시키고, 절단 이후의 꼬리는
르장드르 전개와 후르비츠 제타로 더합니다. 꼬리 항이 모두 고체 조화함수이므로
절단된 V_s도 정확히 조화적입니다. |y| ≥ s 인 점은 푸리에-베셀 표현을 씁니다.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.spatial import Voronoi
from scipy.special import eval_legendre, k0, k0e, k1, zeta

from src.core.geometry import CHI_T_MAX, MetricSample, ParameterError, chi, sigma_s, zeta_inverse
from src.core.harmonic import HarmonicShift
from src.core.logger import get_logger

logger = get_logger("ooguri_vafa")

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi
TAIL_TERMS = 8  # ℓ = 2, 4, ..., 16
POINT_CHUNK = 2048
PAIR_CHUNK = 4096
BRANCHES = ("inverse", "e2")
BESSEL_MAX_TERMS = 4096
# 이보다 r/s 가 작으면 베셀 급수 항 수가 상한을 넘음
BESSEL_MIN_RATIO = 40.0 / (TWO_PI * (BESSEL_MAX_TERMS - 6))


class OoguriVafaError(Exception):
    """OV 모델 에러"""

    pass


class SingularPointError(OoguriVafaError, ValueError):
    """단극자 점 평가 에러"""

    pass


class ChartDomainError(OoguriVafaError, ValueError):
    """차트 D(δ₀) 밖 평가 에러"""

    pass


@lru_cache(maxsize=1)
def euler_gamma() -> float:
    """오일러-마스케로니 상수

    H_n − log n 에 오일러-매클로린 보정 (n = 1000).
    """
    n = 1000
    harmonic = math.fsum(1.0 / j for j in range(1, n + 1))
    correction = -1.0 / (2 * n) + 1.0 / (12 * n**2) - 1.0 / (120 * n**4) + 1.0 / (252 * n**6)
    return harmonic - math.log(n) + correction


def ov_a_s(s: float) -> float:
    """정규화 상수 a_s = (γ − log 2s)/(2πs)"""
    if s <= 0:
        raise ParameterError(f"s는 양수여야 합니다: {s}")
    return (euler_gamma() - math.log(2 * s)) / (TWO_PI * s)


@dataclass(frozen=True)
class OVParams:
    """OV 모델 파라미터"""

    s: float
    shift: HarmonicShift = field(default_factory=HarmonicShift.zero)
    delta0: float = 0.5
    trunc_n: int = 8
    branch: str = "inverse"

    def __post_init__(self):
        if not self.s > 0:
            raise ParameterError(f"s는 양수여야 합니다: {self.s}")
        if not (0 < self.delta0 <= 0.5):
            raise ParameterError(f"delta0는 (0, 1/2] 범위여야 합니다: {self.delta0}")
        if self.trunc_n < 2:
            raise ParameterError(f"trunc_n은 2 이상이어야 합니다: {self.trunc_n}")
        if self.branch not in BRANCHES:
            raise ParameterError(f"알 수 없는 로그 분지: {self.branch}")
        if not self.shift.is_zero:
            self.shift.validate(self.delta0)

    @classmethod
    def from_model(cls, params, shift: Optional[HarmonicShift] = None, branch: str = "inverse") -> "OVParams":
        return cls(
            s=params.s,
            shift=shift or HarmonicShift.zero(),
            delta0=params.delta0,
            trunc_n=params.trunc_n,
            branch=branch,
        )

    def with_s(self, s: float) -> "OVParams":
        return OVParams(s=s, shift=self.shift, delta0=self.delta0, trunc_n=self.trunc_n, branch=self.branch)


@dataclass(frozen=True)
class OVPoint:
    """OV 차트의 점 (u₁, u₂, u₃), u₃는 mod s"""

    u: Tuple[float, float, float]
    allow_monopole: bool = False

    @property
    def y(self) -> complex:
        return complex(self.u[0], self.u[1])

    def is_monopole(self, s: float) -> bool:
        u1, u2, u3 = self.u
        return u1 == 0 and u2 == 0 and _reduce_u3(u3, s) == 0


@dataclass
class OVGammaSample:
    """γ_s 성분 표본"""

    gamma_f_normsq: float
    gamma_perp: float
    dphi: Tuple[float, float, float]
    potential: float

    @property
    def gamma_perp_normsq(self) -> float:
        return self.gamma_perp**2 / self.potential

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gamma_f_normsq": self.gamma_f_normsq,
            "gamma_perp": self.gamma_perp,
            "gamma_perp_normsq": self.gamma_perp_normsq,
            "dphi": list(self.dphi),
        }


@dataclass
class OVComparison:
    """V_s 와 V_s^sf 비교 통계 (u₃ 격자 위)"""

    y: complex
    s: float
    closeness_constant: float  # max s·e^{2π|y|/s}|V − V^sf|
    lower_ratio_min: float  # min V·10πs/log|y|⁻¹  (≥ 1)
    upper_ratio_min: float  # min (V^sf + 1/(2π|y|))/V  (≥ 1)
    sf_ratio_min: float  # min V/V^sf
    sf_ratio_max: float  # max V/V^sf
    exponential_regime: bool  # s ≤ π|y|

    def to_dict(self) -> Dict[str, Any]:
        return {
            "y_re": self.y.real,
            "y_im": self.y.imag,
            "s": self.s,
            "closeness_constant": self.closeness_constant,
            "lower_ratio_min": self.lower_ratio_min,
            "upper_ratio_min": self.upper_ratio_min,
            "sf_ratio_min": self.sf_ratio_min,
            "sf_ratio_max": self.sf_ratio_max,
            "exponential_regime": self.exponential_regime,
        }


# --- 공통 보조 함수 ---


def _reduce_u3(u3, s):
    """u₃를 [−s/2, s/2]로 환원"""
    return u3 - s * np.round(np.asarray(u3) / s)


def _unpack(p) -> Tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    if isinstance(p, OVPoint):
        arr = np.asarray(p.u, dtype=float)
    else:
        arr = np.asarray(p, dtype=float)
    scalar = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[-1] != 3:
        raise OoguriVafaError(f"점은 (u1, u2, u3) 형태여야 합니다: shape={arr.shape}")
    return arr[:, 0], arr[:, 1], arr[:, 2], scalar


def _finish(values: np.ndarray, scalar: bool):
    return float(values[0]) if scalar else values


def _n_pairs(rho_max: float, s: float, trunc_n: int) -> int:
    """꼬리 전개가 ρ/(sN) ≤ 1/4 에서 수렴하도록 N 선택"""
    return max(int(trunc_n), int(math.ceil(4.0 * rho_max / s)))


def _check_singular(r: np.ndarray, ut: np.ndarray) -> None:
    if np.any((r == 0) & (ut == 0)):
        raise SingularPointError("단극자 점 (0, 0, sn)에서는 평가할 수 없습니다")


def log_branch(y, branch: str = "inverse"):
    """log y 의 분지

    inverse: Im(log y⁻¹) ∈ [0, 2π) (양의 실축에 절단)
    e2: Im(log y) ∈ [π/2, 5π/2) (u₁ = 0, u₂ > 0 에 절단)
    """
    y_arr = np.asarray(y, dtype=complex)
    if np.any(y_arr == 0):
        raise ChartDomainError("log y 는 y = 0 에서 정의되지 않습니다")
    angle = np.angle(y_arr)
    if branch == "inverse":
        arg = -np.mod(-angle, TWO_PI)
    elif branch == "e2":
        arg = np.mod(angle - math.pi / 2, TWO_PI) + math.pi / 2
    else:
        raise ParameterError(f"알 수 없는 로그 분지: {branch}")
    out = np.log(np.abs(y_arr)) + 1j * arg
    return complex(out) if out.ndim == 0 else out


def on_branch_cut(y: complex, branch: str, tol: float = 1e-12) -> bool:
    """점이 선택한 분지의 절단선 위에 있는지"""
    if branch == "inverse":
        return abs(y.imag) <= tol and y.real > 0
    return abs(y.real) <= tol and y.imag > 0


def calV(y, params: OVParams, branch: Optional[str] = None):
    """𝒱(y) = log(y⁻¹)/2π + ĥ(y)"""
    branch = branch or params.branch
    out = -np.asarray(log_branch(y, branch)) / TWO_PI + np.asarray(params.shift.holomorphic(y))
    return complex(out) if np.ndim(out) == 0 else out


# --- 퍼텐셜 ---


def _legendre_tail(rho, x, s, N, start, scale_power, zeta_shift):
    """Σ_{n>N} 2 P_ℓ(x) ρ^ℓ / (sn)^{ℓ+zeta_shift} 형태의 꼬리 (ℓ 짝수)"""
    q = rho / s
    tail = np.zeros_like(rho)
    for ell in range(start, start + 2 * TAIL_TERMS, 2):
        tail += 2.0 * eval_legendre(ell, x) * q**ell * s**scale_power * zeta(ell + zeta_shift, N + 1)
    return tail


def _v_lattice_core(r: np.ndarray, ut: np.ndarray, s: float, N: int) -> np.ndarray:
    """(1/4π)[1/R₀ + Σ_{n≥1}(1/R₋ₙ + 1/R₊ₙ − 2/(sn))] (꼬리 포함)"""
    rho = np.hypot(r, ut)
    total = 1.0 / rho
    for start in range(1, N + 1, PAIR_CHUNK):
        n = np.arange(start, min(N, start + PAIR_CHUNK - 1) + 1, dtype=float)[None, :]
        d = s * n
        r2 = (r**2)[:, None]
        u = ut[:, None]
        total = total + np.sum(
            1.0 / np.sqrt(r2 + (u - d) ** 2) + 1.0 / np.sqrt(r2 + (u + d) ** 2) - 2.0 / d, axis=1
        )
    x = ut / rho
    total = total + _legendre_tail(rho, x, s, N, start=2, scale_power=-1, zeta_shift=1)
    return total / FOUR_PI


def _bessel_terms(s: float, r_min: float) -> int:
    """e^{−2πkr/s} < e^{−40} 이 되는 항 수 (BESSEL_MAX_TERMS 이하)"""
    n_terms = int(math.ceil(40.0 * s / (TWO_PI * r_min))) + 5
    if n_terms > BESSEL_MAX_TERMS:
        raise ChartDomainError(f"베셀 급수 항 수 {n_terms} > {BESSEL_MAX_TERMS} (|y|/s = {r_min / s:.3g})")
    return n_terms


def _v_bessel_correction(r: np.ndarray, ut: np.ndarray, s: float) -> np.ndarray:
    """V − V^sf = (1/πs) Σ_k K₀(2πkr/s) cos(2πku₃/s)"""
    n_terms = _bessel_terms(s, float(np.min(r)))
    k = np.arange(1, n_terms + 1, dtype=float)[None, :]
    z = TWO_PI * k * r[:, None] / s
    return np.sum(k0(z) * np.cos(TWO_PI * k * ut[:, None] / s), axis=1) / (math.pi * s)


def _vsf_arrays(u1, u2, params: OVParams) -> np.ndarray:
    r = np.hypot(u1, u2)
    return (-np.log(r) / TWO_PI + params.shift.value(u1, u2)) / params.s


def _potential_arrays(u1, u2, u3, params: OVParams, method: str = "auto") -> np.ndarray:
    s = params.s
    r = np.hypot(u1, u2)
    ut = _reduce_u3(u3, s)
    _check_singular(r, ut)
    if method == "lattice":
        lattice = np.ones_like(r, dtype=bool)
    elif method == "bessel":
        # 항 수 상한을 넘는 점은 격자합
        lattice = r < BESSEL_MIN_RATIO * s
    elif method == "auto":
        lattice = r < s
    else:
        raise OoguriVafaError(f"알 수 없는 평가 방식: {method}")

    out = np.empty_like(r)
    if np.any(lattice):
        idx = np.flatnonzero(lattice)
        rho_max = float(np.max(np.hypot(r[idx], ut[idx])))
        N = _n_pairs(rho_max, s, params.trunc_n)
        core = np.concatenate(
            [_v_lattice_core(r[c], ut[c], s, N) for c in np.array_split(idx, max(1, len(idx) // POINT_CHUNK + 1))]
        )
        h = np.asarray(params.shift.value(u1[idx], u2[idx]))
        out[idx] = core + ov_a_s(s) + h / s
    if np.any(~lattice):
        idx = np.flatnonzero(~lattice)
        out[idx] = _vsf_arrays(u1[idx], u2[idx], params) + _v_bessel_correction(r[idx], ut[idx], s)
    return out


def ov_potential(p, params: OVParams, method: str = "auto"):
    """V_s 평가

    Args:
        p: OVPoint 또는 (..., 3) 배열
        params: OV 파라미터
        method: "lattice" (쌍 합 + 꼬리), "bessel", "auto" (|y| < s 이면 격자합)

    Raises:
        SingularPointError: 단극자 점
    """
    u1, u2, u3, scalar = _unpack(p)
    return _finish(_potential_arrays(u1, u2, u3, params, method), scalar)


def ov_potential_bessel(p, params: OVParams, n_terms: Optional[int] = None):
    """푸리에-베셀 표현 V^sf + (1/πs) Σ_{k≤n_terms} K₀(2πkr/s)cos(2πku₃/s)

    Raises:
        ChartDomainError: y = 0 (베셀 급수는 |y| > 0 에서만 수렴)
    """
    u1, u2, u3, scalar = _unpack(p)
    r = np.hypot(u1, u2)
    if np.any(r == 0):
        raise ChartDomainError("베셀 표현은 y = 0 에서 정의되지 않습니다")
    s = params.s
    ut = _reduce_u3(u3, s)
    if n_terms is None:
        correction = _v_bessel_correction(r, ut, s)
    else:
        k = np.arange(1, n_terms + 1, dtype=float)[None, :]
        z = TWO_PI * k * r[:, None] / s
        correction = np.sum(k0(z) * np.cos(TWO_PI * k * ut[:, None] / s), axis=1) / (math.pi * s)
    return _finish(_vsf_arrays(u1, u2, params) + correction, scalar)


def ov_vsf(y, params: OVParams):
    """V_s^sf(y) = −log|y|/(2πs) + h(y)/s"""
    y_arr = np.asarray(y, dtype=complex)
    r = np.abs(y_arr)
    if np.any(r == 0):
        raise ChartDomainError("V^sf 는 y = 0 에서 정의되지 않습니다")
    if np.any(r > params.delta0 * (1 + 1e-12)):
        raise ChartDomainError(f"|y| > δ₀ = {params.delta0}")
    out = _vsf_arrays(y_arr.real, y_arr.imag, params)
    return float(out) if np.ndim(out) == 0 else out


def closeness_statistic(y: complex, u3, s: float):
    """s·e^{2π|y|/s}|V_s − V_s^sf| (스케일된 베셀 합, 상쇄 없이)"""
    r = abs(y)
    if r == 0:
        raise ChartDomainError("y = 0 에서는 정의되지 않습니다")
    ut = np.atleast_1d(_reduce_u3(np.asarray(u3, dtype=float), s))
    n_terms = _bessel_terms(s, r)
    k = np.arange(1, n_terms + 1, dtype=float)
    z = TWO_PI * k * r / s
    weights = k0e(z) * np.exp(-(z - z[0]))
    return np.abs(np.cos(TWO_PI * np.outer(ut, k) / s) @ weights) / math.pi


# --- φ_s 의 편미분 ---


def _F_lattice_core(r, ut, s, N):
    """∂φ/∂u₃ 의 격자 부분 (조화 이동과 무관)"""
    rho = np.hypot(r, ut)
    total = np.zeros_like(r)
    for start in range(1, N + 1, PAIR_CHUNK):
        n = np.arange(start, min(N, start + PAIR_CHUNK - 1) + 1, dtype=float)[None, :]
        d = s * n
        r2 = (r**2)[:, None]
        u = ut[:, None]
        total = total + np.sum(
            (u - d) / np.sqrt(r2 + (u - d) ** 2) + (u + d) / np.sqrt(r2 + (u + d) ** 2), axis=1
        )
    x = np.where(rho > 0, ut / np.where(rho > 0, rho, 1.0), 0.0)
    q = rho / s
    for j in range(1, TAIL_TERMS + 1):
        coef = x * eval_legendre(2 * j, x) - eval_legendre(2 * j + 1, x)
        total = total + 2.0 * coef * q ** (2 * j + 1) * zeta(2 * j + 1, N + 1)
    return -(total + x) / FOUR_PI + ut / (TWO_PI * s)


def _F_bessel(r, ut, s):
    """∂φ/∂u₃ = −(r/πs) Σ_k K₁(2πkr/s) sin(2πku₃/s)"""
    n_terms = _bessel_terms(s, float(np.min(r)))
    k = np.arange(1, n_terms + 1, dtype=float)[None, :]
    z = TWO_PI * k * r[:, None] / s
    return -(r / (math.pi * s)) * np.sum(k1(z) * np.sin(TWO_PI * k * ut[:, None] / s), axis=1)


def _F_arrays(u1, u2, u3, params: OVParams, method: str = "auto"):
    s = params.s
    r = np.hypot(u1, u2)
    ut = _reduce_u3(u3, s)
    _check_singular(r, ut)
    lattice = np.ones_like(r, dtype=bool) if method == "lattice" else (r < s) | (r == 0)
    if method == "bessel":
        lattice = r < BESSEL_MIN_RATIO * s
    out = np.empty_like(r)
    if np.any(lattice):
        idx = np.flatnonzero(lattice)
        N = _n_pairs(float(np.max(np.hypot(r[idx], ut[idx]))), s, params.trunc_n)
        out[idx] = _F_lattice_core(r[idx], ut[idx], s, N)
    if np.any(~lattice):
        idx = np.flatnonzero(~lattice)
        out[idx] = _F_bessel(r[idx], ut[idx], s)
    return out


def ov_F(p, params: OVParams, method: str = "auto"):
    """∂φ_s/∂u₃ (u₃에 대해 홀함수, 주기 s, |F| ≤ 1/2π)"""
    u1, u2, u3, scalar = _unpack(p)
    return _finish(_F_arrays(u1, u2, u3, params, method), scalar)


def _dphi2_arrays(u1, u2, V, params: OVParams):
    s = params.s
    h = np.asarray(params.shift.value(u1, u2))
    shift_terms = params.shift.integral_t_d2h(u1, u2) + params.shift.integral_along_u2(u2)
    return -u2 * (V - h / s + 1.0 / (TWO_PI * s)) - np.asarray(shift_terms) / s


def ov_phi_gradient(p, params: OVParams, method: str = "auto") -> OVGammaSample:
    """φ_s 의 기울기와 γ_s 성분

    ∂φ/∂u₁ = −u₁V_s,
    ∂φ/∂u₂ = −u₂(V_s − h/s + 1/2πs) − (1/s)(∫₀^{u₁} t∂₂h dt + ∫₀^{u₂} h(0,t) dt),
    ∂φ/∂u₃ = F.
    """
    u1, u2, u3, scalar = _unpack(p)
    if not scalar:
        raise OoguriVafaError("ov_phi_gradient 는 단일 점만 받습니다 (배열은 phi_gradient_arrays)")
    d1, d2, d3, V = phi_gradient_arrays(u1, u2, u3, params, method)
    gamma_f = (d1[0] ** 2 + d2[0] ** 2) / V[0]
    return OVGammaSample(
        gamma_f_normsq=float(gamma_f),
        gamma_perp=float(d3[0]),
        dphi=(float(d1[0]), float(d2[0]), float(d3[0])),
        potential=float(V[0]),
    )


def phi_gradient_arrays(u1, u2, u3, params: OVParams, method: str = "auto"):
    """(∂₁φ, ∂₂φ, ∂₃φ, V) 배열"""
    u1, u2, u3 = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (u1, u2, u3))
    V = _potential_arrays(u1, u2, u3, params, method)
    d1 = -u1 * V
    d2 = _dphi2_arrays(u1, u2, V, params)
    d3 = _F_arrays(u1, u2, u3, params, method)
    return d1, d2, d3, V


def ov_gamma_norms(p, params: OVParams) -> Tuple[float, float]:
    """(|γ_f|², |γ_⊥|²) = ((∂₁φ² + ∂₂φ²)/V, F²/V)"""
    sample = ov_phi_gradient(p, params)
    return sample.gamma_f_normsq, sample.gamma_perp_normsq


def ov_psi(u2, u3, params: OVParams):
    """ψ_s(u₂, u₃) = φ_s(0, u₂, u₃)

    쌍 합 R₋ + R₊ − 2d − u₂²/d 는 르장드르 꼬리로 절대수렴합니다.
    """
    s = params.s
    u2 = np.atleast_1d(np.asarray(u2, dtype=float))
    u3 = np.atleast_1d(np.asarray(u3, dtype=float))
    u2, u3 = np.broadcast_arrays(u2, u3)
    rho = np.hypot(u2, u3)
    N = _n_pairs(float(np.max(rho)), s, params.trunc_n)
    total = np.zeros_like(rho)
    for start in range(1, N + 1, PAIR_CHUNK):
        n = np.arange(start, min(N, start + PAIR_CHUNK - 1) + 1, dtype=float)[None, :]
        d = s * n
        a2 = (u2**2)[:, None]
        u = u3[:, None]
        total = total + np.sum(np.sqrt(a2 + (u - d) ** 2) + np.sqrt(a2 + (u + d) ** 2) - 2 * d - a2 / d, axis=1)
    x = np.where(rho > 0, u3 / np.where(rho > 0, rho, 1.0), 0.0)
    q = rho / s
    for ell in range(4, 4 + 2 * TAIL_TERMS, 2):
        Q = eval_legendre(ell, x) - 2 * x * eval_legendre(ell - 1, x) + eval_legendre(ell - 2, x)
        total = total + 2.0 * Q * q**ell * s * zeta(ell - 1, N + 1)
    psi = (
        -total / FOUR_PI
        - rho / FOUR_PI
        - ov_a_s(s) * u2**2 / 2
        + (u3**2 - u2**2) / (FOUR_PI * s)
        - np.asarray(params.shift.double_integral_along_u2(u2)) / s
    )
    return float(psi[0]) if psi.size == 1 else psi


def ov_phi(p, params: OVParams) -> float:
    """φ_s(u) = −∫₀^{u₁} t V_s(t, u₂, u₃) dt + ψ_s(u₂, u₃)"""
    u1, u2, u3, scalar = _unpack(p)
    if not scalar:
        raise OoguriVafaError("ov_phi 는 단일 점만 받습니다")
    a, b, c = float(u1[0]), float(u2[0]), float(u3[0])

    def integrand(t):
        return t * float(_potential_arrays(np.array([t]), np.array([b]), np.array([c]), params)[0])

    radial, _ = quad(integrand, 0.0, a, epsabs=1e-13, epsrel=1e-12, limit=200) if a != 0 else (0.0, 0.0)
    return -radial + float(ov_psi(b, c, params))


# --- 계량 ---


def ov_metric(p, params: OVParams) -> MetricSample:
    """g_OV = V⁻¹(α/2π)² + V(du₁² + du₂² + du₃²)

    틀 {α/2π, du₁, du₂, du₃} 에서 대각. 섬유 부분은 θ 좌표 표현
    (V⁻¹/4π²)[(dθ₁ + Im𝒱 dθ₂)² + (Re𝒱)² dθ₂²].
    """
    u1, u2, u3, scalar = _unpack(p)
    if not scalar:
        raise OoguriVafaError("ov_metric 는 단일 점만 받습니다")
    V = float(_potential_arrays(u1, u2, u3, params)[0])
    tensor = np.diag([1.0 / V, V, V, V])
    y = complex(u1[0], u2[0])
    fiber = _theta_fiber_metric(y, V, params)
    return MetricSample(tensor=tensor, fiber=fiber, base=V * np.eye(2), frame="alpha/2pi,du1,du2,du3")


def _theta_fiber_metric(y: complex, V: float, params: OVParams) -> np.ndarray:
    v = calV(y, params)
    return np.array([[1.0, v.imag], [v.imag, abs(v) ** 2]]) / (V * 4 * math.pi**2)


def orbit_length(p, params: OVParams) -> float:
    """S¹ 궤도 길이 V^{−1/2}"""
    return float(ov_potential(p, params)) ** -0.5


def ov_fiber_metric(y: complex, params: OVParams) -> np.ndarray:
    """V^sf 근사의 θ 좌표 섬유 계량"""
    return _theta_fiber_metric(y, ov_vsf(y, params), params)


def lagrange_reduce(b1: np.ndarray, b2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """2차원 격자 기저의 가우스-라그랑주 축약"""
    b1, b2 = np.array(b1, dtype=float), np.array(b2, dtype=float)
    while True:
        if b1 @ b1 > b2 @ b2:
            b1, b2 = b2, b1
        mu = round(float(b1 @ b2) / float(b1 @ b1))
        if mu == 0:
            break
        b2 = b2 - mu * b1
    return b1, b2


def flat_torus_diameter(gram: np.ndarray) -> float:
    """θ 좌표(주기 2π) 계량 gram 을 갖는 평탄 토러스의 지름

    축약 기저의 5×5 격자 블록 보로노이 셀에서 원점 셀 꼭짓점의 최대 노름.
    """
    L = np.linalg.cholesky(np.asarray(gram, dtype=float))
    basis = TWO_PI * L.T
    b1, b2 = lagrange_reduce(basis[:, 0], basis[:, 1])
    grid = np.array([i * b1 + j * b2 for i in range(-2, 3) for j in range(-2, 3)])
    origin = 12  # (i, j) = (0, 0)
    vor = Voronoi(grid)
    region = vor.regions[vor.point_region[origin]]
    vertices = vor.vertices[[v for v in region if v >= 0]]
    return float(np.max(np.linalg.norm(vertices, axis=1)))


def fiber_diameter(y: complex, params: OVParams) -> float:
    """|y| 위 섬유 토러스 지름 (V^sf 평탄 근사)"""
    return flat_torus_diameter(ov_fiber_metric(y, params))


# --- 비교 통계 ---


def ov_compare(y: complex, s: float, params: OVParams, n_u3: int = 64) -> OVComparison:
    """u₃ 격자 위에서 V_s 를 V_s^sf 및 하한/상한과 비교"""
    y = complex(y)
    r = abs(y)
    if r == 0:
        raise ChartDomainError("ov_compare 는 y ≠ 0 에서만 정의됩니다")
    local = params.with_s(s)
    u3 = np.linspace(0.0, s, n_u3, endpoint=False)
    pts = np.column_stack([np.full(n_u3, y.real), np.full(n_u3, y.imag), u3])
    V = ov_potential(pts, local)
    vsf = ov_vsf(y, local)
    closeness = closeness_statistic(y, u3, s)
    report = OVComparison(
        y=y,
        s=s,
        closeness_constant=float(np.max(closeness)),
        lower_ratio_min=float(np.min(V * 10 * math.pi * s / math.log(1.0 / r))),
        upper_ratio_min=float(np.min((vsf + 1.0 / (TWO_PI * r)) / V)),
        sf_ratio_min=float(np.min(V / vsf)),
        sf_ratio_max=float(np.max(V / vsf)),
        exponential_regime=s <= math.pi * r,
    )
    logger.debug(f"OV 비교: y={y}, s={s}, C≈{report.closeness_constant:.4g}")
    return report


def gamma_perp_bound(params: OVParams) -> float:
    """|γ_⊥|² 상한 5s/(2π log δ₀⁻¹)"""
    return 5 * params.s / (TWO_PI * math.log(1.0 / params.delta0))


def _require_window(params: OVParams, radius: float) -> float:
    """ζ_s⁻¹(𝓑(radius)) 가 차트 안에 있는지 확인하고 |y| 최대값 반환"""
    t = params.s * radius**2
    if t > CHI_T_MAX:
        raise ChartDomainError(f"s·R² = {t:.4g} > log2/8π: ζ_s⁻¹(𝓑(R)) 가 |y| ≤ 1/2 를 벗어납니다")
    y_max = float(chi(t))
    if y_max > params.delta0:
        raise ChartDomainError(f"|y| 최대 {y_max:.4g} > δ₀ = {params.delta0}")
    return y_max


def gamma_sandwich(
    params: OVParams, R: float, n_radial: int = 24, n_angle: int = 16, n_u3: int = 8
) -> Tuple[float, float]:
    """ζ_s⁻¹(𝓑(3R)∖𝓑(σ_s)) 위 |γ_f|²/(V^sf|y|²) 의 (최소, 최대)"""
    _require_window(params, 3 * R)
    s = params.s
    radii = np.linspace(sigma_s(s), 3 * R, n_radial)
    angles = np.linspace(0.0, TWO_PI, n_angle, endpoint=False)
    rr, aa = np.meshgrid(radii, angles, indexing="ij")
    xi = np.stack([rr * np.cos(aa), rr * np.sin(aa)], axis=-1).reshape(-1, 2)
    y = np.asarray(zeta_inverse(xi, s)).ravel()
    u3 = np.linspace(0.0, s, n_u3, endpoint=False)
    Y, U3 = np.meshgrid(y, u3, indexing="ij")
    d1, d2, _, V = phi_gradient_arrays(Y.real.ravel(), Y.imag.ravel(), U3.ravel(), params)
    gamma_f = (d1**2 + d2**2) / V
    vsf = _vsf_arrays(Y.real.ravel(), Y.imag.ravel(), params)
    ratio = gamma_f / (vsf * np.abs(Y.ravel()) ** 2)
    return float(np.min(ratio)), float(np.max(ratio))


def measure_pushforward_bounds(
    params: OVParams, R: float, n_radial: int = 64, n_angle: int = 32
) -> Tuple[float, float]:
    """𝓑(R) 위 (ζ_s)_*ν_B/s 밀도의 (최소, 최대)"""
    from src.core.geometry import pushforward_density

    _require_window(params, R)
    radii = np.linspace(R / n_radial, R, n_radial)
    angles = np.linspace(0.0, TWO_PI, n_angle, endpoint=False)
    rr, aa = np.meshgrid(radii, angles, indexing="ij")
    xi = np.stack([rr * np.cos(aa), rr * np.sin(aa)], axis=-1).reshape(-1, 2)
    y = np.asarray(zeta_inverse(xi, params.s)).ravel()
    h = params.shift.value(y.real, y.imag)
    density = pushforward_density(xi, params.s, h)
    return float(np.min(density)), float(np.max(density))
