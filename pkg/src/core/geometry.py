"""기하 공통 모듈

파라미터 묶음, 차트 규약, 재척도 사상 ζ_s와 그 역함수 χ를 제공합니다.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Tuple

import numpy as np

TWO_PI = 2.0 * math.pi
CHI_T_MAX = math.log(2.0) / (8.0 * math.pi)
CHI_ITERATIONS = 80


class GeometryError(Exception):
    """기하 모듈 에러"""

    pass


class DomainError(GeometryError, ValueError):
    """정의역 밖 입력 에러"""

    pass


class ParameterError(GeometryError, ValueError):
    """파라미터 불변식 위반 에러"""

    pass


def wrap_angle(theta):
    """각도를 [0, 2π)로 정규화"""
    wrapped = np.mod(theta, TWO_PI)
    # mod 결과가 부동소수 반올림으로 2π가 되는 경우
    wrapped = np.where(wrapped >= TWO_PI, 0.0, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class ModelParams:
    """모델 파라미터 묶음

    s: 붕괴 파라미터 (섬유 면적), k: 전양자화 거듭제곱, m: 엄격 레벨,
    delta0: OV 차트 반지름, trunc_n: 격자합 절단, tol: 수치 허용오차
    """

    s: float
    k: int = 1
    m: int = 1
    delta0: float = 0.5
    trunc_n: int = 8
    tol: float = 1e-10

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not (self.s > 0 and math.isfinite(self.s)):
            raise ParameterError(f"s는 양수여야 합니다: {self.s}")
        if int(self.k) != self.k or self.k < 1:
            raise ParameterError(f"k는 양의 정수여야 합니다: {self.k}")
        if int(self.m) != self.m or self.m < 1:
            raise ParameterError(f"m은 양의 정수여야 합니다: {self.m}")
        if not (0 < self.delta0 <= 0.5):
            raise ParameterError(f"delta0는 (0, 1/2] 범위여야 합니다: {self.delta0}")
        if int(self.trunc_n) != self.trunc_n or self.trunc_n < 2:
            raise ParameterError(f"trunc_n은 2 이상 정수여야 합니다: {self.trunc_n}")
        if not self.tol > 0:
            raise ParameterError(f"tol은 양수여야 합니다: {self.tol}")

    def replace(self, **changes) -> "ModelParams":
        data = self.to_dict()
        data.update(changes)
        return ModelParams.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelParams":
        return cls(
            s=float(data["s"]),
            k=int(data.get("k", 1)),
            m=int(data.get("m", 1)),
            delta0=float(data.get("delta0", 0.5)),
            trunc_n=int(data.get("trunc_n", 8)),
            tol=float(data.get("tol", 1e-10)),
        )


@dataclass(frozen=True)
class BaseChart:
    """복소 기저 좌표 y = u₁ + √−1 u₂"""

    y: complex

    @classmethod
    def from_complex(cls, y: complex) -> "BaseChart":
        return cls(complex(y))

    @classmethod
    def from_polar(cls, r: float, theta: float) -> "BaseChart":
        if r < 0:
            raise DomainError(f"반지름은 음수일 수 없습니다: {r}")
        return cls(complex(r * math.cos(theta), r * math.sin(theta)))

    @property
    def u1(self) -> float:
        return self.y.real

    @property
    def u2(self) -> float:
        return self.y.imag

    @property
    def r(self) -> float:
        return abs(self.y)

    @property
    def theta(self) -> float:
        return wrap_angle(math.atan2(self.y.imag, self.y.real))

    @property
    def polar(self) -> Tuple[float, float]:
        return self.r, self.theta

    def to_complex(self) -> complex:
        return self.y


@dataclass(frozen=True)
class LimitPoint:
    """극한 공간 S¹×ℝ²의 점 (t, ξ)"""

    t: float
    xi: Tuple[float, float] = field(default=(0.0, 0.0))

    def __post_init__(self):
        object.__setattr__(self, "t", wrap_angle(float(self.t)))
        object.__setattr__(self, "xi", (float(self.xi[0]), float(self.xi[1])))

    def rotate(self, tau: float) -> "LimitPoint":
        """S¹ 작용 e^{iτ}"""
        return LimitPoint(self.t + tau, self.xi)

    @property
    def norm(self) -> float:
        return math.hypot(*self.xi)


def tau_forward(tau):
    """τ ↦ τ² log τ⁻¹ / 2π (τ=0에서 0)"""
    tau = np.asarray(tau, dtype=float)
    safe = np.where(tau > 0, tau, 1.0)
    out = np.where(tau > 0, safe**2 * np.log(1.0 / safe) / TWO_PI, 0.0)
    return float(out) if out.ndim == 0 else out


def chi(t, tol: float = 0.0):
    """τ² log τ⁻¹/2π = t 의 역함수 (구간 [0, 1/2])

    단조 증가 전방 사상에 대한 이분법 80회 (tol>0이면 폭이 tol 이하가 될 때 중단).
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > CHI_T_MAX * (1 + 1e-14)):
        raise DomainError(f"χ의 정의역 [0, log2/8π] 밖입니다: {t}")
    t_arr = np.minimum(t_arr, CHI_T_MAX)

    lo = np.zeros_like(t_arr)
    hi = np.full_like(t_arr, 0.5)
    for _ in range(CHI_ITERATIONS):
        mid = 0.5 * (lo + hi)
        below = tau_forward(mid) < t_arr
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if tol > 0 and np.all(hi - lo <= tol):
            break
    out = 0.5 * (lo + hi)
    out = np.where(t_arr == 0, 0.0, out)
    out = np.where(t_arr == CHI_T_MAX, 0.5, out)
    return float(out) if out.ndim == 0 else out


def chi_derivative(t):
    """χ'(t) = 2π / (2τ log τ⁻¹ − τ)"""
    tau = np.asarray(chi(t), dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(tau > 0, TWO_PI / (2 * tau * np.log(1.0 / np.where(tau > 0, tau, 1.0)) - tau), np.inf)
    return float(out) if out.ndim == 0 else out


def zeta_s(y, s: float) -> np.ndarray:
    """재척도 사상 ζ_s(y) = √(log|y|⁻¹/(2πs))·y  (ℝ² 벡터, ζ_s(0)=0)

    Args:
        y: 복소수 또는 복소 배열 (|y| < 1)
        s: 붕괴 파라미터

    Returns:
        마지막 축 길이 2인 배열
    """
    if s <= 0:
        raise DomainError(f"s는 양수여야 합니다: {s}")
    y_arr = np.asarray(y, dtype=complex)
    r = np.abs(y_arr)
    if np.any(r >= 1):
        raise DomainError("ζ_s는 |y| < 1에서만 정의됩니다")
    safe = np.where(r > 0, r, 0.5)
    scale = np.where(r > 0, np.sqrt(np.log(1.0 / safe) / (TWO_PI * s)), 0.0)
    z = scale * y_arr
    return np.stack([z.real, z.imag], axis=-1)


def zeta_inverse(xi, s: float):
    """ζ_s의 역사상: |y| = χ(s‖ξ‖²), arg y = arg ξ"""
    xi_arr = np.asarray(xi, dtype=float)
    norm = np.hypot(xi_arr[..., 0], xi_arr[..., 1])
    r = np.asarray(chi(s * norm**2))
    safe = np.where(norm > 0, norm, 1.0)
    y = np.where(norm > 0, r / safe, 0.0) * (xi_arr[..., 0] + 1j * xi_arr[..., 1])
    return complex(y) if y.ndim == 0 else y


def sigma_s(s: float) -> float:
    """내부 반지름 σ_s = √(s(log s⁻¹ + log π)/(2π³))"""
    return math.sqrt(s * (math.log(1.0 / s) + math.log(math.pi)) / (2 * math.pi**3))


def max_chart_radius(s: float) -> float:
    """|y| ≤ 1/2 안에 들어가는 최대 ‖ξ‖"""
    return math.sqrt(CHI_T_MAX / s)


def pushforward_density(xi, s: float, h=0.0):
    """(ζ_s)_*(ν_B/s)의 dξ 밀도 = (1 + 2πh/L)/(1 − 1/(2L)), L = log|y|⁻¹

    h는 ξ와 같은 모양의 배열 또는 스칼라 (ζ_s⁻¹(ξ)에서의 조화 이동 값).
    """
    y = zeta_inverse(xi, s)
    r = np.abs(np.asarray(y))
    L = np.log(1.0 / np.where(r > 0, r, 1e-300))
    out = (1.0 + TWO_PI * np.asarray(h) / L) / (1.0 - 1.0 / (2.0 * L))
    return float(out) if np.ndim(out) == 0 else out


def pullback_ratios(y, s: float, h=0.0) -> Tuple[np.ndarray, np.ndarray]:
    """V^sf|dy|² 와 ζ_s*dξ² 의 반지름/각 방향 비율"""
    r = np.abs(np.asarray(y, dtype=complex))
    L = np.log(1.0 / r)
    angular = 1.0 + TWO_PI * np.asarray(h) / L
    radial = angular / (1.0 - 1.0 / (2.0 * L)) ** 2
    return radial, angular


@dataclass(frozen=True)
class MetricSample:
    """차트 점에서의 4×4 대칭 계량과 섬유/기저 분해"""

    tensor: np.ndarray
    fiber: np.ndarray
    base: np.ndarray
    frame: str = ""

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.tensor))

    def is_positive_definite(self) -> bool:
        try:
            np.linalg.cholesky(self.tensor)
        except np.linalg.LinAlgError:
            return False
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tensor": self.tensor.tolist(),
            "fiber": self.fiber.tolist(),
            "base": self.base.tolist(),
            "frame": self.frame,
        }
