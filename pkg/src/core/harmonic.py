"""조화 이동 모듈

OV 퍼텐셜의 조화 이동 h와 그 켤레 ĥ (Re ĥ = h) 를 다룹니다.
영/상수/선형은 닫힌 식, 임의 함수는 수치 적분으로 처리합니다.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.integrate import quad

from src.core.logger import get_logger

logger = get_logger("harmonic")

BOUNDARY_SAMPLES = 256
FD_STEP = 1e-5


class HarmonicShiftError(Exception):
    """조화 이동 에러"""

    pass


@dataclass(frozen=True)
class HarmonicShift:
    """조화 함수 h(u₁, u₂) = c₀ + c₁u₁ + c₂u₂ 또는 임의 조화 함수"""

    kind: str = "zero"
    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    fn: Optional[Callable] = None

    @classmethod
    def zero(cls) -> "HarmonicShift":
        return cls()

    @classmethod
    def constant(cls, c0: float) -> "HarmonicShift":
        return cls(kind="linear", c0=float(c0))

    @classmethod
    def linear(cls, c0: float, c1: float, c2: float) -> "HarmonicShift":
        return cls(kind="linear", c0=float(c0), c1=float(c1), c2=float(c2))

    @classmethod
    def closure(cls, fn: Callable) -> "HarmonicShift":
        """임의 조화 함수 fn(u1, u2) (수치 켤레 사용)"""
        return cls(kind="closure", fn=fn)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or (
            self.kind == "linear" and self.c0 == 0 and self.c1 == 0 and self.c2 == 0
        )

    @property
    def is_closed_form(self) -> bool:
        return self.kind != "closure"

    # --- 값과 도함수 ---

    def value(self, u1, u2):
        if self.kind == "closure":
            out = np.vectorize(lambda a, b: float(self.fn(a, b)))(u1, u2)
            return float(out) if np.ndim(out) == 0 else out
        out = self.c0 + self.c1 * np.asarray(u1, dtype=float) + self.c2 * np.asarray(u2, dtype=float)
        return float(out) if np.ndim(out) == 0 else out

    def grad(self, u1, u2) -> Tuple:
        """(∂₁h, ∂₂h)"""
        if self.kind != "closure":
            shape = np.broadcast(np.asarray(u1), np.asarray(u2)).shape
            g1 = np.full(shape, self.c1)
            g2 = np.full(shape, self.c2)
            if shape == ():
                return float(g1), float(g2)
            return g1, g2
        g1 = (self.value(np.add(u1, FD_STEP), u2) - self.value(np.subtract(u1, FD_STEP), u2)) / (2 * FD_STEP)
        g2 = (self.value(u1, np.add(u2, FD_STEP)) - self.value(u1, np.subtract(u2, FD_STEP))) / (2 * FD_STEP)
        return g1, g2

    def conjugate(self, y: complex) -> float:
        """켤레 조화 함수 h̃ (h̃(0)=0)

        반지름 방향 코시-리만: h̃(y) = ∫₀¹ (u₂∂₁h(ty) − u₁∂₂h(ty)) dt
        """
        u1, u2 = float(np.real(y)), float(np.imag(y))
        if self.kind != "closure":
            return self.c1 * u2 - self.c2 * u1

        def integrand(t):
            g1, g2 = self.grad(t * u1, t * u2)
            return u2 * g1 - u1 * g2

        value, _ = quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12)
        return value

    def holomorphic(self, y):
        """ĥ(y) = h + √−1 h̃"""
        if self.kind != "closure":
            y_arr = np.asarray(y, dtype=complex)
            out = self.c0 + (self.c1 - 1j * self.c2) * y_arr
            return complex(out) if out.ndim == 0 else out
        y_arr = np.asarray(y, dtype=complex)
        out = np.vectorize(
            lambda z: complex(self.value(z.real, z.imag), self.conjugate(z)), otypes=[complex]
        )(y_arr)
        return complex(out) if out.ndim == 0 else out

    def holomorphic_derivative(self, y):
        """ĥ'(y) = ∂₁h − √−1 ∂₂h"""
        g1, g2 = self.grad(np.real(y), np.imag(y))
        out = np.asarray(g1) - 1j * np.asarray(g2)
        return complex(out) if out.ndim == 0 else out

    # --- 𝓗, ψ 에 쓰이는 적분 ---

    def integral_along_u2(self, u2):
        """∫₀^{u₂} h(0, t) dt"""
        if self.kind != "closure":
            u2 = np.asarray(u2, dtype=float)
            out = self.c0 * u2 + 0.5 * self.c2 * u2**2
            return float(out) if out.ndim == 0 else out
        return _vector_quad(lambda b: quad(lambda t: self.value(0.0, t), 0.0, b)[0], u2)

    def integral_t_d2h(self, u1, u2):
        """∫₀^{u₁} t ∂₂h(t, u₂) dt"""
        if self.kind != "closure":
            out = 0.5 * self.c2 * np.asarray(u1, dtype=float) ** 2 + 0.0 * np.asarray(u2, dtype=float)
            return float(out) if out.ndim == 0 else out

        def one(a, b):
            return quad(lambda t: t * self.grad(t, b)[1], 0.0, a)[0]

        out = np.vectorize(one)(u1, u2)
        return float(out) if np.ndim(out) == 0 else out

    def double_integral_along_u2(self, u2):
        """∫₀^{u₂} ∫₀^{t̃} h(0, t) dt dt̃"""
        if self.kind != "closure":
            u2 = np.asarray(u2, dtype=float)
            out = 0.5 * self.c0 * u2**2 + self.c2 * u2**3 / 6.0
            return float(out) if out.ndim == 0 else out
        # 적분 순서 교환: ∫₀^{u₂} (u₂ − t) h(0,t) dt
        return _vector_quad(lambda b: quad(lambda t: (b - t) * self.value(0.0, t), 0.0, b)[0], u2)

    # --- 검증 ---

    def boundary_max(self, delta0: float) -> float:
        """반지름 δ₀ 원 위 256점에서의 max|h|"""
        phi = np.linspace(0.0, 2 * math.pi, BOUNDARY_SAMPLES, endpoint=False)
        return float(np.max(np.abs(self.value(delta0 * np.cos(phi), delta0 * np.sin(phi)))))

    def validate(self, delta0: float) -> None:
        """max|h| ≤ log δ₀⁻¹/(10π) 확인

        Raises:
            HarmonicShiftError: 조건 위반 시
        """
        bound = math.log(1.0 / delta0) / (10 * math.pi)
        peak = self.boundary_max(delta0)
        if peak > bound:
            raise HarmonicShiftError(f"조화 이동이 너무 큽니다: max|h|={peak:.4g} > {bound:.4g}")
        logger.debug(f"조화 이동 검증 통과: max|h|={peak:.3g}, 한계={bound:.3g}")


def _vector_quad(one: Callable[[float], float], values):
    arr = np.asarray(values, dtype=float)
    out = np.vectorize(one)(arr)
    return float(out) if out.ndim == 0 else out
