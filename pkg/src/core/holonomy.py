"""홀로노미 / 보어-조머펠트 모듈

사이클 e₁, e₂ 위 전양자화 홀로노미 적분과 레벨 m, 엄격성을 포함한
보어-조머펠트(BS) 점 열거를 제공합니다.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from src.core.logger import get_logger
from src.core.ooguri_vafa import OVParams, calV, on_branch_cut, phi_gradient_arrays

logger = get_logger("holonomy")

TWO_PI = 2.0 * math.pi
SLICE_SAMPLES = 400
ISOLATION_TOL = 1e-8


class HolonomyError(Exception):
    """홀로노미 계산 에러"""

    pass


class BSIsolationError(HolonomyError):
    """BS 점 비고립 에러"""

    pass


@dataclass(frozen=True)
class HolonomyVector:
    """(∫_{e₁}γ, ∫_{e₂}γ) 와 게이지 오프셋"""

    x1: float
    x2: float
    offsets: Tuple[float, float] = (0.0, 0.0)

    @property
    def action(self) -> Tuple[float, float]:
        """작용 좌표 (x₁ + a₁, x₂ + a₂)"""
        return (self.x1 + self.offsets[0], self.x2 + self.offsets[1])


@dataclass
class BSPoint:
    """보어-조머펠트 점

    base: 차트 점 y (OV) 또는 작용 좌표 x₁ + i x₂ (준평탄)
    level: 홀로노미^m 이 자명한 최소 m
    strict: 열거한 k 에 대해 BS_k^str 원소인지 (level == k)
    """

    base: complex
    level: int
    strict: bool
    holonomy: Optional[HolonomyVector] = None
    on_branch_cut: bool = False
    singular: bool = False
    lattice: Optional[Tuple[int, int]] = None

    def to_row(self) -> Tuple[float, float, int, bool]:
        return (self.base.real, self.base.imag, self.level, self.strict)


@dataclass(frozen=True)
class BSWindow:
    """작용 좌표 직사각형 창 (경계 포함 여부 지정)"""

    lo: Tuple[float, float]
    hi: Tuple[float, float]
    closed_lo: bool = True
    closed_hi: bool = False

    @classmethod
    def open(cls, lo: Sequence[float], hi: Sequence[float]) -> "BSWindow":
        return cls(tuple(lo), tuple(hi), closed_lo=False, closed_hi=False)

    @classmethod
    def half_open(cls, lo: Sequence[float], hi: Sequence[float]) -> "BSWindow":
        return cls(tuple(lo), tuple(hi))

    def contains(self, x: float, axis: int, tol: float = 1e-12) -> bool:
        lo, hi = self.lo[axis], self.hi[axis]
        above = x >= lo - tol if self.closed_lo else x > lo + tol
        below = x <= hi + tol if self.closed_hi else x < hi - tol
        return above and below


def divisors(k: int) -> List[int]:
    return [m for m in range(1, k + 1) if k % m == 0]


# --- 홀로노미 ---


def holonomy_H(u1, u2, params: OVParams, branch: Optional[str] = None):
    """𝓗(u₁, u₂) = ∫_{e₂,y} γ_s

    −u₂ log|y|/2π + u₂/2π + ∫₀^{u₁} t∂₂h dt + ∫₀^{u₂} h(0,t) dt + u₁ Im𝒱(y),
    𝓗(0, 0) = 0.
    """
    u1_arr = np.atleast_1d(np.asarray(u1, dtype=float))
    u2_arr = np.atleast_1d(np.asarray(u2, dtype=float))
    u1_arr, u2_arr = np.broadcast_arrays(u1_arr, u2_arr)
    r = np.hypot(u1_arr, u2_arr)
    out = np.zeros_like(r)
    nz = r > 0
    if np.any(nz):
        a, b = u1_arr[nz], u2_arr[nz]
        shift = params.shift
        im_v = np.imag(np.asarray(calV(a + 1j * b, params, branch)))
        out[nz] = (
            -b * np.log(r[nz]) / TWO_PI
            + b / TWO_PI
            + np.asarray(shift.integral_t_d2h(a, b))
            + np.asarray(shift.integral_along_u2(b))
            + a * im_v
        )
    if np.ndim(u1) == 0 and np.ndim(u2) == 0:
        return float(out[0])
    return out


def holonomy_H_numeric(u1: float, u2: float, params: OVParams, n_u3: Optional[int] = None) -> float:
    """−∫₀^s ∂φ/∂u₂(u₁, u₂, t) dt + u₁Im𝒱 (주기 사다리꼴 규칙)

    피적분 함수가 u₃ 에 대해 매끄러운 주기 함수이므로 사다리꼴 규칙이 지수 수렴합니다.
    """
    r = math.hypot(u1, u2)
    if r == 0:
        return 0.0
    s = params.s
    if n_u3 is None:
        n_u3 = int(min(100_000, max(256, 4 * math.ceil(40.0 * s / (TWO_PI * r)))))
    t = np.linspace(0.0, s, n_u3, endpoint=False)
    _, d2, _, _ = phi_gradient_arrays(np.full(n_u3, u1), np.full(n_u3, u2), t, params)
    im_v = calV(complex(u1, u2), params).imag
    return float(-np.mean(d2) * s + u1 * im_v)


def holonomy_vector(
    u1: float, u2: float, params: OVParams, offsets: Tuple[float, float] = (0.0, 0.0)
) -> HolonomyVector:
    """OV 차트에서 (x₁, x₂) = (u₁, 𝓗(u₁, u₂))"""
    return HolonomyVector(x1=float(u1), x2=holonomy_H(float(u1), float(u2), params), offsets=tuple(offsets))


# --- 레벨 ---


def bs_level_for(x: Sequence[float], k: int, tol: float = 1e-9) -> Optional[int]:
    """m·x ∈ ℤ² 인 최소 약수 m | k (없으면 None)"""
    x = np.asarray(x, dtype=float)
    for m in divisors(k):
        scaled = m * x
        if np.all(np.abs(scaled - np.round(scaled)) <= tol * max(1, m)):
            return m
    return None


def _lattice_level(j1: int, j2: int, k: int) -> int:
    return k // math.gcd(k, math.gcd(j1, j2))


# --- 열거 ---


def bs_points_semiflat(
    window: BSWindow, k: int, offsets: Tuple[float, float] = (0.0, 0.0)
) -> List[BSPoint]:
    """((1/k)ℤ² − a) ∩ window 의 BS 점

    레벨은 정수 좌표 j 에 대해 k / gcd(k, j₁, j₂) 로 정확히 계산합니다.
    """
    if k < 1:
        raise HolonomyError(f"k는 1 이상이어야 합니다: {k}")
    a1, a2 = offsets
    ranges = []
    for axis, a in enumerate((a1, a2)):
        start = math.floor((window.lo[axis] + a) * k) - 1
        stop = math.ceil((window.hi[axis] + a) * k) + 1
        ranges.append([j for j in range(start, stop + 1) if window.contains(j / k - a, axis)])

    points = []
    for j1 in ranges[0]:
        for j2 in ranges[1]:
            level = _lattice_level(j1, j2, k)
            x = (j1 / k - a1, j2 / k - a2)
            points.append(
                BSPoint(
                    base=complex(*x),
                    level=level,
                    strict=level == k,
                    holonomy=HolonomyVector(x[0], x[1], (a1, a2)),
                    lattice=(j1, j2),
                )
            )
    logger.debug(f"준평탄 BS 열거: k={k}, {len(points)}개")
    return points


def _slice_roots(u1: float, span: float, target_offset: float, k: int, params: OVParams, tol: float) -> List[float]:
    """u₁ 고정 슬라이스에서 𝓗 + a₂ ∈ (1/k)ℤ 의 근"""
    t = np.linspace(-span, span, SLICE_SAMPLES + 2)[1:-1]
    values = np.asarray(holonomy_H(np.full_like(t, u1), t, params)) + target_offset
    scaled = values * k
    roots: List[float] = []
    for j in range(math.floor(scaled.min()), math.ceil(scaled.max()) + 1):
        g = scaled - j
        exact = np.flatnonzero(g == 0)
        roots.extend(float(t[i]) for i in exact)
        crossings = np.flatnonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)
        for i in crossings:

            def residual(v, j=j):
                return (holonomy_H(u1, v, params) + target_offset) * k - j

            root = brentq(residual, t[i], t[i + 1], xtol=tol * 1e-2, rtol=4 * np.finfo(float).eps)
            # 분지 절단선의 도약은 부호 변화만 만들고 근은 아님
            if abs(residual(root)) <= max(tol, 1e-9) * k:
                roots.append(float(root))
    return sorted(roots)


def bs_points_ov(
    k: int,
    offsets: Tuple[float, float],
    params: OVParams,
    tol: float = 1e-10,
) -> List[BSPoint]:
    """OV 차트 D(δ₀) 안의 BS_k 점

    u₁ + a₁ ∈ (1/k)ℤ 슬라이스마다 𝓗(u₁, ·) + a₂ ∈ (1/k)ℤ 를 1차원 근찾기로 풉니다.
    원점은 (a₁, a₂) ∈ (1/k)ℤ² 일 때만 포함됩니다.

    Raises:
        BSIsolationError: 서로 다른 두 근이 허용오차보다 가까운 경우
    """
    if k < 1:
        raise HolonomyError(f"k는 1 이상이어야 합니다: {k}")
    a1, a2 = offsets
    delta0 = params.delta0
    points: List[BSPoint] = []

    for j in range(math.floor((-delta0 + a1) * k), math.ceil((delta0 + a1) * k) + 1):
        u1 = j / k - a1
        if abs(u1) >= delta0:
            continue
        span = math.sqrt(delta0**2 - u1**2)
        roots = _slice_roots(u1, span, a2, k, params, tol)
        unique: List[float] = []
        for root in roots:
            if unique and abs(root - unique[-1]) <= 1e-12:
                continue
            if unique and abs(root - unique[-1]) < ISOLATION_TOL:
                raise BSIsolationError(f"고립되지 않은 BS 점: u₁={u1}, u₂≈{root}")
            unique.append(root)

        for u2 in unique:
            if u1 == 0 and abs(u2) < 1e-13:
                u2 = 0.0
            y = complex(u1, u2)
            hol = holonomy_vector(u1, u2, params, offsets)
            singular = y == 0
            level = bs_level_for(hol.action, k, tol=max(tol, 1e-9))
            if level is None:
                logger.warning(f"레벨 판정 실패: y={y}, action={hol.action}")
                continue
            points.append(
                BSPoint(
                    base=y,
                    level=level,
                    strict=level == k,
                    holonomy=hol,
                    on_branch_cut=(not singular) and on_branch_cut(y, params.branch),
                    singular=singular,
                )
            )

    flagged = sum(p.on_branch_cut for p in points)
    if flagged:
        logger.warning(f"분지 절단선 위 BS 점 {flagged}개 (보고서에 표시)")
    logger.info(f"OV BS 열거: k={k}, a={offsets}, {len(points)}개")
    return points


def bs_level_decompose(points: Sequence[BSPoint], k: int) -> Dict[int, List[BSPoint]]:
    """m | k 별 BS_m^str 분할"""
    table: Dict[int, List[BSPoint]] = {m: [] for m in divisors(k)}
    for point in points:
        if point.level not in table:
            raise HolonomyError(f"레벨 {point.level} 이 k={k} 를 나누지 않습니다")
        table[point.level].append(point)
    return table


def bs_table_rows(points: Sequence[BSPoint]) -> List[Tuple[float, float, int, bool]]:
    """CSV 행 (y_re, y_im, level, strict)"""
    return [p.to_row() for p in points]


@dataclass
class BSSummary:
    """레벨별 개수 요약"""

    k: int
    counts: Dict[int, int] = field(default_factory=dict)

    @classmethod
    def from_points(cls, points: Sequence[BSPoint], k: int) -> "BSSummary":
        return cls(k=k, counts={m: len(v) for m, v in bs_level_decompose(points, k).items()})
