"""자기 스펙트럼 풀이 모듈

국소 모델 위에서 Δ^{ρ_k}_ĝ (= 2Δ_{k,∂̄} + k² + 2k) 를 섬유 푸리에 모드별로
축약하여 이산화하고, 최저 스펙트럼, 영점 근처 모드 개수, 란다우형 하한을 계산합니다.

작용-각 좌표 (x, θ), θ ∈ ℝ²/2πℤ², ω = Σdx∧dθ, 접속 ∇ = d − √−1 Σx dθ.
모드 l 의 축약 연산자는 −∇·(G⁻¹∇) + k² + wᵀGw, w = k(x + a) + l 입니다.
기저는 구조 삼각분할 위 P1 유한요소 (질량 집중) 로 이산화합니다.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from src.core.eigensolver import EigenSolverError, lowest_eigs
from src.core.geometry import CHI_T_MAX, ModelParams, chi, zeta_s
from src.core.harmonic import HarmonicShift
from src.core.holonomy import bs_points_ov, holonomy_H
from src.core.limit_spectra import SpectrumResult
from src.core.logger import get_logger
from src.core.ooguri_vafa import OVParams, calV
from src.core.semiflat import LatticeFamily, action_base_metric, sf_fiber_metric

logger = get_logger("magnetic")

TWO_PI = 2.0 * math.pi
FOUR_PI_SQ = 4.0 * math.pi**2
MIN_POINTS_PER_WELL = 8
MODE_FACTOR = 10.0
MAX_MODE_CUTOFF = 24
KINDS = ("semi-flat-abelian", "semi-flat-general", "ooguri-vafa-window")

Mode = Tuple[int, int]


class MagneticSolverError(Exception):
    """자기 스펙트럼 풀이 에러"""

    pass


class GridResolutionError(MagneticSolverError, ValueError):
    """우물 해상도 부족 에러"""

    pass


# --- 격자 ---


@dataclass
class GridSpec:
    """구조 격자: 원점, 크기, 간격, 주기성, 활성 노드 (비활성 = 디리클레)"""

    origin: Tuple[float, float]
    shape: Tuple[int, int]
    spacing: Tuple[float, float]
    periodic: Tuple[bool, bool] = (False, False)
    active: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.active is None:
            self.active = np.ones(self.shape, dtype=bool)

    def coords(self) -> Tuple[np.ndarray, np.ndarray]:
        nx, ny = self.shape
        hx, hy = self.spacing
        X, Y = np.meshgrid(self.origin[0] + hx * np.arange(nx), self.origin[1] + hy * np.arange(ny), indexing="ij")
        return X, Y

    def active_coords(self) -> Tuple[np.ndarray, np.ndarray]:
        X, Y = self.coords()
        return X[self.active], Y[self.active]

    @property
    def n_active(self) -> int:
        return int(np.count_nonzero(self.active))

    @property
    def h(self) -> float:
        return max(self.spacing)

    def restricted(self, keep: np.ndarray) -> "GridSpec":
        return replace(self, active=self.active & keep)


def _periodic_grid(lo: Sequence[float], h_target: float) -> GridSpec:
    n = int(math.ceil(1.0 / h_target))
    h = 1.0 / n
    return GridSpec(origin=(float(lo[0]), float(lo[1])), shape=(n, n), spacing=(h, h), periodic=(True, True))


def _dirichlet_grid(center: Sequence[float], half_width: float, h_target: float) -> GridSpec:
    n = int(math.ceil(2.0 * half_width / h_target))
    h = 2.0 * half_width / n
    grid = GridSpec(
        origin=(center[0] - half_width, center[1] - half_width), shape=(n + 1, n + 1), spacing=(h, h)
    )
    grid.active[0, :] = grid.active[-1, :] = False
    grid.active[:, 0] = grid.active[:, -1] = False
    return grid


# --- 국소 모델 ---


@dataclass
class LocalModel:
    """모드 축약 연산자를 정의하는 국소 모델

    coefficient(X, Y) → (..., 2, 2) 확산 텐서, reaction(X, Y, l) → 반응항,
    weight(X, Y) → 측도 밀도. 일반화 문제 S + diag(mQ) = λ diag(mρ).
    """

    kind: str
    params: ModelParams
    grid: GridSpec
    modes: List[Mode]
    offsets: Tuple[float, float]
    coefficient: Callable
    reaction: Callable
    weight: Callable
    fiber_metric: Callable
    wells: List[Tuple[float, float]]
    well_width: float
    points_per_well: float
    boundary: str = "periodic"
    metric_distance: Optional[Callable] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MagneticSolverError(f"알 수 없는 모델 종류: {self.kind}")

    @property
    def k(self) -> int:
        return self.params.k

    @property
    def mode_center(self) -> Mode:
        return (-int(round(self.k * self.offsets[0])), -int(round(self.k * self.offsets[1])))

    def with_mode_cutoff(self, l_max: int) -> "LocalModel":
        c1, c2 = self.mode_center
        modes = [(c1 + i, c2 + j) for i in range(-l_max, l_max + 1) for j in range(-l_max, l_max + 1)]
        return replace(self, modes=modes, meta={**self.meta, "mode_cutoff": l_max})

    def restricted(self, keep: np.ndarray) -> "LocalModel":
        return replace(self, grid=self.grid.restricted(keep))

    def potential(self, mode: Mode, X=None, Y=None) -> np.ndarray:
        """유효 퍼텐셜 Q_l/ρ (레일리 몫의 하한)"""
        if X is None:
            X, Y = self.grid.active_coords()
        return np.asarray(self.reaction(X, Y, mode)) / np.asarray(self.weight(X, Y))

    def potential_minimum(self, mode: Mode) -> float:
        values = self.potential(mode)
        return float(np.min(values)) if values.size else math.inf

    def check_resolution(self) -> None:
        """격자 간격이 우물 폭의 1/8 이하인지 확인"""
        limit = self.well_width / MIN_POINTS_PER_WELL
        if self.grid.h > limit * (1 + 1e-9):
            raise GridResolutionError(
                f"격자 간격 {self.grid.h:.4g} > 우물 폭/{MIN_POINTS_PER_WELL} = {limit:.4g}"
            )


def _flat_tensor(value: float) -> Callable:
    def coefficient(X, Y):
        out = np.zeros(np.shape(X) + (2, 2))
        out[..., 0, 0] = out[..., 1, 1] = value
        return out

    return coefficient


def _abelian_parts(params: ModelParams, offsets: Tuple[float, float]):
    s, k = params.s, params.k
    g = FOUR_PI_SQ / s
    a1, a2 = offsets

    def reaction(X, Y, mode):
        w1 = k * (X + a1) + mode[0]
        w2 = k * (Y + a2) + mode[1]
        return k * k + g * (w1**2 + w2**2)

    def weight(X, Y):
        return np.ones_like(X)

    def fiber(X, Y):
        return _flat_tensor(1.0 / g)(X, Y)

    def distance(X, Y, well):
        return math.sqrt(g) * np.hypot(X - well[0], Y - well[1])

    return _flat_tensor(1.0 / g), reaction, weight, fiber, distance


def _lattice_wells(lo, hi, k: int, offsets) -> List[Tuple[float, float]]:
    """(1/k)ℤ² − a 중 [lo, hi) 안의 점"""
    axes = []
    for axis in range(2):
        a = offsets[axis]
        start = math.floor((lo[axis] + a) * k) - 1
        stop = math.ceil((hi[axis] + a) * k) + 1
        axes.append([j / k - a for j in range(start, stop + 1) if lo[axis] <= j / k - a < hi[axis]])
    return [(x, y) for x in axes[0] for y in axes[1]]


def abelian_well_width(params: ModelParams) -> float:
    """ℓ = √(s/k)/2π"""
    return math.sqrt(params.s / params.k) / TWO_PI


def abelian_cell(
    params: ModelParams,
    offsets: Tuple[float, float] = (0.0, 0.0),
    points_per_well: float = MIN_POINTS_PER_WELL,
) -> LocalModel:
    """평탄 아벨 모델의 주기 셀 [−a − 1/2k, 1 − a − 1/2k)²

    우물 (1/k)ℤ² − a 는 셀 경계에서 1/2k 이상 떨어져 있으며, 모드는 서로 분리됩니다.
    """
    k = params.k
    lo = (-offsets[0] - 0.5 / k, -offsets[1] - 0.5 / k)
    ell = abelian_well_width(params)
    grid = _periodic_grid(lo, ell / points_per_well)
    coefficient, reaction, weight, fiber, distance = _abelian_parts(params, offsets)
    model = LocalModel(
        kind="semi-flat-abelian",
        params=params,
        grid=grid,
        modes=[],
        offsets=tuple(offsets),
        coefficient=coefficient,
        reaction=reaction,
        weight=weight,
        fiber_metric=fiber,
        wells=_lattice_wells(lo, (lo[0] + 1, lo[1] + 1), k, offsets),
        well_width=ell,
        points_per_well=points_per_well,
        boundary="periodic",
        metric_distance=distance,
    )
    return choose_mode_cutoff(model)


def abelian_window(
    params: ModelParams,
    center: Tuple[float, float] = (0.0, 0.0),
    half_width: Optional[float] = None,
    offsets: Tuple[float, float] = (0.0, 0.0),
    points_per_well: float = MIN_POINTS_PER_WELL,
    metric_half_width: Optional[float] = None,
) -> LocalModel:
    """평탄 아벨 모델의 디리클레 창 (중심, 반폭)

    metric_half_width 를 주면 계량 길이 (2π/√s)|Δx| 로 반폭을 정합니다.
    """
    if metric_half_width is not None:
        half_width = metric_half_width * math.sqrt(params.s) / TWO_PI
    if half_width is None or half_width <= 0:
        raise MagneticSolverError("창 반폭은 양수여야 합니다")
    ell = abelian_well_width(params)
    grid = _dirichlet_grid(center, half_width, ell / points_per_well)
    coefficient, reaction, weight, fiber, distance = _abelian_parts(params, offsets)
    lo = (center[0] - half_width, center[1] - half_width)
    hi = (center[0] + half_width, center[1] + half_width)
    model = LocalModel(
        kind="semi-flat-abelian",
        params=params,
        grid=grid,
        modes=[],
        offsets=tuple(offsets),
        coefficient=coefficient,
        reaction=reaction,
        weight=weight,
        fiber_metric=fiber,
        wells=_lattice_wells(lo, hi, params.k, offsets),
        well_width=ell,
        points_per_well=points_per_well,
        boundary="dirichlet",
        metric_distance=distance,
        meta={"center": tuple(center), "half_width": half_width},
    )
    return choose_mode_cutoff(model)


def general(
    params: ModelParams,
    lattice: LatticeFamily,
    chart: complex = 0.5j,
    center: Tuple[float, float] = (0.0, 0.0),
    half_width: float = 0.25,
    chart_scale: float = 0.0,
    offsets: Tuple[float, float] = (0.0, 0.0),
    points_per_well: float = MIN_POINTS_PER_WELL,
) -> LocalModel:
    """일반 준평탄 모델의 디리클레 창

    기저 계량 G(x) 는 y(x) = chart + chart_scale·((x₁ − c₁) + √−1(x₂ − c₂)) 에서의
    섬유 계량의 역행렬입니다 (chart_scale = 0 이면 상수 계량).
    """
    s, k = params.s, params.k
    a1, a2 = offsets

    def y_of(X, Y):
        return chart + chart_scale * ((np.asarray(X) - center[0]) + 1j * (np.asarray(Y) - center[1]))

    constant = sf_fiber_metric(complex(chart), lattice, s) if chart_scale == 0 else None
    memo: Dict[Tuple[bytes, bytes], np.ndarray] = {}

    def fiber(X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if constant is not None:
            return np.broadcast_to(constant, X.shape + (2, 2)).copy()
        key = (X.tobytes(), Y.tobytes())
        if key not in memo:
            yy = np.atleast_1d(y_of(X, Y))
            flat = np.array([sf_fiber_metric(complex(v), lattice, s) for v in yy.ravel()])
            memo.clear()
            memo[key] = flat.reshape(X.shape + (2, 2))
        return memo[key]

    def base(X, Y):
        return np.linalg.inv(fiber(X, Y))

    def coefficient(X, Y):
        return fiber(X, Y)

    def reaction(X, Y, mode):
        w = np.stack([k * (np.asarray(X) + a1) + mode[0], k * (np.asarray(Y) + a2) + mode[1]], axis=-1)
        return k * k + np.einsum("...i,...ij,...j->...", w, base(X, Y), w)

    def weight(X, Y):
        return np.ones_like(np.asarray(X, dtype=float))

    G_center = action_base_metric(sf_fiber_metric(complex(chart), lattice, s))

    def distance(X, Y, well):
        d = np.stack([np.asarray(X) - well[0], np.asarray(Y) - well[1]], axis=-1)
        G_well = action_base_metric(sf_fiber_metric(complex(y_of(well[0], well[1])), lattice, s))
        return np.sqrt(np.einsum("...i,ij,...j->...", d, G_well, d))

    ell = 1.0 / math.sqrt(k * float(np.linalg.eigvalsh(G_center)[-1]))
    grid = _dirichlet_grid(center, half_width, ell / points_per_well)
    lo = (center[0] - half_width, center[1] - half_width)
    hi = (center[0] + half_width, center[1] + half_width)
    model = LocalModel(
        kind="semi-flat-general",
        params=params,
        grid=grid,
        modes=[],
        offsets=tuple(offsets),
        coefficient=coefficient,
        reaction=reaction,
        weight=weight,
        fiber_metric=fiber,
        wells=_lattice_wells(lo, hi, k, offsets),
        well_width=ell,
        points_per_well=points_per_well,
        boundary="dirichlet",
        metric_distance=distance,
        meta={"lattice": lattice.name, "chart": complex(chart)},
    )
    return choose_mode_cutoff(model)


def ov_well_width(ovp: OVParams, k: int, radius: Optional[float] = None) -> float:
    """ℓ_y = √(s/(2πk Re𝒱)), 원점 우물은 Re𝒱(ℓ_y) 고정점"""
    if radius is not None and radius > 0:
        re_v = calV(complex(radius, 0.0), ovp, "e2").real
        return math.sqrt(ovp.s / (TWO_PI * k * re_v))
    ell = math.sqrt(ovp.s / k)
    for _ in range(50):
        re_v = max(calV(complex(ell, 0.0), ovp, "e2").real, 1e-3)
        ell = math.sqrt(ovp.s / (TWO_PI * k * re_v))
    return ell


def ov_window(
    params: ModelParams,
    R: float,
    offsets: Tuple[float, float] = (0.0, 0.0),
    shift: Optional[HarmonicShift] = None,
    points_per_well: float = MIN_POINTS_PER_WELL,
) -> LocalModel:
    """OV 창 ζ_s⁻¹(𝓑(3R)) 위 디리클레 모델 (기저 좌표 y)

    양립 쌍 (2π g_OV, du₁∧dθ₁ + d𝓗∧dθ₂), x = (u₁ + a₁, 𝓗 + a₂).
    연산자: −(s/2π)∇²φ + [k²Re𝒱 + (2π/s)P_l]φ = λ Re𝒱 φ,
    P_l = (w₂ − Im𝒱 w₁)² + (Re𝒱 w₁)².
    """
    s, k = params.s, params.k
    t = s * (3 * R) ** 2
    if t > CHI_T_MAX:
        raise GridResolutionError(f"s·(3R)² = {t:.4g} > log2/8π: 창이 |y| ≤ 1/2 를 벗어납니다")
    ovp = OVParams.from_model(params, shift=shift, branch="e2")
    radius = float(chi(t))
    if radius > ovp.delta0:
        raise GridResolutionError(f"창 반지름 {radius:.4g} > δ₀ = {ovp.delta0}")
    a1, a2 = offsets
    if abs(k * a1 - round(k * a1)) > 1e-12:
        logger.warning(f"k·a₁ = {k * a1} ∉ ℤ: 창 안에 우물이 없습니다")

    def calv(X, Y):
        return np.asarray(calV(np.asarray(X) + 1j * np.asarray(Y), ovp, "e2"))

    def reaction(X, Y, mode):
        v = calv(X, Y)
        w1 = k * (np.asarray(X) + a1) + mode[0]
        w2 = k * (np.asarray(holonomy_H(X, Y, ovp, "e2")) + a2) + mode[1]
        P = (w2 - v.imag * w1) ** 2 + (v.real * w1) ** 2
        return k * k * v.real + (TWO_PI / s) * P

    def weight(X, Y):
        return calv(X, Y).real

    def fiber(X, Y):
        v = calv(X, Y)
        out = np.empty(np.shape(X) + (2, 2))
        scale = s / (TWO_PI * v.real)
        out[..., 0, 0] = scale
        out[..., 0, 1] = out[..., 1, 0] = scale * v.imag
        out[..., 1, 1] = scale * np.abs(v) ** 2
        return out

    def distance(X, Y, well):
        xi = zeta_s(np.asarray(X) + 1j * np.asarray(Y), s)
        xi_well = zeta_s(complex(*well), s)
        return np.linalg.norm(xi - xi_well, axis=-1)

    points = [p for p in bs_points_ov(k, offsets, ovp) if abs(p.base) < radius]
    wells = [(p.base.real, p.base.imag) for p in points]
    if wells:
        ell = min(ov_well_width(ovp, k, abs(complex(*w)) if w != (0.0, 0.0) else None) for w in wells)
    else:
        ell = ov_well_width(ovp, k, radius / 2)

    h_target = ell / points_per_well
    n = 2 * int(math.ceil(radius / h_target)) + 2
    h = 2 * radius / (n - 2)
    # 셀 중심 격자: 원점은 노드가 아님
    origin = -(n / 2 - 0.5) * h
    grid = GridSpec(origin=(origin, origin), shape=(n, n), spacing=(h, h))
    X, Y = grid.coords()
    grid.active = np.hypot(X, Y) < radius

    model = LocalModel(
        kind="ooguri-vafa-window",
        params=params,
        grid=grid,
        modes=[],
        offsets=tuple(offsets),
        coefficient=_flat_tensor(s / TWO_PI),
        reaction=reaction,
        weight=weight,
        fiber_metric=fiber,
        wells=wells,
        well_width=ell,
        points_per_well=points_per_well,
        boundary="dirichlet",
        metric_distance=distance,
        meta={"R": R, "radius": radius, "n_bs": len(wells)},
    )
    return choose_mode_cutoff(model)


# --- 모드 절단 ---


def _estimate_top(k: int, n_eigs: int) -> float:
    """보고할 최대 고윳값 추정 k² + 2k(n + 1)"""
    level = int(math.ceil(math.sqrt(max(n_eigs, 1)))) + 1
    return k * k + 2.0 * k * (level + 1)


def choose_mode_cutoff(model: LocalModel, n_eigs: int = 6, factor: float = MODE_FACTOR) -> LocalModel:
    """남긴 모드 밖 첫 껍질의 퍼텐셜 최솟값이 factor × 최대 보고 고윳값을 넘는 L_max"""
    target = factor * _estimate_top(model.k, n_eigs)
    c1, c2 = model.mode_center
    for l_max in range(0, MAX_MODE_CUTOFF):
        shell = l_max + 1
        ring = [
            (c1 + i, c2 + j)
            for i in range(-shell, shell + 1)
            for j in range(-shell, shell + 1)
            if max(abs(i), abs(j)) == shell
        ]
        if min(model.potential_minimum(mode) for mode in ring) > target:
            logger.debug(f"모드 절단 L_max={l_max} (목표 {target:.3g})")
            return model.with_mode_cutoff(l_max)
    logger.warning(f"모드 절단이 {MAX_MODE_CUTOFF}에서 멈췄습니다")
    return model.with_mode_cutoff(MAX_MODE_CUTOFF)


# --- 조립 ---


_LOWER_GRAD = np.array([[-1.0, 0.0], [1.0, -1.0], [0.0, 1.0]])
_UPPER_GRAD = np.array([[0.0, -1.0], [1.0, 0.0], [-1.0, 1.0]])


def _assemble_base(model: LocalModel):
    """확산 항 강성 행렬 S 와 집중 질량 m (전체 노드)"""
    grid = model.grid
    nx, ny = grid.shape
    hx, hy = grid.spacing
    cx = nx if grid.periodic[0] else nx - 1
    cy = ny if grid.periodic[1] else ny - 1
    I, J = np.meshgrid(np.arange(cx), np.arange(cy), indexing="ij")
    I, J = I.ravel(), J.ravel()

    def node(i, j):
        return (i % nx) * ny + (j % ny)

    p00, p10, p11, p01 = node(I, J), node(I + 1, J), node(I + 1, J + 1), node(I, J + 1)
    area = 0.5 * hx * hy
    scale = np.array([1.0 / hx, 1.0 / hy])
    rows, cols, vals = [], [], []
    mass = np.zeros(nx * ny)
    for grads, verts, (ox, oy) in (
        (_LOWER_GRAD * scale, (p00, p10, p11), (2 / 3, 1 / 3)),
        (_UPPER_GRAD * scale, (p00, p11, p01), (1 / 3, 2 / 3)),
    ):
        Xc = grid.origin[0] + (I + ox) * hx
        Yc = grid.origin[1] + (J + oy) * hy
        M = np.asarray(model.coefficient(Xc, Yc))
        local = area * np.einsum("ad,cde,be->cab", grads, M, grads)
        local = 0.5 * (local + local.transpose(0, 2, 1))
        tri = np.stack(verts, axis=1)
        rows.append(np.repeat(tri, 3, axis=1).ravel())
        cols.append(np.tile(tri, (1, 3)).ravel())
        vals.append(local.ravel())
        for v in verts:
            np.add.at(mass, v, area / 3.0)
    S = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nx * ny, nx * ny)
    )
    return S, mass


@dataclass
class ModeBlock:
    """모드 l 의 표준형 대칭 행렬 D^{−1/2}(S + diag(mQ))D^{−1/2}"""

    mode: Mode
    matrix: Any
    potential_min: float

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


@dataclass
class ReducedOperator:
    """모드별 블록의 직합 (블록은 필요할 때 조립)"""

    model: LocalModel
    stiffness: Any
    mass: np.ndarray
    weight: np.ndarray
    coords: Tuple[np.ndarray, np.ndarray]
    blocks: Dict[Mode, ModeBlock] = field(default_factory=dict)

    @property
    def modes(self) -> List[Mode]:
        return list(self.model.modes)

    @property
    def block_dimension(self) -> int:
        return self.stiffness.shape[0]

    @property
    def dimension(self) -> int:
        return self.block_dimension * len(self.model.modes)

    def potential_minimum(self, mode: Mode) -> float:
        X, Y = self.coords
        return float(np.min(self.model.potential(mode, X, Y)))

    def block(self, mode: Mode) -> ModeBlock:
        if mode not in self.blocks:
            X, Y = self.coords
            Q = np.asarray(self.model.reaction(X, Y, mode))
            A = self.stiffness + sp.diags(self.mass * Q)
            d = 1.0 / np.sqrt(self.mass * self.weight)
            D = sp.diags(d)
            A = (D @ A @ D).tocsr()
            A = ((A + A.T) * 0.5).tocsr()
            self.blocks[mode] = ModeBlock(mode=mode, matrix=A, potential_min=float(np.min(Q / self.weight)))
        return self.blocks[mode]

    def full_matrix(self):
        """모든 모드 블록의 블록 대각 행렬"""
        return sp.block_diag([self.block(mode).matrix for mode in self.modes], format="csr")

    def metadata(self) -> Dict[str, Any]:
        return {
            "s": self.model.params.s,
            "k": self.model.k,
            "model": self.model.kind,
            "modes": len(self.model.modes),
            "block_dimension": self.block_dimension,
        }


def assemble_reduced_laplacian(model: LocalModel) -> ReducedOperator:
    """모드 축약 Δ^{ρ_k} 조립

    Raises:
        GridResolutionError: 우물 폭당 격자점이 8 미만
    """
    model.check_resolution()
    if not model.modes:
        model = choose_mode_cutoff(model)
    S, mass = _assemble_base(model)
    active = np.flatnonzero(model.grid.active.ravel())
    if active.size == 0:
        raise MagneticSolverError("활성 노드가 없습니다")
    S = S[active][:, active]
    S = ((S + S.T) * 0.5).tocsr()
    X, Y = model.grid.active_coords()
    weight = np.asarray(model.weight(X, Y), dtype=float)
    if np.any(weight <= 0):
        raise MagneticSolverError("측도 밀도가 양수가 아닙니다")
    op = ReducedOperator(model=model, stiffness=S, mass=mass[active], weight=weight, coords=(X, Y))
    logger.info(
        f"축약 연산자 조립: {model.kind}, 노드 {S.shape[0]}, 모드 {len(model.modes)}, h={model.grid.h:.3g}"
    )
    return op


# --- 스펙트럼 ---


def solve_modes(op: ReducedOperator, n_eigs: int, tol: float = 1e-9) -> SpectrumResult:
    """퍼텐셜 최솟값 순으로 블록을 풀고, 다음 블록의 하한이 현재 n번째 고윳값을 넘으면 중단"""
    order = sorted(op.modes, key=op.potential_minimum)
    values: List[float] = []
    residuals: List[float] = []
    solved = 0
    for mode in order:
        bound = op.potential_minimum(mode)
        if len(values) >= n_eigs and bound > sorted(values)[n_eigs - 1]:
            break
        block = op.block(mode)
        count = min(n_eigs, (block.dimension - 1) // 10)
        if count < 1:
            raise MagneticSolverError(f"블록 차원 {block.dimension} 이 너무 작습니다")
        try:
            result = lowest_eigs(block.matrix, count, tol=tol)
        except EigenSolverError:
            logger.error(f"모드 {mode} 고윳값 풀이 실패")
            raise
        values.extend(result.values.tolist())
        residuals.extend(result.residuals.tolist())
        solved += 1
    idx = np.argsort(values)[:n_eigs]
    logger.debug(f"모드 블록 {solved}/{len(order)}개 풀이")
    return SpectrumResult(
        np.asarray(values)[idx],
        np.asarray(residuals)[idx],
        meta={**op.metadata(), "blocks_solved": solved},
    )


def laplacian_spectrum(model: LocalModel, n_eigs: int = 6, tol: float = 1e-9) -> SpectrumResult:
    """Δ^{ρ_k}_ĝ 최저 고윳값"""
    return solve_modes(assemble_reduced_laplacian(model), n_eigs, tol)


def dbar_spectrum(model: LocalModel, n_eigs: int = 6, tol: float = 1e-9) -> SpectrumResult:
    """Δ_{k,∂̄} = (Δ^{ρ_k} − k² − 2k)/2 스펙트럼, 영점 근처 = #{λ < k/2}"""
    k = model.k
    full = laplacian_spectrum(model, n_eigs, tol)
    values = (full.eigenvalues - k * k - 2 * k) / 2.0
    result = SpectrumResult(values, full.residuals / 2.0, threshold=k / 2.0, meta=dict(full.meta))
    result.meta["near_zero"] = result.count_below()
    logger.info(f"∂̄ 스펙트럼: k={k}, 영점 근처 {result.meta['near_zero']}개, 최저 {values[:3]}")
    return result


def near_zero_count(model: LocalModel, n_eigs: Optional[int] = None, tol: float = 1e-9) -> int:
    """Δ_{k,∂̄} 의 k/2 미만 고윳값 개수 (우물 수 + 여유만큼 요청)"""
    n_eigs = n_eigs or len(model.wells) + 3
    return dbar_spectrum(model, n_eigs, tol).count_below()


# --- 하한 ---


@dataclass
class LowerBoundReport:
    """BS 공 밖 레일리 몫 하한 비교"""

    R: float
    infimum: float
    K: float
    K_lemma: float
    delta: float
    bound: float
    bound_2pi: float
    floor: float
    holds: bool
    n_retained: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "R": self.R,
            "infimum": self.infimum,
            "K": self.K,
            "K_lemma": self.K_lemma,
            "delta": self.delta,
            "bound": self.bound,
            "bound_2pi": self.bound_2pi,
            "floor": self.floor,
            "holds": self.holds,
            "n_retained": self.n_retained,
        }


def verify_lower_bound(model: LocalModel, R: float, delta: float = 0.0, tol: float = 1e-9) -> LowerBoundReport:
    """BS 공 B(p_b, R) 밖에 지지된 단면의 레일리 몫 하한

    공 안 노드는 디리클레로 제거합니다. 이산 최저 고윳값은 남은 노드 위
    퍼텐셜 최솟값 k² + K 이상입니다. K_lemma = inf λ(k,x)/N_x,
    bound = (k² + K_lemma)/(1+δ)².
    """
    if model.metric_distance is None:
        raise MagneticSolverError("계량 거리 함수가 없는 모델입니다")
    X, Y = model.grid.coords()
    keep = np.ones(model.grid.shape, dtype=bool)
    for well in model.wells:
        keep &= np.asarray(model.metric_distance(X, Y, well)) >= R
    restricted = model.restricted(keep)
    if restricted.grid.n_active < 20:
        raise MagneticSolverError(f"R={R}: 남은 노드가 너무 적습니다")

    op = assemble_reduced_laplacian(restricted)
    spectrum = solve_modes(op, 1, tol)
    infimum = float(spectrum.eigenvalues[0])

    k = model.k
    Xa, Ya = op.coords
    K = min(float(np.min(restricted.potential(mode, Xa, Ya))) for mode in restricted.modes) - k * k

    fiber = np.asarray(restricted.fiber_metric(Xa, Ya))
    N = np.linalg.eigvalsh(fiber)[..., -1]
    a1, a2 = model.offsets
    lam = np.min(
        [(k * (Xa + a1) + l1) ** 2 + (k * (Ya + a2) + l2) ** 2 for l1, l2 in restricted.modes], axis=0
    )
    K_lemma = float(np.min(lam / N))
    bound = (k * k + K_lemma) / (1.0 + delta) ** 2
    floor = k * k + K
    report = LowerBoundReport(
        R=R,
        infimum=infimum,
        K=K,
        K_lemma=K_lemma,
        delta=delta,
        bound=bound,
        bound_2pi=TWO_PI * bound,
        floor=floor,
        holds=infimum >= bound * (1 - 1e-9),
        n_retained=restricted.grid.n_active,
    )
    logger.info(f"하한 검증 R={R}: inf={infimum:.5g}, k²+K={floor:.5g}, bound={bound:.5g}")
    return report


def fit_power_law(R: Sequence[float], values: Sequence[float]) -> Tuple[float, float]:
    """log–log 직선 맞춤 (지수, 계수)"""
    R = np.asarray(R, dtype=float)
    values = np.asarray(values, dtype=float)
    if R.size < 2 or np.any(R <= 0) or np.any(values <= 0):
        raise MagneticSolverError("거듭제곱 맞춤에는 양수 값 2개 이상이 필요합니다")
    slope, intercept = np.polyfit(np.log(R), np.log(values), 1)
    return float(slope), float(math.exp(intercept))
