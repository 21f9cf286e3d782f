"""극한 공간 스펙트럼 모듈

극한 공간 𝕊_{0,m} 의 계량과 거리, 가우스 가중 공간 (L²(ℝ², e^{−k‖ξ‖²}), Δ^k)
의 스펙트럼 구조와 ρ_k 등방 성분 축약 규칙을 다룹니다.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import legendre
from numpy.polynomial.hermite import hermgauss
from scipy.linalg import eigh, eigh_tridiagonal
from scipy.sparse.csgraph import dijkstra

from src.core.geometry import LimitPoint, wrap_angle
from src.core.logger import get_logger

logger = get_logger("limit_spectra")

TWO_PI = 2.0 * math.pi
BOX_SCALE = 6.0
DEFAULT_POINTS = 400


class LimitSpectraError(Exception):
    """극한 스펙트럼 에러"""

    pass


class BasisSizeError(LimitSpectraError, ValueError):
    """기저/격자 크기 부족 에러"""

    pass


# --- 극한 계량 ---


@dataclass(frozen=True)
class LimitMetric:
    """ĝ_{0,m} = dt²/(m²(1+‖ξ‖²)) + dξ₁² + dξ₂², 측도 dξ₁dξ₂dt"""

    m: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise LimitSpectraError(f"m은 1 이상이어야 합니다: {self.m}")

    def fiber_coefficient(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return 1.0 / (self.m**2 * (1.0 + np.sum(xi**2, axis=-1)))

    def tensor(self, xi) -> np.ndarray:
        return np.diag([float(self.fiber_coefficient(xi)), 1.0, 1.0])

    def circle_length(self, xi) -> float:
        """ξ 위 섬유 원의 길이 2π/(m√(1+‖ξ‖²))"""
        return TWO_PI / (self.m * math.sqrt(1.0 + float(np.sum(np.asarray(xi, dtype=float) ** 2))))

    def length(self, path) -> float:
        """(t, ξ₁, ξ₂) 꺾은선 경로의 길이 (중점 규칙, t 는 펼친 값)"""
        path = np.asarray(path, dtype=float)
        if path.ndim != 2 or path.shape[1] != 3:
            raise LimitSpectraError(f"경로는 (N, 3) 배열이어야 합니다: {path.shape}")
        d = np.diff(path, axis=0)
        mid = 0.5 * (path[1:, 1:] + path[:-1, 1:])
        return float(np.sum(np.sqrt(d[:, 0] ** 2 * self.fiber_coefficient(mid) + d[:, 1] ** 2 + d[:, 2] ** 2)))


# --- 가우스 연산자 ---


@dataclass
class OperatorMatrix:
    """가중 공간 연산자의 대칭화 행렬

    matrix 는 W^{1/2} A W^{−1/2} (표준 내적에서 대칭), weight 는 격자점 가중치.
    """

    matrix: Any
    grid: np.ndarray
    weight: np.ndarray
    k: int
    spacing: float
    dim: int = 1

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def symmetry_defect(self) -> float:
        diff = self.matrix - self.matrix.T
        if sp.issparse(diff):
            return float(abs(diff).max()) if diff.nnz else 0.0
        return float(np.max(np.abs(diff)))


@dataclass
class SpectrumResult:
    """오름차순 고윳값, 잔차, 임계값 아래 개수"""

    eigenvalues: np.ndarray
    residuals: np.ndarray
    threshold: Optional[float] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def count_below(self, threshold: Optional[float] = None) -> int:
        threshold = self.threshold if threshold is None else threshold
        if threshold is None:
            return len(self.eigenvalues)
        return int(np.sum(self.eigenvalues < threshold))

    def rows(self) -> List[Tuple[int, float, float]]:
        """CSV 행 (index, eigenvalue, residual)"""
        return [(i, float(v), float(r)) for i, (v, r) in enumerate(zip(self.eigenvalues, self.residuals))]


def _tridiagonal_1d(k: int, n: int, box: Optional[float] = None):
    """−w⁻¹(w f')' 의 유속형 차분, w = e^{−kξ²}, 양 끝 무유속

    대칭화 후 비대각 성분은 −e^{kh²/4}/h² 로 일정합니다.
    """
    box = BOX_SCALE / math.sqrt(k) if box is None else box
    grid = np.linspace(-box, box, n)
    h = grid[1] - grid[0]
    half = 0.5 * (grid[1:] + grid[:-1])
    # w_{i±1/2}/w_i 를 로그로 계산
    right = np.zeros(n)
    left = np.zeros(n)
    right[:-1] = np.exp(-k * (half**2 - grid[:-1] ** 2))
    left[1:] = np.exp(-k * (half**2 - grid[1:] ** 2))
    diag = (right + left) / h**2
    off = np.full(n - 1, -math.exp(k * h**2 / 4.0) / h**2)
    return grid, h, diag, off


def gaussian_operator_1d(k: int, n: int = DEFAULT_POINTS, box: Optional[float] = None) -> OperatorMatrix:
    """1차원 가우스 연산자 −f'' + 2kξf' (희소 삼중대각)"""
    if k < 1:
        raise LimitSpectraError(f"k는 1 이상이어야 합니다: {k}")
    grid, h, diag, off = _tridiagonal_1d(k, n, box)
    matrix = sp.diags([off, diag, off], [-1, 0, 1], format="csr")
    return OperatorMatrix(matrix=matrix, grid=grid, weight=np.exp(-k * grid**2), k=k, spacing=h, dim=1)


def gaussian_operator(k: int, n: int = 80, n_eigs: Optional[int] = None, box: Optional[float] = None) -> OperatorMatrix:
    """2차원 가우스 연산자 Δ^k (1D ⊗ I + I ⊗ 1D 크로네커 합)

    Raises:
        BasisSizeError: 요청 고윳값 개수가 격자에 비해 너무 많을 때
    """
    if n_eigs is not None and n_eigs > n // 4:
        raise BasisSizeError(f"격자 {n}점으로는 고윳값 {n_eigs}개를 신뢰할 수 없습니다")
    one = gaussian_operator_1d(k, n, box)
    eye = sp.identity(n, format="csr")
    matrix = (sp.kron(one.matrix, eye) + sp.kron(eye, one.matrix)).tocsr()
    weight = np.kron(one.weight, one.weight)
    return OperatorMatrix(matrix=matrix, grid=one.grid, weight=weight, k=k, spacing=one.spacing, dim=2)


def _eig_1d(k: int, n: int, count: int, box: Optional[float]):
    _, _, diag, off = _tridiagonal_1d(k, n, box)
    values, vectors = eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1))
    # 잔차 ‖Sv − λv‖
    Sv = diag[:, None] * vectors
    Sv[:-1] += off[:, None] * vectors[1:]
    Sv[1:] += off[:, None] * vectors[:-1]
    residuals = np.linalg.norm(Sv - vectors * values, axis=0)
    return values, residuals


def gaussian_spectrum_1d(
    k: int, count: int, n: int = DEFAULT_POINTS, richardson: bool = True, box: Optional[float] = None
) -> SpectrumResult:
    """1차원 스펙트럼 (h, h/2 리처드슨 외삽)"""
    if count > n // 4:
        raise BasisSizeError(f"격자 {n}점으로는 고윳값 {count}개를 신뢰할 수 없습니다")
    coarse, res_coarse = _eig_1d(k, n, count, box)
    if not richardson:
        return SpectrumResult(coarse, res_coarse, meta={"k": k, "n": n})
    fine, res_fine = _eig_1d(k, 2 * n - 1, count, box)
    values = (4.0 * fine - coarse) / 3.0
    return SpectrumResult(values, res_fine, meta={"k": k, "n": n, "richardson": True})


def gaussian_spectrum(
    k: int, count: int, n: int = DEFAULT_POINTS, dim: int = 2, richardson: bool = True
) -> SpectrumResult:
    """가우스 연산자의 최저 고윳값 count 개 (2차원은 1차원 텐서 합)"""
    if dim == 1:
        return gaussian_spectrum_1d(k, count, n, richardson)
    if dim != 2:
        raise LimitSpectraError(f"지원하지 않는 차원: {dim}")
    per_axis = count
    one = gaussian_spectrum_1d(k, per_axis, n, richardson)
    sums = one.eigenvalues[:, None] + one.eigenvalues[None, :]
    res = one.residuals[:, None] + one.residuals[None, :]
    order = np.argsort(sums, axis=None, kind="stable")[:count]
    values = sums.ravel()[order]
    residuals = res.ravel()[order]
    logger.debug(f"가우스 스펙트럼: k={k}, 최저 {values[:3]}")
    return SpectrumResult(values, residuals, meta={"k": k, "n": n, "dim": 2})


def hermite_galerkin_spectrum(k: int, n_basis: int, count: Optional[int] = None) -> SpectrumResult:
    """다항식 갈레르킨 교차검증 (가우스-에르미트 구적)

    차수 < n_basis 다항식 공간은 에르미트 다항식 공간과 같으므로
    최저 n_basis 개 고윳값은 2kn 과 정확히 일치해야 합니다.
    """
    count = n_basis if count is None else count
    if count > n_basis:
        raise BasisSizeError(f"기저 {n_basis}개로 고윳값 {count}개를 구할 수 없습니다")
    nodes, weights = hermgauss(n_basis + 8)
    xi = nodes / math.sqrt(k)
    scale = BOX_SCALE / math.sqrt(k)
    vander = legendre.legvander(xi / scale, n_basis - 1)
    deriv = np.column_stack(
        [legendre.legval(xi / scale, legendre.legder(np.eye(n_basis)[j])) / scale for j in range(n_basis)]
    )
    mass = vander.T @ (weights[:, None] * vander)
    stiffness = deriv.T @ (weights[:, None] * deriv)
    values, vectors = eigh(stiffness, mass)
    residuals = np.linalg.norm(stiffness @ vectors - mass @ vectors * values, axis=0)
    return SpectrumResult(values[:count], residuals[:count], meta={"k": k, "n_basis": n_basis})


def exact_gaussian_spectrum(k: int, count: int, dim: int = 2) -> np.ndarray:
    """{2k(n₁+n₂)} (중복도 n₁+n₂+1) 최저 count 개"""
    values: List[float] = []
    level = 0
    while len(values) < count:
        multiplicity = level + 1 if dim == 2 else 1
        values.extend([2.0 * k * level] * multiplicity)
        level += 1
    return np.array(values[:count])


# --- 스펙트럼 구조 ---


@dataclass(frozen=True)
class SpectralStructure:
    """(H, A) 와 평행이동/배율 태그 a₁Σ + a₂ = (H, a₁A + a₂)"""

    space: Dict[str, Any]
    k: int
    a1: float = 1.0
    a2: float = 0.0

    def __post_init__(self):
        if not self.a1 > 0:
            raise LimitSpectraError(f"a₁ 은 양수여야 합니다: {self.a1}")

    @property
    def is_zero(self) -> bool:
        return False

    def affine(self, a1: float, a2: float) -> "SpectralStructure":
        return SpectralStructure(space=self.space, k=self.k, a1=a1 * self.a1, a2=a1 * self.a2 + a2)

    def operator(self, n: int = 80) -> OperatorMatrix:
        base = gaussian_operator(self.k, n)
        shifted = self.a1 * base.matrix + self.a2 * sp.identity(base.size, format="csr")
        return OperatorMatrix(
            matrix=shifted.tocsr(), grid=base.grid, weight=base.weight, k=self.k, spacing=base.spacing, dim=2
        )

    def spectrum(self, count: int, n: int = DEFAULT_POINTS) -> SpectrumResult:
        base = gaussian_spectrum(self.k, count, n)
        return SpectrumResult(self.a1 * base.eigenvalues + self.a2, self.a1 * base.residuals, meta=base.meta)

    def exact_spectrum(self, count: int) -> np.ndarray:
        return self.a1 * exact_gaussian_spectrum(self.k, count) + self.a2


@dataclass(frozen=True)
class ZeroStructure:
    """영 구조 (공간 {0})"""

    @property
    def is_zero(self) -> bool:
        return True

    def affine(self, a1: float, a2: float) -> "ZeroStructure":
        return self

    def spectrum(self, count: int = 0, n: int = 0) -> SpectrumResult:
        return SpectrumResult(np.empty(0), np.empty(0))

    def exact_spectrum(self, count: int = 0) -> np.ndarray:
        return np.empty(0)


def gaussian_structure(k: int) -> SpectralStructure:
    return SpectralStructure(space={"domain": "R2", "weight": f"exp(-{k}|xi|^2)"}, k=k)


def rho_k_structure(m: int, k: int) -> Union[SpectralStructure, ZeroStructure]:
    """Σ(𝕊_{0,m})^{ρ_k}: k ∈ mℤ 이면 (H^k, Δ^k) + (k² + 2k), 아니면 0"""
    if m < 1 or k < 1:
        raise LimitSpectraError(f"m, k는 1 이상이어야 합니다: m={m}, k={k}")
    if k % m != 0:
        return ZeroStructure()
    return gaussian_structure(k).affine(1.0, float(k * k + 2 * k))


# --- 극한 거리 ---


@dataclass
class LimitDistance:
    """격자 최단경로 거리와 해상도 정보"""

    distance: float
    error_bound: float
    n_t: int
    n_xi: int
    box: float
    anisotropy: float = 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "distance": self.distance,
            "error_bound": self.error_bound,
            "n_t": self.n_t,
            "n_xi": self.n_xi,
            "box": self.box,
            "anisotropy": self.anisotropy,
        }


def _neighbor_offsets() -> List[Tuple[int, int, int]]:
    """26-이웃 중 절반 (사전식 양수)"""
    out = []
    for a in (-1, 0, 1):
        for b in (-1, 0, 1):
            for c in (-1, 0, 1):
                if (a, b, c) > (0, 0, 0):
                    out.append((a, b, c))
    return out


def _sphere_directions(n: int) -> np.ndarray:
    """첫 팔분공간의 준균등 단위 방향 (피보나치 격자)"""
    i = np.arange(n) + 0.5
    z = i / n
    phi = math.pi * (1.0 + math.sqrt(5.0)) * i
    rho = np.sqrt(1.0 - z**2)
    return np.abs(np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z]))


def grid_anisotropy(scales, n_dir: int = 4096) -> float:
    """26-이웃 격자 경로 길이 / 계량 길이 비의 상한

    각 축 한 칸의 길이가 scales 인 격자에서 방향 v 로 가는 경로를
    (1,1,1), (1,1,0), (1,0,0) 형 걸음으로 분해한 길이는 최단 격자 경로의
    상한이므로, 그 비의 최댓값은 격자 거리 ≤ ρ · 실제 거리 를 보장합니다.
    """
    scales = np.atleast_2d(np.asarray(scales, dtype=float))
    dirs = _sphere_directions(n_dir)
    worst = 1.0
    for s in scales:
        # 격자 좌표 방향 (계량 길이 1)
        v = dirs / s
        order = np.argsort(-v, axis=1)
        vs = np.take_along_axis(v, order, axis=1)
        ss = s[order]
        step1 = ss[:, 0]
        step2 = np.sqrt(ss[:, 0] ** 2 + ss[:, 1] ** 2)
        step3 = np.sqrt(np.sum(ss**2, axis=1))
        path = (vs[:, 0] - vs[:, 1]) * step1 + (vs[:, 1] - vs[:, 2]) * step2 + vs[:, 2] * step3
        worst = max(worst, float(np.max(path)))
    return worst


def limit_grid_graph(m: int, n_t: int, n_xi: int, box: float, t0: float = 0.0):
    """S¹ × [−box, box]² 곱 격자 그래프 (중점 길이)

    Returns:
        (csr 그래프, t 격자, ξ 격자)
    """
    metric = LimitMetric(m)
    t = wrap_angle(t0 + TWO_PI * np.arange(n_t) / n_t)
    xi = np.linspace(-box, box, n_xi)
    dt = TWO_PI / n_t
    I, J, L = np.meshgrid(np.arange(n_t), np.arange(n_xi), np.arange(n_xi), indexing="ij")
    I, J, L = I.ravel(), J.ravel(), L.ravel()

    def index(i, j, l):
        return (i * n_xi + j) * n_xi + l

    rows, cols, weights = [], [], []
    for a, b, c in _neighbor_offsets():
        j2, l2 = J + b, L + c
        valid = (j2 >= 0) & (j2 < n_xi) & (l2 >= 0) & (l2 < n_xi)
        i2 = (I[valid] + a) % n_t
        mid = np.column_stack([0.5 * (xi[J[valid]] + xi[j2[valid]]), 0.5 * (xi[L[valid]] + xi[l2[valid]])])
        hxi = xi[1] - xi[0]
        length = np.sqrt((a * dt) ** 2 * metric.fiber_coefficient(mid) + (b * hxi) ** 2 + (c * hxi) ** 2)
        rows.append(index(I[valid], J[valid], L[valid]))
        cols.append(index(i2, j2[valid], l2[valid]))
        weights.append(length)
    n_nodes = n_t * n_xi * n_xi
    graph = sp.csr_matrix(
        (np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))), shape=(n_nodes, n_nodes)
    )
    return graph, t, xi


def limit_distance(
    u0: LimitPoint,
    u1: LimitPoint,
    m: int = 1,
    n_t: int = 64,
    n_xi: int = 33,
    box: float = 4.0,
) -> LimitDistance:
    """(S¹×ℝ², ĝ_{0,m}) 측지 거리의 곱 격자 최단경로 근사

    t 격자는 u0.t 를 지나도록 놓고, 격자에 없는 끝점은 가장 가까운 격자점으로
    맞추며 그 오차를 error_bound 에 더합니다.

    error_bound = (1 − 1/ρ)·distance + 한 칸 대각선 + 끝점 맞춤 오차.
    ρ 는 grid_anisotropy 의 방향 비 상한이며 거리에 비례하는 항을 줍니다.
    """
    graph, t, xi = limit_grid_graph(m, n_t, n_xi, box, t0=u0.t)
    metric = LimitMetric(m)

    def snap(p: LimitPoint) -> Tuple[int, float]:
        i = int(np.argmin(np.abs(np.angle(np.exp(1j * (t - p.t))))))
        j = int(np.argmin(np.abs(xi - p.xi[0])))
        l = int(np.argmin(np.abs(xi - p.xi[1])))
        gap = metric.length(
            [[p.t, p.xi[0], p.xi[1]], [p.t + float(np.angle(np.exp(1j * (t[i] - p.t)))), xi[j], xi[l]]]
        )
        return (i * n_xi + j) * n_xi + l, gap

    src, gap0 = snap(u0)
    dst, gap1 = snap(u1)
    dist = dijkstra(graph, directed=False, indices=src)[dst]
    h = xi[1] - xi[0]
    dt = TWO_PI / n_t
    cell = math.sqrt(dt**2 / m**2 + 2 * h**2)
    radii = np.linspace(0.0, math.sqrt(2.0) * box, 9)
    coefficients = metric.fiber_coefficient(np.column_stack([radii, np.zeros_like(radii)]))
    rho = grid_anisotropy([(dt * math.sqrt(c), h, h) for c in coefficients])
    bound = (1.0 - 1.0 / rho) * dist + cell + gap0 + gap1
    logger.debug(f"극한 거리: {dist:.6g} ± {bound:.3g} (격자 {n_t}×{n_xi}², ρ={rho:.4f})")
    return LimitDistance(
        distance=float(dist), error_bound=float(bound), n_t=n_t, n_xi=n_xi, box=box, anisotropy=rho
    )
