"""GH 수렴 실험 모듈

근사 사상 φ(t, y) = (t, ζ_s(y)) 의 거리 왜곡, 거의 전사성 (덮개 틈),
섬유 지름, 측도 수렴, BS 점 분리를 점구름 그래프로 측정합니다.

모든 모델은 토러스 몫 (t, ξ) 좌표에서 다룹니다.
- limit: ĝ_{0,m} = dt²/(m²(1+‖ξ‖²)) + dξ²
- abelian: dt²/(1 + xᵀGx) + G dx², ξ = 2πx/√s (ĝ_{0,1} 과 정확히 일치)
- ooguri-vafa: dt²/(1 + Q(y)) + V^sf|dy|², y = ζ_s⁻¹(ξ)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra
from sklearn.neighbors import NearestNeighbors

from src.core.geometry import (
    CHI_T_MAX,
    LimitPoint,
    pullback_ratios,
    pushforward_density,
    zeta_inverse,
    zeta_s,
)
from src.core.holonomy import holonomy_H
from src.core.limit_spectra import limit_distance
from src.core.logger import get_logger
from src.core.ooguri_vafa import OVParams, calV, fiber_diameter

logger = get_logger("gh_lab")

TWO_PI = 2.0 * math.pi
GAUSS_POINTS = 8
DEFAULT_NEIGHBORS = 12
MODELS = ("limit", "abelian", "ooguri-vafa")


class GHLabError(Exception):
    """GH 실험 에러"""

    pass


class DisconnectedGraphError(GHLabError):
    """점구름 그래프 비연결 에러 (표본 밀도 부족)"""

    pass


# --- 근사 사상 ---


@dataclass(frozen=True)
class BundlePoint:
    """몫 공간의 점 (원 좌표 t, 기저 y)"""

    t: float
    y: complex

    def rotate(self, tau: float) -> "BundlePoint":
        return BundlePoint((self.t + tau) % TWO_PI, self.y)


def approx_map(u: BundlePoint, s: float) -> LimitPoint:
    """φ(e^{it}, y) = (e^{it}, ζ_s(y))"""
    xi = zeta_s(u.y, s)
    return LimitPoint(u.t, (float(xi[0]), float(xi[1])))


# --- 몫 계량 (t, ξ₁, ξ₂) ---


def limit_tensor(points: np.ndarray, m: int = 1) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    out = np.zeros(points.shape[:-1] + (3, 3))
    out[..., 0, 0] = 1.0 / (m**2 * (1.0 + points[..., 1] ** 2 + points[..., 2] ** 2))
    out[..., 1, 1] = out[..., 2, 2] = 1.0
    return out


def abelian_tensor(points: np.ndarray, s: float) -> np.ndarray:
    """작용 좌표 x = √s ξ/2π, G = (4π²/s)I 에서의 몫 계량"""
    points = np.asarray(points, dtype=float)
    g = 4 * math.pi**2 / s
    jac = math.sqrt(s) / TWO_PI  # dx/dξ
    x1, x2 = jac * points[..., 1], jac * points[..., 2]
    out = np.zeros(points.shape[:-1] + (3, 3))
    out[..., 0, 0] = 1.0 / (1.0 + g * (x1**2 + x2**2))
    out[..., 1, 1] = out[..., 2, 2] = g * jac**2
    return out


def ov_quotient_Q(y, ovp: OVParams) -> np.ndarray:
    """Q(y) = [(x₂ − Im𝒱 x₁)² + (Re𝒱 x₁)²]/(s Re𝒱), x = (u₁, 𝓗)"""
    y = np.asarray(y, dtype=complex)
    out = np.zeros(y.shape)
    nz = y != 0
    if np.any(nz):
        yy = y[nz]
        v = np.asarray(calV(yy, ovp))
        x1 = yy.real
        x2 = np.asarray(holonomy_H(yy.real, yy.imag, ovp))
        out[nz] = ((x2 - v.imag * x1) ** 2 + (v.real * x1) ** 2) / (ovp.s * v.real)
    return out


def ov_tensor(points: np.ndarray, ovp: OVParams) -> np.ndarray:
    """OV 준평탄 몫 계량을 ξ 좌표로 당긴 것

    기저 부분은 반지름 방향 비율과 각 방향 비율로 표현합니다.
    V_s 대신 V_s^sf 를 씁니다. 차이는 s·|V_s − V_s^sf| ≲ e^{−2π|y|/s} 이므로
    |y| ≲ s, 곧 ξ 원점 근방 (|ξ| ≲ 0.03) 에서만 보이며 그 안의 왜곡은
    semi-flat 몫의 값입니다.
    """
    points = np.asarray(points, dtype=float)
    flat = points.reshape(-1, 3)
    xi = flat[:, 1:]
    y = np.atleast_1d(np.asarray(zeta_inverse(xi, ovp.s)))
    rho = np.hypot(xi[:, 0], xi[:, 1])
    radial = np.ones(len(flat))
    angular = np.ones(len(flat))
    nz = rho > 0
    if np.any(nz):
        h = np.asarray(ovp.shift.value(y[nz].real, y[nz].imag))
        radial[nz], angular[nz] = pullback_ratios(y[nz], ovp.s, h)
    unit = np.zeros_like(xi)
    unit[nz] = xi[nz] / rho[nz, None]
    base = angular[:, None, None] * np.eye(2) + (radial - angular)[:, None, None] * np.einsum(
        "ni,nj->nij", unit, unit
    )
    out = np.zeros((len(flat), 3, 3))
    out[:, 0, 0] = 1.0 / (1.0 + ov_quotient_Q(y, ovp))
    out[:, 1:, 1:] = base
    return out.reshape(points.shape[:-1] + (3, 3))


def model_tensor(model: str, s: float, m: int = 1, ovp: Optional[OVParams] = None) -> Callable:
    if model == "limit":
        return lambda p: limit_tensor(p, m)
    if model == "abelian":
        return lambda p: abelian_tensor(p, s)
    if model == "ooguri-vafa":
        params = ovp or OVParams(s=s)
        return lambda p: ov_tensor(p, params)
    raise GHLabError(f"알 수 없는 모델: {model}")


def base_only(tensor_fn: Callable) -> Callable:
    """원 방향 성분을 지운 계량 (d_g∘π 용)"""

    def fn(p):
        out = np.array(tensor_fn(p))
        out[..., 0, :] = 0.0
        out[..., :, 0] = 0.0
        return out

    return fn


# --- 점구름 그래프 ---


def _wrap(dt: np.ndarray) -> np.ndarray:
    return (dt + math.pi) % TWO_PI - math.pi


def _embed_cloud(points: np.ndarray, scale: float) -> np.ndarray:
    return np.column_stack(
        [scale * np.cos(points[:, 0]), scale * np.sin(points[:, 0]), points[:, 1], points[:, 2]]
    )


def segment_lengths(starts: np.ndarray, deltas: np.ndarray, tensor_fn: Callable) -> np.ndarray:
    """직선 선분 길이 ∫₀¹ √(δᵀ g(p(τ)) δ) dτ (8점 가우스-르장드르)"""
    nodes, weights = np.polynomial.legendre.leggauss(GAUSS_POINTS)
    tau = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    pts = starts[:, None, :] + tau[None, :, None] * deltas[:, None, :]
    g = tensor_fn(pts)
    speed = np.sqrt(np.maximum(np.einsum("ni,nqij,nj->nq", deltas, g, deltas), 0.0))
    return speed @ weights


@dataclass
class CloudGraph:
    """점구름 (t, ξ₁, ξ₂) 와 kNN 간선"""

    points: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    deltas: np.ndarray
    tags: List[str] = field(default_factory=list)

    @classmethod
    def build(
        cls,
        points: np.ndarray,
        neighbors: int = DEFAULT_NEIGHBORS,
        embed_scale: float = 1.0,
        tags: Optional[List[str]] = None,
    ) -> "CloudGraph":
        """원 좌표를 (c cos t, c sin t) 로 펼친 임베딩 위 kNN 그래프"""
        points = np.asarray(points, dtype=float)
        embedding = _embed_cloud(points, embed_scale)
        nn = NearestNeighbors(n_neighbors=neighbors + 1).fit(embedding)
        _, ind = nn.kneighbors(embedding)
        ind = ind[:, 1:]
        rows = np.repeat(np.arange(len(points)), neighbors)
        cols = ind.ravel()
        # 무방향: (i, j), (j, i) 중복 제거
        pairs = np.unique(np.sort(np.column_stack([rows, cols]), axis=1), axis=0)
        rows, cols = pairs[:, 0], pairs[:, 1]
        deltas = points[cols] - points[rows]
        deltas[:, 0] = _wrap(deltas[:, 0])
        return cls(points=points, rows=rows, cols=cols, deltas=deltas, tags=tags or [])

    @property
    def n(self) -> int:
        return len(self.points)

    def lengths(self, tensor_fn: Callable) -> np.ndarray:
        return segment_lengths(self.points[self.rows], self.deltas, tensor_fn)

    def matrix(self, lengths: np.ndarray):
        if np.any(lengths <= 0):
            # 기저 전용 길이는 순수 원 방향 간선에서 0 이 될 수 있음
            lengths = np.maximum(lengths, 1e-300)
        graph = sp.csr_matrix((lengths, (self.rows, self.cols)), shape=(self.n, self.n))
        return graph.maximum(graph.T)

    def check_connected(self, graph) -> None:
        n_comp, _ = connected_components(graph, directed=False)
        if n_comp > 1:
            raise DisconnectedGraphError(f"그래프가 {n_comp}개 성분으로 나뉩니다: 표본 밀도를 높이세요")

    def distances(self, tensor_fn: Callable, sources: Sequence[int]) -> np.ndarray:
        graph = self.matrix(self.lengths(tensor_fn))
        self.check_connected(graph)
        return dijkstra(graph, directed=False, indices=np.asarray(sources))


def sample_ball(n: int, R: float, rng: np.random.Generator) -> np.ndarray:
    """S¹ × 𝓑(R) 균등 표본 (t, ξ₁, ξ₂)"""
    r = R * np.sqrt(rng.random(n))
    phi = TWO_PI * rng.random(n)
    t = TWO_PI * rng.random(n)
    return np.column_stack([t, r * np.cos(phi), r * np.sin(phi)])


# --- 왜곡 ---


@dataclass
class DistortionReport:
    """|d_ĝ − d_{ĝ₀,m}∘φ| 통계와 덮개 틈"""

    model: str
    s: float
    R: float
    n: int
    m: int
    sup: float
    median: float
    quantiles: Dict[str, float]
    covering_gap: float
    submersion_lower_violations: int
    submersion_upper_violations: int
    bias_spot: Optional[float] = None
    fiber_diameter: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "s": self.s,
            "R": self.R,
            "n": self.n,
            "m": self.m,
            "sup": self.sup,
            "median": self.median,
            "quantiles": dict(self.quantiles),
            "covering_gap": self.covering_gap,
            "submersion_lower_violations": self.submersion_lower_violations,
            "submersion_upper_violations": self.submersion_upper_violations,
            "bias_spot": self.bias_spot,
            "fiber_diameter": self.fiber_diameter,
        }


def _require_chart(model: str, s: float, R: float) -> None:
    if model == "ooguri-vafa" and s * R**2 > CHI_T_MAX:
        raise GHLabError(f"s·R² = {s * R * R:.4g} > log2/8π: 𝓑(R) 의 역상이 |y| ≤ 1/2 를 벗어납니다")


def covering_gap(cloud: CloudGraph, R: float, m: int, rng: np.random.Generator, n_test: int) -> float:
    """sup_{v ∈ S¹×𝓑(R)} dist_{ĝ₀}(v, 표본) 의 근사 (가까운 4점까지의 직선 길이)"""
    test = sample_ball(n_test, R, rng)
    nn = NearestNeighbors(n_neighbors=4).fit(_embed_cloud(cloud.points, 1.0 / m))
    _, ind = nn.kneighbors(_embed_cloud(test, 1.0 / m))
    starts = np.repeat(test, 4, axis=0)
    deltas = cloud.points[ind.ravel()] - starts
    deltas[:, 0] = _wrap(deltas[:, 0])
    lengths = segment_lengths(starts, deltas, lambda p: limit_tensor(p, m)).reshape(-1, 4)
    return float(np.max(np.min(lengths, axis=1)))


def sample_and_distort(
    model: str,
    s: float,
    R: float,
    n: int = 600,
    seed: int = 12345,
    m: int = 1,
    neighbors: int = DEFAULT_NEIGHBORS,
    n_sources: int = 24,
    spot_checks: int = 0,
    ovp: Optional[OVParams] = None,
) -> DistortionReport:
    """한 그래프 위에서 두 길이 함수 (ĝ_s, ĝ_{0,m}) 로 거리를 비교

    Raises:
        DisconnectedGraphError: kNN 그래프가 연결되지 않은 경우
    """
    if n < 200:
        raise GHLabError(f"표본 수는 200 이상이어야 합니다: {n}")
    _require_chart(model, s, R)
    rng = np.random.default_rng(seed)
    points = sample_ball(n, R, rng)
    points[0] = (0.0, 0.0, 0.0)
    cloud = CloudGraph.build(points, neighbors=neighbors, embed_scale=1.0 / m)
    sources = np.arange(min(n_sources, n))

    g_model = model_tensor(model, s, m, ovp)
    d_model = cloud.distances(g_model, sources)
    d_limit = cloud.distances(lambda p: limit_tensor(p, m), sources)
    d_base = cloud.distances(base_only(g_model), sources)

    distortion = np.abs(d_model - d_limit)
    mask = ~np.eye(len(sources), n, dtype=bool)
    values = distortion[mask]
    quantiles = {f"q{int(q * 100)}": float(np.quantile(values, q)) for q in (0.5, 0.9, 0.99)}
    lower = int(np.sum(d_model < d_base - 1e-12))
    upper = int(np.sum(d_model > d_base + math.pi + 1e-12))

    bias = None
    if spot_checks:
        ratios = []
        for i in range(1, spot_checks + 1):
            grid = limit_distance(
                LimitPoint(points[0, 0], (points[0, 1], points[0, 2])),
                LimitPoint(points[i, 0], (points[i, 1], points[i, 2])),
                m=m,
                box=max(4.0, R + 1.0),
            )
            if grid.distance > 0:
                ratios.append(abs(d_limit[0, i] - grid.distance) / grid.distance)
        bias = float(np.median(ratios)) if ratios else None

    diameter = None
    if model == "ooguri-vafa":
        diameter = fiber_diameter(0.1j, ovp or OVParams(s=s))

    report = DistortionReport(
        model=model,
        s=s,
        R=R,
        n=n,
        m=m,
        sup=float(np.max(values)),
        median=float(np.median(values)),
        quantiles=quantiles,
        covering_gap=covering_gap(cloud, R, m, rng, 4 * n),
        submersion_lower_violations=lower,
        submersion_upper_violations=upper,
        bias_spot=bias,
        fiber_diameter=diameter,
    )
    logger.info(f"왜곡 {model}: s={s:g}, R={R}, median={report.median:.4g}, sup={report.sup:.4g}")
    return report


# --- 측도 ---


@dataclass
class MeasureReport:
    """|K∫f∘φ dν_ĝ − ∫f dt dν_{g₀}| 와 상한 2πδ sup|f| ν_{g₀}(𝓑(R))"""

    s: float
    R: float
    value: float
    reference: float
    error: float
    relative_error: float
    bound: float
    delta: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "s": self.s,
            "R": self.R,
            "value": self.value,
            "reference": self.reference,
            "error": self.error,
            "relative_error": self.relative_error,
            "bound": self.bound,
            "delta": self.delta,
        }


def indicator(R: float) -> Callable:
    return lambda t, xi: np.where(np.hypot(xi[..., 0], xi[..., 1]) <= R, 1.0, 0.0)


def radial_bump(R: float) -> Callable:
    """지지 𝓑(R) 의 매끄러운 혹"""

    def f(t, xi):
        r2 = (xi[..., 0] ** 2 + xi[..., 1] ** 2) / R**2
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(r2 < 1, np.exp(1.0 - 1.0 / np.maximum(1.0 - r2, 1e-300)), 0.0)

    return f


def measure_density(model: str, xi: np.ndarray, s: float, ovp: Optional[OVParams] = None) -> np.ndarray:
    """(t, ξ) 좌표에서 ν_ĝ/s 의 밀도 (dt dξ 기준)"""
    if model in ("limit", "abelian"):
        return np.ones(xi.shape[:-1])
    params = ovp or OVParams(s=s)
    y = np.asarray(zeta_inverse(xi, s))
    h = params.shift.value(np.real(y), np.imag(y))
    return np.asarray(pushforward_density(xi, s, h))


def sandwich_delta(s: float, R: float, ovp: Optional[OVParams] = None, n_radial: int = 256) -> float:
    """ζ_s⁻¹(𝓑(R)) 위 (1+δ)⁻¹ζ*g₀ ≤ V^sf|dy|² ≤ (1+δ)ζ*g₀ 를 만족하는 δ"""
    params = ovp or OVParams(s=s)
    if s * R**2 > CHI_T_MAX:
        raise GHLabError(f"s·R² = {s * R * R:.4g} > log2/8π")
    radii = np.linspace(R / n_radial, R, n_radial)
    angles = np.linspace(0.0, TWO_PI, 16, endpoint=False)
    rr, aa = np.meshgrid(radii, angles, indexing="ij")
    xi = np.stack([rr * np.cos(aa), rr * np.sin(aa)], axis=-1).reshape(-1, 2)
    y = np.asarray(zeta_inverse(xi, s))
    h = params.shift.value(y.real, y.imag)
    radial, angular = pullback_ratios(y, s, h)
    ratios = np.concatenate([np.ravel(radial), np.ravel(angular)])
    return float(max(np.max(ratios) - 1.0, 1.0 / np.min(ratios) - 1.0, 0.0))


def measure_check(
    model: str,
    s: float,
    R: float,
    f: Optional[Callable] = None,
    n_radial: int = 200,
    n_angle: int = 64,
    n_t: int = 16,
    ovp: Optional[OVParams] = None,
) -> MeasureReport:
    """극좌표 ξ 와 t 의 텐서곱 구적으로 측도 수렴 오차 계산 (K = 1/s 적용)"""
    _require_chart(model, s, R)
    f = f or indicator(R)
    nodes, weights = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * R * (nodes + 1.0)
    wr = 0.5 * R * weights * r
    phi = TWO_PI * np.arange(n_angle) / n_angle
    t = TWO_PI * np.arange(n_t) / n_t
    rr, pp = np.meshgrid(r, phi, indexing="ij")
    xi = np.stack([rr * np.cos(pp), rr * np.sin(pp)], axis=-1)
    density = measure_density(model, xi, s, ovp)
    cell = wr[:, None] * (TWO_PI / n_angle) * (TWO_PI / n_t)
    value = 0.0
    reference = 0.0
    sup_f = 0.0
    for tj in t:
        fv = np.asarray(f(tj, xi), dtype=float)
        value += float(np.sum(fv * density * cell))
        reference += float(np.sum(fv * cell))
        sup_f = max(sup_f, float(np.max(np.abs(fv))))
    delta = 0.0 if model in ("limit", "abelian") else sandwich_delta(s, R, ovp)
    error = abs(value - reference)
    bound = TWO_PI * delta * sup_f * math.pi * R**2
    report = MeasureReport(
        s=s,
        R=R,
        value=value,
        reference=reference,
        error=error,
        relative_error=error / reference if reference else math.inf,
        bound=bound,
        delta=delta,
    )
    logger.debug(f"측도 검사 {model}: s={s:g}, 상대 오차={report.relative_error:.3g}, δ={delta:.3g}")
    return report


# --- BS 분리 ---


def _conformal_factor(model: str, s: float, ovp: Optional[OVParams]) -> Callable:
    """기저 계량 w(p)|dp|² 의 w"""
    if model == "abelian":
        g = 4 * math.pi**2 / s
        return lambda pts: np.full(pts.shape[:-1], g)
    if model == "ooguri-vafa":
        params = ovp or OVParams(s=s)

        def vsf(pts):
            r = np.hypot(pts[..., 0], pts[..., 1])
            return (-np.log(r) / TWO_PI + params.shift.value(pts[..., 0], pts[..., 1])) / params.s

        return vsf
    raise GHLabError(f"알 수 없는 모델: {model}")


def bs_separation(
    model: str,
    s: float,
    pairs: Sequence[Tuple[complex, complex]],
    n: int = 400,
    seed: int = 12345,
    neighbors: int = DEFAULT_NEIGHBORS,
    ovp: Optional[OVParams] = None,
) -> List[float]:
    """BS 점 쌍 사이의 기저 그래프 측지 거리

    abelian: 작용 좌표 x 에서 (4π²/s)|dx|², ooguri-vafa: 기저 좌표 y 에서 V^sf|dy|².
    같은 점은 0 입니다.
    """
    weight = _conformal_factor(model, s, ovp)
    nodes, gauss_w = np.polynomial.legendre.leggauss(GAUSS_POINTS)
    tau = 0.5 * (nodes + 1.0)
    rng = np.random.default_rng(seed)
    out: List[float] = []
    for p, q in pairs:
        p, q = complex(p), complex(q)
        if p == q:
            out.append(0.0)
            continue
        center = 0.5 * (p + q)
        half = 0.75 * abs(p - q)
        cloud = np.column_stack(
            [center.real + half * (2 * rng.random(n) - 1), center.imag + half * (2 * rng.random(n) - 1)]
        )
        cloud[0] = (p.real, p.imag)
        cloud[1] = (q.real, q.imag)
        nn = NearestNeighbors(n_neighbors=neighbors + 1).fit(cloud)
        _, ind = nn.kneighbors(cloud)
        rows = np.repeat(np.arange(n), neighbors)
        cols = ind[:, 1:].ravel()
        deltas = cloud[cols] - cloud[rows]
        pts = cloud[rows][:, None, :] + tau[None, :, None] * deltas[:, None, :]
        lengths = np.linalg.norm(deltas, axis=1) * (np.sqrt(weight(pts)) @ (0.5 * gauss_w))
        graph = sp.csr_matrix((lengths, (rows, cols)), shape=(n, n))
        graph = graph.maximum(graph.T)
        n_comp, _ = connected_components(graph, directed=False)
        if n_comp > 1:
            raise DisconnectedGraphError(f"기저 그래프가 {n_comp}개 성분으로 나뉩니다")
        out.append(float(dijkstra(graph, directed=False, indices=0)[1]))
    logger.debug(f"BS 분리 {model}: s={s:g}, {len(out)}쌍")
    return out


def fiber_diameter_constants(s_values: Sequence[float], y: complex = 0.1j) -> List[float]:
    """fiber_diameter(y)/√(s log s⁻¹)"""
    return [fiber_diameter(y, OVParams(s=s)) / math.sqrt(s * math.log(1.0 / s)) for s in s_values]


# --- 거리 행렬 ---


def write_distance_matrix(path: Path, matrix: np.ndarray) -> Path:
    """리틀엔디언: uint64 n, 이어서 n×n float64 행 우선"""
    matrix = np.ascontiguousarray(matrix, dtype="<f8")
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise GHLabError(f"정사각 행렬이어야 합니다: {matrix.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(np.array([matrix.shape[0]], dtype="<u8").tobytes())
        f.write(matrix.tobytes(order="C"))
    return path


def read_distance_matrix(path: Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    n = int(np.frombuffer(raw[:8], dtype="<u8")[0])
    return np.frombuffer(raw[8:], dtype="<f8").reshape(n, n).copy()


def pairwise_distances(model: str, s: float, R: float, n: int, seed: int, m: int = 1) -> np.ndarray:
    """표본 전체 쌍 거리 (이진 출력 용)"""
    _require_chart(model, s, R)
    rng = np.random.default_rng(seed)
    points = sample_ball(n, R, rng)
    cloud = CloudGraph.build(points, embed_scale=1.0 / m)
    return cloud.distances(model_tensor(model, s, m), np.arange(n))
