"""희소 대칭 고윳값 풀이 모듈

이동-역변환 연산자 (A − σI)⁻¹ 위 블록 란초스 (완전 재직교화 2회) 로
실대칭 희소 행렬의 최저 고윳값을 구합니다. 잔차는 원래 행렬 A 에서 확인합니다.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh, splu

from src.core.logger import get_logger

logger = get_logger("eigensolver")

DEFAULT_BLOCK = 4
DEFAULT_MAX_KRYLOV = 200
CHECK_EVERY = 4


class EigenSolverError(Exception):
    """고윳값 풀이 에러"""

    pass


class EigenSolverConvergenceError(EigenSolverError):
    """란초스 미수렴 에러 (진단 정보 포함)"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SolverSizeError(EigenSolverError, ValueError):
    """행렬 크기 대비 요청 개수 과다 에러"""

    pass


@dataclass
class EigenResult:
    """오름차순 고윳값과 리츠 벡터"""

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    sigma: float
    iterations: int
    krylov_dim: int
    matrix_norm: float
    meta: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "values": self.values.tolist(),
            "residuals": self.residuals.tolist(),
            "sigma": self.sigma,
            "iterations": self.iterations,
            "krylov_dim": self.krylov_dim,
            "matrix_norm": self.matrix_norm,
        }


def gershgorin_bounds(A) -> tuple:
    """게르슈고린 원판으로 스펙트럼 (하한, 상한)"""
    A = sp.csr_matrix(A)
    diag = A.diagonal()
    radius = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(diag)
    return float(np.min(diag - radius)), float(np.max(diag + radius))


def _check_symmetric(A, tol: float = 0.0) -> None:
    diff = A - A.T
    if diff.nnz and abs(diff).max() > tol:
        raise EigenSolverError(f"행렬이 대칭이 아닙니다: max|A − Aᵀ| = {abs(diff).max():.3e}")


def lowest_eigs(
    A,
    n_eigs: int,
    tol: float = 1e-9,
    block_size: int = DEFAULT_BLOCK,
    max_krylov: int = DEFAULT_MAX_KRYLOV,
    sigma: Optional[float] = None,
    seed: int = 0,
) -> EigenResult:
    """실대칭 희소 행렬의 최저 고윳값 n_eigs 개

    Args:
        A: 실대칭 희소 행렬 (정확히 대칭)
        n_eigs: 구할 개수 (< dim/10)
        tol: ‖Av − λv‖ ≤ tol·‖A‖ 수렴 기준
        block_size: 란초스 블록 크기
        max_krylov: 크릴로프 부분공간 최대 차원
        sigma: 이동값 (기본: 게르슈고린 하한 − 여유)
        seed: 시작 블록 난수 시드

    Raises:
        SolverSizeError: n_eigs ≥ dim/10
        EigenSolverConvergenceError: max_krylov 안에서 미수렴
    """
    A = sp.csc_matrix(A, dtype=float)
    n = A.shape[0]
    if n_eigs < 1 or 10 * n_eigs >= n:
        raise SolverSizeError(f"n_eigs={n_eigs} 는 dim/10 = {n / 10:.1f} 보다 작아야 합니다")
    _check_symmetric(A)

    lower, upper = gershgorin_bounds(A)
    norm = max(abs(lower), abs(upper))
    if sigma is None:
        sigma = lower - 1e-3 * max(1.0, norm) ** 0.5
    lu = splu((A - sigma * sp.identity(n, format="csc")).tocsc())

    p = block_size
    max_dim = min(n, max(max_krylov, 4 * p + 2 * n_eigs))
    rng = np.random.default_rng(seed)
    V = np.zeros((n, max_dim))
    BV = np.zeros((n, max_dim))
    block, _ = np.linalg.qr(rng.standard_normal((n, p)))
    V[:, :p] = block
    filled = p
    previous = np.zeros((n, p))
    b_prev = np.zeros((p, p))

    diagnostics: Dict[str, Any] = {"n": n, "sigma": sigma, "norm": norm}
    iteration = 0
    best = None
    while True:
        iteration += 1
        j0 = filled - p
        current = V[:, j0:filled]
        W = lu.solve(current)
        BV[:, j0:filled] = W
        a_j = current.T @ W
        a_j = 0.5 * (a_j + a_j.T)
        W = W - current @ a_j - previous @ b_prev.T
        # 완전 재직교화 2회
        for _ in range(2):
            W = W - V[:, :filled] @ (V[:, :filled].T @ W)

        done = filled + p > max_dim
        if iteration % CHECK_EVERY == 0 or done:
            best = _rayleigh_ritz(A, V[:, :filled], BV[:, :filled], n_eigs, sigma)
            values, vectors, residuals = best
            worst = float(np.max(residuals / norm))
            diagnostics.update(iterations=iteration, krylov_dim=filled, worst_relative_residual=worst)
            if worst <= tol:
                logger.debug(f"란초스 수렴: dim={filled}, 반복={iteration}, 최대 잔차={worst:.2e}")
                return EigenResult(values, vectors, residuals, sigma, iteration, filled, norm)
        if done:
            break

        next_block, b_j = np.linalg.qr(W)
        if np.linalg.norm(b_j) < 1e-14 * max(1.0, abs(float(np.max(np.abs(a_j))))):
            # 불변 부분공간: 새 무작위 블록으로 계속
            fresh = rng.standard_normal((n, p))
            for _ in range(2):
                fresh = fresh - V[:, :filled] @ (V[:, :filled].T @ fresh)
            next_block, _ = np.linalg.qr(fresh)
            b_j = np.zeros((p, p))
        V[:, filled : filled + p] = next_block
        previous = current
        b_prev = b_j
        filled += p

    values, vectors, residuals = best
    logger.error(f"란초스 미수렴: {diagnostics}")
    raise EigenSolverConvergenceError(
        f"최저 고윳값 {n_eigs}개가 크릴로프 차원 {max_dim} 안에서 수렴하지 않았습니다", diagnostics
    )


def _rayleigh_ritz(A, V: np.ndarray, BV: np.ndarray, n_eigs: int, sigma: float):
    """(A − σ)⁻¹ 의 리츠 쌍을 A 의 고윳값으로 되돌림 (λ = vᵀAv)"""
    H = V.T @ BV
    H = 0.5 * (H + H.T)
    theta, Y = np.linalg.eigh(H)
    order = np.argsort(theta)[::-1][:n_eigs]
    vectors = V @ Y[:, order]
    vectors /= np.linalg.norm(vectors, axis=0)
    AV = A @ vectors
    values = np.einsum("ij,ij->j", vectors, AV)
    residuals = np.linalg.norm(AV - vectors * values, axis=0)
    idx = np.argsort(values)
    return values[idx], vectors[:, idx], residuals[idx]


def eigsh_reference(A, n_eigs: int, sigma: Optional[float] = None) -> np.ndarray:
    """ARPACK 이동-역변환 교차검증"""
    A = sp.csc_matrix(A, dtype=float)
    if sigma is None:
        sigma = gershgorin_bounds(A)[0] - 1e-3
    values = eigsh(A, k=n_eigs, sigma=sigma, which="LM", return_eigenvectors=False)
    return np.sort(values)
