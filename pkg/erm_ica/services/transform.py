"""표현 후처리 선형 변환 — 백색화, PCA 기준선, 고정점 ICA.

ICA는 백색화된 좌표에서 대칭(병렬) 고정점 반복으로 비가우시안성을 최대화한다:
W ← E[g(W x) xᵀ] − diag(E[g'(W x)]) W, 이어서 W ← (W Wᵀ)^(-1/2) W.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable

import numpy as np

from ..config.settings import settings
from ..middleware.errors import TransformError
from ..models.transform import LinearTransform
from ..models.types import Matrix
from ..schemas.artifacts import TransformFile, TransformKind
from ..schemas.experiment import IcaContrast
from ..utils.io import read_json, write_json
from .numerics import RngStream, empirical_covariance, random_orthogonal, sym_eig, sym_inv_sqrt

logger = logging.getLogger(__name__)

RANK_TOL = 1e-10

Contrast = Callable[[Matrix, float], tuple[Matrix, np.ndarray]]


def _check_fit_input(R: Matrix, name: str) -> Matrix:
    R = np.asarray(R, dtype=np.float64)
    if R.ndim != 2:
        raise TransformError(f"{name}: expected n×d matrix, got shape {R.shape}")
    n, d = R.shape
    if n <= d:
        raise TransformError(f"{name}: need more rows than columns (n={n}, d={d})")
    if not np.all(np.isfinite(R)):
        raise TransformError(f"{name}: input contains NaN or Inf")
    return R


def fit_whiten(R: Matrix) -> LinearTransform:
    """V = UΛ²Uᵀ 고유분해 후 Λ⁻¹Uᵀ. λ ≤ 1e-10·λ_max 방향은 버림 (V의 range space로 사영)."""
    R = _check_fit_input(R, "fit_whiten")
    mean = R.mean(axis=0)
    vals, vecs = sym_eig(empirical_covariance(R))
    if vals[0] <= 0:
        raise TransformError("fit_whiten: covariance has rank 0")
    keep = vals > RANK_TOL * vals[0]
    if not np.all(keep):
        logger.debug("fit_whiten: dropping %d null direction(s)", int((~keep).sum()))
    matrix = vecs[:, keep].T / np.sqrt(vals[keep])[:, None]
    return LinearTransform(matrix=matrix, offset=mean, kind=TransformKind.whiten)


def fit_pca(R: Matrix) -> LinearTransform:
    """공분산 고유기저로 회전만 (분산 스케일 없음)."""
    R = _check_fit_input(R, "fit_pca")
    mean = R.mean(axis=0)
    _, vecs = sym_eig(empirical_covariance(R))
    return LinearTransform(matrix=vecs.T, offset=mean, kind=TransformKind.pca)


def _logcosh(x: Matrix, alpha: float) -> tuple[Matrix, np.ndarray]:
    gx = np.tanh(alpha * x)
    return gx, (alpha * (1.0 - gx**2)).mean(axis=0)


def _exp(x: Matrix, alpha: float) -> tuple[Matrix, np.ndarray]:
    e = np.exp(-(x**2) / 2.0)
    return x * e, ((1.0 - x**2) * e).mean(axis=0)


def _cube(x: Matrix, alpha: float) -> tuple[Matrix, np.ndarray]:
    return x**3, (3.0 * x**2).mean(axis=0)


CONTRASTS: dict[IcaContrast, Contrast] = {
    IcaContrast.logcosh: _logcosh,
    IcaContrast.exp: _exp,
    IcaContrast.cube: _cube,
}


def sym_decorrelation(W: Matrix) -> Matrix:
    """W ← (W Wᵀ)^(-1/2) W."""
    return sym_inv_sqrt(W @ W.T) @ W


def fit_ica(
    R: Matrix,
    max_iter: int | None = None,
    tol: float | None = None,
    *,
    rng: RngStream | None = None,
    fun: IcaContrast = IcaContrast.logcosh,
    alpha: float = 1.0,
) -> LinearTransform:
    """백색화 후 대칭 고정점 ICA. 수렴 실패는 예외가 아니라 converged=False로 기록."""
    max_iter = settings.ica_max_iter if max_iter is None else max_iter
    tol = settings.ica_tol if tol is None else tol
    whitener = fit_whiten(R)
    Xw = (np.asarray(R, dtype=np.float64) - whitener.offset) @ whitener.matrix.T
    n, p = Xw.shape
    g = CONTRASTS[fun]

    rng = rng if rng is not None else RngStream(0)
    W = sym_decorrelation(random_orthogonal(rng, p))
    best_W, best_lim = W, np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        gwx, g_wx = g(Xw @ W.T, alpha)
        W1 = sym_decorrelation(gwx.T @ Xw / n - g_wx[:, None] * W)
        lim = float(np.max(np.abs(np.abs(np.einsum("ij,ij->i", W1, W)) - 1.0)))
        W = W1
        if lim < best_lim:
            best_W, best_lim = W, lim
        if lim < tol:
            converged = True
            break

    if not converged:
        logger.warning("fit_ica: no convergence in %d iterations (best |<w_new, w_old>| - 1 = %.3e)", max_iter, best_lim)
        W = best_W
    return LinearTransform(
        matrix=W @ whitener.matrix,
        offset=whitener.offset,
        kind=TransformKind.ica,
        converged=converged,
        iterations=it,
        unmixing=W,
        whitener=whitener,
    )


def apply_transform(t: LinearTransform, R: Matrix) -> Matrix:
    """(R − offsetᵀ)·matrixᵀ."""
    R = np.asarray(R, dtype=np.float64)
    if R.ndim != 2 or R.shape[1] != t.in_dim:
        raise TransformError(f"apply_transform: expected {t.in_dim} columns, got shape {R.shape}")
    return (R - t.offset) @ t.matrix.T


def save_transform(t: LinearTransform, path: Path) -> Path:
    payload = TransformFile(
        kind=t.kind,
        matrix=t.matrix.tolist(),
        offset=np.asarray(t.offset).tolist(),
        converged=t.converged,
        iterations=t.iterations,
    )
    write_json(Path(path), payload.model_dump(mode="json"))
    return Path(path)


def load_transform(path: Path) -> LinearTransform:
    f = TransformFile.model_validate(read_json(Path(path)))
    matrix = np.asarray(f.matrix, dtype=np.float64)
    offset = np.asarray(f.offset, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != offset.size:
        raise TransformError(f"transform file {path}: matrix {matrix.shape} does not match offset ({offset.size})")
    return LinearTransform(matrix=matrix, offset=offset, kind=f.kind, converged=f.converged, iterations=f.iterations)
