"""시드 고정 난수와 밀집 선형대수 커널."""
from __future__ import annotations

import hashlib
import logging
import warnings

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

from ..middleware.errors import ConvergenceError, NonSymmetricMatrixError, NumericsError, SingularMatrixError
from ..models.types import Matrix

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-9
PIVOT_TOL = 1e-12


def as_matrix(values, name: str = "matrix", *, frozen: bool = False) -> Matrix:
    """2차원 float64 배열로 변환하고 유한값인지 검사. frozen이면 읽기 전용 사본."""
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 2:
        raise NumericsError(f"{name}: expected 2-d matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericsError(f"{name}: contains NaN or Inf")
    if frozen:
        arr.flags.writeable = False
    return arr


def derive_seed(*parts: object) -> int:
    """여러 값에서 64-bit 시드 유도 (sha256 앞 8바이트). 입력 순서에 의존."""
    key = "|".join(str(p.value if hasattr(p, "value") else p) for p in parts)
    return int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "little")


class RngStream:
    """Philox(counter 기반) 비트 생성기 위의 단일 소유 난수 스트림.

    같은 seed → 플랫폼과 무관하게 같은 난수열. 스레드 간 공유하지 않는다.
    """

    def __init__(self, seed: int) -> None:
        if not 0 <= int(seed) < 2**64:
            raise NumericsError(f"seed {seed} is not a 64-bit unsigned integer")
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))

    def child(self, *tags: object) -> "RngStream":
        """부모 상태와 무관한 하위 스트림 (seed와 tag로만 결정)."""
        return RngStream(derive_seed(self.seed, *tags))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def uniform(self, rows: int, cols: int) -> Matrix:
        return self._gen.random((rows, cols))

    def integers(self, low: int, high: int, rows: int, cols: int) -> NDArray[np.int64]:
        return self._gen.integers(low, high, size=(rows, cols))

    def permutation(self, n: int) -> NDArray[np.int64]:
        return self._gen.permutation(n)


def rng_normal(rng: RngStream, rows: int, cols: int, mean: float = 0.0, std: float = 1.0) -> Matrix:
    """i.i.d. N(mean, std²) 행렬."""
    if std < 0:
        raise NumericsError(f"std must be >= 0, got {std}")
    draws = rng.generator.standard_normal((rows, cols))
    if std == 0:
        return np.full((rows, cols), float(mean))
    return draws * std + mean


def check_symmetric(A: Matrix, tol: float = SYMMETRY_TOL) -> None:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSymmetricMatrixError(f"expected square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    asym = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if asym > tol * scale:
        raise NonSymmetricMatrixError(f"matrix is not symmetric (max |A - A^T| = {asym:.3e})")


def sym_eig(A: Matrix) -> tuple[NDArray[np.float64], Matrix]:
    """대칭 고유분해. 고유값 내림차순, 고유벡터는 열 (정규직교).

    부호는 각 열에서 절댓값 최대 성분이 양수가 되도록 고정한다.
    """
    A = np.asarray(A, dtype=np.float64)
    check_symmetric(A)
    sym = 0.5 * (A + A.T)
    try:
        vals, vecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigendecomposition did not converge: {exc}") from exc
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    pivot = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivot, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vals, vecs * signs


def solve_linear(A: Matrix, b: Matrix) -> Matrix:
    """LU (partial pivoting)로 A x = b. pivot 크기가 PIVOT_TOL 이하면 실패한 pivot을 알려줌."""
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NumericsError(f"solve_linear: A must be square, got {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise NumericsError(f"solve_linear: b has {b.shape[0]} rows, A has {A.shape[0]}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(A, check_finite=True)
    diag = np.diag(lu)
    bad = np.flatnonzero(np.abs(diag) <= PIVOT_TOL)
    if bad.size:
        raise SingularMatrixError(int(bad[0]), float(diag[bad[0]]))
    return linalg.lu_solve((lu, piv), b)


def condition_number(A: Matrix) -> float:
    s = np.linalg.svd(np.asarray(A, dtype=np.float64), compute_uv=False)
    if s[-1] == 0:
        return float("inf")
    return float(s[0] / s[-1])


def empirical_covariance(R: Matrix) -> Matrix:
    """열 평균을 뺀 뒤 1/n 정규화 공분산."""
    centered = R - R.mean(axis=0)
    return centered.T @ centered / R.shape[0]


def sym_inv_sqrt(A: Matrix) -> Matrix:
    """대칭 양정치 A의 A^(-1/2)."""
    vals, vecs = sym_eig(A)
    if vals[-1] <= 0:
        raise NumericsError(f"matrix is not positive definite (min eigenvalue {vals[-1]:.3e})")
    return (vecs / np.sqrt(vals)) @ vecs.T


def random_orthogonal(rng: RngStream, d: int) -> Matrix:
    """가우시안 행렬의 QR로 얻은 Haar 직교행렬."""
    q, r = np.linalg.qr(rng_normal(rng, d, d))
    return q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))
