"""평가 지표: MCC(최적 매칭), 평균 R², 평균 정확도, 하위 readout."""
from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..middleware.errors import MetricError
from ..models.types import Matrix
from ..schemas.experiment import TaskType
from .numerics import RngStream, rng_normal, solve_linear

logger = logging.getLogger(__name__)

RIDGE_LAMBDA = 1e-6
LOGISTIC_ITERS = 2000
LOGISTIC_LR = 0.1
LOGISTIC_GRAD_TOL = 1e-6


def corr_matrix(Z: Matrix, Zhat: Matrix) -> Matrix:
    """ρ_ij = Z 열 i 와 Ẑ 열 j 의 Pearson 상관. 분산 0인 열의 상관은 0."""
    Z = np.asarray(Z, dtype=np.float64)
    Zhat = np.asarray(Zhat, dtype=np.float64)
    if Z.ndim != 2 or Zhat.ndim != 2 or Z.shape[0] != Zhat.shape[0]:
        raise MetricError(f"corr_matrix: row mismatch {Z.shape} vs {Zhat.shape}")
    n = Z.shape[0]
    if n < 3:
        raise MetricError(f"corr_matrix: need at least 3 rows, got {n}")
    zc = Z - Z.mean(axis=0)
    hc = Zhat - Zhat.mean(axis=0)
    z_norm = np.sqrt(np.sum(zc**2, axis=0))
    h_norm = np.sqrt(np.sum(hc**2, axis=0))
    tiny = 1e-12 * np.sqrt(n)
    z_dead = z_norm <= tiny * np.maximum(1.0, np.abs(Z).max(axis=0))
    h_dead = h_norm <= tiny * np.maximum(1.0, np.abs(Zhat).max(axis=0))
    if z_dead.any() or h_dead.any():
        logger.warning(
            "corr_matrix: zero-variance column(s) (true %s, predicted %s) scored as correlation 0",
            np.flatnonzero(z_dead).tolist(),
            np.flatnonzero(h_dead).tolist(),
        )
    rho = (zc.T @ hc) / np.outer(np.where(z_dead, 1.0, z_norm), np.where(h_dead, 1.0, h_norm))
    rho[z_dead, :] = 0.0
    rho[:, h_dead] = 0.0
    return np.clip(rho, -1.0, 1.0)


def _hungarian_min(cost: Matrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """O(n³) 최단 증가경로 헝가리안. (행→열 배정, 행 potential u, 열 potential v).

    종료 시 cost_ij − u_i − v_j ≥ 0, 배정된 칸에서는 0.
    """
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)  # p[j]: 열 j에 배정된 행 (1부터, 0은 없음)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = cost[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            used_cols = np.flatnonzero(used)
            u[p[used_cols]] += delta
            v[used_cols] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    assignment = np.empty(n, dtype=np.int64)
    assignment[p[1:] - 1] = np.arange(n)
    return assignment, u[1:], v[1:]


def _reroute(tight: np.ndarray, match_row: np.ndarray, match_col: np.ndarray,
             start_row: int, target_col: int, banned_cols: np.ndarray) -> list[tuple[int, int]] | None:
    """tight 그래프에서 start_row → target_col 교대 경로 (BFS). 경로의 (행, 새 열) 목록."""
    parent: dict[int, int] = {}  # 열 → 그 열에 도달한 행
    queue = deque([start_row])
    seen_cols = banned_cols.copy()
    while queue:
        row = queue.popleft()
        for col in np.flatnonzero(tight[row] & ~seen_cols):
            seen_cols[col] = True
            parent[col] = row
            if col == target_col:
                path = []
                c = col
                while True:
                    r = parent[c]
                    path.append((r, c))
                    if r == start_row:
                        return path
                    c = match_row[r]
            queue.append(match_col[col])
    return None


def hungarian_max(score: Matrix) -> np.ndarray:
    """선택 합을 최대화하는 순열 (perm[i] = 행 i의 열). 동점이면 사전순 최소 순열."""
    score = np.asarray(score, dtype=np.float64)
    if score.ndim != 2 or score.shape[0] != score.shape[1]:
        raise MetricError(f"hungarian_max: expected square matrix, got {score.shape}")
    if not np.all(np.isfinite(score)):
        raise MetricError("hungarian_max: non-finite entries")
    n = score.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    cost = -score
    match_row, u, v = _hungarian_min(cost)

    # 최적 쌍대해의 tight 그래프 안의 완전매칭은 모두 최적 → 사전순 최소를 행 순서대로 고정
    eps = 1e-9 * max(1.0, float(np.max(np.abs(cost))))
    tight = (cost - u[:, None] - v[None, :]) <= eps
    match_col = np.empty(n, dtype=np.int64)
    match_col[match_row] = np.arange(n)
    locked_cols = np.zeros(n, dtype=bool)
    for i in range(n):
        for j in np.flatnonzero(tight[i] & ~locked_cols):
            if match_row[i] == j:
                break
            r, c = match_col[j], match_row[i]
            banned = locked_cols.copy()
            banned[j] = True
            path = _reroute(tight, match_row, match_col, r, c, banned)
            if path is None:
                continue
            for row, col in path:
                match_row[row] = col
                match_col[col] = row
            match_row[i] = j
            match_col[j] = i
            break
        locked_cols[match_row[i]] = True
    return match_row


def brute_force_max(score: Matrix) -> np.ndarray:
    """모든 순열 열거 (작은 d 검증용). 동점이면 사전순 최소."""
    n = score.shape[0]
    best, best_perm = -np.inf, None
    for perm in itertools.permutations(range(n)):
        total = float(score[np.arange(n), perm].sum())
        if total > best + 1e-12:
            best, best_perm = total, perm
    return np.asarray(best_perm, dtype=np.int64)


def mcc(Z: Matrix, Zhat: Matrix) -> float:
    """|ρ|에서 최적 매칭한 쌍들의 평균 절대 상관. 열 수가 다르면 0으로 채워 맞춘다."""
    abs_rho = np.abs(corr_matrix(Z, Zhat))
    d, d_hat = abs_rho.shape
    m = max(d, d_hat)
    padded = np.zeros((m, m))
    padded[:d, :d_hat] = abs_rho
    perm = hungarian_max(padded)
    return float(np.clip(padded[np.arange(d), perm[:d]].mean(), 0.0, 1.0))


def identified_up_to_permutation_scaling(Z: Matrix, Zhat: Matrix, tol: float = 1e-6) -> bool:
    return mcc(Z, Zhat) >= 1.0 - tol


def r2_avg(Y: Matrix, Yhat: Matrix) -> float:
    """과제별 R² 평균."""
    Y = np.asarray(Y, dtype=np.float64)
    Yhat = np.asarray(Yhat, dtype=np.float64)
    if Y.shape != Yhat.shape:
        raise MetricError(f"r2_avg: shape mismatch {Y.shape} vs {Yhat.shape}")
    if Y.shape[0] < 2:
        raise MetricError("r2_avg: need at least 2 rows")
    ss_tot = np.sum((Y - Y.mean(axis=0)) ** 2, axis=0)
    if np.any(ss_tot <= 0):
        raise MetricError(f"r2_avg: zero-variance task(s) {np.flatnonzero(ss_tot <= 0).tolist()}")
    ss_res = np.sum((Y - Yhat) ** 2, axis=0)
    return float(np.mean(1.0 - ss_res / ss_tot))


def _check_binary(M: Matrix, name: str) -> None:
    if not np.all((M == 0.0) | (M == 1.0)):
        raise MetricError(f"{name}: entries must be 0 or 1")


def threshold(P: Matrix, cut: float = 0.5) -> Matrix:
    return (np.asarray(P) >= cut).astype(np.float64)


def accuracy_avg(Y: Matrix, Yhat_binary: Matrix) -> float:
    Y = np.asarray(Y, dtype=np.float64)
    Yhat_binary = np.asarray(Yhat_binary, dtype=np.float64)
    if Y.shape != Yhat_binary.shape:
        raise MetricError(f"accuracy_avg: shape mismatch {Y.shape} vs {Yhat_binary.shape}")
    _check_binary(Y, "accuracy_avg labels")
    _check_binary(Yhat_binary, "accuracy_avg predictions")
    return float(np.mean(np.mean(Y == Yhat_binary, axis=0)))


def score_labels(Y: Matrix, Yhat: Matrix, task_type: TaskType) -> float:
    """회귀는 R², 분류는 확률 Yhat을 0.5에서 잘라 정확도."""
    if task_type == TaskType.regression:
        return r2_avg(Y, Yhat)
    return accuracy_avg(Y, threshold(Yhat))


@dataclass(frozen=True)
class Readout:
    """affine d→k 예측기와 held-out 점수."""

    weight: Matrix  # k×d
    bias: np.ndarray  # (k,)
    score: float
    converged: bool | None = None

    def predict(self, R: Matrix) -> Matrix:
        return R @ self.weight.T + self.bias


def _design(R: Matrix) -> Matrix:
    return np.hstack([R, np.ones((R.shape[0], 1))])


def _fit_ridge(R: Matrix, Y: Matrix) -> Matrix:
    A = _design(R)
    gram = A.T @ A + RIDGE_LAMBDA * np.eye(A.shape[1])
    return solve_linear(gram, A.T @ Y)


def _fit_logistic(R: Matrix, Y: Matrix, rng: RngStream | None) -> tuple[Matrix, bool]:
    """과제별 로지스틱 회귀, 전체 배치 경사하강 (과제끼리 독립이라 한 번에 계산)."""
    _check_binary(Y, "downstream_readout labels")
    A = _design(R)
    n = A.shape[0]
    if rng is None:
        W = np.zeros((A.shape[1], Y.shape[1]))
    else:
        W = rng_normal(rng, A.shape[1], Y.shape[1], 0.0, 0.01)
    for _ in range(LOGISTIC_ITERS):
        G = A.T @ (expit(A @ W) - Y) / n
        if np.max(np.abs(G)) < LOGISTIC_GRAD_TOL:
            return W, True
        W = W - LOGISTIC_LR * G
    return W, False


def downstream_readout(
    R_train: Matrix,
    Y_train: Matrix,
    R_test: Matrix,
    Y_test: Matrix,
    task_type: TaskType,
    rng: RngStream | None = None,
) -> Readout:
    """train 표현으로 선형(회귀) / 로지스틱(분류) readout을 맞추고 test에서 점수."""
    if R_train.shape[1] != R_test.shape[1]:
        raise MetricError(f"downstream_readout: train has {R_train.shape[1]} columns, test {R_test.shape[1]}")
    if task_type == TaskType.regression:
        W = _fit_ridge(R_train, Y_train)
        converged = None
        score = r2_avg(Y_test, _design(R_test) @ W)
    else:
        W, converged = _fit_logistic(R_train, Y_train, rng)
        score = accuracy_avg(Y_test, threshold(expit(_design(R_test) @ W)))
    return Readout(weight=W[:-1].T, bias=W[-1], score=score, converged=converged)


def affine_identification_r2(R_train: Matrix, Z_train: Matrix, R_test: Matrix, Z_test: Matrix) -> float:
    """표현에서 각 참 잠재변수로의 affine 회귀 R² 평균 (affine 변환까지의 식별 정도)."""
    return downstream_readout(R_train, Z_train, R_test, Z_test, TaskType.regression).score


def independence_gap(Z: Matrix, max_order: int = 3) -> float:
    """열 부분집합(2..max_order)의 결합 빈도와 주변 빈도 곱의 최대 차이. 이진이 아니면 중앙값 기준 이진화."""
    Z = np.asarray(Z, dtype=np.float64)
    B = Z if np.all((Z == 0) | (Z == 1)) else (Z > np.median(Z, axis=0)).astype(np.float64)
    marg = B.mean(axis=0)
    gap = 0.0
    for order in range(2, max_order + 1):
        for cols in itertools.combinations(range(B.shape[1]), order):
            for values in itertools.product((0.0, 1.0), repeat=order):
                joint = np.mean(np.all(B[:, cols] == values, axis=1))
                product = np.prod([marg[c] if v else 1.0 - marg[c] for c, v in zip(cols, values)])
                gap = max(gap, abs(joint - product))
    return float(gap)
