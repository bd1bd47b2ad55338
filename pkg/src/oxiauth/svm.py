"""Kernel SVMs trained by SMO-style coordinate ascent on the dual.

Both the soft-margin binary machine and the nu-parameterized one-class
machine reduce to the same box-constrained QP

    min_a  0.5 a'Qa + p'a   s.t.  y'a = const,  0 <= a_i <= C_i

solved here by repeatedly picking the maximal violating pair and moving the
two coordinates analytically. Convergence is declared when the largest KKT
violation drops below ``tol`` (default 1e-3) or after ``max_passes`` pair
updates.
"""

from dataclasses import dataclass

import numpy as np

KKT_TOL = 1e-3
MAX_PASSES = 10_000


def rbf_kernel(x: np.ndarray, y: np.ndarray, gamma: float) -> np.ndarray:
    """K(u, v) = exp(-gamma * ||u - v||^2) for all row pairs of x and y."""
    sq = (
        np.sum(x * x, axis=1)[:, None]
        + np.sum(y * y, axis=1)[None, :]
        - 2.0 * (x @ y.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def poly_kernel(x: np.ndarray, y: np.ndarray, gamma: float, degree: int) -> np.ndarray:
    """K(u, v) = (gamma * u.v + 1)^degree for all row pairs of x and y."""
    return (gamma * (x @ y.T) + 1.0) ** degree


def make_kernel(kind: str, gamma: float, degree: int = 3):
    if kind == "rbf":
        return lambda x, y: rbf_kernel(x, y, gamma)
    if kind == "poly":
        return lambda x, y: poly_kernel(x, y, gamma, degree)
    raise ValueError(f"unknown kernel {kind!r}")


def _smo_solve(K, y, upper, p, alpha, tol, max_passes):
    """Maximal-violating-pair SMO on min 0.5 a'Qa + p'a, Q_ij = y_i y_j K_ij.

    ``alpha`` is the start point (modified in place); returns (alpha, grad,
    passes, converged). grad is the gradient of the objective at the optimum.
    """
    n = len(y)
    Q = (y[:, None] * y[None, :]) * K
    grad = Q @ alpha + p
    passes = 0
    converged = False
    while passes < max_passes:
        yg = -y * grad
        up_mask = ((y > 0) & (alpha < upper)) | ((y < 0) & (alpha > 0))
        low_mask = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < upper))
        if not up_mask.any() or not low_mask.any():
            converged = True
            break
        up_idx = np.nonzero(up_mask)[0]
        low_idx = np.nonzero(low_mask)[0]
        i = up_idx[np.argmax(yg[up_idx])]
        j = low_idx[np.argmin(yg[low_idx])]
        m = yg[i]
        big_m = yg[j]
        if m - big_m < tol:
            converged = True
            break
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0.0:
            quad = 1e-12
        lam = (m - big_m) / quad
        # box caps along the direction d_i = +y_i*lam, d_j = -y_j*lam
        lam = min(lam, upper - alpha[i] if y[i] > 0 else alpha[i])
        lam = min(lam, alpha[j] if y[j] > 0 else upper - alpha[j])
        if lam <= 0.0:
            converged = True
            break
        alpha[i] = min(max(alpha[i] + y[i] * lam, 0.0), upper)
        alpha[j] = min(max(alpha[j] - y[j] * lam, 0.0), upper)
        grad += lam * y * (K[:, i] - K[:, j])
        passes += 1
    return alpha, grad, passes, converged


def _bias_from_state(y, grad, alpha, upper):
    """Offset satisfying the KKT conditions of the converged dual."""
    yg = -y * grad
    free = (alpha > 1e-12) & (alpha < upper - 1e-12)
    if free.any():
        return float(np.mean(yg[free]))
    up_mask = ((y > 0) & (alpha < upper)) | ((y < 0) & (alpha > 0))
    low_mask = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < upper))
    m = yg[up_mask].max() if up_mask.any() else 0.0
    big_m = yg[low_mask].min() if low_mask.any() else 0.0
    return float((m + big_m) / 2.0)


@dataclass
class BinarySVM:
    """Soft-margin binary SVM; decision f(x) = sum a_i y_i K(x_i, x) + b."""

    kernel_kind: str
    gamma: float
    degree: int
    C: float
    support_vectors: np.ndarray = None
    dual_coef: np.ndarray = None  # alpha_i * y_i over support vectors
    bias: float = 0.0
    # full-problem state kept for KKT inspection
    alpha: np.ndarray = None
    train_x: np.ndarray = None
    train_y: np.ndarray = None
    passes: int = 0
    converged: bool = False

    def fit(self, x: np.ndarray, y: np.ndarray, tol: float = KKT_TOL, max_passes: int = MAX_PASSES):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if set(np.unique(y).tolist()) - {-1.0, 1.0}:
            raise ValueError("labels must be +1/-1")
        if len(set(y.tolist())) < 2:
            raise ValueError("binary SVM requires both classes")
        kernel = make_kernel(self.kernel_kind, self.gamma, self.degree)
        K = kernel(x, x)
        alpha = np.zeros(len(y))
        alpha, grad, self.passes, self.converged = _smo_solve(
            K, y, self.C, -np.ones(len(y)), alpha, tol, max_passes
        )
        self.bias = _bias_from_state(y, grad, alpha, self.C)
        self.alpha = alpha
        self.train_x = x
        self.train_y = y
        sv = alpha > 1e-12
        self.support_vectors = x[sv].copy()
        self.dual_coef = (alpha[sv] * y[sv]).copy()
        return self

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        kernel = make_kernel(self.kernel_kind, self.gamma, self.degree)
        if len(self.support_vectors) == 0:
            return np.full(len(x), self.bias)
        K = kernel(x, self.support_vectors)
        return K @ self.dual_coef + self.bias


@dataclass
class OneClassSVM:
    """nu-parameterized one-class SVM; f(x) = sum a_i K(x_i, x) - rho.

    nu upper-bounds the fraction of training points outside the learned
    region and lower-bounds the support-vector fraction.
    """

    kernel_kind: str
    gamma: float
    degree: int
    nu: float
    support_vectors: np.ndarray = None
    dual_coef: np.ndarray = None
    rho: float = 0.0
    alpha: np.ndarray = None
    train_x: np.ndarray = None
    passes: int = 0
    converged: bool = False

    def fit(self, x: np.ndarray, tol: float = KKT_TOL, max_passes: int = MAX_PASSES):
        if not (0.0 < self.nu <= 1.0):
            raise ValueError(f"nu must be in (0, 1], got {self.nu}")
        x = np.asarray(x, dtype=float)
        n = len(x)
        if n < 2:
            raise ValueError("one-class SVM requires at least 2 rows")
        kernel = make_kernel(self.kernel_kind, self.gamma, self.degree)
        K = kernel(x, x)
        upper = 1.0 / (self.nu * n)
        # feasible start: sum alpha = 1 with the first floor(nu*n) at the cap
        alpha = np.zeros(n)
        n_cap = int(self.nu * n)
        alpha[:n_cap] = upper
        if n_cap < n:
            alpha[n_cap] = 1.0 - n_cap * upper
        y = np.ones(n)
        alpha, grad, self.passes, self.converged = _smo_solve(
            K, y, upper, np.zeros(n), alpha, tol, max_passes
        )
        # for p = 0, grad_i = (K alpha)_i = f(x_i) + rho; free SVs sit at rho
        self.rho = -_bias_from_state(y, grad, alpha, upper)
        self.alpha = alpha
        self.train_x = x
        sv = alpha > 1e-12
        self.support_vectors = x[sv].copy()
        self.dual_coef = alpha[sv].copy()
        return self

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        kernel = make_kernel(self.kernel_kind, self.gamma, self.degree)
        K = kernel(x, self.support_vectors)
        return K @ self.dual_coef - self.rho


def kkt_violation(model: BinarySVM) -> float:
    """Largest violation of the binary KKT conditions at the solution.

    For each training point with margin m_i = y_i f(x_i): alpha_i = 0 demands
    m_i >= 1, alpha_i = C demands m_i <= 1, interior alpha demands m_i = 1.
    """
    f = model.decision_function(model.train_x)
    margins = model.train_y * f
    worst = 0.0
    for a, m in zip(model.alpha, margins):
        if a <= 1e-9:
            worst = max(worst, 1.0 - m)
        elif a >= model.C - 1e-9:
            worst = max(worst, m - 1.0)
        else:
            worst = max(worst, abs(m - 1.0))
    return float(worst)
