"""Soft-margin RBF support vector machine trained with SMO.

The binary solver follows the second-order working-set selection of Fan,
Chen and Lin (2005) on the dual

    min_a  1/2 a'Qa - e'a   s.t.  0 <= a_i <= C,  y'a = 0,

with ``Q_ij = y_i y_j K(x_i, x_j)``.  Multiclass problems are handled
one-vs-one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from seamsentinel.classify.dataset import Dataset, Standardizer, check_schema, fit_standardizer
from seamsentinel.features import FeatureVector, Scheme
from seamsentinel.signal import Scenario

KKT_TOLERANCE = 1e-3
_TAU = 1e-12


class SvmConvergenceError(RuntimeError):
    def __init__(self, i: int, j: int, gap: float, iterations: int):
        self.pair = (i, j)
        self.gap = gap
        super().__init__(
            f"SMO did not converge after {iterations} iterations; "
            f"maximal violating pair ({i}, {j}) with KKT gap {gap:.3g}"
        )


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :]
          - 2.0 * A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@dataclass
class SmoResult:
    alpha: np.ndarray
    bias: float
    iterations: int
    gap: float


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float = KKT_TOLERANCE,
              max_iter: int = 200_000) -> SmoResult:
    """Solve the binary dual for a precomputed kernel matrix and labels +-1.

    The decision function is ``sum_i alpha_i y_i K(x_i, x) + bias``.
    """
    n = len(y)
    y = y.astype(np.float64)
    Q = K * np.outer(y, y)
    diag = np.diag(Q).copy()
    alpha = np.zeros(n)
    grad = -np.ones(n)
    iterations = 0
    while True:
        minus_yg = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        up_vals = np.where(up, minus_yg, -np.inf)
        i = int(np.argmax(up_vals))
        m_up = up_vals[i]
        low_vals = np.where(low, minus_yg, np.inf)
        m_low = float(np.min(low_vals))
        gap = m_up - m_low
        if gap < tol:
            break
        # second-order choice of j among violating members of I_low
        b = m_up - minus_yg
        cand = low & (b > 0)
        a = diag[i] + diag - 2.0 * y[i] * y * Q[i]
        a = np.where(a > 0, a, _TAU)
        score = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(score))
        if iterations >= max_iter:
            raise SvmConvergenceError(i, j, gap, iterations)
        iterations += 1

        ai_old, aj_old = alpha[i], alpha[j]
        quad = Q[i, i] + Q[j, j] - 2.0 * y[i] * y[j] * Q[i, j]
        if quad <= 0:
            quad = _TAU
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        grad += Q[i] * (ai - ai_old) + Q[j] * (aj - aj_old)

    # bias from free vectors, or the midpoint of the feasible interval
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        rho = float(np.mean(yg[free]))
    else:
        minus_yg = -yg
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        hi = np.max(minus_yg[up]) if np.any(up) else np.max(minus_yg)
        lo = np.min(minus_yg[low]) if np.any(low) else np.min(minus_yg)
        rho = -0.5 * float(hi + lo)
    return SmoResult(alpha, -rho, iterations, float(gap))


def kkt_residuals(K: np.ndarray, y: np.ndarray, alpha: np.ndarray, bias: float,
                  C: float) -> np.ndarray:
    """Per-variable violation of the KKT conditions of the soft-margin dual."""
    y = y.astype(np.float64)
    margin = y * (K @ (alpha * y) + bias) - 1.0
    at_zero = alpha <= 0
    at_c = alpha >= C
    free = ~(at_zero | at_c)
    res = np.zeros_like(margin)
    res[at_zero] = np.maximum(0.0, -margin[at_zero])
    res[at_c] = np.maximum(0.0, margin[at_c])
    res[free] = np.abs(margin[free])
    return res


@dataclass(frozen=True, eq=False)
class BinarySvm:
    positive: int
    negative: int
    support_vectors: np.ndarray
    alpha: np.ndarray
    sv_labels: np.ndarray
    bias: float

    def decision(self, Z: np.ndarray, gamma: float) -> np.ndarray:
        if len(self.alpha) == 0:
            return np.full(len(Z), self.bias)
        return rbf_kernel(Z, self.support_vectors, gamma) @ (self.alpha * self.sv_labels) + self.bias


@dataclass(frozen=True, eq=False)
class SvmModel:
    names: tuple[str, ...]
    scheme: Scheme
    scenario: Scenario | None
    standardizer: Standardizer
    classes: tuple[int, ...]
    C: float
    gamma: float
    machines: tuple[BinarySvm, ...]
    seed: int = 0
    info: dict = field(default_factory=dict)

    kind = "svm"

    def _votes(self, Z: np.ndarray) -> np.ndarray:
        index = {c: k for k, c in enumerate(self.classes)}
        votes = np.zeros((len(Z), len(self.classes)), dtype=np.int64)
        rows = np.arange(len(Z))
        for m in self.machines:
            d = m.decision(Z, self.gamma)
            winner = np.where(d > 0, index[m.positive], index[m.negative])
            np.add.at(votes, (rows, winner), 1)
        return votes

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        Z = self.standardizer.transform(np.asarray(X, dtype=np.float64).reshape(-1, len(self.names)))
        # argmax returns the first maximum, i.e. the lowest class id on ties
        return np.asarray(self.classes)[np.argmax(self._votes(Z), axis=1)]

    def predict(self, fv: FeatureVector) -> int:
        check_schema(self.names, fv.names)
        return int(self.predict_matrix(fv.values[None, :])[0])


def resolve_gamma(gamma, Z: np.ndarray) -> float:
    if isinstance(gamma, str):
        if gamma != "scale":
            raise ValueError(f"gamma must be positive or 'scale', got {gamma!r}")
        var = float(Z.var())
        return 1.0 / (Z.shape[1] * var) if var > 0 else 1.0
    gamma = float(gamma)
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return gamma


def train_svm(train: Dataset, C: float = 1.0, gamma: float | str = "scale", seed: int = 0,
              tol: float = KKT_TOLERANCE, max_iter: int = 200_000) -> SvmModel:
    """Fit a standardizer on ``train`` and one binary SVM per class pair."""
    if not C > 0:
        raise ValueError("C must be positive")
    classes = tuple(int(c) for c in train.classes)
    if len(classes) < 2:
        raise ValueError("training data needs at least 2 classes")
    st = fit_standardizer(train)
    Z = st.transform(train.X)
    g = resolve_gamma(gamma, Z)
    K_full = rbf_kernel(Z, Z, g)
    machines = []
    for a, b in combinations(classes, 2):
        idx = np.nonzero((train.y == a) | (train.y == b))[0]
        yy = np.where(train.y[idx] == a, 1, -1)
        res = smo_solve(K_full[np.ix_(idx, idx)], yy, C, tol=tol, max_iter=max_iter)
        sv = res.alpha > 0
        machines.append(BinarySvm(a, b, Z[idx][sv], res.alpha[sv], yy[sv].astype(np.float64),
                                  res.bias))
    return SvmModel(train.names, train.scheme, train.scenario, st, classes, float(C), g,
                    tuple(machines), int(seed))
