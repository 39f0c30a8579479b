"""Per-class weighted ridge surrogates: the linear comparator baseline.

The normal-equation system is solved in closed form with the intercept
left unpenalized (the standard convention)."""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFitError
from .tree import materialize_targets

DEFAULT_ALPHA = 1.0


@dataclass
class LinearSurrogate:
    intercept: float
    coefficients: np.ndarray
    class_index: int
    alpha: float

    def predict(self, points):
        X = np.asarray(points, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        return self.intercept + X @ self.coefficients

    def to_json(self):
        return {"class": int(self.class_index), "alpha": float(self.alpha),
                "intercept": float(self.intercept),
                "coefficients": [float(c) for c in self.coefficients]}


def fit_ridge(points, targets, weights, alpha=DEFAULT_ALPHA, class_index=0):
    """Minimize sum_i w_i (y_i - b - beta.x_i)^2 + alpha * ||beta||^2."""
    X = np.asarray(points, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if X.shape[0] != y.shape[0] or X.shape[0] != w.shape[0]:
        raise ValueError("shape mismatch")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    n, d = X.shape
    Xa = np.hstack([np.ones((n, 1)), X])
    A = Xa.T @ (w[:, None] * Xa)
    penalty = np.eye(d + 1) * alpha
    penalty[0, 0] = 0.0  # intercept unpenalized
    A = A + penalty
    b = Xa.T @ (w * y)
    try:
        theta = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        raise DegenerateFitError("singular normal-equation system")
    residual = np.abs(A @ theta - b).max()
    scale = max(1.0, np.abs(b).max())
    if residual > 1e-6 * scale:
        raise DegenerateFitError("ill-conditioned normal-equation system")
    return LinearSurrogate(intercept=float(theta[0]), coefficients=theta[1:],
                           class_index=class_index, alpha=alpha)


@dataclass
class LimeExplanation:
    surrogates: list          # one LinearSurrogate per class
    ranking: dict             # class -> segment ids by descending |coef|

    def to_json(self):
        return {"surrogates": [s.to_json() for s in self.surrogates],
                "ranking": {str(k): [int(i) for i in v]
                            for k, v in self.ranking.items()}}


def lime_explain(bb, domain, sample, classes, alpha=DEFAULT_ALPHA):
    """Independent ridge fit per explained class on the shared weighted
    sample, with segments ranked by coefficient magnitude."""
    classes = list(classes)
    if not classes:
        raise ValueError("classes must be non-empty")
    targets = materialize_targets(bb, domain, sample.points, classes)
    surrogates = []
    ranking = {}
    for col, c in enumerate(classes):
        surr = fit_ridge(sample.points, targets[:, col], sample.weights,
                         alpha=alpha, class_index=c)
        surrogates.append(surr)
        ranking[c] = list(np.argsort(-np.abs(surr.coefficients), kind="stable"))
    return LimeExplanation(surrogates=surrogates, ranking=ranking)
