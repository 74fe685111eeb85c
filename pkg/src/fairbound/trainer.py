"""Regularized softmax regression solved to high precision.

The training objective is the mean softmax cross-entropy plus a ridge term
(lam/2)*||W||_F^2.  This objective is lam-strongly-convex and
(B^2 + lam)-smooth where B bounds the feature norms, and each per-example
loss is (sqrt(2)*B + lam*R)-Lipschitz over the radius-R ball, because the
softmax-minus-onehot residual never exceeds sqrt(2) in Euclidean norm.
Those three constants drive every privacy noise scale and distance bound
downstream, so they are computed here, next to the loss they describe.

The solver is deterministic full-batch gradient descent with step 1/beta:
not the fastest choice, but bit-reproducible, which the end-to-end
determinism guarantees require.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp, softmax

from .dataset import Dataset, Example
from .exceptions import ConvergenceError
from .model import LinearModel

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITERS = 200_000


@dataclass(frozen=True)
class LossConstants:
    """Constants of the training loss on the radius-R ball.

    lam: ridge weight; equals the strong convexity constant.
    loss_lipschitz: upper bound on per-example gradient norms over the ball
        (sqrt(2)*B + lam*R).
    smoothness: upper bound on the objective's smoothness (B^2 + lam).
    """

    lam: float
    strong_convexity: float
    loss_lipschitz: float
    smoothness: float
    radius: float
    feature_bound: float

    def __post_init__(self):
        if self.lam <= 0 or self.radius <= 0:
            raise ValueError("lam and radius must be positive")


def constants(d: Dataset, lam: float, radius: float) -> LossConstants:
    return constants_from_feature_bound(lam, d.feature_norm_bound, radius)


def constants_from_feature_bound(lam: float, feature_bound: float, radius: float) -> LossConstants:
    if lam <= 0 or radius <= 0:
        raise ValueError("lam and radius must be positive")
    if feature_bound < 0:
        raise ValueError("feature bound must be nonnegative")
    return LossConstants(
        lam=lam,
        strong_convexity=lam,
        loss_lipschitz=math.sqrt(2.0) * feature_bound + lam * radius,
        smoothness=feature_bound**2 + lam,
        radius=radius,
        feature_bound=feature_bound,
    )


def _objective_value(weights: np.ndarray, d: Dataset, lam: float) -> float:
    scores = d.features @ weights.T
    ce = logsumexp(scores, axis=1) - scores[np.arange(d.n), d.labels]
    return float(np.mean(ce) + 0.5 * lam * np.sum(weights**2))


def loss(m: LinearModel, d: Dataset, lam: float) -> float:
    """Objective value: mean cross-entropy plus (lam/2)*||W||_F^2."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    return _objective_value(m.weights, d, lam)


def gradient(m: LinearModel, example: Example, lam: float) -> np.ndarray:
    """Per-example loss gradient: (softmax(Wx) - onehot(y)) x^T + lam*W."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    residual = softmax(m.scores(example.features))
    residual[example.label] -= 1.0
    return np.outer(residual, example.features) + lam * m.weights


def objective_gradient(weights: np.ndarray, d: Dataset, lam: float) -> np.ndarray:
    """Full-batch gradient of the objective at the given weight matrix."""
    probs = softmax(d.features @ weights.T, axis=1)
    probs[np.arange(d.n), d.labels] -= 1.0
    return probs.T @ d.features / d.n + lam * weights


def fit_erm(
    d: Dataset,
    lam: float,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    radius: Optional[float] = None,
    callback: Optional[Callable[[int, float, float], None]] = None,
) -> LinearModel:
    """Minimize the objective by full-batch gradient descent.

    Stops when the gradient Frobenius norm drops to ``tol``.  The returned
    model's ball radius defaults to twice the optimum's norm, so the ball
    constraint is inactive at the optimum; pass ``radius`` to override.
    ``callback(iteration, loss, grad_norm)`` is invoked once per iteration
    when given.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    step = 1.0 / (d.feature_norm_bound**2 + lam)
    weights = np.zeros((d.num_labels, d.p))
    grad_norm = math.inf
    for iteration in range(max_iters):
        grad = objective_gradient(weights, d, lam)
        grad_norm = float(np.linalg.norm(grad))
        if callback is not None:
            callback(iteration, _objective_value(weights, d, lam), grad_norm)
        if grad_norm <= tol:
            break
        weights = weights - step * grad
    else:
        raise ConvergenceError(
            f"gradient norm {grad_norm:.3e} above tol {tol:.3e} after {max_iters} iterations",
            gradient_norm=grad_norm,
        )

    norm = float(np.linalg.norm(weights))
    if radius is None:
        radius = 2.0 * norm if norm > 0 else 1.0
    elif norm > radius + 1e-9:
        raise ValueError(
            f"radius override {radius} is smaller than the optimum's norm {norm:.6g}; "
            "the unconstrained solver cannot honor it"
        )
    return LinearModel(weights, radius)


def erm_sensitivity(c: LossConstants, n: int) -> float:
    """Worst-case optimum shift when one training example is replaced:
    2*Lambda/(mu*n) for a Lambda-Lipschitz, mu-strongly-convex objective."""
    return 2.0 * c.loss_lipschitz / (c.strong_convexity * n)
