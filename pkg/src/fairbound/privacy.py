"""Differentially private releases of the trained model.

Two mechanisms are implemented.  Output perturbation adds Gaussian noise to
the exact optimum, calibrated to the optimum's replace-one sensitivity
2*Lambda/(mu*n), then projects back onto the hypothesis ball:

    sigma^2 = 8 * Lambda^2 * log(1.25/delta) / (mu^2 n^2 eps^2).

DP-SGD runs projected stochastic gradient steps from zero with per-step
Gaussian noise

    sigma^2 = 64 * Lambda^2 * T^k * log(3T/delta) * log(2/delta) / (n^2 eps^2),

where the exponent k is 2 by default ("T_squared") and 1 ("T_linear") as an
alternative calibration; when in doubt the noisier default is used.  Both
mechanisms come with closed-form high-probability bounds on the distance
between the released model and the optimum, which the fairness-gap bounds
consume.

All randomness flows through numpy SeedSequence substreams keyed by
(seed, substream), so independent draws are reproducible and can run
concurrently.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .model import LinearModel, clip_to_ball
from .trainer import LossConstants, gradient

MECHANISMS = ("output_perturbation", "dp_sgd")
NOISE_EXPONENTS = ("T_squared", "T_linear")


@dataclass(frozen=True)
class PrivacyParams:
    """(epsilon, delta)-privacy target plus the bound failure probability
    zeta and the mechanism driving noise calibration."""

    epsilon: float
    delta: float
    zeta: float
    mechanism: str
    seed: int

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not 0 < self.zeta < 1:
            raise ValueError("zeta must lie in (0, 1)")
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}")
        if self.epsilon >= 1:
            warnings.warn(
                f"epsilon={self.epsilon} >= 1: the closed-form noise and distance "
                "formulas are calibrated for budgets below 1 and remain valid but "
                "conservative elsewhere",
                stacklevel=2,
            )


def _substream(seed: int, substream: int | tuple[int, ...]) -> np.random.Generator:
    key = substream if isinstance(substream, tuple) else (substream,)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def output_noise_variance(
    loss_lipschitz: float, strong_convexity: float, n: int, epsilon: float, delta: float
) -> float:
    """Gaussian variance for output perturbation:
    8*Lambda^2*log(1.25/delta) / (mu^2 n^2 eps^2)."""
    return (
        8.0
        * loss_lipschitz**2
        * math.log(1.25 / delta)
        / (strong_convexity**2 * n**2 * epsilon**2)
    )


def output_perturb(
    hstar: LinearModel,
    c: LossConstants,
    n: int,
    pp: PrivacyParams,
    substream: int | tuple[int, ...] = 0,
) -> LinearModel:
    """Release project(h* + N(0, sigma^2 I), R); deterministic per
    (pp.seed, substream)."""
    if pp.mechanism != "output_perturbation":
        raise ValueError("privacy params request a different mechanism")
    sigma = math.sqrt(
        output_noise_variance(c.loss_lipschitz, c.strong_convexity, n, pp.epsilon, pp.delta)
    )
    rng = _substream(pp.seed, substream)
    noisy = hstar.weights + rng.normal(0.0, sigma, size=hstar.weights.shape)
    return clip_to_ball(noisy, c.radius)


def output_perturb_distance_bound(
    num_params: int, c: LossConstants, n: int, pp: PrivacyParams
) -> float:
    """Distance (not squared) between release and optimum that holds with
    probability at least 1 - zeta:
    sqrt(32 p Lambda^2 log(1.25/delta) log(2/zeta) / (mu^2 n^2 eps^2))."""
    return math.sqrt(
        32.0
        * num_params
        * c.loss_lipschitz**2
        * math.log(1.25 / pp.delta)
        * math.log(2.0 / pp.zeta)
        / (c.strong_convexity**2 * n**2 * pp.epsilon**2)
    )


def dpsgd_noise(
    loss_lipschitz: float,
    steps: int,
    n: int,
    epsilon: float,
    delta: float,
    exponent: str = "T_squared",
) -> float:
    """Per-step DP-SGD noise variance; ``exponent`` selects the T^2 (default,
    noisier) or T calibration."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if exponent not in NOISE_EXPONENTS:
        raise ValueError(f"unknown noise exponent {exponent!r}")
    t_factor = float(steps) ** 2 if exponent == "T_squared" else float(steps)
    return (
        64.0
        * loss_lipschitz**2
        * t_factor
        * math.log(3.0 * steps / delta)
        * math.log(2.0 / delta)
        / (n**2 * epsilon**2)
    )


@dataclass(frozen=True)
class DpSgdConfig:
    """Resolved DP-SGD run parameters.

    Direct construction accepts any nonnegative noise variance (the
    noise-free case is useful for optimizer sanity checks); use
    :meth:`calibrated` to tie the variance to the privacy budget.
    """

    steps: int
    step_size: float
    noise_variance: float
    radius: float
    noise_exponent: str = "T_squared"

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if self.step_size <= 0 or self.radius <= 0:
            raise ValueError("step_size and radius must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be nonnegative")
        if self.noise_exponent not in NOISE_EXPONENTS:
            raise ValueError(f"unknown noise exponent {self.noise_exponent!r}")

    @classmethod
    def calibrated(
        cls,
        c: LossConstants,
        n: int,
        pp: PrivacyParams,
        steps: int,
        exponent: str = "T_squared",
    ) -> "DpSgdConfig":
        """Step size 1/(2*beta) and the privacy-calibrated noise variance."""
        return cls(
            steps=steps,
            step_size=0.5 / c.smoothness,
            noise_variance=dpsgd_noise(c.loss_lipschitz, steps, n, pp.epsilon, pp.delta, exponent),
            radius=c.radius,
            noise_exponent=exponent,
        )


def dpsgd(
    d: Dataset,
    c: LossConstants,
    pp: PrivacyParams,
    cfg: DpSgdConfig,
    substream: int | tuple[int, ...] = 0,
) -> LinearModel:
    """Projected noisy SGD from the zero model; deterministic per
    (pp.seed, substream).

    Each step samples one example uniformly, adds isotropic Gaussian noise
    to its loss gradient, steps, and projects onto the radius ball.
    """
    if cfg.step_size > 0.5 / c.smoothness + 1e-12:
        raise ValueError("step_size must not exceed 1/(2*smoothness)")
    rng = _substream(pp.seed, substream)
    sigma = math.sqrt(cfg.noise_variance)
    model = LinearModel(np.zeros((d.num_labels, d.p)), cfg.radius)
    for _ in range(cfg.steps):
        i = int(rng.integers(d.n))
        grad = gradient(model, d.example(i), c.lam)
        if sigma > 0:
            grad = grad + rng.normal(0.0, sigma, size=grad.shape)
        model = clip_to_ball(model.weights - cfg.step_size * grad, cfg.radius)
    return model


@dataclass(frozen=True)
class DpSgdBound:
    """Distance bound plus the step schedule that attains it."""

    distance: float
    steps: int
    noise_variance: float
    already_converged: bool = False


def dpsgd_distance_bound(
    num_params: int,
    c: LossConstants,
    n: int,
    pp: PrivacyParams,
    h0_dist_bound: float | None = None,
    exponent: str = "T_squared",
) -> DpSgdBound:
    """High-probability distance bound for DP-SGD started at zero.

    ``h0_dist_bound`` upper-bounds the start-to-optimum distance and defaults
    to 2R (the start is the zero model and the optimum lies in the ball).
    The returned step count T follows the geometric-decay schedule; when the
    schedule says the start already satisfies the target (log argument <= 1),
    the start bound itself is returned with T = 0 and a flag.  ``num_params``
    is carried for report symmetry; the closed form is dimension-free.
    """
    mu = c.strong_convexity
    beta = c.smoothness
    lam_lip = c.loss_lipschitz
    if h0_dist_bound is None:
        h0_dist_bound = 2.0 * c.radius
    if h0_dist_bound < 0:
        raise ValueError("h0_dist_bound must be nonnegative")

    m2 = 64.0 * lam_lip**2 * math.log(2.0 / pp.delta) / (n**2 * pp.epsilon**2)
    arg = mu * beta * h0_dist_bound**2 / (2.0 * m2)
    if arg <= 1.0:
        return DpSgdBound(distance=h0_dist_bound, steps=0, noise_variance=0.0, already_converged=True)

    log_arg = math.log(arg)
    steps = max(1, math.ceil(2.0 * beta / mu * log_arg))
    dist_sq = (
        512.0
        * lam_lip**2
        * math.log(2.0 / pp.delta)
        / (pp.zeta * mu**2 * n**2 * pp.epsilon**2)
        * log_arg
        * math.log(6.0 * beta * log_arg / (mu * pp.delta))
    )
    sigma2 = dpsgd_noise(lam_lip, steps, n, pp.epsilon, pp.delta, exponent)
    return DpSgdBound(distance=math.sqrt(dist_sq), steps=steps, noise_variance=sigma2)


def empirical_gradient_second_moment(m: LinearModel, d: Dataset, lam: float) -> float:
    """Mean squared per-example gradient norm at m, the quantity the DP-SGD
    distance bound assumes is dominated by the injected noise variance."""
    total = 0.0
    for i in range(d.n):
        g = gradient(m, d.example(i), lam)
        total += float(np.sum(g * g))
    return total / d.n


def warn_if_gradient_noise_dominates(
    m: LinearModel, d: Dataset, lam: float, noise_variance: float
) -> bool:
    """Warn (and return True) when the empirical gradient second moment at m
    exceeds the per-step noise variance, which voids one assumption of the
    DP-SGD distance bound; the bound is still reported."""
    moment = empirical_gradient_second_moment(m, d, lam)
    if moment > noise_variance:
        warnings.warn(
            f"empirical gradient second moment {moment:.3e} exceeds the DP-SGD noise "
            f"variance {noise_variance:.3e}; the distance bound's domination assumption "
            "does not hold on this data",
            stacklevel=2,
        )
        return True
    return False
