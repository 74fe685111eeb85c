"""Certified bounds on fairness differences between nearby models.

The key quantity per example is the ratio of its margin Lipschitz constant
to its absolute confidence margin.  Group-conditional means of that ratio,
weighted by the fairness coefficient magnitudes, give the pointwise
Lipschitz factor chi of each group's fairness level: two models at distance
d have per-group fairness gaps at most chi * d (the "markov" variant).

Two refinements are implemented and can be combined freely because both are
monotone in the distance:

- truncation ("truncated"): an example whose margin exceeds its Lipschitz
  constant times the distance provably cannot change prediction, so its
  ratio is replaced by zero before averaging;
- exponential-moment optimization ("chernoff"): each group term is replaced
  by min over t >= 0 of exp(t*d) * mean(exp(-t*|margin|/L)), with truncated
  examples contributing zero inside the mean; the scalar minimization uses
  golden-section search over a doubling bracket.

The "best" variant takes the per-term minimum of all of the above and never
exceeds any of them.  Ratios follow the convention that an example with a
zero Lipschitz constant can never flip (it contributes 0 to chi and is
always truncated), while a zero margin under a positive Lipschitz constant
makes chi infinite -- the chernoff term stays finite in that case, which is
the reason the variants are combined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dataset import Dataset, GroupPartition
from .fairness import FairnessSpec
from .model import LinearModel, distance as model_distance
from .model import margins_many, pointwise_lipschitz_many
from .privacy import PrivacyParams, dpsgd_distance_bound, output_perturb_distance_bound
from .trainer import LossConstants

VARIANTS = ("markov", "truncated", "chernoff", "best")
DIST_PROVENANCES = ("lemma2", "lemma3", "measured")

CHERNOFF_T_MAX = 1e6
CHERNOFF_TOL_FACTOR = 1e-8


@dataclass(frozen=True)
class MarginProfile:
    """Per-example (|margin|, Lipschitz constant, group) triples: the
    sufficient statistic every bound variant consumes."""

    abs_margins: np.ndarray
    lipschitz: np.ndarray
    assignment: np.ndarray
    num_groups: int

    def __post_init__(self):
        abs_margins = np.asarray(self.abs_margins, dtype=np.float64)
        lipschitz = np.asarray(self.lipschitz, dtype=np.float64)
        assignment = np.asarray(self.assignment, dtype=np.int64)
        if not (abs_margins.shape == lipschitz.shape == assignment.shape):
            raise ValueError("profile arrays must have matching shapes")
        if np.any(abs_margins < 0) or np.any(lipschitz < 0):
            raise ValueError("margins and Lipschitz constants are stored as nonnegative values")
        for arr in (abs_margins, lipschitz, assignment):
            arr.setflags(write=False)
        object.__setattr__(self, "abs_margins", abs_margins)
        object.__setattr__(self, "lipschitz", lipschitz)
        object.__setattr__(self, "assignment", assignment)

    @property
    def n(self) -> int:
        return self.abs_margins.shape[0]

    def group_indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == k)


def margin_profile(m: LinearModel, d: Dataset, part: GroupPartition) -> MarginProfile:
    """Absolute margins and 2*||x||_2 Lipschitz constants for every example."""
    return MarginProfile(
        abs_margins=np.abs(margins_many(m, d.features, d.labels)),
        lipschitz=pointwise_lipschitz_many(d.features),
        assignment=part.assignment,
        num_groups=part.num_groups,
    )


def refined_lipschitz_profile(
    h: LinearModel, hprime: LinearModel, d: Dataset, part: GroupPartition
) -> MarginProfile:
    """Diagnostic profile using the direction-aware Lipschitz constants.

    When both models are known, the margin change on x is controlled by the
    component of x along each weight-row difference, not by the full norm:
    L_i = 2 * max_y |(W_y - W'_y) . x_i| / ||W_y - W'_y||_2, with rows where
    the models agree contributing zero.  Margins are taken from h.
    """
    if h.weights.shape != hprime.weights.shape:
        raise ValueError("models must have the same shape")
    diff = h.weights - hprime.weights  # (num_labels, p)
    row_norms = np.linalg.norm(diff, axis=1)
    active = row_norms > 0
    if not np.any(active):
        lipschitz = np.zeros(d.n)
    else:
        # |projection of x on each active row direction|, maximized over rows
        comps = np.abs(d.features @ diff[active].T) / row_norms[active]
        lipschitz = 2.0 * np.max(comps, axis=1)
    return MarginProfile(
        abs_margins=np.abs(margins_many(h, d.features, d.labels)),
        lipschitz=lipschitz,
        assignment=part.assignment,
        num_groups=part.num_groups,
    )


def _inverse_margin_ratios(profile: MarginProfile) -> np.ndarray:
    """L/|margin| per example; 0 when L = 0 (the example can never flip),
    +inf when the margin is 0 under a positive L."""
    out = np.zeros(profile.n)
    pos_l = profile.lipschitz > 0
    zero_m = profile.abs_margins == 0
    out[pos_l & zero_m] = np.inf
    live = pos_l & ~zero_m
    out[live] = profile.lipschitz[live] / profile.abs_margins[live]
    return out


def _margin_ratios(profile: MarginProfile) -> np.ndarray:
    """|margin|/L per example; +inf when L = 0 (never truncatable away)."""
    out = np.full(profile.n, np.inf)
    pos_l = profile.lipschitz > 0
    out[pos_l] = profile.abs_margins[pos_l] / profile.lipschitz[pos_l]
    return out


def _group_sizes(profile: MarginProfile) -> np.ndarray:
    return np.bincount(profile.assignment, minlength=profile.num_groups)


def chi(profile: MarginProfile, spec: FairnessSpec, k: int) -> float:
    """Pointwise Lipschitz factor of group k's fairness level: the
    coefficient-magnitude-weighted conditional means of L/|margin|.

    Empty groups contribute 0; a zero margin inside a group carrying a
    nonzero coefficient makes the result +inf.
    """
    ratios = _inverse_margin_ratios(profile)
    total = 0.0
    for kp in range(spec.num_groups):
        weight = float(abs(spec.coeffs[k, kp]))
        if weight == 0.0:
            continue
        idx = profile.group_indices(kp)
        if idx.size == 0:
            continue
        total += weight * float(np.mean(ratios[idx]))
    return total


def chi_all(profile: MarginProfile, spec: FairnessSpec) -> np.ndarray:
    return np.array([chi(profile, spec, k) for k in range(spec.num_groups)])


def markov_gap_bound(profile: MarginProfile, spec: FairnessSpec, k: int, dist: float) -> float:
    """chi_k * dist."""
    if dist < 0:
        raise ValueError("dist must be nonnegative")
    if dist == 0.0:
        return 0.0
    return chi(profile, spec, k) * float(dist)


def _truncated_group_means(profile: MarginProfile, dist: float) -> np.ndarray:
    """Per-group means of (L/|margin|) * 1{|margin| <= L * dist}."""
    inv = _inverse_margin_ratios(profile)
    included = _margin_ratios(profile) <= dist
    sizes = _group_sizes(profile)
    means = np.zeros(profile.num_groups)
    for kp in range(profile.num_groups):
        if sizes[kp] == 0:
            continue
        mask = included & (profile.assignment == kp)
        if np.any(mask):
            means[kp] = float(np.sum(inv[mask])) / sizes[kp]
    return means


def truncated_markov_gap_bound(
    profile: MarginProfile, spec: FairnessSpec, k: int, dist: float
) -> float:
    """Markov bound with large-margin examples dropped: examples with
    |margin| > L * dist cannot change prediction and contribute zero."""
    if dist < 0:
        raise ValueError("dist must be nonnegative")
    if dist == 0.0:
        return 0.0
    means = _truncated_group_means(profile, dist)
    weights = np.abs(spec.coeffs[k])
    live = weights > 0
    return float(np.sum(weights[live] * means[live])) * float(dist)


def golden_section(
    g: Callable[[float], float], a: float, b: float, tol: float
) -> float:
    """Location of the minimum of a unimodal scalar function on [a, b],
    to within tol."""
    if a >= b:
        raise ValueError("golden_section requires a < b")
    if tol <= 0:
        raise ValueError("tol must be positive")
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    g1, g2 = g(x1), g(x2)
    while b - a > tol:
        if g1 <= g2:
            b, x2, g2 = x2, x1, g1
            x1 = b - inv_phi * (b - a)
            g1 = g(x1)
        else:
            a, x1, g1 = x1, x2, g2
            x2 = a + inv_phi * (b - a)
            g2 = g(x2)
    return 0.5 * (a + b)


def _bracket_maximum(g: Callable[[float], float]) -> float:
    """Upper end of the search bracket: double from 1 until g has increased
    for three consecutive doublings, capped at CHERNOFF_T_MAX."""
    t = 1.0
    prev = g(t)
    rises = 0
    while t < CHERNOFF_T_MAX:
        t *= 2.0
        value = g(t)
        rises = rises + 1 if value > prev else 0
        prev = value
        if rises >= 3:
            break
    return min(t, CHERNOFF_T_MAX)


def chernoff_term_bound(profile: MarginProfile, group: int, dist: float) -> float:
    """Exponential-moment bound on one group's accuracy difference.

    Minimizes exp(t*dist) * mean(exp(-t*|margin|/L)) over t in the bracket,
    where examples with |margin| > L*dist contribute zero inside the mean
    (their prediction cannot change).  The result bounds a probability
    difference and is clamped to [0, 1].  Empty groups yield 0.
    """
    if dist < 0:
        raise ValueError("dist must be nonnegative")
    if dist == 0.0:
        return 0.0
    idx = profile.group_indices(group)
    if idx.size == 0:
        return 0.0
    ratios = _margin_ratios(profile)[idx]
    live = ratios[ratios <= dist]
    if live.size == 0:
        return 0.0
    size = idx.size

    def g(t: float) -> float:
        return math.exp(t * dist) * float(np.sum(np.exp(-t * live))) / size

    t_hi = _bracket_maximum(g)
    t_star = golden_section(g, 0.0, t_hi, CHERNOFF_TOL_FACTOR * t_hi)
    value = min(g(t_star), g(0.0))
    return min(max(value, 0.0), 1.0)


def gap_bound(
    profile: MarginProfile, spec: FairnessSpec, k: int, dist: float, variant: str = "best"
) -> float:
    """Bound on |F_k(h) - F_k(h')| for any h' within ``dist`` of the
    profiled model, under the requested variant."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown bound variant {variant!r}")
    if dist < 0:
        raise ValueError("dist must be nonnegative")
    if variant == "markov":
        return markov_gap_bound(profile, spec, k, dist)
    if variant == "truncated":
        return truncated_markov_gap_bound(profile, spec, k, dist)
    if dist == 0.0:
        return 0.0

    inv = _inverse_margin_ratios(profile)
    trunc_means = _truncated_group_means(profile, dist)
    sizes = _group_sizes(profile)
    total = 0.0
    for kp in range(spec.num_groups):
        weight = float(abs(spec.coeffs[k, kp]))
        if weight == 0.0 or sizes[kp] == 0:
            continue
        chern = chernoff_term_bound(profile, kp, dist)
        if variant == "chernoff":
            term = chern
        else:  # best: per-term minimum over every available technique
            idx = profile.group_indices(kp)
            markov_term = float(np.mean(inv[idx])) * dist
            term = min(markov_term, float(trunc_means[kp]) * dist, chern)
        total += weight * term
    return total


@dataclass(frozen=True)
class BoundEntry:
    """All bound variants for a single group."""

    group: int
    description: str
    chi: float
    markov: float
    truncated: float
    chernoff: float
    best: float
    flags: tuple[str, ...]


@dataclass(frozen=True)
class BoundReport:
    """Per-group fairness-gap certificates at a resolved model distance."""

    notion: str
    entries: tuple[BoundEntry, ...]
    dist: float
    dist_provenance: str
    zeta: float | None
    mechanism: str | None
    flags: tuple[str, ...]

    @property
    def aggregate(self) -> float:
        """Mean of the per-group best-variant bounds (bounds the aggregate
        fairness difference)."""
        return float(np.mean([e.best for e in self.entries]))

    def entry(self, k: int) -> BoundEntry:
        return self.entries[k]


def resolve_distance(
    num_params: int,
    c: LossConstants,
    n: int,
    pp: PrivacyParams,
    reference: LinearModel | None = None,
    other: LinearModel | None = None,
    h0_dist_bound: float | None = None,
) -> tuple[float, str]:
    """Distance input for the gap bounds and its provenance.

    When ``other`` is supplied the measured distance to the reference model
    is used (diagnostic mode); otherwise the mechanism's high-probability
    lemma bound applies.
    """
    if other is not None:
        if reference is None:
            raise ValueError("measured distance requires the reference model")
        return model_distance(reference, other), "measured"
    if pp.mechanism == "output_perturbation":
        return output_perturb_distance_bound(num_params, c, n, pp), "lemma2"
    return dpsgd_distance_bound(num_params, c, n, pp, h0_dist_bound).distance, "lemma3"


def bound_report(
    profile: MarginProfile,
    spec: FairnessSpec,
    dist: float,
    dist_provenance: str = "measured",
    zeta: float | None = None,
    mechanism: str | None = None,
) -> BoundReport:
    """Evaluate every variant for every group at a fixed distance."""
    if dist_provenance not in DIST_PROVENANCES:
        raise ValueError(f"unknown distance provenance {dist_provenance!r}")
    ratios = _inverse_margin_ratios(profile)
    sizes = _group_sizes(profile)
    entries = []
    for k in range(spec.num_groups):
        flags: list[str] = []
        for kp in range(spec.num_groups):
            if abs(spec.coeffs[k, kp]) == 0.0:
                continue
            if sizes[kp] == 0:
                flags.append(f"empty_group:{kp}")
            elif np.any(np.isinf(ratios[profile.group_indices(kp)])):
                flags.append(f"zero_margin_in_group:{kp}")
        chi_k = chi(profile, spec, k)
        entries.append(
            BoundEntry(
                group=k,
                description=spec.partition.descriptions[k],
                chi=chi_k,
                markov=markov_gap_bound(profile, spec, k, dist),
                truncated=truncated_markov_gap_bound(profile, spec, k, dist),
                chernoff=gap_bound(profile, spec, k, dist, "chernoff"),
                best=gap_bound(profile, spec, k, dist, "best"),
                flags=tuple(flags),
            )
        )
    return BoundReport(
        notion=spec.notion,
        entries=tuple(entries),
        dist=dist,
        dist_provenance=dist_provenance,
        zeta=zeta,
        mechanism=mechanism,
        flags=spec.flags,
    )


def theorem3_report(
    reference: LinearModel,
    d: Dataset,
    spec: FairnessSpec,
    c: LossConstants,
    n: int,
    pp: PrivacyParams,
    other: LinearModel | None = None,
    h0_dist_bound: float | None = None,
) -> BoundReport:
    """End-to-end certificate: mechanism distance bound composed with the
    per-group gap bounds, profiled at the reference model.

    The reference may be either the optimum or the private release; when
    ``other`` is given the measured distance replaces the lemma bound.
    """
    dist, provenance = resolve_distance(
        reference.num_params, c, n, pp, reference=reference, other=other, h0_dist_bound=h0_dist_bound
    )
    profile = margin_profile(reference, d, spec.partition)
    return bound_report(
        profile, spec, dist, provenance, zeta=pp.zeta, mechanism=pp.mechanism
    )


def theorem3_bound(
    reference: LinearModel,
    d: Dataset,
    spec: FairnessSpec,
    k: int,
    c: LossConstants,
    n: int,
    pp: PrivacyParams,
    variant: str = "best",
    other: LinearModel | None = None,
    h0_dist_bound: float | None = None,
) -> BoundEntry:
    """Single-group view of :func:`theorem3_report`; ``variant`` selects
    which field of the entry callers should read."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown bound variant {variant!r}")
    report = theorem3_report(reference, d, spec, c, n, pp, other=other, h0_dist_bound=h0_dist_bound)
    return report.entry(k)
