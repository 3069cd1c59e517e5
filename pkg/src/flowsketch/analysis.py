"""Closed-form accuracy/error evaluators, Monte Carlo verifiers, and metrics.

The closed forms evaluated here:

  cms_full_accuracy_prob(w, d, N) = 1 - (1 - e^(-(N-1)/w))^d
      Probability a flow is tracked with zero error in a width-w, depth-d CMS
      holding N flows (Poisson collision approximation).

  tiered_full_accuracy_prob = A + (1 - A) * cms_full_accuracy_prob(...)
      A is the classifier's accuracy on large flows: correctly classified
      large flows live exactly in the heavy part; misclassified ones fall
      through to the light CMS.

  overcount_bound: with probability >= 1 - delta, estimate <= truth +
      epsilon * light_mass, where delta = (1 - A) e^(-d_light),
      epsilon = e / w_light, and the light mass is at most
      total_packets - A * n_large * threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .model import ConfigError


@dataclass(frozen=True)
class AnalysisInputs:
    accuracy: float            # classifier accuracy on large flows, in [0, 1]
    w_light: int
    d_light: int
    n_light: int               # flows that end up in the light part
    n_large: int = 0           # true large flows
    total_packets: int = 0
    threshold: int = 64

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ConfigError(f"accuracy must be in [0, 1], got {self.accuracy}")
        if self.w_light < 1 or self.d_light < 1:
            raise ConfigError("light part shape must be >= 1 in both dimensions")
        if min(self.n_light, self.n_large, self.total_packets) < 0:
            raise ConfigError("counts must be non-negative")


def cms_full_accuracy_prob(w: int, d: int, n: int) -> float:
    """Probability that one of n flows is tracked exactly in a w x d CMS."""
    if w < 1 or d < 1 or n < 1:
        raise ConfigError(f"need w, d, n >= 1, got {w}, {d}, {n}")
    return 1.0 - (1.0 - math.exp(-(n - 1) / w)) ** d


def tiered_full_accuracy_prob(inputs: AnalysisInputs) -> float:
    """Probability a large flow is fully accurate in the two-tier sketch."""
    a = inputs.accuracy
    n = max(inputs.n_light, 1)  # a lone misclassified flow cannot collide
    return a + (1.0 - a) * cms_full_accuracy_prob(inputs.w_light, inputs.d_light, n)


class OvercountBound(NamedTuple):
    epsilon: float
    delta: float
    light_mass_bound: float


def overcount_bound(inputs: AnalysisInputs) -> OvercountBound:
    """(epsilon, delta, light-mass bound) for the overcount guarantee:
    P(estimate <= truth + epsilon * light_mass) >= 1 - delta."""
    delta = (1.0 - inputs.accuracy) * math.exp(-inputs.d_light)
    epsilon = math.e / inputs.w_light
    light_mass_bound = inputs.total_packets - inputs.accuracy * inputs.n_large * inputs.threshold
    return OvercountBound(epsilon, delta, light_mass_bound)


@dataclass(frozen=True)
class MetricReport:
    are: float
    aae: float
    precision: float
    recall: float
    f1: float

    def as_dict(self) -> dict:
        return {"are": self.are, "aae": self.aae, "precision": self.precision,
                "recall": self.recall, "f1": self.f1}


def compute_metrics(
    truth: Mapping,
    estimates: Mapping,
    hh_truth: Iterable | None = None,
    hh_reported: Iterable | None = None,
    restrict_to_hh: bool = False,
) -> MetricReport:
    """ARE / AAE over the ground-truth flow universe, plus set precision /
    recall / F1 when heavy-hitter sets are given.

    ARE = mean over flows of |n - est| / n; AAE = mean of |n - est|. With
    restrict_to_hh the error universe narrows to the true heavy hitters
    (the reading used for heavy-hitter experiments).
    """
    if not truth:
        raise ConfigError("truth table must be nonempty")
    hh_truth_set = set(hh_truth) if hh_truth is not None else None
    universe = hh_truth_set if (restrict_to_hh and hh_truth_set is not None) else truth.keys()

    # fsum: exactly-rounded, so results do not depend on iteration order
    abs_errs = []
    rel_errs = []
    for key in universe:
        n = truth[key]
        if n < 1:
            raise ConfigError("every truth count must be >= 1")
        err = abs(n - estimates.get(key, 0))
        abs_errs.append(err)
        rel_errs.append(err / n)
    count = len(abs_errs)
    are = math.fsum(rel_errs) / count if count else 0.0
    aae = math.fsum(abs_errs) / count if count else 0.0

    precision = recall = f1 = 0.0
    if hh_truth_set is not None and hh_reported is not None:
        reported = set(hh_reported)
        tp = len(hh_truth_set & reported)
        precision = tp / len(reported) if reported else (1.0 if not hh_truth_set else 0.0)
        recall = tp / len(hh_truth_set) if hh_truth_set else 1.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return MetricReport(are, aae, precision, recall, f1)


def lock_flag_mc(labels: Iterable[int], trials: int, seed: int = 0) -> float:
    """Monte Carlo mean of the final lock flag after applying the update rule
    along a fixed 0/1 label sequence, vectorized over all trials.

    The t-th label is applied against pre-update size t-1, so the closed-form
    expectation of the final flag is simply mean(labels).
    """
    labels = list(labels)
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    if any(y not in (0, 1) for y in labels):
        raise ConfigError("labels must be 0 or 1")
    if not labels:
        return 0.0
    rng = np.random.default_rng(seed)
    lock = np.zeros(trials, dtype=np.float64)
    for t, y in enumerate(labels, start=1):
        p = (lock * (t - 1) + y) / t
        lock = (rng.random(trials) < p).astype(np.float64)
    return float(lock.mean())
