"""Sample statistics and parameter estimation for multilevel ensembles.

All accumulations use compensated summation (``math.fsum``) in fixed index
order, so results are bit-reproducible no matter how the samples were
produced or scheduled.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class SampleSet:
    """An ordered batch of scalar QoI evaluations.

    ``level`` and ``term`` are bookkeeping tags; they do not affect the
    statistics.
    """

    values: tuple
    level: int = 1
    term: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in np.asarray(self.values).ravel()))

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class LevelTermStats:
    """Summary of one telescoping term: its mean, spread, and sample count.

    ``variance`` is the unbiased sample variance and is only defined for
    ``count >= 2``; a single-sample term reports ``None``.
    """

    term_index: int
    mean: float
    variance: Optional[float]
    count: int

    def __post_init__(self):
        if self.term_index < 1:
            raise ValueError(f"term_index must be >= 1, got {self.term_index}")
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        if self.variance is not None:
            if self.count < 2:
                raise ValueError("variance requires count >= 2")
            if self.variance < 0:
                raise ValueError(f"variance must be >= 0, got {self.variance}")

    def to_json_dict(self):
        return {
            "term_index": self.term_index,
            "mean": self.mean,
            "variance": self.variance,
            "count": self.count,
        }


@dataclass(frozen=True)
class SolutionParameters:
    """Inputs every sampling plan is sized from.

    Parameters
    ----------
    delta : float
        Statistical spread of the fine-level QoI (standard-deviation scale).
    e : float
        Target/measured fine-level discretization error.
    alpha : float
        Per-level decay exponent of the coupled differences (ratio 2^alpha
        per coarsening step).
    sigma : float
        Slack exponent used by the level-weighted strategies; ignored by the
        others.  Must be positive.
    C2 : float, optional
        Error-law prefactor, when known.
    """

    delta: float
    e: float
    alpha: float
    sigma: float = 1.0
    C2: Optional[float] = None

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.e > 0:
            raise ValueError(f"e must be positive, got {self.e}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def to_json_dict(self):
        d = {"delta": self.delta, "e": self.e, "alpha": self.alpha, "sigma": self.sigma}
        if self.C2 is not None:
            d["C2"] = self.C2
        return d

    @classmethod
    def from_json_dict(cls, d):
        return cls(
            delta=float(d["delta"]),
            e=float(d["e"]),
            alpha=float(d["alpha"]),
            sigma=float(d.get("sigma", 1.0)),
            C2=(float(d["C2"]) if d.get("C2") is not None else None),
        )


def _values(s):
    return s.values if isinstance(s, SampleSet) else tuple(float(v) for v in s)


def mc_mean(s):
    """Plain Monte Carlo mean, compensated summation in index order."""
    v = _values(s)
    if len(v) == 0:
        raise ValueError("mean of an empty sample set is undefined")
    return math.fsum(v) / len(v)


def unbiased_variance(s):
    """Unbiased sample variance (1/(M-1) normalization), two-pass."""
    v = _values(s)
    if len(v) < 2:
        raise ValueError(f"unbiased variance needs at least 2 samples, got {len(v)}")
    m = math.fsum(v) / len(v)
    return math.fsum((x - m) ** 2 for x in v) / (len(v) - 1)


def multilevel_estimate(terms):
    """Telescoping-sum estimate: the term means added in ascending term order.

    ``terms`` must carry term indices 1..L exactly once each.
    """
    terms = list(terms)
    if not terms:
        raise ValueError("multilevel estimate needs at least one term")
    idx = sorted(t.term_index for t in terms)
    if idx != list(range(1, len(terms) + 1)):
        raise ValueError(f"term indices must be exactly 1..{len(terms)}, got {idx}")
    ordered = sorted(terms, key=lambda t: t.term_index)
    return math.fsum(t.mean for t in ordered)


def total_samples_per_level(M):
    """Solves actually run per level when adjacent terms share realizations.

    The finest level is touched only by the first term; every other level l
    is touched by terms l-1 and l, so its total is M[l-2] + M[l-1].
    """
    M = list(M)
    if not M:
        raise ValueError("M must be non-empty")
    if any(int(m) != m or m < 1 for m in M):
        raise ValueError(f"sample counts must be integers >= 1, got {M}")
    M = [int(m) for m in M]
    return [M[0]] + [M[l - 1] + M[l] for l in range(1, len(M))]


def estimate_alpha(delta_12, delta_23):
    """Decay exponent from the spreads of two adjacent coupled differences.

    The coupled differences shrink by 2^alpha per refinement, so
    alpha = log2(delta_23 / delta_12).  A negative result (the coarser pair
    spreads *less*) signals a non-convergent ladder; it is returned as-is
    with a RuntimeWarning rather than clamped.
    """
    if not delta_12 > 0 or not delta_23 > 0:
        raise ValueError(
            f"spreads must be positive, got delta_12={delta_12}, delta_23={delta_23}"
        )
    alpha = math.log2(delta_23 / delta_12)
    if alpha < 0:
        warnings.warn(
            f"estimated alpha = {alpha:.4g} is negative: coupled differences "
            "grow toward finer levels (non-convergent ladder)",
            RuntimeWarning,
            stacklevel=2,
        )
    return alpha


def estimate_fine_error(delta_12, alpha):
    """Fine-level discretization error consistent with the finest coupled pair.

    Inverts the sizing identity delta_12 = e * sqrt(2 (1 + 4^alpha)).
    """
    if not delta_12 > 0:
        raise ValueError(f"delta_12 must be positive, got {delta_12}")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    return delta_12 / math.sqrt(2.0 * (1.0 + 4.0**alpha))
