"""Sampling-plan construction for classical and multilevel Monte Carlo.

Four multilevel sizing strategies are provided next to the classical
single-level baseline.  All of them consume the same
:class:`~mlmckit.stats.SolutionParameters` and emit a :class:`LevelPlan`
with integer sample counts, the a-priori error-bound multiplier, and the
relative load in units of one finest-level solve.

Conventions (fixed):
  * level counts come from a ceiling of the real-valued sizing formula,
    clamped to at least 1;
  * per-level sample counts are rounded half-up to the nearest integer,
    clamped to at least 1;
  * the coarsest term is never sized below round(delta^2/e^2), which keeps
    the a-priori bound valid when a ``max_levels`` cap cuts the ladder
    short (a no-op otherwise).
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .hierarchy import relative_dof
from .stats import SolutionParameters, total_samples_per_level


class StrategyId(str, Enum):
    CLASSICAL_MC = "ClassicalMC"
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    S4 = "S4"


class Growth(str, Enum):
    LINEAR = "Linear"
    QUASILINEAR = "Quasilinear"
    POLYNOMIAL = "Polynomial"


@dataclass(frozen=True)
class CostRegime:
    """One cell of the asymptotic-cost table for a strategy."""

    growth: Growth
    threshold_note: str
    formula: str


@dataclass(frozen=True)
class LevelPlan:
    """A fully sized sampling plan.

    ``M[l-1]`` is the sample count of term l (term 1 couples the two finest
    levels; the last term runs alone on the coarsest level).  ``M_total``
    counts solves per level when adjacent terms share realizations.
    ``relative_load`` is in units of one finest-level solve.
    """

    strategy: StrategyId
    L: int
    M: tuple
    M_total: tuple
    error_bound_multiplier: float
    relative_load: float
    inputs: Optional[SolutionParameters]

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if len(self.M) != self.L:
            raise ValueError(f"len(M)={len(self.M)} does not match L={self.L}")
        if any(int(m) != m or m < 1 for m in self.M):
            raise ValueError(f"sample counts must be integers >= 1, got {self.M}")
        object.__setattr__(self, "M", tuple(int(m) for m in self.M))
        object.__setattr__(self, "M_total", tuple(int(m) for m in self.M_total))
        if not self.error_bound_multiplier > 0:
            raise ValueError("error_bound_multiplier must be positive")

    def to_json_dict(self):
        # Field order is part of the file format.
        return {
            "strategy": self.strategy.value,
            "L": self.L,
            "M": list(self.M),
            "M_total": list(self.M_total),
            "error_bound_multiplier": self.error_bound_multiplier,
            "relative_load": self.relative_load,
            "inputs": self.inputs.to_json_dict() if self.inputs is not None else None,
        }

    @classmethod
    def from_json_dict(cls, d):
        return cls(
            strategy=StrategyId(d["strategy"]),
            L=int(d["L"]),
            M=tuple(int(m) for m in d["M"]),
            M_total=tuple(int(m) for m in d["M_total"]),
            error_bound_multiplier=float(d["error_bound_multiplier"]),
            relative_load=float(d["relative_load"]),
            inputs=(
                SolutionParameters.from_json_dict(d["inputs"])
                if d.get("inputs") is not None
                else None
            ),
        )


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def _base_factor(alpha):
    # 2 (1 + 4^alpha): the sample-count prefactor shared by every strategy.
    return 2.0 * (1.0 + 4.0**alpha)


def _clamp_count(x):
    return max(1, _round_half_up(x))


def _raw_level_count(strategy, p):
    """Real-valued level count before ceiling/clamping (S1/S2/S3 only)."""
    B = _base_factor(p.alpha)
    gap = 2.0 * math.log(p.delta) - 2.0 * math.log(p.e) - math.log(B)
    if strategy in (StrategyId.S1, StrategyId.S3):
        if p.alpha == 0:
            raise ValueError(
                "alpha = 0 gives no refinement gain; the level-count formula "
                "is singular"
            )
        return 1.0 + gap / (2.0 * p.alpha * math.log(2.0))
    if strategy is StrategyId.S2:
        return gap / ((p.alpha + 1.0) * math.log(4.0)) + 1.0
    raise ValueError(f"no closed-form level count for {strategy}")


def _unrounded_sizes(strategy, p, L):
    """Per-term sample counts before rounding, for a ladder of L terms."""
    B = _base_factor(p.alpha)
    ls = range(1, L + 1)
    if strategy is StrategyId.S1:
        return [B * 2.0 ** (2.0 * p.alpha * (l - 1)) for l in ls]
    if strategy is StrategyId.S2:
        return [B * 4.0 ** ((l - 1) * (p.alpha + 1.0)) for l in ls]
    if strategy is StrategyId.S3:
        w = 2.0 * (1.0 + p.sigma)
        return [B * (L - l + 1) ** w * 2.0 ** (2.0 * p.alpha * (l - 1)) for l in ls]
    if strategy is StrategyId.S4:
        w = 2.0 * (1.0 + p.sigma)
        return [B * l**w * 2.0 ** (2.0 * p.alpha * (l - 1)) for l in ls]
    raise ValueError(f"no per-level sizes for {strategy}")


def _load_from_counts(strategy, M):
    if strategy is StrategyId.CLASSICAL_MC:
        return float(M[0])
    L = len(M)
    total = 0.0
    for l in range(1, L):
        total += M[l - 1] * (relative_dof(l) + relative_dof(l + 1))
    total += M[L - 1] * relative_dof(L)
    return total


def _finish_plan(strategy, p, L, multiplier):
    sizes = _unrounded_sizes(strategy, p, L)
    M = [_clamp_count(x) for x in sizes]
    # Coarsest-term closure: the statistical error of the last term must not
    # exceed e, i.e. M_L >= delta^2/e^2.  The formula already guarantees this
    # when L comes from its own ceiling; when a max_levels cap shortened the
    # ladder, the extra samples restore the a-priori bound.
    M[-1] = max(M[-1], _clamp_count((p.delta / p.e) ** 2))
    return LevelPlan(
        strategy=strategy,
        L=L,
        M=tuple(M),
        M_total=tuple(total_samples_per_level(M)),
        error_bound_multiplier=multiplier,
        relative_load=_load_from_counts(strategy, M),
        inputs=p,
    )


def _check_max_levels(max_levels):
    if max_levels is not None and max_levels < 1:
        raise ValueError(f"max_levels must be >= 1, got {max_levels}")


def plan_classical_mc(p):
    """Single-level baseline: M = delta^2/e^2 samples at the finest level."""
    M1 = _clamp_count((p.delta / p.e) ** 2)
    return LevelPlan(
        strategy=StrategyId.CLASSICAL_MC,
        L=1,
        M=(M1,),
        M_total=(M1,),
        error_bound_multiplier=2.0,
        relative_load=float(M1),
        inputs=p,
    )


def plan_strategy1(p, max_levels=None):
    """Geometric sizing with the minimum sample growth per level.

    Cheapest of the four multilevel schedules; the a-priori bound grows
    with the ladder ((L+2) e).  Requires alpha > 0.
    """
    _check_max_levels(max_levels)
    L = max(1, math.ceil(_raw_level_count(StrategyId.S1, p)))
    if max_levels is not None:
        L = min(L, max_levels)
    return _finish_plan(StrategyId.S1, p, L, float(L + 2))


def plan_strategy2(p, max_levels=None):
    """Aggressive sizing whose bound stays flat at 4e for any ladder."""
    _check_max_levels(max_levels)
    L = max(1, math.ceil(_raw_level_count(StrategyId.S2, p)))
    if max_levels is not None:
        L = min(L, max_levels)
    return _finish_plan(StrategyId.S2, p, L, 4.0)


def plan_strategy3(p, max_levels=None):
    """Level-weighted sizing, weights growing toward the *finest* term.

    Same ladder length as strategy 1 but each term l is amplified by
    (L-l+1)^(2(1+sigma)), buying a flat (3 + 1/sigma) e bound.  Requires
    alpha > 0.
    """
    _check_max_levels(max_levels)
    L = max(1, math.ceil(_raw_level_count(StrategyId.S3, p)))
    if max_levels is not None:
        L = min(L, max_levels)
    return _finish_plan(StrategyId.S3, p, L, 3.0 + 1.0 / p.sigma)


_S4_SCAN_CAP = 64


def plan_strategy4(p, max_levels=None):
    """Level-weighted sizing, weights growing toward the *coarsest* term.

    The ladder length is the smallest L whose coarsest term already meets
    the statistical budget; found by an ascending scan (log-space, so no
    overflow), capped at 64.  Bound: (3 + 1/sigma) e.
    """
    _check_max_levels(max_levels)
    B = _base_factor(p.alpha)
    # Need L^(2(1+sigma)) * 2^(2 alpha (L-1)) >= delta^2 / (e^2 B), compared
    # via logarithms.
    target = 2.0 * math.log(p.delta) - 2.0 * math.log(p.e) - math.log(B)
    w = 2.0 * (1.0 + p.sigma)
    cap = _S4_SCAN_CAP if max_levels is None else min(_S4_SCAN_CAP, max_levels)
    L = None
    for cand in range(1, cap + 1):
        if w * math.log(cand) + 2.0 * p.alpha * (cand - 1) * math.log(2.0) >= target:
            L = cand
            break
    if L is None:
        if max_levels is not None and cap < _S4_SCAN_CAP:
            L = cap  # ladder capped by the model; closure restores the bound
        else:
            raise ValueError(
                f"no ladder of <= {_S4_SCAN_CAP} levels meets the statistical "
                f"budget (delta={p.delta}, e={p.e}, alpha={p.alpha})"
            )
    return _finish_plan(StrategyId.S4, p, L, 3.0 + 1.0 / p.sigma)


_PLANNERS = {
    StrategyId.CLASSICAL_MC: lambda p, max_levels=None: plan_classical_mc(p),
    StrategyId.S1: plan_strategy1,
    StrategyId.S2: plan_strategy2,
    StrategyId.S3: plan_strategy3,
    StrategyId.S4: plan_strategy4,
}


def plan_for_strategy(strategy, p, max_levels=None):
    """Dispatch to the planner for ``strategy`` (a StrategyId or its value)."""
    return _PLANNERS[StrategyId(strategy)](p, max_levels=max_levels)


def predicted_load(plan):
    """Relative load of a plan, in units of one finest-level solve.

    Multilevel terms couple two adjacent levels, so term l < L pays for a
    solve at level l and one at level l+1 per sample; the coarsest term
    pays for level L only.  The classical baseline runs entirely at the
    finest level, where one solve costs exactly 1.
    """
    return _load_from_counts(plan.strategy, plan.M)


def polynomial_n_exponent(strategy, alpha):
    """N-exponent of the strategy's polynomial-regime cost cell."""
    strategy = StrategyId(strategy)
    if strategy is StrategyId.CLASSICAL_MC:
        return 1.0 + 2.0 * alpha / 3.0
    if strategy is StrategyId.S2:
        return 1.0 + alpha * (2.0 * alpha - 1.0) / (3.0 * (alpha + 1.0))
    # S1, S3, S4 share the same polynomial N-exponent.
    return 1.0 + (2.0 * alpha - 3.0) / 3.0


def classify_cost_regime(strategy, alpha, sigma=1.0):
    """Asymptotic total-cost cell for a strategy at the given exponents.

    The multilevel strategies switch regime at alpha = 3/2 (strategy 2 at
    alpha = 1/2); the classical baseline is polynomial for every alpha.
    Strategy 3 has no linear cell: even its small-alpha regime carries a
    polylog factor.
    """
    strategy = StrategyId(strategy)
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")

    def g(x):
        return format(x, ".4g")

    n_poly = polynomial_n_exponent(strategy, alpha)

    if strategy is StrategyId.CLASSICAL_MC:
        return CostRegime(
            Growth.POLYNOMIAL, "all alpha", f"O(delta^2 * N^{g(n_poly)})"
        )

    if strategy is StrategyId.S2:
        if alpha < 0.5:
            return CostRegime(Growth.LINEAR, "alpha < 1/2", "O(N)")
        if alpha == 0.5:
            return CostRegime(
                Growth.QUASILINEAR, "alpha = 1/2", "O(N * (log delta + log N))"
            )
        d_exp = (2.0 * alpha - 1.0) / (alpha + 1.0)
        return CostRegime(
            Growth.POLYNOMIAL,
            "alpha > 1/2",
            f"O(delta^{g(d_exp)} * N^{g(n_poly)})",
        )

    # S1, S3, S4: switch at alpha = 3/2.
    d_exp = (2.0 * alpha - 3.0) / alpha if alpha > 0 else None
    if strategy is StrategyId.S1:
        if alpha < 1.5:
            return CostRegime(Growth.LINEAR, "alpha < 3/2", "O(N)")
        if alpha == 1.5:
            return CostRegime(
                Growth.QUASILINEAR, "alpha = 3/2", "O(N * (log delta + log N))"
            )
        return CostRegime(
            Growth.POLYNOMIAL,
            "alpha > 3/2",
            f"O(delta^{g(d_exp)} * N^{g(n_poly)})",
        )

    if strategy is StrategyId.S3:
        if alpha < 1.5:
            return CostRegime(
                Growth.QUASILINEAR,
                "alpha < 3/2",
                f"O(N * (log delta + log N)^{g(2.0 * (1.0 + sigma))})",
            )
        if alpha == 1.5:
            return CostRegime(
                Growth.QUASILINEAR,
                "alpha = 3/2",
                f"O(N * (log delta + log N)^{g(2.0 * sigma + 3.0)})",
            )
        return CostRegime(
            Growth.POLYNOMIAL,
            "alpha > 3/2",
            f"O((log delta + log N)^{g(2.0 * (1.0 + sigma))} "
            f"* delta^{g(d_exp)} * N^{g(n_poly)})",
        )

    # S4
    if alpha < 1.5:
        return CostRegime(Growth.LINEAR, "alpha < 3/2", "O(N)")
    if alpha == 1.5:
        return CostRegime(
            Growth.QUASILINEAR,
            "alpha = 3/2",
            f"O(N * (log delta + log N)^{g(2.0 * sigma + 3.0)})",
        )
    return CostRegime(
        Growth.POLYNOMIAL,
        "alpha > 3/2",
        f"O((log delta + log N)^{g(2.0 * (1.0 + sigma))} "
        f"* delta^{g(d_exp)} * N^{g(n_poly)})",
    )
