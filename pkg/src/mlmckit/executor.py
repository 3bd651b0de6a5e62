"""Coupled-ensemble execution over pluggable stochastic QoI models.

A model maps (level, seed) to one scalar QoI evaluation, deterministically:
the same seed at two adjacent levels must resolve the same underlying
random realization, which is what makes the telescoping difference terms
cheap to estimate.  The executor owns seed derivation, scheduling,
aggregation, and the run report; models own only the physics.

Determinism contract: reports are byte-identical for a given
(model, plan, base_seed) regardless of worker count.  Sample ids are a
pure function of (base_seed, global counter); aggregation always happens
on the fully assembled per-term arrays in sample-index order with
compensated summation.
"""

import csv
import math
import time
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._bits import MASK64, counter_seeds, mix64_int
from .hierarchy import relative_dof
from .planner import LevelPlan, StrategyId
from .stats import (
    LevelTermStats,
    SolutionParameters,
    estimate_alpha,
    estimate_fine_error,
    mc_mean,
    unbiased_variance,
)

# Pilot realizations are drawn from a salted sub-stream so a subsequent run
# with the same base_seed never reuses them.
_PILOT_SALT = 0x70696C6F74C0FFEE

# Fixed scheduling granularity: chunk boundaries must not depend on the
# worker count, or the "same bytes for any workers" guarantee would hinge
# on floating-point aggregation order.  (It does not — aggregation is done
# on the assembled arrays — but fixed chunks also keep model-side batching
# deterministic.)
_CHUNK = 4096


class ModelEvaluationError(RuntimeError):
    """A sample evaluation failed; carries the offending (level, seed)."""

    def __init__(self, level, seed, detail):
        self.level = level
        self.seed = seed
        super().__init__(
            f"model evaluation failed at level={level}, seed={seed}: {detail}"
        )


class DegenerateModelError(ValueError):
    """Pilot statistics unusable for planning (e.g. zero variance)."""


class QoIModel(ABC):
    """Deterministic stochastic-solver facade.

    ``evaluate(level, seed)`` must return the same float on every call, and
    the same ``seed`` at different levels must resolve the same underlying
    realization (exact coupling).  ``max_level`` is the coarsest level the
    model can run.
    """

    max_level: int = 1

    @abstractmethod
    def evaluate(self, level, seed):
        """One QoI evaluation at ``level`` for the realization ``seed``."""

    def cost_hint(self, level):
        """Relative cost of one solve at ``level`` (finest solve = 1)."""
        return relative_dof(level)

    def evaluate_many(self, level, seeds):
        """Vectorizable batch path; the default just loops ``evaluate``."""
        return np.asarray([self.evaluate(level, int(s)) for s in seeds], dtype=float)


@dataclass(frozen=True)
class RunReport:
    """Everything a finished ensemble reports.

    ``wall_time`` (seconds) is informational and deliberately left out of
    :meth:`to_json_dict` so that report files are byte-stable across
    machines and worker counts.
    """

    plan: LevelPlan
    term_stats: tuple
    estimate: float
    estimated_std_error: Optional[float]
    realized_load: float
    wall_time: float
    seeds: dict

    @property
    def a_priori_error_bound(self):
        if self.plan.inputs is None:
            return None
        return self.plan.error_bound_multiplier * self.plan.inputs.e

    def to_json_dict(self):
        return {
            "plan": self.plan.to_json_dict(),
            "term_stats": [t.to_json_dict() for t in self.term_stats],
            "estimate": self.estimate,
            "estimated_std_error": self.estimated_std_error,
            "a_priori_error_bound": self.a_priori_error_bound,
            "realized_load": self.realized_load,
            "seeds": self.seeds,
        }


def _check_base_seed(base_seed):
    if not isinstance(base_seed, int) or isinstance(base_seed, bool):
        raise ValueError(f"base_seed must be an integer, got {base_seed!r}")
    if not 0 <= base_seed <= MASK64:
        raise ValueError(f"base_seed must fit in 64 bits, got {base_seed}")


def _evaluate_level(model, level, seeds, workers):
    """Assemble the per-sample values for one level, in sample-index order."""
    chunks = [seeds[i : i + _CHUNK] for i in range(0, len(seeds), _CHUNK)]

    def run_chunk(chunk):
        try:
            out = np.asarray(model.evaluate_many(level, chunk), dtype=float)
        except ModelEvaluationError:
            raise
        except Exception as exc:
            # Locate the offending sample so the abort is actionable.
            for s in chunk:
                try:
                    model.evaluate(level, int(s))
                except Exception as inner:
                    raise ModelEvaluationError(level, int(s), inner) from inner
            raise ModelEvaluationError(level, None, exc) from exc
        if out.shape != (len(chunk),):
            raise ModelEvaluationError(
                level, None, f"batch returned shape {out.shape} for {len(chunk)} seeds"
            )
        return out

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_chunk, chunks))
    else:
        parts = [run_chunk(c) for c in chunks]
    values = np.concatenate(parts) if parts else np.empty(0)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        i = int(bad[0])
        raise ModelEvaluationError(
            level, int(seeds[i]), f"non-finite value {values[i]!r}"
        )
    return values


def _term_stats(term_index, values):
    vals = values.tolist()
    mean = mc_mean(vals)
    var = unbiased_variance(vals) if len(vals) >= 2 else None
    return LevelTermStats(term_index=term_index, mean=mean, variance=var, count=len(vals))


def _std_error(term_stats):
    contribs = []
    for t in term_stats:
        if t.variance is None:
            return None
        contribs.append(t.variance / t.count)
    return math.sqrt(math.fsum(contribs))


def _write_sample_log(path, rows):
    # rows already sorted by (term, sample_index, level)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["term", "level", "sample_index", "seed", "value"])
        for row in rows:
            term, level, idx, seed, value = row
            w.writerow([term, level, idx, seed, repr(float(value))])


def run_mlmc(model, plan, base_seed, workers=1, sample_log_path=None):
    """Execute a multilevel plan: coupled difference terms plus coarse term.

    Term l < L draws M[l-1] realizations and evaluates each at levels l and
    l+1 (same seed — exact coupling); the last term evaluates at level L
    only.  Realizations are disjoint across terms by the counter scheme.
    """
    _check_base_seed(base_seed)
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if plan.strategy is StrategyId.CLASSICAL_MC:
        raise ValueError("classical plans are executed with run_classical_mc")
    if plan.L > model.max_level:
        raise ValueError(
            f"plan has L={plan.L} levels but the model stops at "
            f"max_level={model.max_level}"
        )

    t0 = time.perf_counter()
    stats = []
    seed_ledger = []
    log_rows = [] if sample_log_path is not None else None
    load = 0.0
    start = 0
    for term in range(1, plan.L + 1):
        count = plan.M[term - 1]
        seeds = counter_seeds(base_seed, start, count)
        levels = [term, term + 1] if term < plan.L else [term]
        per_level = {
            lv: _evaluate_level(model, lv, seeds, workers) for lv in levels
        }
        if term < plan.L:
            values = per_level[term] - per_level[term + 1]
        else:
            values = per_level[term]
        stats.append(_term_stats(term, values))
        load += count * math.fsum(model.cost_hint(lv) for lv in levels)
        seed_ledger.append(
            {
                "term_index": term,
                "levels": levels,
                "start_index": start,
                "count": count,
                "first_seed": int(seeds[0]),
                "last_seed": int(seeds[-1]),
            }
        )
        if log_rows is not None:
            for idx in range(count):
                for lv in levels:
                    log_rows.append(
                        (term, lv, idx, int(seeds[idx]), per_level[lv][idx])
                    )
        start += count

    term_stats = tuple(stats)
    report = RunReport(
        plan=plan,
        term_stats=term_stats,
        estimate=math.fsum(t.mean for t in term_stats),
        estimated_std_error=_std_error(term_stats),
        realized_load=load,
        wall_time=time.perf_counter() - t0,
        seeds={"base_seed": base_seed, "terms": seed_ledger},
    )
    if sample_log_path is not None:
        _write_sample_log(sample_log_path, log_rows)
    return report


def run_classical_mc(model, level, M, base_seed, workers=1, sample_log_path=None):
    """Plain Monte Carlo at a single level, same seeding and bookkeeping."""
    _check_base_seed(base_seed)
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if int(M) != M or M < 1:
        raise ValueError(f"M must be an integer >= 1, got {M}")
    M = int(M)
    if not 1 <= level <= model.max_level:
        raise ValueError(
            f"level must be within 1..{model.max_level}, got {level}"
        )

    t0 = time.perf_counter()
    seeds = counter_seeds(base_seed, 0, M)
    values = _evaluate_level(model, level, seeds, workers)
    stats = _term_stats(1, values)
    plan = LevelPlan(
        strategy=StrategyId.CLASSICAL_MC,
        L=1,
        M=(M,),
        M_total=(M,),
        error_bound_multiplier=2.0,
        relative_load=float(M),
        inputs=None,
    )
    report = RunReport(
        plan=plan,
        term_stats=(stats,),
        estimate=stats.mean,
        estimated_std_error=_std_error((stats,)),
        realized_load=M * model.cost_hint(level),
        wall_time=time.perf_counter() - t0,
        seeds={
            "base_seed": base_seed,
            "terms": [
                {
                    "term_index": 1,
                    "levels": [level],
                    "start_index": 0,
                    "count": M,
                    "first_seed": int(seeds[0]),
                    "last_seed": int(seeds[-1]),
                }
            ],
        },
    )
    if sample_log_path is not None:
        rows = [(1, level, i, int(seeds[i]), values[i]) for i in range(M)]
        _write_sample_log(sample_log_path, rows)
    return report


def pilot_estimate_parameters(model, pilot_samples, base_seed, workers=1):
    """Estimate (delta, e, alpha) from coupled pilots at the three finest levels.

    Each pilot realization is evaluated at levels 1, 2 and 3; the spread of
    the fine QoI is taken at level 2 (the second-finest), the decay exponent
    from the two adjacent difference spreads, and the fine-level error from
    the sizing identity.  Pilot seeds come from a salted sub-stream so they
    are never reused by a later run with the same base_seed.
    """
    _check_base_seed(base_seed)
    if pilot_samples < 2:
        raise ValueError(f"pilot needs at least 2 samples, got {pilot_samples}")
    if model.max_level < 3:
        raise ValueError(
            f"pilot needs levels 1..3 but the model stops at {model.max_level}"
        )
    pilot_base = mix64_int(base_seed ^ _PILOT_SALT)
    seeds = counter_seeds(pilot_base, 0, pilot_samples)
    u1 = _evaluate_level(model, 1, seeds, workers)
    u2 = _evaluate_level(model, 2, seeds, workers)
    u3 = _evaluate_level(model, 3, seeds, workers)

    var_12 = unbiased_variance((u1 - u2).tolist())
    var_23 = unbiased_variance((u2 - u3).tolist())
    var_u = unbiased_variance(u2.tolist())
    if var_12 == 0.0 or var_23 == 0.0 or var_u == 0.0:
        raise DegenerateModelError(
            "pilot variance is zero: a deterministic (or exactly coupled) "
            "model cannot be planned from pilot statistics"
        )
    delta_12 = math.sqrt(var_12)
    delta_23 = math.sqrt(var_23)
    alpha = estimate_alpha(delta_12, delta_23)
    if alpha < 0:
        raise DegenerateModelError(
            f"pilot decay exponent is negative (alpha={alpha:.4g}): coupled "
            "differences grow toward finer levels, nothing to plan"
        )
    return SolutionParameters(
        delta=math.sqrt(var_u),
        e=estimate_fine_error(delta_12, alpha),
        alpha=alpha,
        sigma=1.0,
    )
