"""Benchmark metrics: shifted geometric means and performance profiles.

All functions are pure: they take runtime arrays plus failure flags and
return derived statistics.  Failed solves are charged a cap time in the
geometric mean and count as never-solved in the profiles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Cap charged to a failed solve, roughly an order of magnitude above the
# slowest successful solve on this problem set.
FAILURE_CAP = 10.0


def shifted_geometric_mean(times, failures=None, shift: float = 1.0,
                           cap: float = FAILURE_CAP) -> float:
    """g = [prod(t_p + shift)]^(1/N) - shift, failures replaced by cap."""
    t = np.asarray(times, dtype=np.float64)
    if t.size == 0:
        raise ValueError("times must be nonempty")
    if failures is not None:
        f = np.asarray(failures, dtype=bool)
        t = np.where(f, cap, t)
    if np.any(t + shift <= 0.0):
        raise ValueError("times must satisfy t + shift > 0")
    return float(np.exp(np.mean(np.log(t + shift))) - shift)


def normalize(g_all) -> np.ndarray:
    """Normalize per-solver means so the fastest solver scores 1.00."""
    g = np.asarray(g_all, dtype=np.float64)
    if g.size == 0:
        raise ValueError("g_all must be nonempty")
    return g / np.min(g)


@dataclass
class ProfileCurves:
    """Step functions f(tau): fraction of problems solved within tau.

    rel_tau/rel use the per-problem performance ratio t / min_s t; the
    absolute pair uses raw runtimes.  Rows of the curve matrices follow
    the solver order of the input; failed solves never count.
    """

    rel_tau: np.ndarray
    rel: np.ndarray
    abs_tau: np.ndarray
    abs: np.ndarray


def _step_curves(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # values: solvers x problems, inf/nan for failed; breakpoints at all
    # finite values so the output is exact at every step
    finite = values[np.isfinite(values)]
    taus = np.unique(finite) if finite.size else np.array([1.0])
    with np.errstate(invalid="ignore"):
        curves = np.array(
            [[float(np.mean(row <= tau)) for tau in taus] for row in values]
        )
    return taus, curves


def performance_profiles(times, failures=None) -> ProfileCurves:
    """Relative and absolute performance profiles over a solver set."""
    t = np.asarray(times, dtype=np.float64)
    if t.ndim != 2 or t.size == 0:
        raise ValueError("times must be a nonempty solvers x problems matrix")
    if failures is None:
        failures = np.zeros(t.shape, dtype=bool)
    f = np.asarray(failures, dtype=bool)
    masked = np.where(f, np.inf, t)
    best = masked.min(axis=0)
    with np.errstate(invalid="ignore"):
        ratios = masked / best  # nan when every solver failed
    rel_tau, rel = _step_curves(ratios)
    abs_tau, abs_ = _step_curves(masked)
    return ProfileCurves(rel_tau=rel_tau, rel=rel, abs_tau=abs_tau, abs=abs_)
