"""Benchmark harness: problem generators, metrics, and the sweep runner."""

from .generators import (audit_group_lasso, audit_lcvx,
                         audit_oscillating_masses, audit_portfolio,
                         audit_robust_kalman, gen_group_lasso, gen_lcvx,
                         gen_oscillating_masses, gen_portfolio,
                         gen_robust_kalman, lqr_kkt, lqr_problem,
                         problem_size)
from .metrics import (FAILURE_CAP, ProfileCurves, normalize,
                      performance_profiles, shifted_geometric_mean)
from .runner import (CLASSES, SIZE_TABLES, BenchRecord, ldl_compare,
                     lqr_factor_times, run_bench)

AUDITS = {
    "rkf": audit_robust_kalman,
    "lcvx": audit_lcvx,
    "lasso": audit_group_lasso,
    "portfolio": audit_portfolio,
    "oscmass": audit_oscillating_masses,
}

__all__ = [
    "AUDITS",
    "BenchRecord",
    "CLASSES",
    "FAILURE_CAP",
    "ProfileCurves",
    "SIZE_TABLES",
    "audit_group_lasso",
    "audit_lcvx",
    "audit_oscillating_masses",
    "audit_portfolio",
    "audit_robust_kalman",
    "gen_group_lasso",
    "gen_lcvx",
    "gen_oscillating_masses",
    "gen_portfolio",
    "gen_robust_kalman",
    "ldl_compare",
    "lqr_factor_times",
    "lqr_kkt",
    "lqr_problem",
    "normalize",
    "performance_profiles",
    "problem_size",
    "run_bench",
    "shifted_geometric_mean",
]
