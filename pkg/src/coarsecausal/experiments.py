"""Monte Carlo experiments comparing closed forms with simulation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .macro import derive_seed
from .process import (CovarianceSpec, InterventionSpec, ModelParams, interventional_slope,
                      observational_slope, simulate_ensemble, stationary_covariance)
from .stats import (K_SIGMA, CheckVerdict, RegressionFit, Status, check_within_stderr,
                    estimate_covariance, estimate_moments, exit_code, regression_slope)

__all__ = ["MomentReport", "moment_check", "NegativeResultReport", "negative_result",
           "INTERVENTION_LEVELS"]


@dataclass
class MomentReport:
    closed_form: CovarianceSpec
    estimates: dict
    verdicts: List[CheckVerdict] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return exit_code(self.verdicts)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "closed_form": {k: getattr(self.closed_form, k) for k in ("c_xx", "c_xy", "c_yy", "mean_x", "mean_y")},
            "estimates": self.estimates,
            "verdicts": [v.to_dict() for v in self.verdicts],
        }

    def render(self) -> str:
        lines = [f"{'moment':<8} {'closed form':>14} {'estimate':>14} {'stderr':>10}  verdict"]
        for v in self.verdicts:
            lines.append(f"{v.name:<8} {v.expected:>14.6f} {v.observed:>14.6f} {v.stderr:>10.2g}  "
                         f"{v.status.value.upper()}")
        return "\n".join(lines)


def moment_check(params: ModelParams, n: int = 100_000, seed: int = 0,
                 burn_in: Optional[int] = None, k_sigma: float = K_SIGMA) -> MomentReport:
    """Compare stationary moments with ``n`` independent replicas, one state each."""
    cov = stationary_covariance(params)
    ens = simulate_ensemble(params, n, n_steps=1, burn_in=burn_in, seed=seed)
    x, y = ens.xs[:, 0], ens.ys[:, 0]
    mx, my = estimate_moments(x), estimate_moments(y)
    cxy = estimate_covariance(x, y)
    verdicts = [
        check_within_stderr("mean_x", mx.mean, mx.mean_stderr, cov.mean_x, k_sigma),
        check_within_stderr("mean_y", my.mean, my.mean_stderr, cov.mean_y, k_sigma),
        check_within_stderr("c_xx", mx.variance, mx.variance_stderr, cov.c_xx, k_sigma),
        check_within_stderr("c_xy", cxy.covariance, cxy.stderr, cov.c_xy, k_sigma),
        check_within_stderr("c_yy", my.variance, my.variance_stderr, cov.c_yy, k_sigma),
    ]
    estimates = {
        "mean_x": [mx.mean, mx.mean_stderr], "mean_y": [my.mean, my.mean_stderr],
        "c_xx": [mx.variance, mx.variance_stderr], "c_xy": [cxy.covariance, cxy.stderr],
        "c_yy": [my.variance, my.variance_stderr], "n_effective": n, "burn_in": ens.burn_in,
    }
    return MomentReport(closed_form=cov, estimates=estimates, verdicts=verdicts)


INTERVENTION_LEVELS = (-2.0, -1.0, 0.0, 1.0, 2.0)


@dataclass
class NegativeResultReport:
    observational_slope: float
    interventional_slope: float
    observational_fit: RegressionFit
    interventional_fit: RegressionFit
    verdicts: List[CheckVerdict] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return exit_code(self.verdicts)

    def to_dict(self) -> dict:
        def fit(r: RegressionFit):
            return {k: getattr(r, k) for k in r.__dataclass_fields__}
        return {
            "a": self.observational_slope, "a_prime": self.interventional_slope,
            "observational_fit": fit(self.observational_fit),
            "interventional_fit": fit(self.interventional_fit),
            "verdicts": [v.to_dict() for v in self.verdicts],
        }

    def render(self) -> str:
        o, i = self.observational_fit, self.interventional_fit
        lines = [
            f"observational slope   a  = {self.observational_slope:.6f}   "
            f"empirical {o.slope:.6f} ± {o.slope_stderr:.2g}",
            f"interventional slope  a' = {self.interventional_slope:.6f}   "
            f"empirical {i.slope:.6f} ± {i.slope_stderr:.2g}",
            "",
        ]
        w = max(len(v.name) for v in self.verdicts)
        lines += [f"{v.name:<{w}}  {v.status.value.upper():<12}  {v.detail}" for v in self.verdicts]
        return "\n".join(lines)


def negative_result(params: ModelParams, n: int = 100_000, seed: int = 0,
                    burn_in: Optional[int] = None, levels: Sequence[float] = INTERVENTION_LEVELS,
                    k_sigma: float = K_SIGMA) -> NegativeResultReport:
    """Estimate the observational and the interventional slope of Y on X.

    The observational slope regresses stationary ``Y[t]`` on ``X[t]``.  The
    interventional slope regresses ``Y[t]`` on the level ``x`` of
    ``do(X = x)``, with ``n`` replicas split evenly over ``levels``.
    """
    a = observational_slope(params)
    a_prime = interventional_slope(params)
    ens = simulate_ensemble(params, n, n_steps=1, burn_in=burn_in, seed=derive_seed(seed, 0))
    obs = regression_slope(ens.xs[:, 0], ens.ys[:, 0])

    per_level = max(n // len(levels), 2)
    xs, ys = [], []
    for i, level in enumerate(levels):
        e = simulate_ensemble(params, per_level, n_steps=1, burn_in=burn_in,
                              seed=derive_seed(seed, 100 + i),
                              intervention=InterventionSpec.constant(level))
        xs.append(np.full(per_level, level))
        ys.append(e.ys[:, 0])
    intv = regression_slope(np.concatenate(xs), np.concatenate(ys))

    gap_se = math.hypot(obs.slope_stderr, intv.slope_stderr)
    gap = intv.slope - obs.slope
    mismatch = Status.FAIL
    if abs(a_prime - a) > 1e-12 and abs(gap) > k_sigma * gap_se:
        mismatch = Status.PASS
    elif abs(a_prime - a) <= 1e-12 and abs(gap) <= k_sigma * gap_se:
        mismatch = Status.PASS
    verdicts = [
        check_within_stderr("empirical observational slope = a", obs.slope, obs.slope_stderr, a, k_sigma),
        check_within_stderr("empirical interventional slope = a'", intv.slope, intv.slope_stderr,
                            a_prime, k_sigma),
        CheckVerdict(
            "mismatch a != a' reproduced" if abs(a_prime - a) > 1e-12 else "no mismatch expected",
            observed=gap, expected=a_prime - a, tolerance=k_sigma * gap_se, status=mismatch,
            stderr=gap_se, detail=f"empirical gap {gap:.4f}, closed-form gap {a_prime - a:.4f}"),
    ]
    return NegativeResultReport(observational_slope=a, interventional_slope=a_prime,
                                observational_fit=obs, interventional_fit=intv, verdicts=verdicts)
