"""
Time-coarse-grained macro-variables and the exact-transformation check.

For kernels ``f`` and ``g`` the macro-variables are ``X_f = sum_t f(t) X[t]``
and ``Y_g = sum_t g(t) Y[t]``.  When ``f`` is the compatible partner of
``g`` (see :func:`coarsecausal.kernels.compatible_partner`) the pair obeys::

    Y_g = X_f + noise,    Var(noise) = macro_noise_variance_y(g)

both observationally and under any intervention that sets every X[t].
:func:`exact_transformation_check` verifies this by simulation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .kernels import (DEFAULT_POLICY, Kernel, TruncationPolicy, compatible_partner,
                      macro_noise_variance_y)
from .process import (InterventionSpec, ModelParams, Trajectory, default_burn_in,
                      simulate_projections)
from .stats import (K_SIGMA, CheckVerdict, Status, check_within_stderr, check_within_tolerance,
                    estimate_moments, exit_code, regression_slope)

__all__ = [
    "CoverageError", "MacroSample", "Tolerances", "TransformationReport", "macro_value",
    "sample_joint_macro", "sample_interventional_macro", "exact_transformation_check",
    "derive_seed",
]


class CoverageError(ValueError):
    """The trajectory does not cover the kernel's support."""


def derive_seed(seed: int, stream: int) -> int:
    """Deterministic, statistically independent child seed."""
    return int(np.random.SeedSequence([int(seed), int(stream)]).generate_state(1, np.uint64)[0])


def macro_value(traj: Trajectory, k: Kernel, variable: str = "x"):
    """``sum_t k(t) X[t]`` (or ``Y[t]`` with ``variable="y"``) over a trajectory.

    Raises
    ------
    CoverageError
        If the support of ``k`` reaches outside the retained window.
    """
    if variable not in ("x", "y"):
        raise ValueError(f"variable must be 'x' or 'y', got {variable!r}")
    if k.is_zero:
        return 0.0
    if k.offset < traj.t0 or k.stop > traj.stop:
        raise CoverageError(
            f"kernel support [{k.offset}, {k.stop}] not inside trajectory window "
            f"[{traj.t0}, {traj.stop}]")
    series = traj.xs if variable == "x" else traj.ys
    seg = series[k.offset - traj.t0:k.stop - traj.t0 + 1]
    value = complex(np.dot(k.values, seg))
    return value.real if k.is_real else value


@dataclass(frozen=True, eq=False)
class MacroSample:
    """Independent draws of ``(X_f, Y_g)``.

    ``x_macro`` and ``y_macro`` are arrays of equal length.  Under an
    intervention ``x_macro`` holds the constant ``sum_t x_t f(t)``.
    ``window`` is the inclusive time range spanned by both kernels; each
    draw simulated ``burn_in`` further steps before it.
    """

    x_macro: np.ndarray
    y_macro: np.ndarray
    regime: str
    f: Kernel
    g: Kernel
    window: Tuple[int, int]
    burn_in: int
    intervention: Optional[InterventionSpec] = None

    def __len__(self) -> int:
        return len(self.y_macro)


def _window(*kernels: Kernel) -> Tuple[int, int]:
    live = [k for k in kernels if not k.is_zero]
    if not live:
        return (0, 0)
    return min(k.offset for k in live), max(k.stop for k in live)


def _weights(k: Kernel):
    if k.is_zero:
        return None
    return k.offset, (k.values.real if k.is_real else k.values)


def sample_joint_macro(params: ModelParams, g: Kernel, n: int, seed: int = 0,
                       policy: TruncationPolicy = DEFAULT_POLICY, f: Optional[Kernel] = None,
                       burn_in: Optional[int] = None) -> MacroSample:
    """Stationary draws of ``(X_f, Y_g)``, one independent chain per draw.

    ``f`` defaults to the compatible partner of ``g``; pass another kernel
    to examine a mismatched pair.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if f is None:
        f = compatible_partner(g, params, policy)
    burn = default_burn_in(params) if burn_in is None else burn_in
    xm, ym = simulate_projections(params, _weights(f), _weights(g), n, burn_in=burn, seed=seed)
    return MacroSample(x_macro=xm, y_macro=ym, regime="observational", f=f, g=g,
                       window=_window(f, g), burn_in=burn)


def sample_interventional_macro(params: ModelParams, g: Kernel, intervention: InterventionSpec,
                                n: int, seed: int = 0, policy: TruncationPolicy = DEFAULT_POLICY,
                                f: Optional[Kernel] = None,
                                burn_in: Optional[int] = None) -> MacroSample:
    """Draws of ``Y_g`` while every X[t] is held at the intervention value."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if f is None:
        f = compatible_partner(g, params, policy)
    burn = default_burn_in(params) if burn_in is None else burn_in
    _, ym = simulate_projections(params, None, _weights(g), n, burn_in=burn, seed=seed,
                                 intervention=intervention)
    x_value = complex(np.dot(f.values, intervention.values_on(f.times))) if not f.is_zero else 0.0
    if f.is_real:
        x_value = complex(x_value).real
    return MacroSample(x_macro=np.full(n, x_value), y_macro=ym, regime="intervened", f=f, g=g,
                       window=_window(f, g), burn_in=burn, intervention=intervention)


@dataclass(frozen=True)
class Tolerances:
    """Pass criteria for :func:`exact_transformation_check`.

    ``resolution`` is the smallest conditional-mean gap, in units of the
    residual standard deviation, that the interventional comparison must
    be able to resolve; coarser estimates are inconclusive.
    """

    slope: float = 0.02
    residual_variance_rel: float = 0.03
    k_sigma: float = K_SIGMA
    resolution: float = 0.1


@dataclass(frozen=True)
class TransformationReport:
    n: int
    seed: int
    compatible: bool
    slope: float
    slope_stderr: float
    intercept: float
    intercept_stderr: float
    residual_variance: float
    residual_variance_stderr: float
    predicted_residual_variance: float
    x_macro_intervened: float
    interventional_mean: float
    interventional_mean_stderr: float
    interventional_variance: float
    interventional_variance_stderr: float
    observational_conditional_mean: float
    observational_conditional_mean_stderr: float
    predicted_interventional_mean: float
    verdicts: List[CheckVerdict] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return exit_code(self.verdicts)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, name: str) -> CheckVerdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "verdicts"}
        d["verdicts"] = [v.to_dict() for v in self.verdicts]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def render(self) -> str:
        rows = [
            ("slope", f"{self.slope:.6f} ± {self.slope_stderr:.2g}", "1"),
            ("intercept", f"{self.intercept:.6f} ± {self.intercept_stderr:.2g}", "0"),
            ("residual variance", f"{self.residual_variance:.6f} ± {self.residual_variance_stderr:.2g}",
             f"{self.predicted_residual_variance:.6f}"),
            ("x-macro under do", f"{self.x_macro_intervened:.6f}", ""),
            ("interventional mean", f"{self.interventional_mean:.6f} ± {self.interventional_mean_stderr:.2g}",
             f"{self.predicted_interventional_mean:.6f}"),
            ("observational conditional mean",
             f"{self.observational_conditional_mean:.6f} ± {self.observational_conditional_mean_stderr:.2g}", ""),
            ("interventional variance",
             f"{self.interventional_variance:.6f} ± {self.interventional_variance_stderr:.2g}",
             f"{self.predicted_residual_variance:.6f}"),
        ]
        w = max(len(r[0]) for r in rows)
        w2 = max(len(r[1]) for r in rows)
        lines = [f"{'quantity':<{w}}  {'estimate':<{w2}}  predicted"]
        lines += [f"{a:<{w}}  {b:<{w2}}  {c}" for a, b, c in rows]
        lines.append("")
        wn = max(len(v.name) for v in self.verdicts)
        for v in self.verdicts:
            lines.append(f"{v.name:<{wn}}  {v.status.value.upper():<12}  {v.detail}")
        return "\n".join(lines)


def exact_transformation_check(params: ModelParams, g: Kernel, n: int = 100_000,
                               tolerances: Optional[Tolerances] = None, seed: int = 0,
                               f: Optional[Kernel] = None,
                               intervention: Optional[InterventionSpec] = None,
                               policy: TruncationPolicy = DEFAULT_POLICY) -> TransformationReport:
    """Verify by simulation that ``(X_f, Y_g)`` is an exact macro-level causal model.

    Checks, each at the given tolerances:

    1. ``observational slope``: regression slope of ``Y_g`` on ``X_f`` is 1.
    2. ``residual variance``: residual variance matches
       :func:`macro_noise_variance_y` within a relative tolerance.
    3. ``interventional conditional mean`` / ``interventional conditional
       variance``: under ``intervention`` (default: every X[t] set to 2),
       the law of ``Y_g`` equals the observational conditional law at the
       matching value of ``X_f``.

    ``f`` defaults to the compatible partner of ``g``.  With a zero ``f``
    (for instance ``beta == 0``) the slope check is vacuous and the
    remaining checks compare against the unconditional law.
    """
    tol = tolerances or Tolerances()
    if not g.is_real or (f is not None and not f.is_real):
        raise ValueError("exact_transformation_check needs real kernels")
    if intervention is None:
        intervention = InterventionSpec.constant(2.0)
    f_true = compatible_partner(g, params, policy)
    if f is None:
        f = f_true
    compatible = f.allclose(f_true, atol=10 * policy.tol)
    predicted_rv = macro_noise_variance_y(g, params, policy)

    obs = sample_joint_macro(params, g, n, seed=derive_seed(seed, 0), policy=policy, f=f)
    intv = sample_interventional_macro(params, g, intervention, n, seed=derive_seed(seed, 1),
                                       policy=policy, f=f)
    x_star = float(intv.x_macro[0])
    predicted_int_mean = float(np.dot(f_true.values.real, intervention.values_on(f_true.times))) \
        if not f_true.is_zero else 0.0

    verdicts = []
    if f.is_zero:
        m = estimate_moments(obs.y_macro)
        slope, slope_se, icpt, icpt_se = 0.0, 0.0, m.mean, m.mean_stderr
        rv, rv_se = m.variance, m.variance_stderr
        cond_mean, cond_se = m.mean, m.mean_stderr
        verdicts.append(CheckVerdict("observational slope", 0.0, 1.0, tol.slope, Status.PASS,
                                     detail="vacuous: X-macro is identically zero"))
    else:
        fit = regression_slope(obs.x_macro, obs.y_macro)
        slope, slope_se, icpt, icpt_se = fit.slope, fit.slope_stderr, fit.intercept, fit.intercept_stderr
        rv, rv_se = fit.residual_variance, fit.residual_variance_stderr
        xbar = float(np.mean(obs.x_macro))
        sxx = float(np.sum((obs.x_macro - xbar) ** 2))
        cond_mean = fit.predict(x_star)
        cond_se = fit.predict_stderr(x_star, xbar, sxx)
        verdicts.append(check_within_tolerance("observational slope", slope, 1.0, tol.slope,
                                               stderr=slope_se, k_sigma=tol.k_sigma))

    verdicts.append(check_within_tolerance(
        "residual variance", rv, predicted_rv, tol.residual_variance_rel * predicted_rv,
        stderr=rv_se, k_sigma=tol.k_sigma))

    im = estimate_moments(intv.y_macro)
    resolution = tol.resolution * math.sqrt(max(rv, 0.0))
    mean_se = math.hypot(im.mean_stderr, cond_se)
    verdicts.append(check_within_stderr(
        "interventional conditional mean", im.mean - cond_mean, mean_se, 0.0,
        k_sigma=tol.k_sigma, resolution=resolution))
    var_se = math.hypot(im.variance_stderr, rv_se)
    verdicts.append(check_within_stderr(
        "interventional conditional variance", im.variance - rv, var_se, 0.0,
        k_sigma=tol.k_sigma, resolution=tol.residual_variance_rel * predicted_rv))

    return TransformationReport(
        n=n, seed=seed, compatible=compatible, slope=slope, slope_stderr=slope_se,
        intercept=icpt, intercept_stderr=icpt_se, residual_variance=rv,
        residual_variance_stderr=rv_se, predicted_residual_variance=predicted_rv,
        x_macro_intervened=x_star, interventional_mean=im.mean,
        interventional_mean_stderr=im.mean_stderr, interventional_variance=im.variance,
        interventional_variance_stderr=im.variance_stderr,
        observational_conditional_mean=cond_mean, observational_conditional_mean_stderr=cond_se,
        predicted_interventional_mean=predicted_int_mean, verdicts=verdicts)
