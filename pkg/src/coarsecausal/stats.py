"""
Estimators with standard errors, and pass/fail comparators.

Every Monte Carlo check in the package goes through :class:`CheckVerdict`.
A check whose standard error is too large to resolve its tolerance is
reported as ``INCONCLUSIVE`` rather than passed.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

import numpy as np
from scipy import stats as sps

from .process import GaussianSpec

__all__ = [
    "Status", "CheckVerdict", "MomentEstimate", "CovarianceEstimate",
    "RegressionFit", "estimate_moments", "estimate_covariance",
    "regression_slope", "gaussian_consistency_check", "check_within_stderr",
    "check_within_tolerance", "exit_code", "thinning_factor", "K_SIGMA",
]

K_SIGMA = 3.0


class Status(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class CheckVerdict:
    name: str
    observed: float
    expected: float
    tolerance: float
    status: Status
    stderr: float = float("nan")
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status is Status.PASS

    def to_dict(self) -> dict:
        d = asdict(self)
        d["status"] = self.status.value
        return d


def exit_code(verdicts: Iterable[CheckVerdict]) -> int:
    """0 when all pass, 1 when any fails, otherwise 2 if any is inconclusive."""
    statuses = {v.status for v in verdicts}
    if Status.FAIL in statuses:
        return 1
    if Status.INCONCLUSIVE in statuses:
        return 2
    return 0


def thinning_factor(params) -> int:
    """Keep every k-th sample of one trajectory, ``k = ceil(5 / (1 - max(|alpha|, |gamma|)))``."""
    # round first: 5 / (1 - 0.9) is 50.000000000000004 in floating point
    return math.ceil(round(5 / (1 - params.spectral_radius), 9))


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    mean_stderr: float
    variance: float
    variance_stderr: float
    n_raw: int
    n_effective: int


@dataclass(frozen=True)
class CovarianceEstimate:
    covariance: float
    stderr: float
    n_effective: int


def _as_samples(samples, thin: int) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if thin < 1:
        raise ValueError(f"thin must be >= 1, got {thin}")
    return x, x[::thin]


def estimate_moments(samples, thin: int = 1) -> MomentEstimate:
    """Unbiased mean and variance with standard errors.

    Parameters
    ----------
    samples : array_like
    thin : int
        Use every ``thin``-th sample; ``n_effective`` counts only those.

    Notes
    -----
    The variance standard error uses the fourth central moment,
    ``Var(s^2) ~ (m4 - (n-3)/(n-1) s^4) / n``.
    """
    raw, x = _as_samples(samples, thin)
    n = len(x)
    if n < 2:
        raise ValueError(f"need at least 2 (effective) samples, got {n}")
    mean = float(np.mean(x))
    d = x - mean
    var = float(np.sum(d * d) / (n - 1))
    m4 = float(np.mean(d ** 4))
    var_of_var = max((m4 - (n - 3) / (n - 1) * var * var) / n, 0.0)
    return MomentEstimate(
        mean=mean, mean_stderr=math.sqrt(var / n), variance=var,
        variance_stderr=math.sqrt(var_of_var), n_raw=len(raw), n_effective=n)


def estimate_covariance(xs, ys, thin: int = 1) -> CovarianceEstimate:
    """Sample covariance of paired data with a plug-in standard error."""
    _, x = _as_samples(xs, thin)
    _, y = _as_samples(ys, thin)
    if len(x) != len(y):
        raise ValueError("xs and ys must have equal length")
    n = len(x)
    if n < 2:
        raise ValueError(f"need at least 2 (effective) samples, got {n}")
    prod = (x - x.mean()) * (y - y.mean())
    cov = float(np.sum(prod) / (n - 1))
    return CovarianceEstimate(covariance=cov, stderr=float(np.std(prod, ddof=1) / math.sqrt(n)),
                              n_effective=n)


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    slope_stderr: float
    intercept: float
    intercept_stderr: float
    residual_variance: float
    residual_variance_stderr: float
    n: int

    def predict(self, x: float) -> float:
        return self.intercept + self.slope * x

    def predict_stderr(self, x: float, xbar: float, sxx: float) -> float:
        return math.sqrt(self.residual_variance * (1 / self.n + (x - xbar) ** 2 / sxx))


def regression_slope(xs, ys) -> RegressionFit:
    """Ordinary least squares of ``ys`` on ``xs`` with homoskedastic standard errors."""
    x = np.asarray(xs, dtype=float).ravel()
    y = np.asarray(ys, dtype=float).ravel()
    n = len(x)
    if n != len(y):
        raise ValueError("xs and ys must have equal length")
    if n < 3:
        raise ValueError(f"need at least 3 samples, got {n}")
    if np.ptp(x) == 0:
        raise ValueError("xs is constant; slope is undefined")
    fit = sps.linregress(x, y)
    resid = y - (fit.intercept + fit.slope * x)
    rv = float(np.sum(resid * resid) / (n - 2))
    return RegressionFit(
        slope=float(fit.slope), slope_stderr=float(fit.stderr),
        intercept=float(fit.intercept), intercept_stderr=float(fit.intercept_stderr),
        residual_variance=rv, residual_variance_stderr=rv * math.sqrt(2 / (n - 2)), n=n)


def check_within_stderr(name: str, observed: float, stderr: float, expected: float,
                        k_sigma: float = K_SIGMA, resolution: Optional[float] = None) -> CheckVerdict:
    """Pass iff ``|observed - expected| < k_sigma * stderr``.

    When ``resolution`` is given and ``k_sigma * stderr`` exceeds it, the
    estimate cannot distinguish deviations of that size: inconclusive.
    """
    diff = abs(observed - expected)
    band = k_sigma * stderr
    if resolution is not None and band > resolution:
        status = Status.INCONCLUSIVE
    elif diff < band or (stderr == 0 and diff == 0):
        status = Status.PASS
    else:
        status = Status.FAIL
    return CheckVerdict(name=name, observed=float(observed), expected=float(expected),
                        tolerance=band, status=status, stderr=float(stderr),
                        detail=f"{diff / stderr:.2f} stderr" if stderr > 0 else "")


def check_within_tolerance(name: str, observed: float, expected: float, tol: float,
                           stderr: float = 0.0, k_sigma: float = K_SIGMA) -> CheckVerdict:
    """Pass iff ``|observed - expected| <= tol``; inconclusive if ``k_sigma * stderr > tol``."""
    diff = abs(observed - expected)
    if k_sigma * stderr > tol:
        status = Status.INCONCLUSIVE
    elif diff <= tol:
        status = Status.PASS
    else:
        status = Status.FAIL
    return CheckVerdict(name=name, observed=float(observed), expected=float(expected),
                        tolerance=float(tol), status=status, stderr=float(stderr),
                        detail=f"|diff|={diff:.3g}")


def gaussian_consistency_check(samples, spec: GaussianSpec, k_sigma: float = K_SIGMA,
                               max_relative_stderr: float = 0.25,
                               name: str = "gaussian") -> CheckVerdict:
    """Compare sample mean and variance against a Gaussian law.

    Pass iff both deviate by less than ``k_sigma`` standard errors.
    Inconclusive when the variance standard error exceeds
    ``max_relative_stderr`` times the expected variance (or, for a
    degenerate expected law, the observed variance).
    """
    m = estimate_moments(samples)
    scale = spec.variance if spec.variance > 0 else m.variance
    observed = (m.mean, m.variance)
    if scale > 0 and m.variance_stderr > max_relative_stderr * scale:
        return CheckVerdict(name=name, observed=m.variance, expected=spec.variance,
                            tolerance=k_sigma * m.variance_stderr, status=Status.INCONCLUSIVE,
                            stderr=m.variance_stderr,
                            detail=f"variance stderr {m.variance_stderr:.3g} too large")
    mean_ok = abs(m.mean - spec.mean) < k_sigma * m.mean_stderr or (m.mean_stderr == 0 and m.mean == spec.mean)
    var_ok = (abs(m.variance - spec.variance) < k_sigma * m.variance_stderr
              or (m.variance_stderr == 0 and m.variance == spec.variance))
    status = Status.PASS if mean_ok and var_ok else Status.FAIL
    return CheckVerdict(
        name=name, observed=m.mean, expected=spec.mean, tolerance=k_sigma * m.mean_stderr,
        status=status, stderr=m.mean_stderr,
        detail=(f"mean {observed[0]:.5g}±{m.mean_stderr:.2g} vs {spec.mean:.5g}; "
                f"var {observed[1]:.5g}±{m.variance_stderr:.2g} vs {spec.variance:.5g}"))
