"""
Frequency-domain view of the macro-level causal model.

The windowed wave ``g(t) = exp(2 pi i nu t) / sqrt(2T + 1)`` on
``t = -T..T`` is almost an eigenvector of the shift, with eigenvalue
``z = exp(2 pi i nu)``.  Its compatible X-kernel is then almost
``H(nu) g`` with transfer coefficient ``H(nu) = beta z / (1 - gamma z)``,
so the frequency-``nu`` component of Y is driven only by the same
frequency component of X.  Errors shrink like ``1/sqrt(T)``.

Everything below is computed exactly on finite kernels; the ``T -> inf``
limits are only approached numerically.
"""
from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, TextIO, Tuple

import numpy as np

from .kernels import (DEFAULT_POLICY, Kernel, TruncationPolicy, compatible_partner,
                      geometric_inverse_apply, inner_product, macro_noise_variance_x,
                      macro_noise_variance_y)
from .process import InterventionSpec, ModelParams, simulate_projections
from .stats import estimate_covariance, estimate_moments

__all__ = [
    "FrequencyKernel", "fourier_window", "eigenvalue", "transfer_coefficient",
    "shift_eigen_error", "shift_eigen_bound", "PartnerError", "compatible_partner_error",
    "asymptotic_noise_variance_y", "asymptotic_noise_variance_x",
    "asymptotic_noise_variance_x_rederived", "pseudo_variance_y",
    "cross_frequency_covariance", "ComponentStatistics", "component_statistics",
    "FrequencyReport", "frequency_report", "frequency_scan", "default_nu_grid",
    "SCAN_COLUMNS", "write_scan_csv",
]


@dataclass(frozen=True)
class FrequencyKernel:
    """Unit-l2 complex wave at ``nu`` cycles per step on the window ``[-T, T]``."""

    nu: float
    t_window: int
    kernel: Kernel = field(repr=False, compare=False)

    @property
    def z(self) -> complex:
        return eigenvalue(self.nu)


def eigenvalue(nu: float) -> complex:
    return cmath.exp(2j * math.pi * nu)


def fourier_window(nu: float, T: int) -> FrequencyKernel:
    if not 0 <= nu < 1:
        raise ValueError(f"nu must lie in [0, 1), got {nu}")
    if int(T) != T or T < 1:
        raise ValueError(f"T must be an integer >= 1, got {T}")
    T = int(T)
    t = np.arange(-T, T + 1)
    # reduce the phase first so large |t| does not cost precision
    phase = 2 * np.pi * np.mod(nu * t, 1.0)
    values = np.exp(1j * phase) / math.sqrt(2 * T + 1)
    if nu == 0:
        values = values.real
    return FrequencyKernel(nu=float(nu), t_window=T, kernel=Kernel(values, offset=-T))


def default_nu_grid(m: int = 64) -> List[float]:
    return [k / m for k in range(m)]


def transfer_coefficient(nu: float, params: ModelParams) -> complex:
    """``beta z / (1 - gamma z)``: gain from X's to Y's frequency-``nu`` component."""
    z = eigenvalue(nu)
    return params.beta * z / (1 - params.gamma * z)


def shift_eigen_error(nu: float, T: int, j: int) -> float:
    """``||S**j g - z**j g||_1`` for the window ``g = fourier_window(nu, T)``."""
    if j < 0:
        raise ValueError(f"j must be >= 0, got {j}")
    g = fourier_window(nu, T).kernel
    return (g.shift(j) - eigenvalue(nu) ** j * g).l1_norm()


def shift_eigen_bound(T: int, j: int) -> float:
    return 2 * j / math.sqrt(2 * T + 1)


class PartnerError(NamedTuple):
    actual: float
    tight_bound: float
    loose_bound: float


def compatible_partner_error(nu: float, T: int, params: ModelParams,
                             policy: TruncationPolicy = DEFAULT_POLICY) -> PartnerError:
    """Distance between the compatible X-kernel of a window and ``H(nu)`` times the window.

    ``tight_bound = 2 |beta| / ((1 - |gamma|)**2 sqrt(2T + 1))`` follows from
    summing ``(j + 1) |gamma|**j`` against the eigen-error bound.
    ``loose_bound = 2 |beta| / (|gamma| (1 - gamma)**2 sqrt(2T + 1))`` is the
    weaker form that drops a factor ``|gamma|``; infinite at ``gamma == 0``.
    """
    g = fourier_window(nu, T).kernel
    f = compatible_partner(g, params, policy)
    actual = (f - transfer_coefficient(nu, params) * g).l1_norm()
    root = math.sqrt(2 * T + 1)
    b, c = abs(params.beta), params.gamma
    tight = 2 * b / ((1 - abs(c)) ** 2 * root)
    if b == 0:
        loose = 0.0
    elif c == 0:
        loose = math.inf
    else:
        loose = 2 * b / (abs(c) * (1 - c) ** 2 * root)
    return PartnerError(actual=actual, tight_bound=tight, loose_bound=loose)


def asymptotic_noise_variance_y(nu: float, params: ModelParams) -> float:
    """Large-window variance of each of Re and Im of the Y macro-noise at ``nu``."""
    z = eigenvalue(nu)
    return 0.5 * params.noise_std_y ** 2 / abs(1 - params.gamma * z) ** 2


def asymptotic_noise_variance_x(nu: float, params: ModelParams, T_reference: int = 800,
                                policy: TruncationPolicy = DEFAULT_POLICY) -> Tuple[float, float]:
    """Per-component X macro-noise variance at ``nu``: ``(printed, numeric)``.

    ``printed`` is the closed form ``0.5 |beta z / (1 - gamma z)**2|**2``
    (scaled by ``noise_std_x**2``), which carries no ``alpha``.  ``numeric``
    is half the exact finite-window variance
    ``macro_noise_variance_x(f)`` for the compatible kernel ``f`` of the
    window at ``T_reference``, and is the value to trust.  The two differ
    unless ``alpha == gamma``; see
    :func:`asymptotic_noise_variance_x_rederived` for the limit of
    ``numeric``.
    """
    z = eigenvalue(nu)
    printed = 0.5 * params.noise_std_x ** 2 * abs(params.beta * z / (1 - params.gamma * z) ** 2) ** 2
    f = compatible_partner(fourier_window(nu, T_reference).kernel, params, policy)
    numeric = 0.5 * macro_noise_variance_x(f, params, policy)
    return printed, numeric


def asymptotic_noise_variance_x_rederived(nu: float, params: ModelParams) -> float:
    """``0.5 noise_std_x**2 |H(nu)|**2 / |1 - alpha z|**2``, the limit of the numeric value."""
    z = eigenvalue(nu)
    return 0.5 * params.noise_std_x ** 2 * abs(transfer_coefficient(nu, params)) ** 2 \
        / abs(1 - params.alpha * z) ** 2


def _y_noise_kernel(nu: float, T: int, params: ModelParams, policy: TruncationPolicy) -> Kernel:
    return geometric_inverse_apply(params.gamma, fourier_window(nu, T).kernel, policy)


def pseudo_variance_y(nu: float, T: int, params: ModelParams,
                      policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """``E[(E_y)**2]`` for the Y macro-noise of the window: ``noise_std_y**2 sum_t u(t)**2``."""
    u = _y_noise_kernel(nu, T, params, policy)
    return params.noise_std_y ** 2 * inner_product(u.conj(), u)


def cross_frequency_covariance(nu1: float, nu2: float, T: int, params: ModelParams,
                               policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """``E[conj(E_y(nu1)) E_y(nu2)]`` between Y macro-noises of two windows."""
    if nu1 == nu2:
        raise ValueError("nu1 and nu2 must differ")
    u1 = _y_noise_kernel(nu1, T, params, policy)
    u2 = _y_noise_kernel(nu2, T, params, policy)
    return params.noise_std_y ** 2 * inner_product(u1, u2)


@dataclass(frozen=True)
class ComponentStatistics:
    """Sampled second moments of Re and Im of the Y macro-noise.

    ``exact_*`` are the finite-window values implied by the kernel
    quadratic forms; ``asymptotic_variance`` is the large-window limit.
    """

    nu: float
    t_window: int
    n: int
    var_re: float
    var_re_stderr: float
    var_im: float
    var_im_stderr: float
    cov_re_im: float
    cov_re_im_stderr: float
    exact_var_re: float
    exact_var_im: float
    exact_cov_re_im: float
    asymptotic_variance: float


def component_statistics(nu: float, T: int, params: ModelParams, n: int = 100_000, seed: int = 0,
                         policy: TruncationPolicy = DEFAULT_POLICY) -> ComponentStatistics:
    """Monte Carlo moments of Re/Im of the Y macro-noise at ``nu``.

    The noise is realized by simulating the chain with every X[t] held at
    0, so that ``Y_g`` is exactly the macro-noise, and projecting Y on the
    window ``g``.  This path never touches the kernel inverse.
    """
    g = fourier_window(nu, T).kernel
    _, e = simulate_projections(params, None, (g.offset, g.values if not g.is_real else g.values.real),
                                n, seed=seed, intervention=InterventionSpec.constant(0.0))
    re = np.real(e)
    im = np.imag(e) if np.iscomplexobj(e) else np.zeros_like(re)
    mr = estimate_moments(re)
    mi = estimate_moments(im)
    c = estimate_covariance(re, im)

    full = macro_noise_variance_y(g, params, policy)
    pseudo = pseudo_variance_y(nu, T, params, policy)
    return ComponentStatistics(
        nu=nu, t_window=T, n=n,
        var_re=mr.variance, var_re_stderr=mr.variance_stderr,
        var_im=mi.variance, var_im_stderr=mi.variance_stderr,
        cov_re_im=c.covariance, cov_re_im_stderr=c.stderr,
        exact_var_re=0.5 * (full + pseudo.real), exact_var_im=0.5 * (full - pseudo.real),
        exact_cov_re_im=0.5 * pseudo.imag,
        asymptotic_variance=asymptotic_noise_variance_y(nu, params))


@dataclass(frozen=True)
class FrequencyReport:
    nu: float
    t_window: int
    transfer: complex
    actual_l1_error: float
    tight_bound: float
    loose_bound: float
    asym_var_y: float
    asym_var_x_printed: float
    asym_var_x_numeric: float
    pseudo_variance: complex
    cross_covariances: Dict[Tuple[float, float], complex] = field(default_factory=dict)


def frequency_report(nu: float, T: int, params: ModelParams, partners: Iterable[float] = (),
                     policy: TruncationPolicy = DEFAULT_POLICY) -> FrequencyReport:
    err = compatible_partner_error(nu, T, params, policy)
    printed, numeric = asymptotic_noise_variance_x(nu, params, T, policy)
    cross = {(nu, other): cross_frequency_covariance(nu, other, T, params, policy)
             for other in partners if other != nu}
    return FrequencyReport(
        nu=nu, t_window=T, transfer=transfer_coefficient(nu, params),
        actual_l1_error=err.actual, tight_bound=err.tight_bound, loose_bound=err.loose_bound,
        asym_var_y=asymptotic_noise_variance_y(nu, params), asym_var_x_printed=printed,
        asym_var_x_numeric=numeric, pseudo_variance=pseudo_variance_y(nu, T, params, policy),
        cross_covariances=cross)


def frequency_scan(nus: Sequence[float], Ts: Sequence[int], params: ModelParams,
                   policy: TruncationPolicy = DEFAULT_POLICY) -> List[FrequencyReport]:
    return [frequency_report(nu, T, params, policy=policy) for T in Ts for nu in nus]


SCAN_COLUMNS = ("nu", "T", "transfer_re", "transfer_im", "actual_error", "tight_bound",
                "paper_bound", "asym_var_y", "asym_var_x_printed", "asym_var_x_numeric",
                "pseudo_var_abs")


def write_scan_csv(reports: Iterable[FrequencyReport], out: TextIO) -> None:
    """CSV with :data:`SCAN_COLUMNS`; the ``paper_bound`` column holds ``loose_bound``."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SCAN_COLUMNS)
    for r in reports:
        w.writerow([f"{r.nu:.17g}", r.t_window] + [f"{v:.17g}" for v in (
            r.transfer.real, r.transfer.imag, r.actual_l1_error, r.tight_bound, r.loose_bound,
            r.asym_var_y, r.asym_var_x_printed, r.asym_var_x_numeric, abs(r.pseudo_variance))])
