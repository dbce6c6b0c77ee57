"""
Bivariate AR(1) structural model.

The chain evolves as::

    X[t+1] = alpha * X[t] + E_x[t]
    Y[t+1] = beta * X[t] + gamma * Y[t] + E_y[t]

with independent Gaussian noise of standard deviations ``noise_std_x`` and
``noise_std_y``.  X drives Y; Y never feeds back into X.

This module holds the closed-form stationary moments, the effect of the
intervention "set every X[t]", and two simulators: :func:`simulate` for a
single long trajectory and :func:`simulate_ensemble` /
:func:`simulate_projections` for many independent replicas.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Sequence, TextIO, Tuple

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "InvalidParamsError", "BurnInWarning", "ModelParams", "CovarianceSpec",
    "GaussianSpec", "InterventionSpec", "Trajectory", "Ensemble",
    "stationary_covariance", "observational_slope", "interventional_slope",
    "interventional_distribution", "default_burn_in", "simulate",
    "simulate_ensemble", "simulate_projections", "REPLICA_BLOCK",
]

#: Burn-in is chosen so that the slowest transient has decayed below this.
BURN_IN_DECAY = 1e-9

#: Replicas are simulated in blocks of this size; block ``b`` draws from the
#: ``b``-th child stream of ``SeedSequence(seed)``.
REPLICA_BLOCK = 16384


class InvalidParamsError(ValueError):
    """Raised when a model parameter violates its constraints.

    ``field`` names the offending parameter.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class BurnInWarning(UserWarning):
    """Issued when a requested burn-in is shorter than the decay criterion."""


@dataclass(frozen=True)
class ModelParams:
    """Coefficients and noise scales of the AR(1) chain.

    Parameters
    ----------
    alpha : float
        Self-coefficient of X, ``|alpha| < 1``.
    beta : float
        Coupling from X[t] to Y[t+1].
    gamma : float
        Self-coefficient of Y, ``|gamma| < 1``.
    noise_std_x, noise_std_y : float
        Standard deviations of the innovations, strictly positive.
    """

    alpha: float
    beta: float
    gamma: float
    noise_std_x: float = 1.0
    noise_std_y: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "noise_std_x", "noise_std_y"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
                raise InvalidParamsError(name, f"must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise InvalidParamsError(name, f"must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if abs(self.alpha) >= 1:
            raise InvalidParamsError("alpha", f"|alpha| must be < 1 for stationarity, got {self.alpha}")
        if abs(self.gamma) >= 1:
            raise InvalidParamsError("gamma", f"|gamma| must be < 1 for stationarity, got {self.gamma}")
        if self.noise_std_x <= 0:
            raise InvalidParamsError("noise_std_x", f"must be > 0, got {self.noise_std_x}")
        if self.noise_std_y <= 0:
            raise InvalidParamsError("noise_std_y", f"must be > 0, got {self.noise_std_y}")

    @property
    def spectral_radius(self) -> float:
        return max(abs(self.alpha), abs(self.gamma))

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
            "noise_std_x": self.noise_std_x, "noise_std_y": self.noise_std_y,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ModelParams":
        known = {"alpha", "beta", "gamma", "noise_std_x", "noise_std_y"}
        unknown = set(data) - known
        if unknown:
            raise InvalidParamsError(sorted(unknown)[0], "unknown parameter")
        for name in ("alpha", "beta", "gamma"):
            if name not in data:
                raise InvalidParamsError(name, "missing")
        return cls(**{k: data[k] for k in known if k in data})

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class CovarianceSpec:
    """Exact second moments of the stationary pair (X[t], Y[t])."""

    c_xx: float
    c_xy: float
    c_yy: float
    mean_x: float = 0.0
    mean_y: float = 0.0

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.c_xx, self.c_xy], [self.c_xy, self.c_yy]])

    @property
    def determinant(self) -> float:
        return self.c_xx * self.c_yy - self.c_xy ** 2


@dataclass(frozen=True)
class GaussianSpec:
    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance >= 0:
            raise ValueError(f"variance must be >= 0, got {self.variance}")


@dataclass(frozen=True)
class InterventionSpec:
    """Assignment ``do(X[t] = x_t)`` applied at every time step.

    A constant intervention has no overrides.  A sequence intervention lists
    explicit values for some time indices and uses ``default`` elsewhere.
    Use :meth:`constant` and :meth:`sequence` to build one.
    """

    default: float
    overrides: Tuple[Tuple[int, float], ...] = field(default=())

    def __post_init__(self):
        if not math.isfinite(self.default):
            raise ValueError(f"intervention default must be finite, got {self.default}")
        cleaned = []
        for t, v in self.overrides:
            if not math.isfinite(v):
                raise ValueError(f"intervention value at t={t} must be finite, got {v}")
            cleaned.append((int(t), float(v)))
        object.__setattr__(self, "default", float(self.default))
        object.__setattr__(self, "overrides", tuple(sorted(cleaned)))

    @classmethod
    def constant(cls, x: float) -> "InterventionSpec":
        return cls(default=x)

    @classmethod
    def sequence(cls, values: Mapping[int, float], default: float = 0.0) -> "InterventionSpec":
        return cls(default=default, overrides=tuple(values.items()))

    @property
    def is_constant(self) -> bool:
        return not self.overrides

    def value_at(self, t: int) -> float:
        return dict(self.overrides).get(int(t), self.default)

    def values_on(self, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times)
        out = np.full(times.shape, self.default, dtype=float)
        for t, v in self.overrides:
            out[times == t] = v
        return out

    def to_dict(self) -> dict:
        return {"default": self.default, "overrides": [[t, v] for t, v in self.overrides]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "InterventionSpec":
        return cls(default=data["default"], overrides=tuple((int(t), v) for t, v in data.get("overrides", ())))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A finite realization of the chain over ``t0, ..., t0 + len(xs) - 1``."""

    t0: int
    xs: np.ndarray
    ys: np.ndarray
    seed: int
    burn_in: int
    intervention: Optional[InterventionSpec] = None

    def __post_init__(self):
        if self.xs.shape != self.ys.shape or self.xs.ndim != 1 or len(self.xs) < 1:
            raise ValueError("xs and ys must be 1-D with equal length >= 1")

    def __len__(self) -> int:
        return len(self.xs)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.t0, self.t0 + len(self.xs))

    @property
    def stop(self) -> int:
        """Last retained time index (inclusive)."""
        return self.t0 + len(self.xs) - 1

    def write_csv(self, out: TextIO) -> None:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["t", "x", "y"])
        for t, x, y in zip(self.times, self.xs, self.ys):
            writer.writerow([int(t), f"{x:.17g}", f"{y:.17g}"])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Independent replicas of the chain on a common time window.

    ``xs`` and ``ys`` have shape ``(n_replicas, n_steps)``.
    """

    t0: int
    xs: np.ndarray
    ys: np.ndarray
    seed: int
    burn_in: int
    intervention: Optional[InterventionSpec] = None

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.t0, self.t0 + self.xs.shape[1])


def _validate(params) -> ModelParams:
    if not isinstance(params, ModelParams):
        raise TypeError(f"expected ModelParams, got {type(params).__name__}")
    return params


def stationary_covariance(params: ModelParams) -> CovarianceSpec:
    """Closed-form stationary covariance of (X[t], Y[t]).

    The Y variance uses the factored form, which stays finite at
    ``alpha == gamma``.
    """
    p = _validate(params)
    a, b, g = p.alpha, p.beta, p.gamma
    sx2, sy2 = p.noise_std_x ** 2, p.noise_std_y ** 2
    c_xx = sx2 / (1 - a * a)
    c_xy = sx2 * a * b / ((1 - a * g) * (1 - a * a))
    c_yy = sy2 / (1 - g * g) + sx2 * b * b * (1 + a * g) / ((1 - a * a) * (1 - a * g) * (1 - g * g))
    return CovarianceSpec(c_xx=c_xx, c_xy=c_xy, c_yy=c_yy)


def observational_slope(params: ModelParams) -> float:
    """Regression coefficient of Y[t] on X[t] in the stationary law."""
    p = _validate(params)
    return p.alpha * p.beta / (1 - p.alpha * p.gamma)


def interventional_slope(params: ModelParams) -> float:
    """Change in the stationary mean of Y per unit of ``do(X[t] = x)`` for all t."""
    p = _validate(params)
    return p.beta / (1 - p.gamma)


def interventional_distribution(params: ModelParams, x: float) -> GaussianSpec:
    """Stationary law of Y[t] when every X[t] is held at ``x``."""
    p = _validate(params)
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x}")
    return GaussianSpec(
        mean=p.beta * x / (1 - p.gamma),
        variance=p.noise_std_y ** 2 / (1 - p.gamma ** 2),
    )


def default_burn_in(params: ModelParams) -> int:
    """Smallest burn-in with ``max(|alpha|, |gamma|) ** burn_in < 1e-9``.

    Never less than 2: the coupling needs one step to reach Y.
    """
    rho = _validate(params).spectral_radius
    if rho == 0:
        return 2
    b = max(2, math.ceil(math.log(BURN_IN_DECAY) / math.log(rho)))
    while rho ** b >= BURN_IN_DECAY:
        b += 1
    return b


def _resolve_burn_in(params: ModelParams, burn_in: Optional[int]) -> int:
    needed = default_burn_in(params)
    if burn_in is None:
        return needed
    if burn_in < 0:
        raise ValueError(f"burn_in must be >= 0, got {burn_in}")
    if burn_in < needed:
        warnings.warn(
            f"burn_in={burn_in} is below {needed}, the length needed for transients "
            f"to decay below {BURN_IN_DECAY:g}; retained samples are not stationary",
            BurnInWarning, stacklevel=3)
    return int(burn_in)


def simulate(params: ModelParams, n_steps: int, burn_in: Optional[int] = None, seed: int = 0,
             intervention: Optional[InterventionSpec] = None, t0: int = 0) -> Trajectory:
    """Simulate one trajectory of the chain.

    The chain starts from ``(0, 0)`` at time ``t0 - burn_in`` and the first
    ``burn_in`` states are discarded.  Under an intervention every X[t],
    including the starting one, is replaced by the assigned value before it
    feeds the next step.  X innovations are still drawn, so a seed gives
    the same Y innovations with and without intervention.

    Parameters
    ----------
    params : ModelParams
    n_steps : int
        Number of retained states, >= 1.
    burn_in : int, optional
        Discarded warm-up steps; defaults to :func:`default_burn_in`.
        Shorter values issue a :class:`BurnInWarning`.
    seed : int
    intervention : InterventionSpec, optional
    t0 : int
        Time index of the first retained state.

    Returns
    -------
    Trajectory
    """
    p = _validate(params)
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    burn = _resolve_burn_in(p, burn_in)
    total = burn + n_steps
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((total - 1, 2))
    ex = p.noise_std_x * noise[:, 0]
    ey = p.noise_std_y * noise[:, 1]

    xs = np.zeros(total)
    if intervention is None:
        xs[1:] = lfilter([1.0], [1.0, -p.alpha], ex)
    else:
        xs[:] = intervention.values_on(np.arange(t0 - burn, t0 + n_steps))
    ys = np.zeros(total)
    ys[1:] = lfilter([1.0], [1.0, -p.gamma], p.beta * xs[:-1] + ey)
    return Trajectory(t0=t0, xs=xs[burn:].copy(), ys=ys[burn:].copy(), seed=seed,
                      burn_in=burn, intervention=intervention)


def _block_rngs(seed: int, n_replicas: int) -> Iterator[Tuple[int, np.random.Generator]]:
    n_blocks = -(-n_replicas // REPLICA_BLOCK)
    children = np.random.SeedSequence(seed).spawn(n_blocks)
    for b, child in enumerate(children):
        size = min(REPLICA_BLOCK, n_replicas - b * REPLICA_BLOCK)
        yield size, np.random.default_rng(child)


def _run_block(p: ModelParams, size: int, rng: np.random.Generator, t_start: int, t_end: int,
               intervention: Optional[InterventionSpec]):
    """Yield ``(t, x, y)`` for every time from ``t_start`` to ``t_end`` inclusive."""
    assigned = None
    if intervention is not None:
        assigned = intervention.values_on(np.arange(t_start, t_end + 1))
    x = np.zeros(size)
    y = np.zeros(size)
    if assigned is not None:
        x[:] = assigned[0]
    yield t_start, x, y
    for t in range(t_start + 1, t_end + 1):
        e = rng.standard_normal((2, size))
        y = p.beta * x + p.gamma * y + p.noise_std_y * e[1]
        if assigned is None:
            x = p.alpha * x + p.noise_std_x * e[0]
        else:
            x = np.full(size, assigned[t - t_start])
        yield t, x, y


def simulate_ensemble(params: ModelParams, n_replicas: int, n_steps: int = 1,
                      burn_in: Optional[int] = None, seed: int = 0,
                      intervention: Optional[InterventionSpec] = None, t0: int = 0) -> Ensemble:
    """Simulate ``n_replicas`` independent chains and keep ``n_steps`` states of each.

    Same initialization and intervention semantics as :func:`simulate`.
    Replicas are grouped in blocks of :data:`REPLICA_BLOCK`, each drawing
    from its own child of ``SeedSequence(seed)``.
    """
    p = _validate(params)
    if n_replicas < 1 or n_steps < 1:
        raise ValueError("n_replicas and n_steps must be >= 1")
    burn = _resolve_burn_in(p, burn_in)
    xs = np.empty((n_replicas, n_steps))
    ys = np.empty((n_replicas, n_steps))
    row = 0
    for size, rng in _block_rngs(seed, n_replicas):
        for t, x, y in _run_block(p, size, rng, t0 - burn, t0 + n_steps - 1, intervention):
            if t >= t0:
                xs[row:row + size, t - t0] = x
                ys[row:row + size, t - t0] = y
        row += size
    return Ensemble(t0=t0, xs=xs, ys=ys, seed=seed, burn_in=burn, intervention=intervention)


Weights = Tuple[int, Sequence[complex]]


def simulate_projections(params: ModelParams, x_weights: Optional[Weights], y_weights: Optional[Weights],
                         n_replicas: int, burn_in: Optional[int] = None, seed: int = 0,
                         intervention: Optional[InterventionSpec] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Weighted sums ``sum_t w_x(t) X[t]`` and ``sum_t w_y(t) Y[t]`` over independent replicas.

    Each weight vector is given as ``(offset, values)`` with ``values[i]``
    the weight at time ``offset + i``.  The chains run over the union of both
    supports, preceded by ``burn_in`` warm-up steps, and only the running
    sums are stored, so long windows are cheap in memory.

    Returns
    -------
    x_proj, y_proj : ndarray, shape (n_replicas,)
        Complex when the corresponding weights are complex, else real.
        A ``None`` weight yields zeros.
    """
    p = _validate(params)
    if n_replicas < 1:
        raise ValueError(f"n_replicas must be >= 1, got {n_replicas}")
    burn = _resolve_burn_in(p, burn_in)

    def _prep(w):
        if w is None or len(w[1]) == 0:
            return None
        off, vals = w
        vals = np.asarray(vals)
        if not np.iscomplexobj(vals) or not np.any(vals.imag):
            vals = vals.real.astype(float)
        return int(off), vals

    wx, wy = _prep(x_weights), _prep(y_weights)
    spans = [(w[0], w[0] + len(w[1]) - 1) for w in (wx, wy) if w is not None]
    if not spans:
        return np.zeros(n_replicas), np.zeros(n_replicas)
    lo = min(s[0] for s in spans)
    hi = max(s[1] for s in spans)

    def _dtype(w):
        return complex if w is not None and np.iscomplexobj(w[1]) else float

    x_proj = np.zeros(n_replicas, dtype=_dtype(wx))
    y_proj = np.zeros(n_replicas, dtype=_dtype(wy))
    row = 0
    for size, rng in _block_rngs(seed, n_replicas):
        xa = x_proj[row:row + size]
        ya = y_proj[row:row + size]
        for t, x, y in _run_block(p, size, rng, lo - burn, hi, intervention):
            if wx is not None and 0 <= t - wx[0] < len(wx[1]):
                w = wx[1][t - wx[0]]
                if w != 0:
                    xa += w * x
            if wy is not None and 0 <= t - wy[0] < len(wy[1]):
                w = wy[1][t - wy[0]]
                if w != 0:
                    ya += w * y
        row += size
    return x_proj, y_proj
