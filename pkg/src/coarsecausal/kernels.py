"""
Finitely supported kernels on the integers and the shift-operator calculus.

A :class:`Kernel` stores complex values ``f(offset), f(offset+1), ...``.
The shift acts as ``(S f)(t) = f(t + 1)``, so ``S`` moves mass towards
earlier times.  Inverses ``(I - rho S)^{-1}`` are applied through their
geometric series, truncated once the discarded l1 mass drops below a
tolerance.

With the chain ``Y[t+1] = beta X[t] + gamma Y[t] + noise`` a Y-kernel ``g``
is paired with the X-kernel ``f_g = beta S (I - gamma S)^{-1} g``; the
macro-variables ``sum f_g(t) X[t]`` and ``sum g(t) Y[t]`` then satisfy a
scalar structural equation with unit slope.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from numbers import Number
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "TruncationError", "TruncationPolicy", "Kernel", "shift",
    "geometric_inverse_apply", "apply_one_minus", "compatible_partner",
    "inner_product", "quadratic_form", "quadratic_form_autocorrelation",
    "macro_noise_variance_x", "macro_noise_variance_y",
]


class TruncationError(RuntimeError):
    """Raised when a series would need more than ``max_terms`` terms."""


@dataclass(frozen=True)
class TruncationPolicy:
    tol: float = 1e-12
    max_terms: int = 10 ** 6

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_terms < 1:
            raise ValueError(f"max_terms must be >= 1, got {self.max_terms}")


DEFAULT_POLICY = TruncationPolicy()


class Kernel:
    """Finitely supported complex sequence on the integers.

    Leading and trailing exact zeros are stripped on construction, so two
    kernels compare equal iff they hold identical values at every time.

    Parameters
    ----------
    values : array_like
        Entries ``f(offset + i)``.
    offset : int
        Time index of ``values[0]``.
    """

    __slots__ = ("_offset", "_values")

    def __init__(self, values: Iterable[complex] = (), offset: int = 0):
        v = np.array(values, dtype=complex).ravel()
        nz = np.flatnonzero(v)
        if len(nz) == 0:
            v = np.zeros(0, dtype=complex)
            offset = 0
        else:
            offset = int(offset) + int(nz[0])
            v = v[nz[0]:nz[-1] + 1].copy()
        v.setflags(write=False)
        self._offset = int(offset)
        self._values = v

    @classmethod
    def delta(cls, t: int = 0, weight: complex = 1.0) -> "Kernel":
        return cls([weight], offset=t)

    @classmethod
    def zero(cls) -> "Kernel":
        return cls()

    @classmethod
    def from_mapping(cls, entries: Mapping[int, complex]) -> "Kernel":
        if not entries:
            return cls()
        lo, hi = min(entries), max(entries)
        v = np.zeros(hi - lo + 1, dtype=complex)
        for t, val in entries.items():
            v[t - lo] = val
        return cls(v, offset=lo)

    @property
    def offset(self) -> int:
        return self._offset

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def stop(self) -> int:
        """Last supported index (inclusive); ``offset - 1`` for the zero kernel."""
        return self._offset + len(self._values) - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self._offset, self._offset + len(self._values))

    @property
    def is_zero(self) -> bool:
        return len(self._values) == 0

    @property
    def is_real(self) -> bool:
        return not np.any(self._values.imag)

    def __len__(self) -> int:
        return len(self._values)

    def __call__(self, t: int) -> complex:
        i = int(t) - self._offset
        if 0 <= i < len(self._values):
            return complex(self._values[i])
        return 0j

    def on(self, times: Iterable[int]) -> np.ndarray:
        """Values at the given times (zero outside the support)."""
        times = np.asarray(times, dtype=int)
        out = np.zeros(times.shape, dtype=complex)
        i = times - self._offset
        inside = (i >= 0) & (i < len(self._values))
        out[inside] = self._values[i[inside]]
        return out

    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self._values)))

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self._values) ** 2)))

    def total(self) -> complex:
        """Sum of all entries."""
        return complex(np.sum(self._values))

    def conj(self) -> "Kernel":
        return Kernel(np.conj(self._values), self._offset)

    def shift(self, j: int) -> "Kernel":
        return shift(self, j)

    def _aligned(self, other: "Kernel"):
        if self.is_zero:
            return other._offset, np.zeros(len(other), dtype=complex), other._values
        if other.is_zero:
            return self._offset, self._values, np.zeros(len(self), dtype=complex)
        lo = min(self._offset, other._offset)
        hi = max(self.stop, other.stop)
        a = np.zeros(hi - lo + 1, dtype=complex)
        b = np.zeros(hi - lo + 1, dtype=complex)
        a[self._offset - lo:self.stop - lo + 1] = self._values
        b[other._offset - lo:other.stop - lo + 1] = other._values
        return lo, a, b

    def __add__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        lo, a, b = self._aligned(other)
        return Kernel(a + b, lo)

    def __sub__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        lo, a, b = self._aligned(other)
        return Kernel(a - b, lo)

    def __neg__(self):
        return Kernel(-self._values, self._offset)

    def __mul__(self, c):
        if not isinstance(c, Number):
            return NotImplemented
        return Kernel(self._values * c, self._offset)

    __rmul__ = __mul__

    def __truediv__(self, c):
        if not isinstance(c, Number):
            return NotImplemented
        return Kernel(self._values / c, self._offset)

    def __eq__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        return self._offset == other._offset and np.array_equal(self._values, other._values)

    def __hash__(self):
        return hash((self._offset, self._values.tobytes()))

    def __repr__(self):
        if len(self._values) > 6:
            body = f"{len(self._values)} entries"
        else:
            body = ", ".join(f"{v:.6g}" for v in self._values)
        return f"Kernel(offset={self._offset}, [{body}])"

    def allclose(self, other: "Kernel", atol: float = 1e-12) -> bool:
        """True when the l1 distance to ``other`` is at most ``atol``."""
        return (self - other).l1_norm() <= atol

    def to_dict(self) -> dict:
        return {
            "offset": self._offset,
            "re": [float(v) for v in self._values.real],
            "im": [float(v) for v in self._values.imag],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> "Kernel":
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
        if re.shape != im.shape:
            raise ValueError("re and im must have equal length")
        return cls(re + 1j * im, int(data["offset"]))

    @classmethod
    def from_json(cls, text: str) -> "Kernel":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "re", "im"])
        for t, v in zip(self.times, self._values):
            writer.writerow([int(t), f"{v.real:.17g}", f"{v.imag:.17g}"])
        return buf.getvalue()


def shift(k: Kernel, j: int) -> Kernel:
    """Apply ``S**j``: ``(S**j k)(t) = k(t + j)``.  Negative ``j`` shifts forward."""
    if k.is_zero:
        return k
    return Kernel(k.values, k.offset - int(j))


def _check_rho(rho: complex):
    if not abs(rho) < 1:
        raise ValueError(f"|rho| must be < 1 for the geometric series to converge, got {rho}")


def _n_terms(rho: complex, mass: float, policy: TruncationPolicy) -> int:
    """Number of series terms ``J + 1`` so the discarded tail mass is below tol."""
    r = abs(rho)
    if r == 0 or mass == 0:
        return 1
    bound = policy.tol * (1 - r) / mass
    if bound >= r:
        return 1
    j_plus_1 = max(1, math.ceil(math.log(bound) / math.log(r)))
    while r ** j_plus_1 * mass / (1 - r) >= policy.tol:
        j_plus_1 += 1
    if j_plus_1 > policy.max_terms:
        raise TruncationError(
            f"series for rho={rho} needs {j_plus_1} terms to reach tol={policy.tol:g}, "
            f"max_terms={policy.max_terms}")
    return j_plus_1


def geometric_inverse_apply(rho: complex, k: Kernel, policy: TruncationPolicy = DEFAULT_POLICY) -> Kernel:
    """Truncated ``(I - rho S)^{-1} k = sum_j rho**j S**j k``.

    Terms ``j = 0 .. J`` are kept, with ``J`` the smallest index such that
    the tail mass ``|rho|**(J+1) * ||k||_1 / (1 - |rho|)`` is below
    ``policy.tol``.

    Raises
    ------
    ValueError
        If ``|rho| >= 1``.
    TruncationError
        If more than ``policy.max_terms`` terms would be needed.
    """
    _check_rho(rho)
    if k.is_zero:
        return k
    n = _n_terms(rho, k.l1_norm(), policy)
    # r(t) = sum_j rho^j k(t + j); as a convolution the filter is reversed
    powers = np.asarray(rho, dtype=complex) ** np.arange(n - 1, -1, -1)
    return Kernel(np.convolve(k.values, powers), k.offset - (n - 1))


def apply_one_minus(rho: complex, k: Kernel) -> Kernel:
    """``(I - rho S) k``."""
    return k - rho * shift(k, 1)


def compatible_partner(g: Kernel, params, policy: TruncationPolicy = DEFAULT_POLICY) -> Kernel:
    """X-kernel ``f_g = beta S (I - gamma S)^{-1} g`` paired with the Y-kernel ``g``."""
    if params.beta == 0 or g.is_zero:
        return Kernel.zero()
    return params.beta * shift(geometric_inverse_apply(params.gamma, g, policy), 1)


def inner_product(a: Kernel, b: Kernel) -> complex:
    """``<a, b> = sum_t conj(a(t)) b(t)``, anti-linear in ``a``."""
    lo = max(a.offset, b.offset)
    hi = min(a.stop, b.stop)
    if hi < lo:
        return 0j
    av = a.values[lo - a.offset:hi - a.offset + 1]
    bv = b.values[lo - b.offset:hi - b.offset + 1]
    return complex(np.vdot(av, bv))


def quadratic_form(rho: float, f: Kernel, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """``||(I - rho S)^{-1} f||_2^2`` via the truncated kernel series."""
    u = geometric_inverse_apply(rho, f, policy)
    return inner_product(u, u).real


def quadratic_form_autocorrelation(rho: float, f: Kernel) -> float:
    """``sum_t sum_{k,k' >= 0} rho**(k+k') conj(f(t+k')) f(t+k)`` in closed form.

    Grouping the double sum by lag ``d = k - k'`` gives
    ``sum_d R(d) rho**|d| / (1 - rho**2)`` with ``R`` the autocorrelation of
    ``f``; finite support makes this exact, with no series truncation.
    Serves as an independent check of :func:`quadratic_form`.
    """
    rho = float(rho)
    if not abs(rho) < 1:
        raise ValueError(f"|rho| must be < 1, got {rho}")
    if f.is_zero:
        return 0.0
    v = f.values
    n = len(v)
    # R(d) = sum_s conj(f(s)) f(s + d), d = -(n-1) .. n-1
    acf = np.correlate(v, v, mode="full")
    lags = np.arange(-(n - 1), n)
    total = np.sum(acf * rho ** np.abs(lags)) / (1 - rho * rho)
    return float(total.real)


def macro_noise_variance_x(f: Kernel, params, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """Variance of the X macro-noise attached to kernel ``f``.

    ``noise_std_x**2 * ||(I - alpha S)^{-1} f||_2^2``.
    """
    return params.noise_std_x ** 2 * quadratic_form(params.alpha, f, policy)


def macro_noise_variance_y(g: Kernel, params, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """Variance of the Y macro-noise attached to kernel ``g``.

    ``noise_std_y**2 * ||(I - gamma S)^{-1} g||_2^2``; equals the residual
    variance of ``Y_g`` given ``X_{f_g}``.
    """
    return params.noise_std_y ** 2 * quadratic_form(params.gamma, g, policy)
