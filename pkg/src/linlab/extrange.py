"""Extended-range arithmetic.

Two representations live here:

* :class:`LogPolarComplex` stores a nonzero complex number as
  ``(log|z|, arg z)`` so that moduli like ``exp(1e200)`` stay finite.
* :class:`TowerMagnitude` stores a real as ``exp^k(x)`` so that iterated
  maximum-modulus levels can be compared long after ``log|z|`` itself
  overflows.

Array versions of the log-polar kernels (``*_arr``) are used by the
vectorised evaluators in :mod:`linlab.linearizer`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering
from typing import Union

import numpy as np

#: lp_add drops the smaller addend once the log-moduli differ by more than this.
DOMINANCE = 745.0
# relative size below which a sum is cancellation noise and counts as exact zero
CANCEL_EPS = 4 * 2.0 ** -52
#: Normalisation constant for towers is ``C_NORM = exp(LOG_C_NORM)``.
LOG_C_NORM = 30.0
C_NORM = math.exp(LOG_C_NORM)

_TWO_PI = 2.0 * math.pi


def normalize_arg(a):
    """Map an angle (scalar or array) into ``(-pi, pi]``."""
    if isinstance(a, np.ndarray):
        return math.pi - np.mod(math.pi - a, _TWO_PI)
    return math.pi - (math.pi - a) % _TWO_PI


class _Zero:
    """Marker for an exact zero, which log-polar form cannot hold."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ZERO"

    def __bool__(self):
        return False

    def to_complex(self) -> complex:
        return 0j


ZERO = _Zero()


@dataclass(frozen=True)
class LogPolarComplex:
    log_mod: float
    arg: float

    def __post_init__(self):
        object.__setattr__(self, "log_mod", float(self.log_mod))
        object.__setattr__(self, "arg", float(normalize_arg(float(self.arg))))

    @classmethod
    def from_complex(cls, z: complex) -> Union["LogPolarComplex", _Zero]:
        z = complex(z)
        if z == 0:
            return ZERO
        return cls(math.log(abs(z)), math.atan2(z.imag, z.real))

    def to_complex(self) -> complex:
        if self.log_mod > 709.0:
            raise OverflowError(f"log_mod={self.log_mod} exceeds double range")
        r = math.exp(self.log_mod)
        return complex(r * math.cos(self.arg), r * math.sin(self.arg))

    @property
    def modulus(self) -> "TowerMagnitude":
        return TowerMagnitude.from_log(self.log_mod)

    def __mul__(self, other):
        return lp_mul(self, other)

    def __truediv__(self, other: "LogPolarComplex") -> "LogPolarComplex":
        return LogPolarComplex(self.log_mod - other.log_mod, self.arg - other.arg)

    def pow(self, k: int) -> "LogPolarComplex":
        return LogPolarComplex(k * self.log_mod, k * self.arg)


LP = Union[LogPolarComplex, _Zero]


def lp_mul(a: LP, b: LP) -> LP:
    if a is ZERO or b is ZERO:
        return ZERO
    return LogPolarComplex(a.log_mod + b.log_mod, a.arg + b.arg)


def lp_add(a: LP, b: LP, log_trunc: float = -math.inf) -> tuple[LP, float]:
    """Return ``(a + b, log_trunc')``.

    ``log_trunc`` is the log of an accumulated relative truncation bound; it
    grows (via logaddexp) whenever the smaller addend is dropped.
    """
    if a is ZERO:
        return b, log_trunc
    if b is ZERO:
        return a, log_trunc
    big, small = (a, b) if a.log_mod >= b.log_mod else (b, a)
    gap = big.log_mod - small.log_mod
    if gap > DOMINANCE:
        return big, float(np.logaddexp(log_trunc, -gap))
    ratio = math.exp(-gap)
    s = complex(1.0 + ratio * math.cos(small.arg - big.arg),
                ratio * math.sin(small.arg - big.arg))
    if abs(s) <= CANCEL_EPS:
        return ZERO, log_trunc
    return (LogPolarComplex(big.log_mod + math.log(abs(s)),
                            big.arg + math.atan2(s.imag, s.real)), log_trunc)


def poly_eval_lp(coefficients, z: LP, log_trunc: float = -math.inf) -> tuple[LP, float]:
    """Horner evaluation of ``sum(c[k] z**k)`` in log-polar form.

    ``coefficients`` is constant-term first (a :class:`PolynomialMap` works too).
    """
    coeffs = getattr(coefficients, "coefficients", coefficients)
    if len(coeffs) < 3:
        raise ValueError("polynomial must have degree >= 2")
    acc: LP = LogPolarComplex.from_complex(coeffs[-1])
    for c in reversed(coeffs[:-1]):
        acc = lp_mul(acc, z)
        acc, log_trunc = lp_add(acc, LogPolarComplex.from_complex(c), log_trunc)
    return acc, log_trunc


# ---------------------------------------------------------------------------
# array kernels; zeros are flagged by log_mod == -inf


def lp_add_arr(lm1, a1, lm2, a2, log_trunc):
    swap = lm2 > lm1
    lb = np.where(swap, lm2, lm1)
    ab = np.where(swap, a2, a1)
    ls = np.where(swap, lm1, lm2)
    as_ = np.where(swap, a1, a2)
    with np.errstate(invalid="ignore", over="ignore"):
        gap = lb - ls
    gap = np.where(np.isnan(gap), np.inf, gap)
    dominated = gap > DOMINANCE
    ratio = np.exp(-np.where(dominated, 0.0, gap))
    s = 1.0 + ratio * np.exp(1j * (as_ - ab))
    mag = np.abs(s)
    mag = np.where(mag <= CANCEL_EPS, 0.0, mag)
    with np.errstate(divide="ignore"):
        lm = np.where(dominated, lb, lb + np.log(mag))
    arg = np.where(dominated, ab, ab + np.angle(s))
    trunc_here = dominated & np.isfinite(ls)
    log_trunc = np.where(trunc_here, np.logaddexp(log_trunc, -gap), log_trunc)
    return lm, normalize_arg(arg), log_trunc


def poly_eval_lp_arr(coeffs, lm, arg, log_trunc):
    """Vectorised Horner step over arrays of log-polar values."""
    top = complex(coeffs[-1])
    acc_lm = np.full_like(lm, math.log(abs(top)))
    acc_arg = np.full_like(arg, math.atan2(top.imag, top.real))
    for c in reversed(coeffs[:-1]):
        with np.errstate(over="ignore", invalid="ignore"):
            acc_lm = acc_lm + lm
        acc_arg = acc_arg + arg
        c = complex(c)
        if c != 0:
            clm = np.full_like(lm, math.log(abs(c)))
            carg = np.full_like(arg, math.atan2(c.imag, c.real))
            acc_lm, acc_arg, log_trunc = lp_add_arr(acc_lm, acc_arg, clm, carg, log_trunc)
        else:
            acc_arg = normalize_arg(acc_arg)
    return acc_lm, acc_arg, log_trunc


# ---------------------------------------------------------------------------
# towers


def _exp_k(x: float, k: int) -> float:
    for _ in range(k):
        x = math.exp(x)
    return x


@total_ordering
@dataclass(frozen=True)
class TowerMagnitude:
    """The real number ``exp^height(residual)`` in normal form.

    Height-0 values may be any real below ``C_NORM`` (including negatives,
    which is convenient for ``log M`` at small radii). For height >= 1 the
    residual lies in ``[LOG_C_NORM, C_NORM)``.
    """

    height: int
    residual: float

    @classmethod
    def normalize(cls, height: int, residual: float) -> "TowerMagnitude":
        height = int(height)
        x = float(residual)
        if math.isnan(x) or height < 0:
            raise ValueError(f"invalid tower ({height}, {residual})")
        if math.isinf(x):
            raise OverflowError("tower residual overflowed")
        while x >= C_NORM:
            x = math.log(x)
            height += 1
        while height > 0 and x < LOG_C_NORM:
            x = math.exp(x)
            height -= 1
        return cls(height, x)

    @classmethod
    def from_value(cls, x: float) -> "TowerMagnitude":
        return cls.normalize(0, x)

    @classmethod
    def from_log(cls, log_x: Union[float, "TowerMagnitude"]) -> "TowerMagnitude":
        """Tower for ``exp(log_x)``."""
        if isinstance(log_x, TowerMagnitude):
            return log_x.exp()
        if log_x < LOG_C_NORM:
            return cls(0, math.exp(log_x))
        return cls.normalize(1, log_x)

    def is_normal(self) -> bool:
        return self == TowerMagnitude.normalize(self.height, self.residual)

    def to_float(self) -> float:
        """Native value, ``inf`` when out of range."""
        try:
            return _exp_k(self.residual, self.height)
        except OverflowError:
            return math.inf

    def log_float(self) -> float:
        """``log`` of the value as a float (``inf`` if that overflows)."""
        if self.height == 0:
            return math.log(self.residual) if self.residual > 0 else -math.inf
        return self.log().to_float()

    def log(self) -> "TowerMagnitude":
        if self.height == 0:
            if self.residual <= 0:
                raise ValueError("log of a non-positive tower")
            return TowerMagnitude(0, math.log(self.residual))
        return TowerMagnitude.normalize(self.height - 1, self.residual)

    def exp(self) -> "TowerMagnitude":
        return TowerMagnitude.normalize(self.height + 1, self.residual) if self.height \
            else TowerMagnitude.from_log(self.residual)

    def scale(self, a: float) -> "TowerMagnitude":
        """``a * self`` for ``a > 0`` (``self`` positive when height >= 1)."""
        if a <= 0:
            raise ValueError("scale factor must be positive")
        if self.height == 0:
            return TowerMagnitude.from_value(self.residual * a)
        return self.log().shift(math.log(a)).exp()

    def shift(self, c: float) -> "TowerMagnitude":
        """``self + c``; absorbed when ``|c|`` is below working precision."""
        if self.height == 0:
            return TowerMagnitude.from_value(self.residual + c)
        if self.height == 1 and self.residual < 700.0:
            v = math.exp(self.residual) + c
            if v < C_NORM:
                return TowerMagnitude.from_value(v)
            return TowerMagnitude.normalize(1, math.log(v))
        return self

    def __lt__(self, other: "TowerMagnitude") -> bool:
        return tower_compare(self, other) < 0

    def __repr__(self):
        return f"TowerMagnitude(height={self.height}, residual={self.residual!r})"


def tower_compare(a: TowerMagnitude, b: TowerMagnitude) -> int:
    """-1, 0, 1 as ``a`` is less than, equal to, greater than ``b``."""
    a = TowerMagnitude.normalize(a.height, a.residual)
    b = TowerMagnitude.normalize(b.height, b.residual)
    if a.height != b.height:
        return -1 if a.height < b.height else 1
    if a.residual == b.residual:
        return 0
    return -1 if a.residual < b.residual else 1
