"""Planar maps: polynomials, their fixed/periodic points and exceptional
values, a quasiregular power map for growth checks, and closed-form
linearizers used as oracles."""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as P

from .extrange import ZERO, LogPolarComplex

REPELLING_MARGIN = 1e-9
FIXED_POINT_RTOL = 1e-10


class RootFindingError(RuntimeError):
    pass


@dataclass(frozen=True)
class PolynomialMap:
    """Polynomial with complex coefficients, constant term first."""

    coefficients: tuple

    def __init__(self, coefficients: Sequence[complex]):
        coeffs = tuple(complex(c) for c in coefficients)
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        if len(coeffs) < 3:
            raise ValueError("polynomial map needs degree >= 2")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def from_pairs(cls, pairs) -> "PolynomialMap":
        """Build from ``[[re, im], ...]`` (the JSON wire format)."""
        try:
            coeffs = [complex(float(re), float(im)) for re, im in pairs]
        except (TypeError, ValueError) as exc:
            raise ValueError(f"malformed coefficient pairs: {pairs!r}") from exc
        return cls(coeffs)

    @classmethod
    def quadratic(cls, c: complex) -> "PolynomialMap":
        return cls([c, 0, 1])

    def to_pairs(self) -> list:
        return [[c.real, c.imag] for c in self.coefficients]

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading(self) -> complex:
        return self.coefficients[-1]

    def __call__(self, z):
        return P.polyval(z, np.asarray(self.coefficients))

    def derivative(self, z):
        return P.polyval(z, P.polyder(np.asarray(self.coefficients)))

    def iterate(self, z, n: int):
        for _ in range(n):
            z = self(z)
        return z

    def iterate_coefficients(self, n: int) -> np.ndarray:
        """Coefficients of the n-th iterate (degree d**n)."""
        base = np.asarray(self.coefficients)
        out = np.array([0j, 1 + 0j])
        for _ in range(n):
            # Horner composition base(out)
            acc = np.array([base[-1]])
            for c in base[-2::-1]:
                acc = P.polyadd(P.polymul(acc, out), [c])
            out = acc
        return out

    def __repr__(self):
        return f"PolynomialMap({list(self.coefficients)!r})"


@dataclass(frozen=True)
class FixedPointData:
    point: complex
    multiplier: complex
    classification: str

    @property
    def repelling(self) -> bool:
        return self.classification == "repelling"


def classify(multiplier: complex) -> str:
    m = abs(multiplier)
    if m > 1 + REPELLING_MARGIN:
        return "repelling"
    if m < 1 - REPELLING_MARGIN:
        return "attracting"
    return "indifferent"


def durand_kerner(coeffs, max_iter: int = 10000, tol: float = 1e-12, name: str = "") -> np.ndarray:
    """All roots of ``sum(coeffs[k] z**k)`` by simultaneous iteration.

    Starts from perturbed roots of unity on the Cauchy bound circle, then
    Newton-polishes each root.
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    n = len(c) - 1
    if n < 1:
        raise ValueError("constant polynomial has no roots")
    monic = c / c[-1]
    if n == 1:
        return np.array([-monic[0]])
    bound = 1.0 + np.max(np.abs(monic[:-1]))
    k = np.arange(n)
    z = bound * np.exp(2j * np.pi * k / n + 0.4j) * (1 + 0.01 * k / n)
    scale = np.max(np.abs(monic))
    for _ in range(max_iter):
        f = P.polyval(z, monic)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        denom = np.prod(diff, axis=1)
        denom = np.where(denom == 0, 1e-300, denom)
        step = f / denom
        z = z - step
        if np.all(np.abs(step) <= tol * (1 + np.abs(z))) or \
                np.all(np.abs(P.polyval(z, monic)) <= tol * scale * (1 + np.abs(z)) ** n):
            break
    else:
        raise RootFindingError(f"root iteration did not converge in {max_iter} steps for {name or list(c)}")
    dmonic = P.polyder(monic)
    for i in range(n):
        zi = z[i]
        for _ in range(8):
            d = P.polyval(zi, dmonic)
            if d == 0:
                break
            nxt = zi - P.polyval(zi, monic) / d
            if abs(P.polyval(nxt, monic)) >= abs(P.polyval(zi, monic)):
                break
            zi = nxt
        z[i] = zi
    return z


def find_fixed_points(p: PolynomialMap) -> list[FixedPointData]:
    coeffs = np.array(p.coefficients)
    coeffs[1] -= 1
    roots = durand_kerner(coeffs, name=repr(p))
    out = []
    for r in roots:
        r = complex(r)
        resid = abs(p(r) - r)
        if resid > FIXED_POINT_RTOL * (1 + abs(r)):
            raise RootFindingError(f"fixed point {r} of {p!r} has residual {resid:.3g}")
        lam = complex(p.derivative(r))
        out.append(FixedPointData(r, lam, classify(lam)))
    out.sort(key=lambda f: (round(f.point.real, 12), round(f.point.imag, 12)))
    return out


def _dedupe(points, tol):
    kept: list[complex] = []
    for z in points:
        if all(abs(z - w) > tol * (1 + abs(w)) for w in kept):
            kept.append(complex(z))
    return kept


def periodic_points(p: PolynomialMap, n: int) -> list[tuple]:
    """Points of exact period ``n`` as ``(point, period, multiplier, classification)``."""
    if not 1 <= n <= 4:
        raise ValueError("period must be in 1..4")
    coeffs = p.iterate_coefficients(n)
    coeffs[1] -= 1
    roots = durand_kerner(coeffs, name=f"{p!r}^{n}")
    lower = []
    for k in range(1, n):
        if n % k == 0:
            lower.extend(pt for pt, *_ in periodic_points(p, k))
    out = []
    for r in _dedupe(roots, 1e-8):
        if any(abs(r - q) <= 1e-7 * (1 + abs(q)) for q in lower):
            continue
        mult, z = 1 + 0j, r
        for _ in range(n):
            mult *= complex(p.derivative(z))
            z = complex(p(z))
        out.append((r, n, mult, classify(mult)))
    return out


def exceptional_values(p: PolynomialMap, depth: int = 6, tol: float = 1e-4) -> set:
    """Finite points whose backward orbit stays at most 2 elements to ``depth`` levels.

    Candidates are the critical values of ``p``: a finite exceptional point
    of a polynomial must be a totally ramified critical value.
    """
    crit = durand_kerner(P.polyder(np.asarray(p.coefficients)), name=repr(p)) \
        if p.degree > 1 else []
    candidates = _dedupe([complex(p(c)) for c in crit], tol)
    found = set()
    for v in candidates:
        orbit = [v]
        frontier = [v]
        for _ in range(depth):
            fresh: list[complex] = []
            for y in frontier:
                coeffs = np.array(p.coefficients)
                coeffs[0] -= y
                for z in durand_kerner(coeffs, name=repr(p)):
                    if all(abs(z - w) > tol * (1 + abs(w)) for w in orbit + fresh):
                        fresh.append(complex(z))
            orbit += fresh
            frontier = fresh
            if len(orbit) > 2 or not fresh:
                break
        if len(orbit) <= 2:
            found.add(complex(round(v.real, 9), round(v.imag, 9)) + 0j)
    return found


def critical_orbit_escapes(p: PolynomialMap, steps: int = 500, radius: float = 1e6) -> bool:
    """True when every critical point escapes (Cantor Julia set for quadratics)."""
    crit = durand_kerner(P.polyder(np.asarray(p.coefficients)), name=repr(p))
    for c in crit:
        z = complex(c)
        for _ in range(steps):
            z = complex(p(z))
            if abs(z) > radius:
                break
        else:
            return False
    return True


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QRPowerMap:
    """``r e^{it} -> r^(stretch*power) e^{i power t}``; K = stretch, degree = power.

    Quasiregular but not uniformly so when ``stretch > 1``; used only for
    growth-bound checks.
    """

    stretch: float
    power: int

    def __post_init__(self):
        if self.stretch < 1 or self.power < 2:
            raise ValueError("need stretch >= 1 and power >= 2")

    @property
    def dilatation(self) -> float:
        return float(self.stretch)

    @property
    def degree(self) -> int:
        return self.power


def qr_power_eval(q: QRPowerMap, z):
    if isinstance(z, LogPolarComplex) or z is ZERO:
        if z is ZERO:
            return ZERO
        return LogPolarComplex(q.stretch * q.power * z.log_mod, q.power * z.arg)
    z = complex(z)
    if z == 0:
        return 0j
    r, t = abs(z), cmath.phase(z)
    return cmath.rect(r ** (q.stretch * q.power), q.power * t)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleLinearizer:
    kind: str
    base_map: PolynomialMap = field(compare=False)
    fixed_point: FixedPointData = field(compare=False)

    @classmethod
    def exp_for_power_map(cls, d: int = 2) -> "OracleLinearizer":
        p = PolynomialMap([0] * d + [1])
        return cls("exp_for_power_map", p, FixedPointData(1 + 0j, complex(d), "repelling"))

    @classmethod
    def cosh_for_chebyshev(cls) -> "OracleLinearizer":
        p = PolynomialMap([-2, 0, 1])
        return cls("cosh_for_chebyshev", p, FixedPointData(2 + 0j, 4 + 0j, "repelling"))


def oracle_eval(o: OracleLinearizer, z):
    z = np.asarray(z, dtype=complex)
    if o.kind == "exp_for_power_map":
        out = np.exp(z)
    elif o.kind == "cosh_for_chebyshev":
        out = 2 * np.cosh(np.sqrt(z))
    else:
        raise ValueError(f"unknown oracle kind {o.kind!r}")
    return out[()] if out.ndim == 0 else out


AnyMap = Union[PolynomialMap, QRPowerMap]
