"""Poincaré linearizers of polynomials at repelling fixed points.

``PoincareLinearizer`` follows the scikit-learn estimator protocol: ``fit``
takes a polynomial, locates the fixed point and validates the convergence
radii; ``predict`` evaluates ``L`` on an array of complex points.

The linearizer solves ``p(L(z)) = L(s z)`` with ``L(0) = x0`` and
``L'(0) = 1``. Near the origin it is computed as the Koenigs limit
``p^n(x0 + z / s^n)``; far out the functional equation pulls ``z`` back to
the base disk and pushes the value forward with ``p`` in log-polar form.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numpy.polynomial import polynomial as P
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .extrange import (ZERO, LogPolarComplex, TowerMagnitude, normalize_arg,
                       poly_eval_lp_arr)
from .maps import FixedPointData, PolynomialMap, classify, exceptional_values, find_fixed_points
from .validation import check_complex_array, check_polynomial

MAX_KOENIGS_STEPS = 200
# seed modulus for the quadratic Koenigs approximant; its O(s^3) error must sit below koenigs_tol
KOENIGS_SEED = 1e-6
# near-parabolic cycles (|multiplier| close to 1) can hold orbits for hundreds of steps
MAX_EXPLICIT_STEPS = 4000
#: log|value| above which the argument is no longer meaningful in doubles.
PHASE_LIMIT = 1e13
# values with abs(log-modulus) below NATIVE_LOG_BUDGET / degree are stepped in plain complex arithmetic
NATIVE_LOG_BUDGET = 600.0


class KoenigsConvergenceError(RuntimeError):
    pass


class InversionError(RuntimeError):
    pass


def _horner(coeffs, x):
    # P.polyval's argument checks dominate for the short loops below
    acc = coeffs[-1]
    for c in coeffs[-2::-1]:
        acc = acc * x + c
    return acc


def _taylor_shift(coeffs, x0):
    """Coefficients of ``u -> p(x0 + u) - x0`` with the constant term pinned to 0."""
    out = np.array([coeffs[-1]], dtype=complex)
    for c in coeffs[-2::-1]:
        out = P.polyadd(P.polymul(out, [x0, 1]), [c])
    out = np.array(out, dtype=complex)
    out[0] = 0
    return out


@dataclass(frozen=True)
class ExtendedEvaluation:
    """Result of evaluating ``L`` at an extended-range point.

    ``value`` is None when ``log|L(z)|`` itself overflows; ``modulus`` is
    always set. ``log_trunc`` is the log of the accumulated relative
    truncation bound.
    """

    value: Optional[Union[LogPolarComplex, type(ZERO)]]
    modulus: TowerMagnitude
    log_trunc: float
    phase_reliable: bool


def _stretch_scale(scale) -> Optional[complex]:
    """The stretched scale ``s`` as a complex number, or None for multiplier scales."""
    if isinstance(scale, str):
        return 2.0 + 0j if scale == "two" else None
    if isinstance(scale, (bool, int, np.integer)):
        return None
    if isinstance(scale, (float, complex, np.floating, np.complexfloating)):
        s = complex(scale)
        if not (cmath.isfinite(s) and abs(s) > 1):
            raise ValueError(f"a complex scale needs modulus > 1, got {scale!r}")
        return s
    return None


def _scale_to_json(scale):
    if isinstance(scale, (complex, np.complexfloating)):
        return [scale.real, scale.imag]
    if isinstance(scale, np.integer):
        return int(scale)
    return scale


def _scale_from_json(scale):
    if isinstance(scale, list):
        return complex(*scale)
    return scale


class PoincareLinearizer(BaseEstimator):
    """Linearizer ``L`` of a polynomial at a repelling fixed point.

    Parameters
    ----------
    fixed_point : "auto-repelling", int or complex
        Which fixed point to linearize at. ``"auto-repelling"`` picks the
        repelling fixed point of largest multiplier modulus; an int indexes
        :func:`find_fixed_points`; a complex value is matched to the nearest
        fixed point.
    scale : "multiplier", "two", int or complex
        The linear factor ``s`` in ``p(L(z)) = L(s z)``. ``"multiplier"``
        uses ``p'(x0)``; an int ``k`` uses ``p'(x0)**k`` (the same ``L``);
        a complex ``s`` with ``|s| > 1`` precomposes with the spiral stretch
        that conjugates multiplication by ``s`` to multiplication by
        ``p'(x0)``. ``"two"`` is ``s = 2``.
    koenigs_tol : float
        Agreement required between successive Koenigs approximants.
    max_radius : float
        Upper end of the dyadic search for the linearization radius.
    """

    def __init__(self, fixed_point="auto-repelling", scale="multiplier",
                 koenigs_tol=1e-12, max_radius=32.0):
        self.fixed_point = fixed_point
        self.scale = scale
        self.koenigs_tol = koenigs_tol
        self.max_radius = max_radius

    # ------------------------------------------------------------------ fit

    def fit(self, X, y=None):
        p = check_polynomial(X)
        fp = select_fixed_point(p, self.fixed_point)
        self._setup(p, fp)
        self.lin_radius_ = self._search_lin_radius()
        self.base_radius_ = self.lin_radius_ * abs(self.core_scale_)
        self.injectivity_radius_ = self._search_injectivity_radius()
        return self

    def _setup(self, p: PolynomialMap, fp: FixedPointData):
        stretch = _stretch_scale(self.scale)
        if stretch is not None or self.scale == "multiplier":
            power = 1
        elif isinstance(self.scale, (int, np.integer)) and not isinstance(self.scale, bool) \
                and self.scale >= 1:
            power = int(self.scale)
        else:
            raise ValueError("scale must be 'multiplier', 'two', a positive int or a complex "
                             f"number of modulus > 1, got {self.scale!r}")
        if p.degree ** power > 4096:
            raise ValueError("scale power too large")
        self.map_ = p
        self.fixed_point_ = fp
        self.multiplier_ = fp.multiplier
        self.step_power_ = power
        step = PolynomialMap(p.iterate_coefficients(power)) if power > 1 else p
        self.step_map_ = step
        self.core_scale_ = fp.multiplier ** power
        self._stretched = stretch is not None
        lam = fp.multiplier
        if self._stretched:
            # real-linear map of log coordinates sending log(s) to log(lam)
            ls = math.log(abs(stretch))
            self.scale_ = stretch
            self.radial_exponent_ = math.log(abs(lam)) / ls
            self.twist_ = (cmath.phase(lam) - cmath.phase(stretch)) / ls
        else:
            self.scale_ = self.core_scale_
            self.radial_exponent_ = 1.0
            self.twist_ = 0.0
        q = _taylor_shift(np.asarray(step.coefficients), fp.point)
        self._shift = q
        self._dshift = P.polyder(q)
        lam_s = self.core_scale_
        self._a2 = q[2] / (lam_s * lam_s - lam_s) if len(q) > 2 else 0j
        coeffs = np.asarray(step.coefficients)
        lead = coeffs[-1]
        D = len(coeffs) - 1
        self._ff_c = math.log(abs(lead)) / (D - 1)
        self._ff_gamma = cmath.phase(lead) / (D - 1)
        ratios = [math.log(abs(c / lead)) for c in coeffs[:-1] if c != 0]
        self._ff_threshold = 750.0 + max([0.0] + ratios)
        # near an attracting zero fixed point the lowest term dominates the same way
        low = next(k for k, c in enumerate(coeffs) if c != 0)
        self._ff_low = None
        if low >= 1 and (low >= 2 or abs(coeffs[1]) < 1):
            a = coeffs[low]
            lratios = [math.log(abs(c / a)) for c in coeffs[low + 1:] if c != 0]
            self._ff_low = (low, a, -750.0 - max([0.0] + lratios))

    @property
    def degree_(self) -> int:
        return self.map_.degree

    # ------------------------------------------------------ Koenigs kernel

    def _approximant(self, z, n, derivative=False):
        lam = self.core_scale_
        s = z / lam ** n
        u = s + self._a2 * s * s
        du = (1 + 2 * self._a2 * s) / lam ** n if derivative else None
        for _ in range(n):
            if derivative:
                du = _horner(self._dshift, u) * du
            u = _horner(self._shift, u)
        return self.fixed_point_.point + u, du

    def _koenigs(self, z, derivative=False):
        z = np.asarray(z, dtype=complex)
        amax = float(np.max(np.abs(z))) if z.size else 0.0
        lam_abs = abs(self.core_scale_)
        n = 0 if amax <= KOENIGS_SEED else int(math.ceil(math.log(amax / KOENIGS_SEED) / math.log(lam_abs)))
        prev, dprev = self._approximant(z, n, derivative)
        tol = self.koenigs_tol
        while n < MAX_KOENIGS_STEPS:
            n += 1
            cur, dcur = self._approximant(z, n, derivative)
            with np.errstate(invalid="ignore"):
                ok = np.abs(cur - prev) <= tol * np.maximum(1.0, np.abs(cur))
            if np.all(ok):
                return (cur, dcur) if derivative else cur
            prev = cur
        raise KoenigsConvergenceError(
            f"Koenigs iteration did not converge by n={MAX_KOENIGS_STEPS} "
            f"(|multiplier|={lam_abs:.6g}); fixed point too weakly repelling for tol={tol}")

    def _rounding_slack(self) -> float:
        # rounding in an n-fold composition accumulates like the tail sum 1/(|lambda| - 1)
        return max(1.0, 1.0 / (abs(self.core_scale_) - 1.0))

    def _search_lin_radius(self) -> float:
        angles = np.exp(2j * np.pi * (np.arange(32) + 0.25) / 32)
        best = None
        k = -4
        while 2.0 ** k <= self.max_radius:
            z = 2.0 ** k * angles
            try:
                v = self._koenigs(z)
            except KoenigsConvergenceError:
                break
            n = int(math.ceil(math.log(2.0 ** k / KOENIGS_SEED) / math.log(abs(self.core_scale_))))
            deep, _ = self._approximant(z, 2 * n + 2)
            slack = self._rounding_slack()
            with np.errstate(invalid="ignore", over="ignore"):
                agree = np.abs(deep - v) <= slack * self.koenigs_tol * np.maximum(1.0, np.abs(v))
                wide = self._eval_core_native(z * self.core_scale_ ** 2)
            if not (np.all(agree) and np.all(np.isfinite(wide)) and np.max(np.abs(wide)) < 1e150):
                break
            best = 2.0 ** k
            k += 1
        if best is None:
            raise KoenigsConvergenceError("no validated linearization radius found")
        return best

    # ------------------------------------------------ native evaluation

    def _reduction_steps(self, absz):
        lam_abs = abs(self.core_scale_)
        with np.errstate(divide="ignore"):
            j = np.ceil((np.log(absz) - math.log(self.base_radius_)) / math.log(lam_abs) - 1e-12)
        return np.where(np.isfinite(j), np.maximum(j, 0), 0).astype(np.int64)

    def _eval_core_native(self, z, derivative=False):
        z = np.asarray(z, dtype=complex)
        if not hasattr(self, "base_radius_"):
            # during fit: evaluate by pulling back to the Koenigs seed directly
            return self._koenigs(z, derivative)
        j = self._reduction_steps(np.abs(z))
        w = z / self.core_scale_ ** j
        out = self._koenigs(w, derivative)
        v, dv = out if derivative else (out, None)
        if derivative:
            dv = dv / self.core_scale_ ** j
        coeffs = np.asarray(self.step_map_.coefficients)
        dcoeffs = P.polyder(coeffs)
        with np.errstate(over="ignore", invalid="ignore"):
            for t in range(int(j.max(initial=0))):
                act = t < j
                if derivative:
                    dv = np.where(act, P.polyval(v, dcoeffs) * dv, dv)
                v = np.where(act, P.polyval(v, coeffs), v)
        return (v, dv) if derivative else v

    def _to_core(self, z):
        """Map stretched-scale coordinates to multiplier-scale coordinates."""
        if not self._stretched:
            return z
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            lr = np.log(r)
            out = np.exp(self.radial_exponent_ * lr + 1j * (np.angle(z) + self.twist_ * lr))
        return np.where(r == 0, 0j, out)

    def _from_core(self, u):
        if not self._stretched:
            return u
        u = np.asarray(u, dtype=complex)
        r = np.abs(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            lr = np.log(r) / self.radial_exponent_
            out = np.exp(lr + 1j * (np.angle(u) - self.twist_ * lr))
        return np.where(r == 0, 0j, out)

    def predict(self, X):
        """``L`` at each point of ``X`` in native precision (inf where it overflows)."""
        check_is_fitted(self, "base_radius_")
        z = check_complex_array(X)
        out = self._eval_core_native(self._to_core(z))
        return out[()] if np.ndim(out) == 0 else out

    def transform(self, X):
        return self.predict(X)

    # ------------------------------------------ extended-range evaluation

    def _lp_to_core(self, lm, arg):
        if not self._stretched:
            return lm, arg
        return self.radial_exponent_ * lm, normalize_arg(arg + self.twist_ * lm)

    def _eval_core_lp(self, lm, arg):
        """Vectorised ``L`` at log-polar points in core coordinates.

        Returns ``(lm, arg, llm, log_trunc, reliable)`` where ``llm`` is
        ``log log|L|`` (useful once ``lm`` overflows, where ``lm`` is inf).
        """
        lm = np.asarray(lm, dtype=float)
        arg = np.asarray(arg, dtype=float)
        lam = self.core_scale_
        lam_log = math.log(abs(lam))
        log_base = math.log(self.base_radius_)
        t = (lm - log_base) / lam_log
        t = np.where(np.isfinite(t), t, -1.0)
        j = np.maximum(np.ceil(t - 1e-12), 0.0)
        # (t - j) stays in (-1, 0] even when lm is too large to subtract exactly
        wl = np.where(j > 0, log_base + (t - j) * lam_log, lm)
        wa = arg - np.mod(j * cmath.phase(lam), 2 * math.pi)
        w = np.where(np.isfinite(lm), np.exp(wl + 1j * wa), 0j)
        return self._push_forward(self._koenigs(w), j, input_reliable=lm < PHASE_LIMIT)

    def _push_forward(self, v, j, input_reliable=True):
        """Apply the step map ``j`` times (per element) to native values ``v``."""
        v = np.asarray(v, dtype=complex)
        j = np.asarray(j, dtype=float)
        with np.errstate(divide="ignore"):
            vl = np.log(np.abs(v))
        va = np.angle(v)
        trunc = np.full(vl.shape, -np.inf)
        llm = np.full(vl.shape, np.nan)
        reliable = np.ones(vl.shape, dtype=bool) & input_reliable
        remaining = j.copy()
        coeffs = np.asarray(self.step_map_.coefficients)
        D = len(coeffs) - 1
        logD = math.log(D)
        c, gamma = self._ff_c, self._ff_gamma
        steps = 0
        while True:
            active = remaining > 0
            if not active.any():
                break
            ff = active & (vl > self._ff_threshold)
            if ff.any():
                m = remaining[ff]
                base = vl[ff] + c
                lll = m * logD + np.log(base)
                with np.errstate(over="ignore"):
                    new_l = np.where(lll < 700.0, np.exp(np.minimum(lll, 700.0)) - c, np.inf)
                with np.errstate(over="ignore", invalid="ignore"):
                    mult = np.where(m * logD < 700.0, np.exp(np.minimum(m, 1e4) * logD), np.inf)
                    new_a = np.where(np.isfinite(mult),
                                     np.mod(mult * (va[ff] + gamma), 2 * math.pi) - gamma,
                                     np.where(va[ff] + gamma == 0, -gamma, 0.0))
                llm[ff] = lll
                vl[ff] = new_l
                va[ff] = normalize_arg(new_a)
                remaining[ff] = 0
                active = remaining > 0
                if not active.any():
                    break
            if self._ff_low is not None:
                low, a, thr = self._ff_low
                tiny = active & (vl < thr)
                if tiny.any():
                    m = remaining[tiny]
                    if low == 1:
                        new_l = vl[tiny] + m * math.log(abs(a))
                        new_a = va[tiny] + m * cmath.phase(a)
                    else:
                        cl, gl = math.log(abs(a)) / (low - 1), cmath.phase(a) / (low - 1)
                        with np.errstate(over="ignore", invalid="ignore"):
                            kk = np.exp(np.minimum(m, 1e4) * math.log(low))
                            new_l = np.where(m * math.log(low) < 700.0, kk * (vl[tiny] + cl) - cl, -np.inf)
                            new_a = np.where(np.isfinite(kk), np.mod(kk * (va[tiny] + gl), 2 * math.pi) - gl, 0.0)
                    vl[tiny] = new_l
                    va[tiny] = normalize_arg(np.nan_to_num(new_a))
                    remaining[tiny] = 0
                    active = remaining > 0
                    if not active.any():
                        break
            if steps >= MAX_EXPLICIT_STEPS:
                # bounded orbit pieces: keep the current value as a proxy
                reliable &= ~active
                remaining[active] = 0
                break
            small = active & (np.abs(vl) < NATIVE_LOG_BUDGET / D)
            if small.any():
                w = P.polyval(np.exp(vl[small] + 1j * va[small]), coeffs)
                with np.errstate(divide="ignore"):
                    vl[small] = np.log(np.abs(w))
                va[small] = np.angle(w)
            big = active & ~small
            if big.any():
                nl, na, nt = poly_eval_lp_arr(coeffs, vl[big], va[big], trunc[big])
                vl[big], va[big], trunc[big] = nl, na, nt
            remaining[active] -= 1
            steps += 1
        with np.errstate(divide="ignore", invalid="ignore"):
            llm = np.where(np.isnan(llm), np.log(np.where(vl > 0, vl, np.nan)), llm)
        reliable &= ~(vl > PHASE_LIMIT)
        return vl, va, llm, trunc, reliable

    def eval_lp_arrays(self, lm, arg):
        """Array form of :func:`eval_large` in this handle's coordinates."""
        check_is_fitted(self, "base_radius_")
        return self._eval_core_lp(*self._lp_to_core(np.asarray(lm, float), np.asarray(arg, float)))

    # --------------------------------------------------- serialization

    def to_dict(self) -> dict:
        check_is_fitted(self, "base_radius_")
        fp = self.fixed_point_
        return {
            "map": self.map_.to_pairs(),
            "fixed_point": [fp.point.real, fp.point.imag],
            "multiplier": [fp.multiplier.real, fp.multiplier.imag],
            "scale": _scale_to_json(self.scale),
            "scale_value": [self.scale_.real, self.scale_.imag],
            "koenigs_tol": self.koenigs_tol,
            "max_radius": self.max_radius,
            "lin_radius": self.lin_radius_,
            "base_radius": self.base_radius_,
            "injectivity_radius": self.injectivity_radius_,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PoincareLinearizer":
        fp_pt = complex(*data["fixed_point"])
        h = cls(fixed_point=fp_pt, scale=_scale_from_json(data["scale"]), koenigs_tol=data["koenigs_tol"],
                max_radius=data["max_radius"])
        p = PolynomialMap.from_pairs(data["map"])
        lam = complex(*data["multiplier"])
        h._setup(p, FixedPointData(fp_pt, lam, classify(lam)))
        h.lin_radius_ = float(data["lin_radius"])
        h.base_radius_ = float(data["base_radius"])
        h.injectivity_radius_ = float(data["injectivity_radius"])
        return h

    # -------------------------------------------------------- inverse

    def _newton_inverse(self, w, seed, steps=100, tol=1e-12):
        z = complex(seed)
        for _ in range(steps):
            v, dv = self._eval_core_native(np.array([z]), derivative=True)
            v, dv = complex(v[0]), complex(dv[0])
            if not (np.isfinite(v) and np.isfinite(dv)) or dv == 0:
                return None
            err = v - w
            step = err / dv
            # a small residual alone is not enough: near an asymptotic value
            # (e^z -> 0) the residual shrinks while the step stays O(1)
            if abs(err) <= tol * (1 + abs(w)) and abs(step) <= 1e-6 * (1 + abs(z)):
                return z
            z = z - step
        return None

    def _search_injectivity_radius(self) -> float:
        x0 = self.fixed_point_.point
        angles = np.exp(2j * np.pi * (np.arange(64) + 0.5) / 64)
        for k in range(3, -21, -1):
            delta = 2.0 ** k
            sols = []
            for a in angles:
                w = x0 + delta * a
                z = self._newton_inverse(w, w - x0)
                if z is None:
                    break
                sols.append(z)
            else:
                turn = np.angle(np.roll(sols, -1) / np.asarray(sols))
                # injective image circle: preimage curve winds once around 0
                if np.all(np.abs(turn) < math.pi / 2) and abs(turn.sum() - 2 * math.pi) < 1e-6:
                    return delta
        raise InversionError("no injectivity radius found")


def select_fixed_point(p: PolynomialMap, selector) -> FixedPointData:
    fps = find_fixed_points(p)
    if selector == "auto-repelling":
        rep = [f for f in fps if f.repelling]
        if not rep:
            raise ValueError(f"{p!r} has no repelling fixed point")
        rep.sort(key=lambda f: (-abs(f.multiplier), f.point.real, f.point.imag))
        return rep[0]
    if isinstance(selector, (int, np.integer)) and not isinstance(selector, bool):
        if not 0 <= selector < len(fps):
            raise ValueError(f"fixed point index {selector} out of range 0..{len(fps) - 1}")
        fp = fps[selector]
    else:
        target = complex(selector)
        fp = min(fps, key=lambda f: abs(f.point - target))
        if abs(fp.point - target) > 1e-3 * (1 + abs(target)):
            raise ValueError(f"{target} is not a fixed point of {p!r}")
    if not fp.repelling:
        raise ValueError("selected fixed point is not repelling")
    return fp


# ----------------------------------------------------------------------
# functional API


def koenigs_eval(h: PoincareLinearizer, z):
    """``L(z)`` by the Koenigs limit; requires ``|z| <= base_radius_``."""
    check_is_fitted(h, "base_radius_")
    z = check_complex_array(z, "z")
    u = h._to_core(z)
    if np.any(np.abs(u) > h.base_radius_ * (1 + 1e-12)):
        raise ValueError(f"|z| exceeds the base radius {h.base_radius_}")
    out = h._koenigs(u)
    return out[()] if np.ndim(out) == 0 else out


def eval_large(h: PoincareLinearizer, z) -> ExtendedEvaluation:
    """``L(z)`` for a nonzero extended-range ``z`` via the functional equation."""
    check_is_fitted(h, "base_radius_")
    if z is ZERO:
        x0 = h.fixed_point_.point
        return ExtendedEvaluation(LogPolarComplex.from_complex(x0),
                                  TowerMagnitude.from_value(abs(x0)), -math.inf, True)
    if not isinstance(z, LogPolarComplex):
        z = LogPolarComplex.from_complex(z)
        return eval_large(h, z)
    lm, arg, llm, trunc, reliable = h.eval_lp_arrays(np.array([z.log_mod]), np.array([z.arg]))
    lm, arg, llm = float(lm[0]), float(arg[0]), float(llm[0])
    if math.isinf(lm) and lm < 0:
        value, modulus = ZERO, TowerMagnitude.from_value(0.0)
    elif math.isfinite(lm):
        value, modulus = LogPolarComplex(lm, arg), TowerMagnitude.from_log(lm)
    else:
        value, modulus = None, TowerMagnitude.normalize(2, llm)
    return ExtendedEvaluation(value, modulus, float(trunc[0]), bool(reliable[0]))


def residual(h: PoincareLinearizer, z):
    """``|p(L(z)) - L(s z)| / (1 + |L(s z)|)`` for the handle's scale ``s``."""
    check_is_fitted(h, "base_radius_")
    z = check_complex_array(z, "z")
    lz = h.predict(z)
    lsz = h.predict(h.scale_ * z)
    out = np.abs(h.map_(lz) - lsz) / (1 + np.abs(lsz))
    return out[()] if np.ndim(out) == 0 else out


def local_inverse(h: PoincareLinearizer, w: complex) -> complex:
    """``z`` near 0 with ``L(z) = w``; valid for ``|w - x0| <= injectivity_radius_``."""
    check_is_fitted(h, "base_radius_")
    w = complex(w)
    x0 = h.fixed_point_.point
    if abs(w - x0) > h.injectivity_radius_ * (1 + 1e-12):
        raise InversionError(f"|w - x0| = {abs(w - x0):.4g} exceeds injectivity radius "
                             f"{h.injectivity_radius_}")
    z = h._newton_inverse(w, w - x0)
    if z is None:
        z = 0j
        for t in np.linspace(0.125, 1.0, 8):
            z = h._newton_inverse(x0 + t * (w - x0), z)
            if z is None:
                raise InversionError(f"Newton inversion failed for w={w}")
    return complex(h._from_core(z))


def _find_preimage(h: PoincareLinearizer, target: complex, seeds, tol=1e-10,
                   bound: float = math.inf):
    """Newton preimage from the first seed that converges within ``|z| <= bound``.

    Far out, values near an asymptotic value lose their relative precision
    (``x0 + u`` cancels), so roots found there are not evidence.
    """
    for s in seeds:
        z = h._newton_inverse(target, s, steps=100, tol=tol)
        if z is not None and abs(z) <= bound:
            return z
    return None


def omitted_values_check(h: PoincareLinearizer, search_radius: float = 10.0, grid: int = 128,
                         targets: int = 20, seed: int = 0) -> dict:
    """Numerical evidence that ``L`` omits exactly the exceptional values other than x0.

    Works in multiplier-scale coordinates; the radial conjugation used by
    a stretched scale is a bijection and leaves the image unchanged.
    """
    check_is_fitted(h, "base_radius_")
    x0 = h.fixed_point_.point
    claimed = sorted((v for v in exceptional_values(h.map_) if abs(v - x0) > 1e-8),
                     key=lambda v: (v.real, v.imag))
    xs = np.linspace(-search_radius, search_radius, grid)
    Z = (xs[None, :] + 1j * xs[:, None]).ravel()
    Z = Z[np.abs(Z) <= search_radius]
    with np.errstate(over="ignore", invalid="ignore"):
        LZ = h._eval_core_native(Z)
    finite = np.isfinite(LZ)
    Z, LZ = Z[finite], LZ[finite]

    def seeds_for(t, k=12):
        order = np.argsort(np.abs(LZ - t))[:k]
        return list(Z[order])

    candidates = []
    for v in claimed:
        gap = float(np.min(np.abs(LZ - v)))
        hit = _find_preimage(h, v, seeds_for(v), bound=2 * search_radius)
        candidates.append({"value": [v.real, v.imag], "min_distance": gap,
                           "preimage_found": hit is not None})
    rng = np.random.default_rng(seed)
    attained = []
    for _ in range(targets):
        while True:
            t = complex(*rng.uniform(-3, 3, size=2))
            if all(abs(t - v) > 0.1 for v in claimed):
                break
        z = _find_preimage(h, t, seeds_for(t), bound=2 * search_radius)
        attained.append({"target": [t.real, t.imag], "attained": z is not None,
                         "preimage": None if z is None else [z.real, z.imag]})
    x0_pre = _find_preimage(h, x0, [0j])
    consistent = (all(c["min_distance"] > 1e-9 and not c["preimage_found"] for c in candidates)
                  and all(a["attained"] for a in attained) and x0_pre is not None)
    return {
        "claimed_omitted": [[v.real, v.imag] for v in claimed],
        "candidates": candidates,
        "targets": attained,
        "fixed_point_attained": x0_pre is not None,
        "verdict": "consistent" if consistent else "inconsistent",
    }
