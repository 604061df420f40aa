"""Maximum modulus, order of growth, and numerical checks of growth
estimates for linearizers.

All maximum-modulus values are returned as :class:`TowerMagnitude` holding
``log M(r, L)`` so that radii far beyond double range can be handled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import ndimage
from sklearn.utils.validation import check_is_fitted

from .extrange import TowerMagnitude, poly_eval_lp_arr, tower_compare
from .linearizer import PoincareLinearizer
from .maps import PolynomialMap, QRPowerMap

N_ANGLES = 256
N_ARCS = 8
ANGLE_TOL = 1e-6
_GOLD = (math.sqrt(5) - 1) / 2

LogR = Union[float, TowerMagnitude]


@dataclass(frozen=True)
class GrowthRecord:
    log_r: float
    logM: TowerMagnitude
    samples: int
    refined: bool


@dataclass(frozen=True)
class OrderEstimate:
    rho: float
    lambda_low: float
    fit_window: tuple
    residual: float


@dataclass(frozen=True)
class HolderFit:
    C1: float
    C2: float
    R0: float
    exponent_low: float
    exponent_high: float
    passes: tuple = ()
    measured_exponent: float = float("nan")

    @property
    def ok(self) -> bool:
        return all(self.passes)


def rescaled(h: PoincareLinearizer, scale="two") -> PoincareLinearizer:
    """Same linearizer with a different scale, without refitting."""
    if h.scale == scale:
        return h
    data = h.to_dict()
    data["scale"] = scale
    return PoincareLinearizer.from_dict(data)


# ---------------------------------------------------------------- max modulus


def _circle_values(h: PoincareLinearizer, s: float, j: float, phi):
    w = np.exp(s + 1j * np.asarray(phi, float))
    vl, va, llm, _, _ = h._push_forward(h._koenigs(w), np.full(np.shape(phi), j))
    return vl, llm


def _log_max_modulus_float(h: PoincareLinearizer, log_r: float, n_angles: int = N_ANGLES):
    lrc = h.radial_exponent_ * log_r
    lam_log = math.log(abs(h.core_scale_))
    log_base = math.log(h.base_radius_)
    t = (lrc - log_base) / lam_log
    j = max(0.0, math.ceil(t - 1e-12))
    s = log_base + (t - j) * lam_log if j > 0 else lrc

    def objective(phi):
        return _circle_values(h, s, j, phi)

    while True:
        phi = 2 * math.pi * np.arange(n_angles) / n_angles
        vl, llm = objective(phi)
        overflow = bool(np.any(np.isposinf(vl)))
        score = np.where(np.isfinite(vl), vl, -np.inf) if not overflow else \
            np.where(np.isfinite(vl), -np.inf, llm)
        score = np.nan_to_num(score, nan=-np.inf)
        sampled = float(np.max(score))
        # top arcs: local maxima of the sampled circle, best first
        is_peak = (score >= np.roll(score, 1)) & (score >= np.roll(score, -1))
        peaks = np.flatnonzero(is_peak)
        peaks = peaks[np.argsort(-score[peaks])][:N_ARCS]
        step = 2 * math.pi / n_angles
        a = phi[peaks] - step
        b = phi[peaks] + step
        c = b - _GOLD * (b - a)
        d = a + _GOLD * (b - a)

        def f(x):
            v, ll = objective(x)
            if overflow:
                return np.nan_to_num(np.where(np.isfinite(v), -np.inf, ll), nan=-np.inf)
            return np.nan_to_num(v, nan=-np.inf)

        fc, fd = f(c), f(d)
        while np.max(b - a) > ANGLE_TOL:
            left = fc > fd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            c = b - _GOLD * (b - a)
            d = a + _GOLD * (b - a)
            fc, fd = f(c), f(d)
        refined = float(max(sampled, np.max(fc), np.max(fd)))
        if refined - sampled > 1e-3 * max(1.0, abs(sampled)) and n_angles < 4096:
            n_angles *= 2
            continue
        break
    if overflow:
        return TowerMagnitude.from_log(refined), n_angles, True
    return TowerMagnitude.normalize(0, refined), n_angles, True


def max_modulus(h: PoincareLinearizer, log_r: LogR) -> TowerMagnitude:
    """``log M(r, L)`` as a tower, for ``log_r = log r`` (float or tower)."""
    return max_modulus_record(h, log_r).logM


def max_modulus_record(h: PoincareLinearizer, log_r: LogR) -> GrowthRecord:
    check_is_fitted(h, "base_radius_")
    if isinstance(log_r, TowerMagnitude):
        as_float = log_r.to_float()
        if math.isfinite(as_float) and as_float < 1e300:
            log_r = as_float
        else:
            # log log M = rho_core * log r_core + O(1); the O(1) term is below precision
            rho_c = math.log(h.map_.degree) / math.log(abs(h.core_scale_))
            llm = log_r.scale(h.radial_exponent_ * rho_c)
            return GrowthRecord(math.inf, llm.exp(), 0, False)
    if not math.isfinite(log_r):
        raise ValueError("log_r must be finite")
    logM, n, refined = _log_max_modulus_float(h, float(log_r))
    return GrowthRecord(float(log_r), logM, n, refined)


def iterated_max_modulus(h: PoincareLinearizer, R: float, n: int) -> list[TowerMagnitude]:
    """``[M^0(R), ..., M^n(R)]`` as towers (``M^0 = R``)."""
    levels = [TowerMagnitude.from_value(float(R))]
    for k in range(n):
        log_r = levels[-1].log()
        level = max_modulus(h, log_r).exp()
        if k == 0 and tower_compare(level, levels[0]) <= 0:
            raise ValueError(f"M(R, L) <= R for R={R}; choose a larger R")
        levels.append(level)
    return levels


# ---------------------------------------------------------------- order


def _hull_slope(x, y, upper=True):
    pts = sorted(zip(x, y))
    hull: list = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            cross = (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1)
            if (cross >= 0) if upper else (cross <= 0):
                hull.pop()
            else:
                break
        hull.append(p)
    hx, hy = np.array(hull).T
    if len(hull) < 2:
        return float("nan")
    return float(np.polyfit(hx, hy, 1)[0])


def order_estimate(h: PoincareLinearizer, log_r_min: float, log_r_max: float,
                   samples: int = 64) -> OrderEstimate:
    """Order and lower order from the envelopes of ``(log r, log log M(r))``."""
    if log_r_max - log_r_min < 3 * math.log(10):
        raise ValueError("window must span at least 3 decades of r")
    xs, ys = [], []
    for lr in np.linspace(log_r_min, log_r_max, samples):
        logM = max_modulus(h, float(lr))
        if logM.height == 0 and logM.residual <= 1.0:
            continue
        xs.append(float(lr))
        ys.append(logM.log().to_float() if logM.height else math.log(logM.residual))
    if len(xs) < 8:
        raise ValueError(f"only {len(xs)} usable samples (need 8)")
    x, y = np.array(xs), np.array(ys)
    up = _hull_slope(x, y, upper=True)
    lo = _hull_slope(x, y, upper=False)
    coef = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((np.polyval(coef, x) - y) ** 2)))
    # both envelopes estimate the same limit for linearizers; order them
    return OrderEstimate(max(up, lo), min(up, lo), (float(log_r_min), float(log_r_max)), resid)


def valiron_order(h: PoincareLinearizer) -> float:
    return h.radial_exponent_ * math.log(h.map_.degree) / math.log(abs(h.core_scale_))


def growth_bracket_check(h: PoincareLinearizer, d: int, K: float = 1.0,
                         window: tuple = (5.0, 200.0), samples: int = 48, tol: float = 0.1) -> dict:
    """Order of the scale-2 linearizer against ``[(log d - log K), (log d + log K)] / log 2``."""
    h2 = rescaled(h, "two")
    est = order_estimate(h2, window[0], window[1], samples)
    lo = (math.log(d) - math.log(K)) / math.log(2)
    hi = (math.log(d) + math.log(K)) / math.log(2)
    ok = lo - tol <= est.lambda_low and est.rho <= hi + tol
    return {"check": "order_bracket", "d": d, "K": K, "bracket": [lo, hi],
            "rho": est.rho, "lambda_low": est.lambda_low, "tolerance": tol,
            "verdict": "pass" if ok else "fail"}


# ---------------------------------------------------------------- Hölder


def _q(j: int, y: float) -> float:
    return float(j) if y == 1 else (y ** j - 1) / (y - 1)


def _iterate_log_moduli(q, lm, arg, j):
    """log|h^i(x)| for i = 1..j."""
    out = []
    if isinstance(q, QRPowerMap):
        for _ in range(j):
            lm = q.stretch * q.power * lm
            arg = q.power * arg
            out.append(lm.copy())
        return out
    coeffs = np.asarray(q.coefficients)
    trunc = np.full(lm.shape, -np.inf)
    for _ in range(j):
        lm, arg, trunc = poly_eval_lp_arr(coeffs, lm, arg, trunc)
        out.append(lm.copy())
    return out


def holder_bounds_fit(q: Union[QRPowerMap, PolynomialMap], j: int, radii=(10.0, 1e4),
                      n_radii: int = 48, n_angles: int = 64, K: Optional[float] = None) -> HolderFit:
    """Fit ``C1, C2`` with ``R0 = radii[0]`` and check the iterated two-sided bound."""
    if not 1 <= j <= 6:
        raise ValueError("j must be in 1..6")
    d = q.degree
    K = (q.dilatation if isinstance(q, QRPowerMap) else 1.0) if K is None else K
    lo_exp, hi_exp = d / K, d * K
    lr = np.linspace(math.log(radii[0]), math.log(radii[1]), n_radii)
    th = 2 * math.pi * (np.arange(n_angles) + 0.5) / n_angles
    LR, TH = np.meshgrid(lr, th, indexing="ij")
    LR, TH = LR.ravel(), TH.ravel()
    logs = _iterate_log_moduli(q, LR.copy(), TH.copy(), j)
    first = logs[0]
    logC1 = float(np.min(first - lo_exp * LR))
    logC2 = float(np.max(first - hi_exp * LR))
    if isinstance(q, PolynomialMap):
        lead = math.log(abs(q.leading))
        logC1, logC2 = min(logC1, lead), max(logC2, lead)
    logC1 = min(logC1, logC2)
    passes = []
    for i, li in enumerate(logs, start=1):
        lower = logC1 * _q(i, lo_exp) + lo_exp ** i * LR
        upper = logC2 * _q(i, hi_exp) + hi_exp ** i * LR
        slack = 1e-9 * (1 + np.abs(li))
        passes.append(bool(np.all(lower <= li + slack) and np.all(li <= upper + slack)))
    per_radius_max = first.reshape(n_radii, n_angles).max(axis=1)
    measured = float(np.polyfit(lr, per_radius_max, 1)[0])
    return HolderFit(math.exp(logC1), math.exp(logC2), float(radii[0]), lo_exp, hi_exp,
                     tuple(passes), measured)


# ---------------------------------------------------------------- doubling ratio


def _loglog(t: TowerMagnitude) -> float:
    """log of a tower holding a positive ``log M``."""
    return t.log().to_float() if t.height else math.log(t.residual)


def growth_ratio_check(h: PoincareLinearizer, log_r: float, n: int, d: int, K: float = 1.0,
                       fit: Optional[HolderFit] = None, threshold_scan: bool = True) -> dict:
    """Sandwich ``log M(2^n r)/log M(r)`` between the products of per-step bounds."""
    h2 = rescaled(h, "two")
    if fit is None:
        fit = holder_bounds_fit(h2.map_, 1, K=K)
    beta, top = d / K, d * K
    lc1, lc2 = math.log(fit.C1), math.log(fit.C2)
    logs = [max_modulus(h2, log_r + i * math.log(2)) for i in range(n + 1)]
    ll = [_loglog(t) for t in logs]
    rows = []
    lower_log = upper_log = 0.0
    ok = True
    for k in range(1, n + 1):
        lm_prev = math.exp(ll[k - 1]) if ll[k - 1] < 700 else math.inf
        lower_log += math.log(beta + lc1 / lm_prev)
        upper_log += math.log(top + lc2 / lm_prev)
        ratio_log = ll[k] - ll[0]
        slack = 1e-9 * (1 + abs(ratio_log))
        good = lower_log - slack <= ratio_log <= upper_log + slack
        ok &= good
        rows.append({"i": k, "log_ratio": ratio_log, "log_lower": lower_log,
                     "log_upper": upper_log, "holds": good})
    report = {"check": "growth_ratio", "log_r": log_r, "n": n, "d": d, "K": K,
              "C1": fit.C1, "C2": fit.C2, "ratio": math.exp(ll[n] - ll[0]) if n else 1.0,
              "rows": rows, "verdict": "pass" if ok else "fail"}
    if threshold_scan:
        report["R1"] = _ratio_threshold(h2, beta, top, lc1, lc2, fit.R0)
    return report


def empirical_threshold(holds, start: int = 0, stop: int = 40, persist: int = 4) -> Optional[float]:
    """Smallest dyadic ``2^k`` where ``holds(k)`` is true for k..k+persist."""
    results: dict = {}

    def ok(k):
        if k not in results:
            results[k] = holds(k)
        return results[k]

    for k in range(start, stop):
        if all(ok(k + i) for i in range(persist + 1)):
            return 2.0 ** k
    return None


def _ratio_threshold(h2, beta, top, lc1, lc2, R0):
    cache: dict = {}

    def logM(k):
        if k not in cache:
            cache[k] = max_modulus(h2, k * math.log(2))
        return cache[k]

    def holds(k):
        a, b = logM(k), logM(k + 1)
        if a.height == 0 and a.residual <= math.log(R0):
            return False
        la, lb = _loglog(a), _loglog(b)
        lm = math.exp(la) if la < 700 else math.inf
        r = lb - la
        return math.log(beta + lc1 / lm) - 1e-12 <= r <= math.log(top + lc2 / lm) + 1e-12

    return empirical_threshold(holds, 0, 24)


# ---------------------------------------------------------------- radii sequence


@dataclass
class RadiiReport:
    mu: float
    R: float
    radii: list
    verdicts: list
    first_hold: Optional[int]
    ok: bool
    levels: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"check": "radii_sequence", "R": self.R, "mu": self.mu,
                "radii": [[t.height, t.residual] for t in self.radii],
                "verdicts": self.verdicts, "first_hold": self.first_hold,
                "verdict": "pass" if self.ok else "fail"}


def loglog_gain(h: PoincareLinearizer, log_x: LogR, n: int, base: float = 2.0) -> float:
    """``log log M(base^n x) - log log M(x)`` as a float.

    Computed directly while ``log log M(x)`` is small enough for the
    difference to keep precision; beyond that the linearizer is in its
    asymptotic regime and the gain is ``order * n * log(base)``.
    """
    if n == 0:
        return 0.0
    lx = log_x.to_float() if isinstance(log_x, TowerMagnitude) else float(log_x)
    if math.isfinite(lx) and lx < 1e300:
        lo = _loglog(max_modulus(h, lx))
        hi = _loglog(max_modulus(h, lx + n * math.log(base)))
        if math.isfinite(hi) and abs(lo) < 1e12:
            return hi - lo
    return valiron_order(h) * n * math.log(base)


def radii_sequence(h: PoincareLinearizer, R: float, N: int, mu: float, base: float = 2.0) -> RadiiReport:
    """``r_n = base^n M^n(R)`` and the verdicts ``M(r_n) > r_{n+1}^mu`` for n = 0..N.

    With ``X = M^n(R)`` the inequality reads
    ``log log M(base^n X) - log log M(X) > log(mu + mu (n+1) log(base) / log M(X))``,
    which keeps its precision after the towers themselves stop resolving
    factors like ``base^n`` and ``mu``.
    """
    if mu <= 1:
        raise ValueError("mu must exceed 1")
    levels = iterated_max_modulus(h, R, N + 1)
    radii = [lv.scale(base ** n) for n, lv in enumerate(levels)]
    verdicts = []
    for n in range(N + 1):
        gain = loglog_gain(h, levels[n].log(), n, base)
        logMX = levels[n + 1].log()
        tail = (n + 1) * math.log(base) / logMX.to_float()
        verdicts.append(bool(gain > math.log(mu) + math.log1p(tail)))
    first = None
    for n in range(N + 1):
        if all(verdicts[n:]):
            first = n
            break
    return RadiiReport(mu, R, radii[:N + 1], verdicts, first, first is not None, levels)


# ---------------------------------------------------------------- separating continua


def mu_threshold(d: int, K: float) -> float:
    """Smallest admissible annulus exponent: ``(log d + log K) / (log d - log K)``."""
    if not d > K >= 1:
        raise ValueError("need d > K >= 1")
    return (math.log(d) + math.log(K)) / (math.log(d) - math.log(K))


_FOUR = ndimage.generate_binary_structure(2, 1)
_EIGHT = ndimage.generate_binary_structure(2, 2)


def label_periodic(mask, connectivity: int):
    """Label ``mask`` on a grid periodic in axis 1 (the angle)."""
    structure = _FOUR if connectivity == 4 else _EIGHT
    labels, n = ndimage.label(mask, structure=structure)
    if n == 0:
        return labels, 0
    parent = np.arange(n + 1)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    rows = labels.shape[0]
    first, last = labels[:, 0], labels[:, -1]
    offsets = (0,) if connectivity == 4 else (-1, 0, 1)
    for i in range(rows):
        if not first[i]:
            continue
        for o in offsets:
            k = i + o
            if 0 <= k < rows and last[k]:
                ra, rb = find(first[i]), find(last[k])
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(a) for a in range(n + 1)])
    _, remap = np.unique(roots, return_inverse=True)
    out = remap[labels]
    return out, int(out.max())


def _wrap_dilate(region: np.ndarray) -> np.ndarray:
    """8-neighbour dilation, periodic in the angle."""
    padded = np.concatenate([region[:, -1:], region, region[:, :1]], axis=1)
    grown = ndimage.binary_dilation(padded, structure=_EIGHT)
    return grown[:, 1:-1]


def separating_loop(above: np.ndarray) -> Optional[np.ndarray]:
    """Cells of a 4-connected component of ``above`` separating the first row from the last.

    Returns the component cells 8-adjacent to the region it encloses (the
    inner boundary), or None. A component separates when no 8-connected
    path of the complement joins the inner and outer rows.
    """
    labels, n = label_periodic(above, 4)
    if n == 0:
        return None
    counts = np.bincount(labels.ravel(), minlength=n + 1)
    for lab in np.argsort(-counts[1:], kind="stable") + 1:
        comp = labels == lab
        if not comp.any(axis=0).all():
            continue
        rest, _ = label_periodic(~comp, 8)
        inner = set(np.unique(rest[0]).tolist()) - {0}
        outer = set(np.unique(rest[-1]).tolist()) - {0}
        if inner & outer:
            continue
        if inner:
            loop = comp & _wrap_dilate(np.isin(rest, sorted(inner)))
        else:
            loop = np.zeros_like(comp)
            loop[0] = comp[0]
        return np.argwhere(loop)
    return None


def _bottleneck_loop(key: np.ndarray, thr: float):
    """Separating loop of ``key > t`` for the largest sampled ``t >= thr``."""
    loop = separating_loop(key > thr)
    if loop is None:
        return None, thr
    vals = np.unique(key[np.isfinite(key) & (key > thr)])
    lo, hi = 0, len(vals) - 1          # invariant: key > vals[lo-1] separates (vals[-1] := thr)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if separating_loop(key > vals[mid - 1]) is not None:
            lo = mid
        else:
            hi = mid - 1
    t = vals[lo - 1] if lo > 0 else thr
    return separating_loop(key > t), t


@dataclass
class Continuum:
    """A separating loop of grid cells on a polar grid."""

    log_r: float
    mu: float
    cells: np.ndarray            # (k, 2) radial and angular indices
    log_radius_min: float
    log_radius_max: float
    min_key: float               # log log of min |L| over the loop samples
    grid: tuple

    @property
    def log_min_modulus(self) -> TowerMagnitude:
        return TowerMagnitude.from_log(self.min_key)

    def to_json(self) -> dict:
        return {"log_r": self.log_r, "mu": self.mu, "cells": int(len(self.cells)),
                "log_radius_min": self.log_radius_min, "log_radius_max": self.log_radius_max,
                "loglog_min_modulus": self.min_key, "grid": list(self.grid)}


@dataclass
class ContinuumResult:
    continuum: Optional[Continuum]
    log_min_modulus: Optional[TowerMagnitude]
    verdict: str
    loglog_M: float
    message: str = ""
    cross_check: Optional[dict] = None

    def __iter__(self):
        return iter((self.continuum, self.log_min_modulus, self.verdict))

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "loglog_M": self.loglog_M,
               "continuum": self.continuum.to_json() if self.continuum else None,
               "message": self.message}
        if self.cross_check is not None:
            out["cross_check"] = self.cross_check
        return out


def annulus_keys(h: PoincareLinearizer, log_r: float, mu: float, grid):
    """``log log |L|`` at cell centres of a polar grid over ``A(r, r^mu)``.

    Cells where ``|L| <= 1`` get ``-inf``. Returns ``(keys, radial edges)``.
    """
    nr, nt = grid
    edges = np.linspace(log_r, mu * log_r, nr + 1)
    lr = 0.5 * (edges[:-1] + edges[1:])
    th = 2 * math.pi * (np.arange(nt) + 0.5) / nt
    LR, TH = np.meshgrid(lr, th, indexing="ij")
    vl, _, llm, _, _ = h.eval_lp_arrays(LR.ravel(), TH.ravel())
    key = np.where(vl > 0, llm, -np.inf)
    return np.nan_to_num(key, nan=-np.inf).reshape(nr, nt), edges


def min_modulus_continuum(h: PoincareLinearizer, log_r: LogR, mu: float, grid=(512, 1024),
                          d: Optional[int] = None, K: float = 1.0, maximize: bool = False,
                          cross_check: bool = False) -> ContinuumResult:
    """Search ``A(r, r^mu)`` for a continuum on which ``|L| > M(r, L)``.

    The super-level set uses 4-connectivity and its complement 8-connectivity.
    With ``maximize`` the threshold is raised to the largest sampled value that
    still separates, which maximizes the minimum modulus on the loop.
    With ``cross_check`` the pullback construction is run as well.
    """
    d = h.map_.degree if d is None else d
    floor = mu_threshold(d, K) if K > 1 else 1.0
    if mu <= floor:
        raise ValueError(f"mu={mu} must exceed the threshold {floor}")
    if isinstance(log_r, TowerMagnitude):
        lr = log_r.to_float()
        if not (math.isfinite(lr) and lr < 1e300):
            return ContinuumResult(None, None, "inconclusive", math.inf,
                                   "log r is beyond float range; no grid can be placed")
        log_r = lr
    logM = max_modulus(h, log_r)
    if logM.height == 0 and logM.residual <= 0:
        raise ValueError("M(r, L) <= 1; choose a larger r")
    thr = _loglog(logM)
    key, edges = annulus_keys(h, log_r, mu, grid)
    if maximize:
        loop, _ = _bottleneck_loop(key, thr)
    else:
        loop = separating_loop(key > thr)
    check = pullback_continuum(h, log_r, mu) if cross_check else None
    if loop is None:
        return ContinuumResult(None, None, "inconclusive", thr,
                               "no separating component at this resolution; refine the grid",
                               check)
    kk = key[loop[:, 0], loop[:, 1]]
    cont = Continuum(float(log_r), mu, loop, float(edges[loop[:, 0].min()]),
                     float(edges[loop[:, 0].max() + 1]), float(kk.min()), tuple(grid))
    verdict = "pass" if cont.min_key > thr else "fail"
    return ContinuumResult(cont, cont.log_min_modulus, verdict, thr, "", check)


def _green_keys(p: PolynomialMap, z: np.ndarray, steps: int = 4000, escape: float = 1e8):
    """Escape rate ``log|p^k(z)| / d^k`` at first escape (0 for orbits that stay)."""
    z = np.array(z, dtype=complex)
    out = np.zeros(z.shape)
    alive = np.ones(z.shape, dtype=bool)
    d = p.degree
    for k in range(1, steps + 1):
        z[alive] = p(z[alive])
        esc = alive & (np.abs(z) > escape)
        out[esc] = np.exp(np.log(np.log(np.abs(z[esc]))) - k * math.log(d))
        alive &= ~esc
        if not alive.any():
            break
    return out


def pullback_continuum(h: PoincareLinearizer, log_r: float, mu: float,
                       grid=(128, 256)) -> dict:
    """Cross-check: scale a pulled-back escaping loop around ``x0`` into ``A(r, r^mu)``.

    A loop ``gamma`` around the fixed point inside the injectivity disc is
    taken from the escaping set of the map (bottleneck super-level loop of
    the escape rate), pulled back by the local inverse, multiplied by the
    largest power of the scale that keeps it inside the annulus, and its
    minimum modulus is read off the forward orbit of ``gamma``.
    """
    x0 = h.fixed_point_.point
    delta = h.injectivity_radius_
    nr, nt = grid
    edges = np.linspace(math.log(delta / 8), math.log(delta), nr + 1)
    lr = 0.5 * (edges[:-1] + edges[1:])
    th = 2 * math.pi * (np.arange(nt) + 0.5) / nt
    Z = x0 + np.exp(lr[:, None] + 1j * th[None, :])
    G = _green_keys(h.map_, Z.ravel()).reshape(nr, nt)
    G = np.where(G > 0, G, -np.inf)
    loop, t = _bottleneck_loop(G, 0.0)
    if loop is None:
        return {"verdict": "inconclusive", "message": "no escaping loop around the fixed point"}
    gamma = Z[loop[:, 0], loop[:, 1]]
    pre = [h._newton_inverse(w, w - x0) for w in gamma]
    if any(z is None for z in pre):
        return {"verdict": "inconclusive", "message": "local inverse failed on the loop"}
    lg = np.log(np.abs(np.array(pre, dtype=complex)))
    lam_log = math.log(abs(h.core_scale_))
    lrc = h.radial_exponent_ * log_r
    ell = math.floor((mu * lrc - lg.max()) / lam_log)
    if ell < 0 or lg.min() + ell * lam_log < lrc:
        return {"verdict": "inconclusive", "message": "scaled loop does not fit the annulus"}
    # |L| on the scaled loop is |f^ell| on gamma (step map in core coordinates)
    _, _, llm, _, _ = h._push_forward(gamma, np.full(gamma.shape, float(ell)))
    llm = np.nan_to_num(llm, nan=-np.inf)
    thr = _loglog(max_modulus(h, log_r))
    m = float(llm.min())
    return {"verdict": "pass" if m > thr else "fail", "steps": int(ell),
            "loop_points": int(len(gamma)), "escape_rate_level": float(t),
            "loglog_min_modulus": m, "loglog_M": thr}


def continuum_threshold(h: PoincareLinearizer, mu: float, grid=(256, 512), k_max: int = 128,
                        persist: int = 4) -> Optional[float]:
    """Empirical radius beyond which separating continua keep being found (dyadic ``r = 2^k``)."""
    def holds(k):
        return min_modulus_continuum(h, k * math.log(2), mu, grid).verdict == "pass"
    return empirical_threshold(holds, 1, k_max, persist)


# ---------------------------------------------------------------- series output


def growth_series(h: PoincareLinearizer, log_radii: Sequence[float]) -> list[GrowthRecord]:
    return [max_modulus_record(h, float(lr)) for lr in log_radii]
