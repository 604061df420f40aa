"""Fast-escaping classification, spider's-web verification, renders and
pits-effect witnesses for linearizers."""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage
from sklearn.utils.validation import check_is_fitted

from .extrange import LOG_C_NORM, LogPolarComplex, TowerMagnitude, tower_compare
from .growth import iterated_max_modulus, min_modulus_continuum
from .linearizer import PoincareLinearizer

BOUNDED, ESCAPING_SLOW, UNDETERMINED, BOUNDARY = 0, 1, 2, 3
FAST_BASE = 10
P_MAX_DEFAULT = 8
# domination rule: orbit tower height >= level height + DOMINATION_MARGIN settles the rest
DOMINATION_MARGIN = 2
MAX_TOWER_HEIGHT = 6

CODE_NAMES = {BOUNDED: "bounded_so_far", ESCAPING_SLOW: "escaping_slow",
              UNDETERMINED: "undetermined", BOUNDARY: "boundary"}


def fast_code(P: int) -> int:
    return FAST_BASE + P


def code_name(code: int) -> str:
    return f"fast_escaping({code - FAST_BASE})" if code >= FAST_BASE else CODE_NAMES[code]


def default_palette(P_max: int = P_MAX_DEFAULT) -> dict:
    pal = {BOUNDED: (0, 0, 0), ESCAPING_SLOW: (90, 90, 160), UNDETERMINED: (128, 128, 128),
           BOUNDARY: (255, 255, 255)}
    for P in range(P_max + 1):
        t = P / max(P_max, 1)
        pal[fast_code(P)] = (255, int(200 * (1 - t)) + 40, int(60 * t))
    return pal


def worker_count() -> int:
    try:
        n = int(os.environ.get("LINLAB_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


# ---------------------------------------------------------------- levels and heights


@dataclass(frozen=True)
class _Levels:
    """``M^n(R)`` as towers plus float ``log`` and ``log log`` views."""

    towers: tuple
    log: np.ndarray
    loglog: np.ndarray
    heights: np.ndarray

    @classmethod
    def build(cls, h: PoincareLinearizer, R: float, n: int) -> "_Levels":
        towers = tuple(iterated_max_modulus(h, R, n))
        log = np.array([t.log_float() for t in towers])
        loglog = np.array([t.log().log_float() if t.log_float() > 0 else -np.inf for t in towers])
        heights = np.array([t.height for t in towers])
        return cls(towers, log, loglog, heights)


def _heights(l, ll):
    """Tower heights of ``exp(l)`` (or ``exp(exp(ll))`` where ``l`` overflowed)."""
    l = np.asarray(l, float)
    ll = np.asarray(ll, float)
    h = np.where(l < LOG_C_NORM, 0, np.where(l < math.exp(LOG_C_NORM), 1, 2))
    big = np.isposinf(l)
    hb = np.where(ll < math.exp(LOG_C_NORM), 2, 3)
    return np.where(big, hb, h)


def _geq_level(l, ll, lev: _Levels, n):
    """``exp(l) >= M^n(R)`` elementwise, ``n`` an int array."""
    ln = lev.log[n]
    lln = lev.loglog[n]
    both_big = np.isposinf(l) & np.isposinf(ln)
    direct = np.where(np.isposinf(ln), False, l >= ln)
    return np.where(both_big, ll >= lln, direct)


# ---------------------------------------------------------------- classification


@dataclass
class EscapeVerdict:
    code: int
    depth_used: int
    level_trace: list = field(default_factory=list)

    @property
    def name(self) -> str:
        return code_name(self.code)

    @property
    def P(self) -> Optional[int]:
        return self.code - FAST_BASE if self.code >= FAST_BASE else None

    @property
    def fast(self) -> bool:
        return self.code >= FAST_BASE


def _orbits(h: PoincareLinearizer, z: np.ndarray, depth: int):
    """Moduli ``log|L^k(z)|`` and ``log log|L^k(z)|`` for k = 0..depth.

    Orbits stop (NaN afterwards) once a value can no longer be fed back:
    its log-modulus overflowed or its phase is unreliable.
    """
    n = z.size
    L = np.full((depth + 1, n), np.nan)
    LL = np.full((depth + 1, n), np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        lm = np.log(np.abs(z))
        arg = np.angle(z)
        L[0] = lm
        LL[0] = np.log(np.where(lm > 0, lm, np.nan))
    alive = np.ones(n, dtype=bool)
    for k in range(1, depth + 1):
        if not alive.any():
            break
        idx = np.flatnonzero(alive)
        vl, va, llm, _, rel = h.eval_lp_arrays(lm[idx], arg[idx])
        L[k, idx] = vl
        LL[k, idx] = llm
        lm[idx], arg[idx] = vl, va
        alive[idx] = rel & np.isfinite(vl)
    return L, LL, alive


def _classify_orbits(L, LL, alive, lev: _Levels, R: float, depth: int, P_max: int):
    n = L.shape[1]
    codes = np.full(n, UNDETERMINED, dtype=np.uint8)
    known = ~np.isnan(L)
    last = np.where(known.any(axis=0), depth - np.argmax(known[::-1], axis=0), 0)
    heights = _heights(L, LL)
    decided = np.zeros(n, dtype=bool)
    for P in range(min(P_max, depth - 1) + 1):
        ok = ~decided.copy()
        recorded = np.zeros(n, dtype=int)
        dominated = np.zeros(n, dtype=bool)
        for m in range(depth - P + 1):
            k = m + P
            have = known[k] & ~dominated
            geq = _geq_level(L[k], LL[k], lev, m)
            ok &= np.where(have, geq, True)
            recorded += have
            # orbit far above the level at the same index: the rest follows
            dom_now = have & geq & (heights[k] >= lev.heights[m] + DOMINATION_MARGIN)
            dom_now |= have & (heights[k] > MAX_TOWER_HEIGHT)
            dominated |= dom_now
            # an orbit cut short without domination leaves later n unverified
            ok &= ~(~known[k] & ~dominated)
        fast = ok & ((recorded >= 2) | dominated) & ~decided
        codes[fast] = fast_code(P)
        decided |= fast
    esc = max(2.0 * R, 100.0)
    finite_L = np.where(known, L, np.inf)
    bounded = (~decided) & known.all(axis=0) & np.all(finite_L <= math.log(esc), axis=0)
    codes[bounded] = BOUNDED
    out_after = np.zeros(n, dtype=bool)
    for k in range(depth + 1):
        tail = np.where(known[k:], L[k:], np.inf)
        out_after |= known[k] & np.all(tail > math.log(esc), axis=0) & (k < last)
    slow = (~decided) & (~bounded) & out_after
    codes[slow] = ESCAPING_SLOW
    return codes


def _as_complex_array(z) -> np.ndarray:
    if isinstance(z, LogPolarComplex):
        return np.array([z.to_complex()])
    return np.atleast_1d(np.asarray(z, dtype=complex)).ravel()


def fast_escape_classify(h: PoincareLinearizer, z, R: float, depth: int,
                         P_max: int = P_MAX_DEFAULT, levels: Optional[_Levels] = None) -> EscapeVerdict:
    """Smallest shift ``P <= P_max`` with ``|L^(n+P)(z)| >= M^n(R)`` for every recorded n."""
    check_is_fitted(h, "base_radius_")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    lev = levels or _Levels.build(h, R, depth)
    zz = _as_complex_array(z)[:1]
    L, LL, alive = _orbits(h, zz, depth)
    code = int(_classify_orbits(L, LL, alive, lev, R, depth, P_max)[0])
    trace = []
    for k in range(depth + 1):
        if np.isnan(L[k, 0]):
            break
        if np.isfinite(L[k, 0]):
            trace.append(TowerMagnitude.from_log(float(L[k, 0])))
        else:
            trace.append(TowerMagnitude.normalize(2, float(LL[k, 0])))
    return EscapeVerdict(code, len(trace) - 1, trace)


# ---------------------------------------------------------------- rendering


@dataclass
class PixelGrid:
    viewport: tuple              # (xmin, xmax, ymin, ymax)
    resolution: tuple            # (width, height)
    codes: np.ndarray            # uint8, shape (height, width), row 0 at ymax
    palette: dict

    def rgb(self) -> np.ndarray:
        out = np.zeros(self.codes.shape + (3,), dtype=np.uint8)
        for code, color in self.palette.items():
            out[self.codes == code] = color
        return out

    def ppm_bytes(self) -> bytes:
        w, hgt = self.resolution
        return f"P6\n{w} {hgt}\n255\n".encode() + self.rgb().tobytes()

    def palette_json(self) -> dict:
        return {"codes": {str(k): {"name": code_name(k), "rgb": list(v)}
                          for k, v in sorted(self.palette.items())},
                "viewport": list(self.viewport), "resolution": list(self.resolution)}

    def pixel_centres(self) -> np.ndarray:
        return pixel_centres(self.viewport, self.resolution)


def pixel_centres(viewport, resolution) -> np.ndarray:
    xmin, xmax, ymin, ymax = map(float, viewport)
    w, hgt = map(int, resolution)
    xs = xmin + (np.arange(w) + 0.5) * (xmax - xmin) / w
    ys = ymax - (np.arange(hgt) + 0.5) * (ymax - ymin) / hgt
    return xs[None, :] + 1j * ys[:, None]


def render_fast_escaping(h: PoincareLinearizer, viewport, resolution, R: float, depth: int,
                         P_max: int = P_MAX_DEFAULT, workers: Optional[int] = None) -> PixelGrid:
    """Per-pixel :func:`fast_escape_classify`, chunked by rows; output is independent of ``workers``."""
    check_is_fitted(h, "base_radius_")
    w, hgt = map(int, resolution)
    if w < 1 or hgt < 1:
        raise ValueError("resolution must be positive")
    xmin, xmax, ymin, ymax = map(float, viewport)
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("viewport must have positive extent")
    lev = _Levels.build(h, R, depth)
    Z = pixel_centres(viewport, resolution)
    blocks = [(i, min(i + 32, hgt)) for i in range(0, hgt, 32)]

    def run(block):
        a, b = block
        zz = Z[a:b].ravel()
        L, LL, alive = _orbits(h, zz, depth)
        return _classify_orbits(L, LL, alive, lev, R, depth, P_max).reshape(b - a, w)

    n = workers or worker_count()
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    return PixelGrid((xmin, xmax, ymin, ymax), (w, hgt), np.vstack(parts), default_palette(P_max))


def julia_boundary_render(grid: PixelGrid) -> PixelGrid:
    """Mark pixels whose 8-neighbourhood holds both fast-escaping and other codes."""
    fast = grid.codes >= FAST_BASE
    has_fast = ndimage.maximum_filter(fast.astype(np.uint8), size=3, mode="nearest") > 0
    has_other = ndimage.minimum_filter(fast.astype(np.uint8), size=3, mode="nearest") == 0
    codes = grid.codes.copy()
    codes[has_fast & has_other] = BOUNDARY
    return PixelGrid(grid.viewport, grid.resolution, codes, dict(grid.palette))


def loop_in_annulus(mask: np.ndarray, viewport, resolution, log_r_in: float, log_r_out: float) -> bool:
    """True when ``mask`` restricted to ``A(r_in, r_out)`` holds a closed pixel loop around 0."""
    Z = pixel_centres(viewport, resolution)
    with np.errstate(divide="ignore"):
        lr = np.log(np.abs(Z))
    ring = mask & (lr > log_r_in) & (lr < log_r_out)
    if not ring.any():
        return False
    free = ~ring
    labels, _ = ndimage.label(free, structure=np.ones((3, 3), dtype=bool))
    i0, j0 = np.unravel_index(np.argmin(np.abs(Z)), Z.shape)
    lab = labels[i0, j0]
    if lab == 0:
        return False
    comp = labels == lab
    touches_edge = comp[0].any() or comp[-1].any() or comp[:, 0].any() or comp[:, -1].any()
    return not touches_edge and not (comp & (lr >= log_r_out)).any()


def write_ppm(grid: PixelGrid, path: str) -> None:
    from .cli import atomic_write
    atomic_write(path, grid.ppm_bytes())
    atomic_write(os.path.splitext(path)[0] + ".palette.json",
                 json.dumps(grid.palette_json(), indent=2, sort_keys=True).encode())


def read_ppm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, hgt = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(hgt, w, 3)


# ---------------------------------------------------------------- spider's web


@dataclass
class WebReport:
    R: float
    mu: float
    domains: list
    checks: list
    verdict: str
    message: str = ""

    def to_json(self) -> dict:
        return {"R": self.R, "mu": self.mu, "domains": self.domains, "checks": self.checks,
                "verdict": self.verdict, "message": self.message}


def spiders_web_verify(h: PoincareLinearizer, R: float, mu: float, N: int,
                       grid=(512, 1024), K: float = 1.0) -> WebReport:
    """Build ``G_n`` from separating continua on ``A(r_n, r_n^mu)``, ``r_n = 2^n M^n(R)``.

    Checks per n: (a) the ball of radius ``M^n(R)`` lies inside ``G_n``;
    (b) for n < N, ``min |L|`` on ``dG_n`` exceeds ``max |x|`` on ``dG_(n+1)``.
    """
    check_is_fitted(h, "base_radius_")
    levels = iterated_max_modulus(h, R, N)
    domains, conts = [], []
    for n in range(N + 1):
        log_rn = levels[n].log().shift(n * math.log(2)) if levels[n].height else \
            TowerMagnitude.from_value(math.log(levels[n].residual) + n * math.log(2))
        res = min_modulus_continuum(h, log_rn, mu, grid, K=K, maximize=True)
        conts.append(res)
        d = {"n": n, "log_r": log_rn.to_float(), "verdict": res.verdict, "message": res.message}
        if res.continuum is not None:
            d.update(res.continuum.to_json())
        domains.append(d)
    checks = []
    for n in range(N + 1):
        c = conts[n].continuum
        flags = {"n": n, "contains_ball": None, "image_surrounds_next": None}
        if c is not None:
            flags["contains_ball"] = tower_compare(TowerMagnitude.from_value(c.log_radius_min),
                                                   levels[n].log()) >= 0 if levels[n].residual > 0 else True
            nxt = conts[n + 1].continuum if n < N else None
            if nxt is not None:
                # log m(dG_n) = exp(min_key) against log max|dG_(n+1)|
                flags["image_surrounds_next"] = bool(c.min_key > math.log(nxt.log_radius_max))
        checks.append(flags)
    missing = [d["n"] for d in domains if d["verdict"] != "pass"]
    failed = [f["n"] for f in checks
              if f["contains_ball"] is False or f["image_surrounds_next"] is False]
    if missing:
        verdict, msg = "inconclusive", f"no separating continuum for n in {missing}"
    elif failed:
        verdict, msg = "inconclusive", f"domain checks not confirmed for n in {failed}"
    else:
        verdict, msg = "pass", ""
    return WebReport(R, mu, domains, checks, verdict, msg)


# ---------------------------------------------------------------- pits effect


@dataclass
class PitsReport:
    D: float
    C: float
    points: list
    verdict: str
    message: str = ""

    def __iter__(self):
        return iter((self.points, self.verdict))

    def to_json(self) -> dict:
        return {"D": self.D, "C": self.C, "points": self.points, "verdict": self.verdict,
                "message": self.message}


def julia_bound(p, samples: int = 10_000, seed: int = 0, inflate: float = 1.05) -> float:
    """``inflate * max |x|`` over backward-orbit samples of the Julia set."""
    rng = np.random.default_rng(seed)
    coeffs = np.asarray(p.coefficients, dtype=complex)
    pts = find_repelling(p)
    x = pts
    best = abs(x)
    for _ in range(samples):
        c = coeffs.copy()
        c[0] -= x
        roots = np.roots(c[::-1])
        x = complex(roots[rng.integers(len(roots))])
        best = max(best, abs(x))
    return inflate * best


def find_repelling(p) -> complex:
    from .maps import find_fixed_points
    reps = [f for f in find_fixed_points(p) if f.repelling]
    return max(reps, key=lambda f: abs(f.multiplier)).point


def pits_effect_witness(h: PoincareLinearizer, D: float, count: int, r: float = 1.0,
                        grid=(32, 256), seed: int = 0, C: Optional[float] = None) -> PitsReport:
    """Points ``x_k`` in ``A(D^(k-1) r, D^k r)`` with ``|L(x_k)| <= C``, k = 1..count."""
    check_is_fitted(h, "base_radius_")
    if D <= 1:
        raise ValueError("D must exceed 1")
    C = julia_bound(h.map_, seed=seed) if C is None else float(C)
    target = h.fixed_point_.point
    nr, nt = grid
    points = []
    for k in range(1, count + 1):
        lo, hi = (k - 1) * math.log(D) + math.log(r), k * math.log(D) + math.log(r)
        lr = lo + (np.arange(nr) + 0.5) * (hi - lo) / nr
        th = 2 * math.pi * (np.arange(nt) + 0.5) / nt
        LR, TH = np.meshgrid(lr, th, indexing="ij")
        vl, _, _, _, _ = h.eval_lp_arrays(LR.ravel(), TH.ravel())
        i = int(np.nanargmin(vl))
        x = complex(np.exp(LR.ravel()[i] + 1j * TH.ravel()[i]))
        val = float(vl[i])
        if not val <= math.log(C):
            x = _descend(h, x, target, lo, hi)
            val = float(np.log(np.abs(h.predict(x)))) if x is not None else math.inf
        if x is None or not val <= math.log(C):
            return PitsReport(D, C, points, "inconclusive", f"no witness in annulus k={k}")
        points.append({"k": k, "re": x.real, "im": x.imag, "log_modulus": math.log(abs(x)),
                       "log_L_modulus": val})
    ratios_ok = all(math.exp(b["log_modulus"] - a["log_modulus"]) <= D * D
                    for a, b in zip(points, points[1:]))
    return PitsReport(D, C, points, "pass" if ratios_ok else "inconclusive",
                      "" if ratios_ok else "ratio bound violated")


def _descend(h: PoincareLinearizer, x: complex, target: complex, lo: float, hi: float):
    """Newton on ``L(x) = target`` from ``x`` (core coordinates), kept inside the annulus."""
    u = complex(h._to_core(x))
    for _ in range(60):
        v, dv = h._eval_core_native(np.array([u]), derivative=True)
        v, dv = complex(v[0]), complex(dv[0])
        if dv == 0 or not (np.isfinite(v) and np.isfinite(dv)):
            return None
        step = (v - target) / dv
        u = u - step
        x = complex(h._from_core(u))
        if x == 0 or not lo <= math.log(abs(x)) <= hi:
            return None
        if abs(step) <= 1e-12 * (1 + abs(u)):
            break
    return x
