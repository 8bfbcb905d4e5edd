"""Bands, flat bands and per-quasimomentum eigenvalues for identical even edges.

Everything reduces to the scalar functions ``phi(lam) = S'(a, lam)`` and
``S(a, lam)``, sampled once per potential on a ``SpectralGrid``.  The grid is
augmented with the local extrema of ``phi`` so that ``phi`` is monotone on
every cell; level sets ``phi = v`` are then found by sign changes plus a
vectorised bisection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .dispersion import polynomial_coefficients
from .hill import DEFAULT_CONFIG, PreconditionError, SolverConfig, basis_arrays
from .potentials import Potential, check_even
from .tiling import Quasimomentum, Tiling

LAMBDA_GRID = 4000
ROOT_TOL = 1e-10
MICRO_GAP = 1e-9
TANGENT_TOL = 1e-11
ETA = math.acos(-13.0 / 20.0)
ETA_NOMINAL = math.acos(-3.0 / 5.0)
DIRICHLET = "dirichlet"
FLAT_BAND = "flat-band"

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Band:
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo) + 0.0)
        object.__setattr__(self, "hi", float(self.hi) + 0.0)
        if not self.lo <= self.hi:
            raise ValueError(f"band with lo={self.lo} > hi={self.hi}")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, lam: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= lam <= self.hi + tol


@dataclass(frozen=True)
class PointEigenvalue:
    lam: float
    tag: str
    residual: float


@dataclass
class SpectrumReport:
    tiling: Tiling
    ac_bands: list
    point_eigenvalues: list
    lambda_max: float
    grid: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"tiling": self.tiling.slug, "lambda_max": self.lambda_max,
                "ac_bands": [[b.lo, b.hi] for b in self.ac_bands],
                "point_eigenvalues": [{"lambda": p.lam, "tag": p.tag, "residual": p.residual}
                                      for p in self.point_eigenvalues],
                "grid": self.grid}


def _require_even(q: Potential):
    if not check_even(q):
        raise PreconditionError("band computations need an even potential")


def lambda_floor(q: Potential) -> float:
    return min(0.0, float(q.minimum()) - 1.0)


def bisect(func, lo, hi, target, tol: float = ROOT_TOL, max_iter: int = 200) -> np.ndarray:
    """Vectorised bisection for ``func(x) = target`` on brackets ``[lo, hi]``."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    target = np.broadcast_to(np.asarray(target, dtype=float), lo.shape).copy()
    if lo.size == 0:
        return lo
    f_lo = func(lo) - target
    for _ in range(max_iter):
        active = (hi - lo) > tol
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        mid = 0.5 * (lo[idx] + hi[idx])
        f_mid = func(mid) - target[idx]
        left = np.sign(f_mid) == np.sign(f_lo[idx])
        lo[idx[left]] = mid[left]
        f_lo[idx[left]] = f_mid[left]
        hi[idx[~left]] = mid[~left]
    return 0.5 * (lo + hi)


def _golden_extremum(func, lo, hi, sign, iters: int = 60):
    """Locate maxima (sign=+1) or minima (sign=-1) of ``func`` inside each bracket."""
    a, b = np.array(lo, float), np.array(hi, float)
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = sign * func(x1), sign * func(x2)
    for _ in range(iters):
        left = f1 >= f2
        b = np.where(left, x2, b)
        a = np.where(left, a, x1)
        keep_x, keep_f = np.where(left, x1, x2), np.where(left, f1, f2)
        new = np.where(left, b - _GOLDEN * (b - a), a + _GOLDEN * (b - a))
        f_new = sign * func(new)
        x1, f1 = np.where(left, new, keep_x), np.where(left, f_new, keep_f)
        x2, f2 = np.where(left, keep_x, new), np.where(left, keep_f, f_new)
    return 0.5 * (a + b)


def _refine_vertex(func, x, h0):
    """Parabolic-vertex steps at shrinking spacing; golden search alone stalls
    around sqrt(machine eps) because the function is flat near an extremum."""
    x = np.array(x, float)
    for h in (h0, h0 / 10, h0 / 100, h0 / 1000):
        fm, f0, fp = func(x - h), func(x), func(x + h)
        curv = fp - 2 * f0 + fm
        with np.errstate(divide="ignore", invalid="ignore"):
            shift = np.asarray(-h * (fp - fm) / (2 * curv), dtype=float)
        ok = np.isfinite(shift) & (np.abs(shift) <= h) & (curv != 0)
        x = np.where(ok, x + np.where(ok, shift, 0.0), x)
    return x


class SpectralGrid:
    """Samples of ``phi`` and ``S`` on ``[lo, hi]`` plus the extrema of ``phi``."""

    def __init__(self, q: Potential, lo: float, hi: float, n: int = LAMBDA_GRID,
                 cfg: SolverConfig = DEFAULT_CONFIG):
        if n < 2:
            raise ValueError("lambda grid needs at least 2 points")
        if not hi > lo:
            raise ValueError("empty spectral window")
        self.q, self.cfg, self.lo, self.hi, self.n = q, cfg, float(lo), float(hi), int(n)
        lam = np.linspace(self.lo, self.hi, self.n)
        _, s, _, sp = basis_arrays(q, lam, cfg)
        phi = np.asarray(sp, dtype=float)
        d = np.diff(phi)
        turn = np.nonzero(d[:-1] * d[1:] < 0)[0] + 1
        ext = np.empty(0)
        if turn.size:
            sign = np.where(d[turn - 1] > 0, 1.0, -1.0)
            ext = np.empty(turn.size)
            for sg in (1.0, -1.0):
                sel = sign == sg
                if sel.any():
                    ext[sel] = _golden_extremum(self.phi, lam[turn[sel] - 1], lam[turn[sel] + 1], sg)
            ext = _refine_vertex(self._phi_ext, ext, lam[1] - lam[0])
        self.extrema = np.sort(ext)
        if ext.size:
            _, s_e, _, sp_e = basis_arrays(q, self.extrema, cfg)
            lam = np.concatenate([lam, self.extrema])
            order = np.argsort(lam, kind="stable")
            self.lam = lam[order]
            self.phi_values = np.concatenate([phi, np.asarray(sp_e, float)])[order]
            self.s_values = np.concatenate([np.asarray(s, float), np.asarray(s_e, float)])[order]
        else:
            self.lam, self.phi_values, self.s_values = lam, phi, np.asarray(s, float)
        self.extremum_values = (self.phi(self.extrema) if self.extrema.size else np.empty(0))

    def _phi_ext(self, lam):
        return basis_arrays(self.q, np.asarray(lam, float), self.cfg)[3]

    def phi(self, lam) -> np.ndarray:
        return np.asarray(basis_arrays(self.q, np.asarray(lam, float), self.cfg)[3], dtype=float)

    def s(self, lam) -> np.ndarray:
        return np.asarray(basis_arrays(self.q, np.asarray(lam, float), self.cfg)[1], dtype=float)

    def level_set(self, values, tol: float = ROOT_TOL) -> list[np.ndarray]:
        """For each ``v`` in ``values`` the sorted solutions of ``phi(lam) = v``."""
        values = np.atleast_1d(np.asarray(values, dtype=float))
        f = self.phi_values[None, :] - values[:, None]
        lo_i, cell = np.nonzero((f[:, :-1] * f[:, 1:] < 0) | (f[:, :-1] == 0))
        roots = bisect(self.phi, self.lam[cell], self.lam[cell + 1], values[lo_i], tol)
        at_end = np.nonzero(f[:, -1] == 0)[0]
        out = [list(roots[lo_i == k]) for k in range(values.size)]
        for k in at_end:
            out[k].append(self.hi)
        out = [np.array(r) for r in out]
        if self.extrema.size:
            # Tangential contact: phi touches v at an extremum.  Rounding may
            # split the double root into a close pair of crossings in the two
            # neighbouring cells; both are replaced by the extremum itself.
            close = np.abs(self.extremum_values[None, :] - values[:, None]) <= TANGENT_TOL
            for k, j in zip(*np.nonzero(close)):
                x = self.extrema[j]
                i = int(np.searchsorted(self.lam, x))
                left = self.lam[max(i - 1, 0)]
                right = self.lam[min(i + 1, self.lam.size - 1)]
                r = out[k]
                out[k] = np.append(r[(r < left) | (r > right)], x)
        return [_dedupe(r) for r in out]

    def dirichlet_roots(self, tol: float = ROOT_TOL) -> np.ndarray:
        s = self.s_values
        cell = np.nonzero((s[:-1] * s[1:] < 0) | (s[:-1] == 0))[0]
        roots = bisect(self.s, self.lam[cell], self.lam[cell + 1], 0.0, tol)
        if s[-1] == 0:
            roots = np.append(roots, self.hi)
        return _dedupe(roots)


def _dedupe(x: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    x = np.sort(np.asarray(x, dtype=float))
    if x.size < 2:
        return x
    groups = np.split(x, np.nonzero(np.diff(x) > tol)[0] + 1)
    return np.array([g.mean() for g in groups])


@lru_cache(maxsize=32)
def spectral_grid(q: Potential, lo: float, hi: float, n: int = LAMBDA_GRID,
                  cfg: SolverConfig = DEFAULT_CONFIG) -> SpectralGrid:
    """Cached ``SpectralGrid``; potentials and configs are immutable and hashable."""
    return SpectralGrid(q, lo, hi, n, cfg)


def _grid_for(q, lambda_max, cfg, lambda_grid) -> SpectralGrid:
    _require_even(q)
    if not lambda_max > 0:
        raise ValueError("lambda_max must be positive")
    return spectral_grid(q, lambda_floor(q), float(lambda_max), int(lambda_grid), cfg)


def _merge(intervals, gap: float = MICRO_GAP) -> list[Band]:
    bands: list[Band] = []
    for lo, hi in sorted(intervals):
        if bands and lo - bands[-1].hi <= gap:
            bands[-1] = Band(bands[-1].lo, max(bands[-1].hi, hi))
        else:
            bands.append(Band(lo, hi))
    return bands


def ac_bands(tiling, q: Potential, lambda_max: float, cfg: SolverConfig = DEFAULT_CONFIG,
             lambda_grid: int = LAMBDA_GRID) -> list[Band]:
    """Disjoint sorted bands ``{lam <= lambda_max : m <= phi(lam) <= 1}``."""
    tiling = Tiling.from_name(tiling)
    grid = _grid_for(q, lambda_max, cfg, lambda_grid)
    m = tiling.ac_lower_bound
    cuts = np.concatenate([[grid.lo, grid.hi], *grid.level_set([m, 1.0])])
    cuts = np.unique(cuts)
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    inside = np.zeros(mids.shape, dtype=bool)
    if mids.size:
        pm = grid.phi(mids)
        inside = (pm >= m) & (pm <= 1.0)
    return _merge([(cuts[i], cuts[i + 1]) for i in np.nonzero(inside)[0]])


def point_spectrum(tiling, q: Potential, lambda_max: float, cfg: SolverConfig = DEFAULT_CONFIG,
                   lambda_grid: int = LAMBDA_GRID) -> list[PointEigenvalue]:
    """Flat-band eigenvalues: ``S(a) = 0`` always, ``2S'(a) + 1 = 0`` for trihexagonal."""
    tiling = Tiling.from_name(tiling)
    grid = _grid_for(q, lambda_max, cfg, lambda_grid)
    out = []
    d = grid.dirichlet_roots()
    if d.size:
        out += [PointEigenvalue(float(x), DIRICHLET, abs(float(r)))
                for x, r in zip(d, grid.s(d))]
    if tiling is Tiling.TRIHEXAGONAL:
        f = grid.level_set([-0.5])[0]
        if f.size:
            out += [PointEigenvalue(float(x), FLAT_BAND, abs(float(2 * r + 1)))
                    for x, r in zip(f, grid.phi(f))]
    return sorted(out, key=lambda p: p.lam)


def polynomial_roots(tiling, theta, imag_tol: float = 1e-7) -> np.ndarray:
    """Real roots in ``S'`` of the polynomial factor at ``theta``.

    A nearly double real root can come back from ``numpy.roots`` as a complex
    pair with a tiny imaginary part; its real part is kept once.
    """
    r = np.roots(polynomial_coefficients(tiling, theta))
    real = r[np.abs(r.imag) <= imag_tol].real
    return _dedupe(real, 1e-12)


def band_functions(tiling, q: Potential, theta, lambda_max: float,
                   cfg: SolverConfig = DEFAULT_CONFIG, lambda_grid: int = LAMBDA_GRID) -> np.ndarray:
    """Sorted zero set in ``lam`` of the reduced relation at fixed ``theta``."""
    tiling = Tiling.from_name(tiling)
    theta = theta if isinstance(theta, Quasimomentum) else Quasimomentum(*theta)
    grid = _grid_for(q, lambda_max, cfg, lambda_grid)
    parts = [grid.dirichlet_roots(), *grid.level_set(polynomial_roots(tiling, theta))]
    roots = np.concatenate(parts)
    return _dedupe(roots[roots >= grid.lo])


def theta_grid(n: int) -> np.ndarray:
    """``n x n`` quasimomenta covering ``[-pi, pi]^2``; ``n = 1`` is just the origin."""
    if n < 1:
        raise ValueError("theta grid needs n >= 1")
    axis = np.zeros(1) if n == 1 else np.linspace(-math.pi, math.pi, n)
    t1, t2 = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([t1.ravel(), t2.ravel()])


@dataclass
class UnionReport:
    tiling: str
    theta_grid: int
    soundness: float
    coverage: float
    resolution_bound: float
    tolerance: float
    union_intervals: list
    reference_bands: list
    point_spectrum: list

    @property
    def passed(self) -> bool:
        return (self.soundness <= self.tolerance
                and self.coverage <= self.resolution_bound + self.tolerance)

    @property
    def discrepancy(self) -> float:
        return max(self.soundness, self.coverage)

    @property
    def gaps(self) -> list:
        iv = self.union_intervals
        return [[iv[i][1], iv[i + 1][0]] for i in range(len(iv) - 1)]

    @property
    def union_measure(self) -> float:
        return float(sum(hi - lo for lo, hi in self.union_intervals))

    @property
    def reference_measure(self) -> float:
        return float(sum(hi - lo for lo, hi in self.reference_bands))

    def to_dict(self) -> dict:
        return {"tiling": self.tiling, "theta_grid": self.theta_grid,
                "union_measure": self.union_measure,
                "reference_measure": self.reference_measure,
                "soundness": self.soundness, "coverage": self.coverage,
                "resolution_bound": self.resolution_bound, "discrepancy": self.discrepancy,
                "tolerance": self.tolerance, "passed": self.passed,
                "union_intervals": self.union_intervals, "gaps": self.gaps,
                "reference_bands": self.reference_bands, "point_spectrum": self.point_spectrum}


def _dist_to_set(x: np.ndarray, pts: np.ndarray) -> np.ndarray:
    if pts.size == 0:
        return np.full(x.shape, np.inf)
    i = np.clip(np.searchsorted(pts, x), 1, pts.size - 1) if pts.size > 1 else np.zeros(x.shape, int)
    if pts.size == 1:
        return np.abs(x - pts[0])
    return np.minimum(np.abs(x - pts[i - 1]), np.abs(x - pts[i]))


def _dist_to_bands(x: np.ndarray, bands: list[Band]) -> np.ndarray:
    d = np.full(x.shape, np.inf)
    for b in bands:
        d = np.minimum(d, np.maximum(0.0, np.maximum(b.lo - x, x - b.hi)))
    return d


def union_check(tiling, q: Potential, lambda_max: float, theta_grid_n: int = 41,
                cfg: SolverConfig = DEFAULT_CONFIG, lambda_grid: int = LAMBDA_GRID,
                samples: int = 20000, tol: float = 1e-8) -> UnionReport:
    """Compare the union of fibre spectra over a theta grid with bands plus flat bands.

    ``soundness`` is the largest distance from a computed fibre eigenvalue to
    the reference set and ``coverage`` the largest distance from a reference
    point to the nearest fibre eigenvalue.  The admissible coverage,
    ``resolution_bound``, comes from the largest gap ``g`` between the
    polynomial roots in ``S'`` collected over the grid: any band point is
    within ``g / 2`` of a sampled root in ``S'``, so its distance in ``lam``
    is at most the widest stretch over which ``phi`` moves by ``g / 2``.
    """
    tiling = Tiling.from_name(tiling)
    grid = _grid_for(q, lambda_max, cfg, lambda_grid)
    m = tiling.ac_lower_bound
    thetas = theta_grid(theta_grid_n)
    values = np.concatenate([polynomial_roots(tiling, th) for th in thetas])
    values = values[(values >= m - 1e-9) & (values <= 1 + 1e-9)]
    values = _dedupe(values, 1e-13)
    union = np.concatenate([grid.dirichlet_roots(), *grid.level_set(values)])
    union = _dedupe(union)

    bands = ac_bands(tiling, q, lambda_max, cfg, lambda_grid)
    points = point_spectrum(tiling, q, lambda_max, cfg, lambda_grid)
    p_lam = np.array(sorted(p.lam for p in points))

    soundness = 0.0
    if union.size:
        soundness = float(np.max(np.minimum(_dist_to_bands(union, bands),
                                            _dist_to_set(union, p_lam))))

    # dense sample of the reference set
    total = sum(b.width for b in bands)
    segments = [np.linspace(b.lo, b.hi, max(2, int(samples * b.width / total)) if total else 2)
                for b in bands]
    dense = np.concatenate([p_lam, *segments])
    coverage = float(np.max(_dist_to_set(dense, union))) if dense.size else 0.0

    bound = _scan_coverage(grid, segments, values, union_points=grid.dirichlet_roots(),
                           dense=dense)

    iv = _merge_union(grid, union, 2 * bound + tol, m)
    return UnionReport(tiling.slug, int(theta_grid_n), soundness, coverage, bound, tol, iv,
                       [[b.lo, b.hi] for b in bands], [float(x) for x in p_lam])


def _merge_union(grid: SpectralGrid, union: np.ndarray, reach: float, m: float) -> list:
    """Join neighbouring fibre eigenvalues into intervals.

    Two neighbours closer than ``reach`` are joined unless ``phi`` leaves
    ``[m, 1]`` somewhere between them, so a gap is never bridged no matter
    how coarse the theta grid is.
    """
    iv: list[list[float]] = []
    for x in union:
        if iv and x - iv[-1][1] <= reach:
            lo = iv[-1][1]
            inner = grid.lam[(grid.lam > lo) & (grid.lam < x)]
            f = grid.phi(np.concatenate([inner, [0.5 * (lo + x)]]))
            if np.all((f >= m - MICRO_GAP) & (f <= 1 + MICRO_GAP)):
                iv[-1][1] = float(x)
                continue
        iv.append([float(x), float(x)])
    return iv


def _scan_coverage(grid: SpectralGrid, segments, values, union_points, dense) -> float:
    """Coverage achievable from the sampled root values alone, by a dense scan.

    Each fine cell inside a band whose ``phi`` range contains a sampled value
    contributes its midpoint; the bound is the largest distance from a
    reference point to those midpoints plus one cell width.
    """
    values = np.sort(values)
    hits, width = [np.asarray(union_points, float)], 0.0
    for x in segments:
        if x.size < 2:
            continue
        f = grid.phi(x)
        lo, hi = np.minimum(f[:-1], f[1:]), np.maximum(f[:-1], f[1:])
        has = np.searchsorted(values, hi, side="right") > np.searchsorted(values, lo, side="left")
        hits.append(0.5 * (x[:-1] + x[1:])[has])
        width = max(width, float(np.max(np.diff(x))))
    pts = np.sort(np.concatenate(hits))
    return float(np.max(_dist_to_set(dense, pts))) + width if dense.size else 0.0


def q0_reference_bands(tiling, a: float = 1.0, count: int = 3,
                       lambda_max: Optional[float] = None) -> list[Band]:
    """Analytic bands of the free operator (``q = 0``) on edges of length ``a``.

    Triangular and trihexagonal: ``w = 2 pi / 3``; elongated triangular:
    ``w = arccos(-13/20)`` (``ETA``); the remaining tilings have no gaps.
    """
    tiling = Tiling.from_name(tiling)
    if count < 1:
        raise ValueError("count must be at least 1")
    if tiling.ac_lower_bound <= -1.0:
        return [Band(0.0, math.inf if lambda_max is None else float(lambda_max))]
    # phi = cos(sqrt(lam) a): bands are where the angle is within w of 2 n pi
    w = math.acos(tiling.ac_lower_bound)
    bands = [Band(0.0, (w / a) ** 2)]
    for n in range(1, count):
        bands.append(Band(((2 * n * math.pi - w) / a) ** 2, ((2 * n * math.pi + w) / a) ** 2))
    if lambda_max is not None:
        bands = [Band(b.lo, min(b.hi, lambda_max)) for b in bands if b.lo <= lambda_max]
    return bands


def spectrum_report(tiling, q: Potential, lambda_max: float, cfg: SolverConfig = DEFAULT_CONFIG,
                    lambda_grid: int = LAMBDA_GRID) -> SpectrumReport:
    tiling = Tiling.from_name(tiling)
    grid = _grid_for(q, lambda_max, cfg, lambda_grid)
    return SpectrumReport(tiling, ac_bands(tiling, q, lambda_max, cfg, lambda_grid),
                          point_spectrum(tiling, q, lambda_max, cfg, lambda_grid),
                          float(lambda_max),
                          {"lambda_min": grid.lo, "points": grid.n,
                           "extrema": int(grid.extrema.size), "root_tol": ROOT_TOL})
