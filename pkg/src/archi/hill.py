"""Fundamental solutions of the edge equation ``-y'' + q y = lam y``.

``C`` and ``S`` solve the equation with ``(C, C')(0) = (1, 0)`` and
``(S, S')(0) = (0, 1)``.  Everything downstream only needs the four numbers
``C(a), S(a), C'(a), S'(a)``, i.e. the transfer matrix of the edge.

Integration is carried out in extended precision (``numpy.longdouble``) and
the results are kept in that precision.  At strongly negative ``lam`` the
entries grow like ``exp(a sqrt(-lam))`` and the Wronskian ``C S' - S C' = 1``
would otherwise be lost to float64 rounding of the entries themselves.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp

from .potentials import Potential, check_even

LD = np.longdouble
WRONSKIAN_TOL = 1e-8
_SERIES_CUTOFF = 1e-2
_CHUNK_ELEMENTS = 1 << 20


class SolverError(ArithmeticError):
    """Non-finite input or output, or a failed adaptive integration."""


class PreconditionError(ValueError):
    pass


class EvennessWarning(UserWarning):
    pass


class Method(str, Enum):
    AUTO = "auto"
    CLOSED_FORM = "closed-form"
    RK4 = "rk4"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class SolverConfig:
    """How to compute the transfer matrix.

    ``auto`` picks the exact piecewise closed form when the potential is
    piecewise constant (zero included) and fixed-step RK4 otherwise.
    """

    method: Method = Method.AUTO
    step_count: int = 4096
    tolerance: float = 1e-11

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.method in (Method.RK4, Method.ADAPTIVE) and self.step_count < 16:
            raise ValueError("step_count must be at least 16 for integrating methods")
        if self.step_count < 1:
            raise ValueError("step_count must be positive")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")

    def resolve(self, q: Potential) -> Method:
        if self.method is Method.AUTO:
            return Method.CLOSED_FORM if q.pieces() is not None else Method.RK4
        if self.method is Method.CLOSED_FORM and q.pieces() is None:
            raise ValueError(f"closed form needs a piecewise-constant potential, got {q.kind}")
        return self.method


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class EdgeBasis:
    """``C(a), S(a), C'(a), S'(a)`` for one edge at spectral parameter ``lam``."""

    c: LD
    s: LD
    cp: LD
    sp: LD
    lam: float = float("nan")
    a: float = float("nan")

    @property
    def wronskian(self) -> float:
        return float(LD(self.c) * LD(self.sp) - LD(self.s) * LD(self.cp))

    @property
    def wronskian_residual(self) -> float:
        return abs(float(LD(self.c) * LD(self.sp) - LD(self.s) * LD(self.cp) - 1))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return float(self.c), float(self.s), float(self.cp), float(self.sp)


# -- 2x2 matrix helpers on tuples of arrays (m00, m01, m10, m11) -----------

def _mm(x, y):
    return (x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3],
            x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3])


def _tree_product(m):
    """Ordered product ``M[n-1] @ ... @ M[0]`` along axis 0 by pairwise reduction."""
    while m[0].shape[0] > 1:
        n = m[0].shape[0]
        tail = None
        if n % 2:
            tail = tuple(e[-1:] for e in m)
            m = tuple(e[:-1] for e in m)
        m = _mm(tuple(e[1::2] for e in m), tuple(e[0::2] for e in m))
        if tail is not None:
            m = tuple(np.concatenate([e, t]) for e, t in zip(m, tail))
    return tuple(e[0] for e in m)


def _series_cs(z):
    """``sum (-z)^k/(2k)!`` and ``sum (-z)^k/(2k+1)!`` for small ``|z|``."""
    cos_like = np.zeros_like(z)
    sinc_like = np.zeros_like(z)
    term = np.ones_like(z)
    for k in range(10):
        cos_like = cos_like + term / math.factorial(2 * k)
        sinc_like = sinc_like + term / math.factorial(2 * k + 1)
        term = term * (-z)
    return cos_like, sinc_like


def _piece_transfer(length, value, lam):
    """Exact transfer matrix of a constant-potential segment, vectorised over lam."""
    w = lam - LD(value)
    L = LD(length)
    z = w * L * L
    small = np.abs(z) < _SERIES_CUTOFF
    pos = (w > 0) & ~small
    neg = (w < 0) & ~small
    c = np.empty_like(w)
    s = np.empty_like(w)
    cp = np.empty_like(w)
    if np.any(small):
        cl, sl = _series_cs(z[small])
        c[small] = cl
        s[small] = L * sl
        cp[small] = -w[small] * L * sl
    if np.any(pos):
        r = np.sqrt(w[pos])
        c[pos] = np.cos(r * L)
        s[pos] = np.sin(r * L) / r
        cp[pos] = -r * np.sin(r * L)
    if np.any(neg):
        k = np.sqrt(-w[neg])
        c[neg] = np.cosh(k * L)
        s[neg] = np.sinh(k * L) / k
        cp[neg] = k * np.sinh(k * L)
    return c, s, cp, c.copy()


def _closed_form(q: Potential, lam, x_end):
    acc = None
    pos = 0.0
    for length, value in q.pieces():
        if pos >= x_end:
            break
        seg = min(length, x_end - pos)
        c, s, cp, sp = _piece_transfer(seg, value, lam)
        t = (c, s, cp, sp)
        acc = t if acc is None else _mm(t, acc)
        pos += length
    c, s, cp, sp = acc
    return c, s, cp, sp


def _rk4_nodes(q: Potential, x_end: float, n_steps: int):
    """Step starts and widths, aligned so no step straddles a breakpoint."""
    cuts = [0.0] + [b for b in q.breakpoints() if 0.0 < b < x_end] + [x_end]
    starts, widths = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        n = max(1, int(round(n_steps * (hi - lo) / x_end)))
        h = (hi - lo) / n
        starts.append(lo + h * np.arange(n))
        widths.append(np.full(n, h))
    return np.concatenate(starts), np.concatenate(widths)


def _rk4(q: Potential, lam, x_end, n_steps):
    x0, h = _rk4_nodes(q, x_end, n_steps)
    hi = np.minimum(x0 + h, x_end)
    q0 = q._values(x0).astype(LD)
    qm = q._values(x0 + h / 2).astype(LD)
    q1 = q._values(np.nextafter(hi, x0)).astype(LD)  # left limit at breakpoints
    hl = h.astype(LD)
    out = [np.empty_like(lam) for _ in range(4)]
    chunk = max(1, _CHUNK_ELEMENTS // len(x0))
    for start in range(0, lam.size, chunk):
        sl = slice(start, start + chunk)
        lm = lam[sl][None, :]
        H = hl[:, None]
        w0 = q0[:, None] - lm
        wm = qm[:, None] - lm
        w1 = q1[:, None] - lm
        one = np.ones_like(w0)
        zero_ = np.zeros_like(w0)
        ident = (one, zero_, zero_, one)
        A0 = (zero_, one, w0, zero_)
        Am = (zero_, one, wm, zero_)
        A1 = (zero_, one, w1, zero_)

        def axpy(alpha, x, y):
            return tuple(alpha * xe + ye for xe, ye in zip(x, y))

        k1 = A0
        k2 = _mm(Am, axpy(H / 2, k1, ident))
        k3 = _mm(Am, axpy(H / 2, k2, ident))
        k4 = _mm(A1, axpy(H, k3, ident))
        step = tuple(i + H / 6 * (a + 2 * b + 2 * c + d)
                     for i, a, b, c, d in zip(ident, k1, k2, k3, k4))
        prod = _tree_product(step)
        # transfer matrix [[C, S], [C', S']]
        for dst, src in zip(out, prod):
            dst[sl] = src
    return out[0], out[1], out[2], out[3]


def _adaptive(q: Potential, lam, x_end, tol):
    out = np.empty((4, lam.size), dtype=LD)
    for i, lm in enumerate(lam.astype(float)):
        def rhs(x, y, lm=lm):
            w = float(q._values(np.asarray(min(max(x, 0.0), q.a)))) - lm
            return [y[1], w * y[0], y[3], w * y[2]]

        sol = solve_ivp(rhs, (0.0, x_end), [1.0, 0.0, 0.0, 1.0], method="DOP853",
                        rtol=tol, atol=tol * 1e-3)
        if not sol.success:
            raise SolverError(f"adaptive integration failed at lam={lm}: {sol.message}")
        cc, ccp, ss, ssp = sol.y[:, -1]
        out[:, i] = (cc, ss, ccp, ssp)
    return out[0], out[1], out[2], out[3]


def basis_arrays(q: Potential, lam, cfg: SolverConfig = DEFAULT_CONFIG, x=None):
    """Vectorised transfer-matrix entries ``(C, S, C', S')`` at ``x`` (default ``a``).

    Returns four ``longdouble`` arrays shaped like ``lam``.
    """
    lam_arr = np.asarray(lam, dtype=LD)
    shape = lam_arr.shape
    flat = np.atleast_1d(lam_arr).ravel()
    if not np.all(np.isfinite(flat)):
        raise SolverError("spectral parameter must be finite")
    x_end = q.a if x is None else float(x)
    if not 0.0 < x_end <= q.a:
        raise ValueError(f"endpoint must lie in (0, {q.a}]")
    method = cfg.resolve(q)
    if method is Method.CLOSED_FORM:
        res = _closed_form(q, flat, x_end)
    elif method is Method.RK4:
        res = _rk4(q, flat, x_end, cfg.step_count)
    else:
        res = _adaptive(q, flat, x_end, cfg.tolerance)
    res = tuple(np.asarray(r, dtype=LD).reshape(shape) for r in res)
    if not all(np.all(np.isfinite(r)) for r in res):
        bad = flat[~np.isfinite(np.asarray(res[0], dtype=LD).ravel())]
        raise SolverError(f"non-finite basis values (method={method.value}, lam={bad[:5]})")
    return res


def solve_basis(q: Potential, lam: float, cfg: SolverConfig = DEFAULT_CONFIG,
                x=None) -> EdgeBasis:
    if not np.isfinite(lam):
        raise SolverError(f"spectral parameter must be finite, got {lam!r}")
    c, s, cp, sp = basis_arrays(q, np.asarray([lam], dtype=LD), cfg, x)
    return EdgeBasis(c[0], s[0], cp[0], sp[0], lam=float(lam),
                     a=q.a if x is None else float(x))


def phi(q: Potential, lam, cfg: SolverConfig = DEFAULT_CONFIG):
    """Half Hill discriminant ``S'(a, lam)`` (equal to ``C(a, lam)`` for even ``q``).

    Accepts scalars or arrays.  Warns with ``EvennessWarning`` when ``q`` is not
    even, since the value then no longer governs the band structure.
    """
    if not check_even(q):
        warnings.warn("phi of a non-even potential is not a discriminant", EvennessWarning,
                      stacklevel=2)
    sp = basis_arrays(q, lam, cfg)[3]
    return float(sp) if np.ndim(lam) == 0 else sp


IDENTITY_KEYS = (
    "C(a)=2C(a/2)S'(a/2)-1",
    "C(a)=1+2S(a/2)C'(a/2)",
    "S(a)=2S(a/2)S'(a/2)",
    "C'(a)=2C(a/2)C'(a/2)",
    "S'(a)=C(a)",
)
# Kept for comparison: fails already for q = 0, where the right side is C(a) + 1.
WRONG_DERIVATIVE_KEY = "C'(a)=2C(a/2)S'(a/2)"


@dataclass(frozen=True)
class IdentityReport:
    lam: float
    residuals: dict = field(default_factory=dict)

    def max_residual(self, keys=IDENTITY_KEYS) -> float:
        return max(abs(self.residuals[k]) for k in keys)


def half_identities(q: Potential, lam: float, cfg: SolverConfig = DEFAULT_CONFIG) -> IdentityReport:
    """Residuals of the half-edge doubling identities valid for even potentials."""
    if not check_even(q):
        raise PreconditionError("doubling identities require an even potential")
    full = solve_basis(q, lam, cfg)
    half = solve_basis(q, lam, cfg, x=q.a / 2)
    C, S, Cp, Sp = (LD(v) for v in (full.c, full.s, full.cp, full.sp))
    c, s, cp, sp = (LD(v) for v in (half.c, half.s, half.cp, half.sp))
    res = {
        IDENTITY_KEYS[0]: C - (2 * c * sp - 1),
        IDENTITY_KEYS[1]: C - (1 + 2 * s * cp),
        IDENTITY_KEYS[2]: S - 2 * s * sp,
        IDENTITY_KEYS[3]: Cp - 2 * c * cp,
        IDENTITY_KEYS[4]: Sp - C,
        WRONG_DERIVATIVE_KEY: Cp - 2 * c * sp,
    }
    return IdentityReport(lam=float(lam), residuals={k: float(v) for k, v in res.items()})
