"""Dispersion relations for identical edges carrying one even potential.

With every edge equal and ``q`` even, the characteristic function collapses
to ``S(a)^k * P(S'(a), theta)``: a power of ``S`` (flat bands at Dirichlet
eigenvalues) times a polynomial in ``S'`` whose coefficients are
trigonometric in the quasimomentum.  ``K`` below is
``cos(theta1/2) cos(theta2/2) cos((theta1 - theta2)/2)``, which satisfies
``|1 + e^{i theta1} + e^{i theta2}|^2 = 1 + 8K``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chardet import REDUCTION_SCALE, prefactor
from .tiling import Quasimomentum, Tiling

WITNESS_TOL = 1e-10

S_POWER = {
    Tiling.TRIANGULAR: 2,
    Tiling.ELONGATED_TRIANGULAR: 3,
    Tiling.TRUNCATED_SQUARE: 2,
    Tiling.TRIHEXAGONAL: 3,
    Tiling.SQUARE: 2,
    Tiling.HEXAGONAL: 2,
}


def _K(t1, t2):
    return np.cos(t1 / 2) * np.cos(t2 / 2) * np.cos((t1 - t2) / 2)


def polynomial_coefficients(tiling, theta) -> np.ndarray:
    """Coefficients of the polynomial factor in ``S'``, highest degree first.

    ``theta`` may hold arrays of angles; the result then has shape
    ``(degree + 1, *angles.shape)``.
    """
    tiling = Tiling.from_name(tiling)
    t1, t2 = (np.asarray(t, dtype=float) for t in theta)
    k = _K(t1, t2)
    c1, c2 = np.cos(t1), np.cos(t2)
    one = np.ones_like(k)
    zero = np.zeros_like(k)
    if tiling is Tiling.TRIANGULAR:
        coeffs = [3.0 * one, 1.0 - 4.0 * k]
    elif tiling is Tiling.ELONGATED_TRIANGULAR:
        coeffs = [25.0 * one, -20.0 * c1, 4.0 * c1 * c1 - 8.0 * k - 1.0]
    elif tiling is Tiling.TRUNCATED_SQUARE:
        coeffs = [81.0 * one, zero, -54.0 * one, -12.0 * (c1 + c2), 1.0 - 4.0 * c1 * c2]
    elif tiling is Tiling.TRIHEXAGONAL:
        # (2x + 1)(2x^2 - x - K)
        coeffs = [4.0 * one, zero, -(2.0 * k + 1.0), -k]
    elif tiling is Tiling.SQUARE:
        coeffs = [one, zero, -(np.cos(t1 / 2) * np.cos(t2 / 2)) ** 2]
    else:
        coeffs = [9.0 * one, zero, -1.0 - 8.0 * k]
    return np.array(coeffs)


def polynomial_factor(tiling, sp, theta1, theta2):
    """Vectorised polynomial factor ``P(S', theta)``."""
    if Tiling.from_name(tiling) is Tiling.TRIHEXAGONAL:
        # factored, so the flat band 2S' + 1 = 0 gives an exact zero
        sp = np.asarray(sp, dtype=float)
        return (2 * sp + 1) * (2 * sp * sp - sp - _K(np.asarray(theta1), np.asarray(theta2)))
    coeffs = polynomial_coefficients(tiling, (theta1, theta2))
    out = np.zeros(np.broadcast(coeffs[0], np.asarray(sp)).shape)
    for c in coeffs:
        out = out * sp + c
    return out


@dataclass(frozen=True)
class ReducedRelation:
    """One point ``(S, S', theta)`` tested against a tiling's reduced relation."""

    tiling: Tiling
    s: float
    sp: float
    theta: Quasimomentum

    def __post_init__(self):
        object.__setattr__(self, "tiling", Tiling.from_name(self.tiling))
        if not isinstance(self.theta, Quasimomentum):
            object.__setattr__(self, "theta", Quasimomentum(*self.theta))

    def s_factor(self) -> float:
        return float(self.s) ** S_POWER[self.tiling]

    def polynomial_factor(self) -> float:
        return float(polynomial_factor(self.tiling, self.sp, self.theta.theta1, self.theta.theta2))

    def breakdown(self) -> dict:
        return {"tiling": self.tiling.slug, "s": float(self.s), "sp": float(self.sp),
                "theta1": self.theta.theta1, "theta2": self.theta.theta2,
                "s_power": S_POWER[self.tiling], "s_factor": self.s_factor(),
                "polynomial_factor": self.polynomial_factor(),
                "residual": reduced_residual(self)}


def reduced_residual(r: ReducedRelation) -> float:
    """Left side of the reduced relation; zero exactly on the Bloch variety."""
    return r.s_factor() * r.polynomial_factor()


def reduced_closed_form(tiling, s: float, sp: float, theta) -> complex:
    """What the general closed form must equal for identical even edges."""
    tiling = Tiling.from_name(tiling)
    r = ReducedRelation(tiling, s, sp, theta)
    return complex(prefactor(tiling, r.theta) * REDUCTION_SCALE[tiling] * reduced_residual(r))


def ac_membership(tiling, sp: float) -> bool:
    """``S'(a)`` lies in the closed band interval ``[m, 1]`` of the tiling."""
    tiling = Tiling.from_name(tiling)
    return bool(tiling.ac_lower_bound <= sp <= 1.0)


def _clip_acos(x: float) -> float:
    return math.acos(min(1.0, max(-1.0, x)))


def _candidates(tiling: Tiling, sp: float):
    if tiling is Tiling.TRIANGULAR:
        t = _clip_acos((math.sqrt(max(0.0, 6 * sp + 3)) - 1) / 2)
        yield (t, -t)
    elif tiling is Tiling.TRIHEXAGONAL:
        if sp == -0.5:
            yield (0.0, 0.0)
        t = _clip_acos((abs(4 * sp - 1) - 1) / 2)
        yield (t, -t)
    elif tiling is Tiling.HEXAGONAL:
        t = _clip_acos((3 * abs(sp) - 1) / 2)
        yield (t, -t)
    elif tiling is Tiling.SQUARE:
        yield (2 * _clip_acos(abs(sp)), 0.0)
    elif tiling is Tiling.TRUNCATED_SQUARE:
        # diagonal theta1 = theta2 = t: S' = (1 +- 2 cos(t/2)) / 3
        if -1 / 3 <= sp <= 1:
            t = 2 * _clip_acos(abs(3 * sp - 1) / 2)
        else:
            t = 2 * math.asin(min(1.0, abs(3 * sp + 1) / 2))
        yield (t, t)
    elif tiling is Tiling.ELONGATED_TRIANGULAR:
        # diagonal: 4c^2 - (20 S' + 4) c + 25 S'^2 - 5 = 0 with c = cos t
        disc = 160 * sp + 96
        if disc >= 0:
            b = 20 * sp + 4
            for c in sorted(((b - math.sqrt(disc)) / 8, (b + math.sqrt(disc)) / 8),
                            key=lambda c: abs(c) > 1):
                t = _clip_acos(c)
                yield (t, t)
        # Below -3/5 the diagonal has no solution.  On t2 = t1/2 the modulus
        # is 1 + 2u with u = cos(t1/2), and 5 S' = 4u^2 - 2u - 3.
        if 13 + 20 * sp >= 0:
            u = (1 + math.sqrt(13 + 20 * sp)) / 4
            if u <= 1:
                t = 2 * _clip_acos(u)
                yield (t, t / 2)


def witness_theta(tiling, sp: float, tol: float = WITNESS_TOL) -> Optional[Quasimomentum]:
    """A quasimomentum where the polynomial factor vanishes, or ``None``.

    ``None`` is returned exactly when ``S'`` is outside the band interval.
    """
    tiling = Tiling.from_name(tiling)
    if not ac_membership(tiling, sp):
        return None
    best, best_res = None, math.inf
    for cand in _candidates(tiling, float(sp)):
        theta = Quasimomentum(*cand)
        res = abs(float(polynomial_factor(tiling, sp, theta.theta1, theta.theta2)))
        if res < best_res:
            best, best_res = theta, res
    return best if best_res <= tol else None


def triple_cos_identity(theta) -> tuple[float, float, float]:
    """Three equal expressions for ``|1 + e^{i theta1} + e^{i theta2}|^2``."""
    t1, t2 = theta
    lhs = abs(1 + np.exp(1j * t1) + np.exp(1j * t2)) ** 2
    mid = 3 + 2 * (math.cos(t1) + math.cos(t2) + math.cos(t1 - t2))
    rhs = 1 + 8 * float(_K(t1, t2))
    return float(lhs), float(mid), float(rhs)
