"""Edge potentials ``q`` on a single edge ``[0, a]``.

Every potential is an immutable, vectorised callable.  Piecewise-constant
potentials (including the zero potential) additionally expose their pieces so
the Hill solver can use exact transfer matrices instead of integrating.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline, interp1d

EVEN_TOL = 1e-10
GRAPHENE_BOND = 1.43


class DomainError(ValueError):
    """Raised when a potential is evaluated outside its edge ``[0, a]``."""


class PotentialError(ValueError):
    """Raised for malformed potential definitions."""


@dataclass(frozen=True)
class Potential:
    a: float
    even_declared: bool = False

    kind = "abstract"

    def __post_init__(self):
        if not np.isfinite(self.a) or self.a <= 0:
            raise PotentialError(f"edge length must be positive, got {self.a!r}")

    def _values(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        """Evaluate ``q`` at ``x`` (scalar or array); raises ``DomainError`` off-edge."""
        arr = np.asarray(x, dtype=float)
        if np.any(arr < 0) or np.any(arr > self.a) or not np.all(np.isfinite(arr)):
            raise DomainError(f"x must lie in [0, {self.a}]")
        out = self._values(arr)
        return float(out) if out.ndim == 0 else out

    def pieces(self) -> Optional[list[tuple[float, float]]]:
        """``[(length, value), ...]`` for piecewise-constant potentials, else ``None``."""
        return None

    def breakpoints(self) -> tuple[float, ...]:
        """Interior points where ``q`` is not smooth; integrators align steps to them."""
        return ()

    def minimum(self) -> float:
        xs = np.linspace(0.0, self.a, 4097)
        return float(np.min(self._values(xs)))

    def _check_declared_evenness(self):
        if self.even_declared and not check_even(self, EVEN_TOL):
            raise PotentialError(
                f"potential declared even but |q(x) - q(a-x)| exceeds {EVEN_TOL:g}"
            )


@dataclass(frozen=True)
class ZeroPotential(Potential):
    even_declared: bool = True

    kind = "zero"

    def _values(self, x):
        return np.zeros_like(x)

    def pieces(self):
        return [(self.a, 0.0)]

    def minimum(self):
        return 0.0


@dataclass(frozen=True)
class PiecewiseConstant(Potential):
    """Step potential: ``values[i]`` on ``[breaks[i], breaks[i+1])``, last piece closed."""

    breaks: tuple = ()
    values: tuple = ()

    kind = "piecewise-constant"

    def __post_init__(self):
        super().__post_init__()
        b = np.asarray(self.breaks, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.ndim != 1 or b.size < 2 or v.size != b.size - 1:
            raise PotentialError("need n+1 breakpoints for n values")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(v))):
            raise PotentialError("breakpoints and values must be finite")
        if np.any(np.diff(b) <= 0):
            raise PotentialError("breakpoints must be strictly increasing")
        if b[0] != 0.0 or not np.isclose(b[-1], self.a, rtol=0, atol=1e-14 * self.a):
            raise PotentialError(f"breakpoints must span exactly [0, {self.a}]")
        object.__setattr__(self, "breaks", tuple(float(t) for t in b))
        object.__setattr__(self, "values", tuple(float(t) for t in v))
        self._check_declared_evenness()

    def _values(self, x):
        b = np.asarray(self.breaks)
        idx = np.clip(np.searchsorted(b, x, side="right") - 1, 0, len(self.values) - 1)
        return np.asarray(self.values)[idx]

    def pieces(self):
        return [(hi - lo, v) for lo, hi, v in zip(self.breaks[:-1], self.breaks[1:], self.values)]

    def breakpoints(self):
        return self.breaks[1:-1]

    def minimum(self):
        return min(self.values)


@dataclass(frozen=True)
class SampledGrid(Potential):
    """Uniform samples over ``[0, a]`` (endpoints included), interpolated.

    ``order=3`` uses a cubic spline with clamped (zero-slope) ends; ``order=1``
    is piecewise linear.
    """

    samples: tuple = ()
    order: int = 3
    _interp: object = field(default=None, init=False, repr=False, compare=False)

    kind = "sampled"

    def __post_init__(self):
        super().__post_init__()
        y = np.asarray(self.samples, dtype=float)
        if y.ndim != 1 or y.size < 2 or not np.all(np.isfinite(y)):
            raise PotentialError("need at least two finite samples")
        if self.order not in (1, 3):
            raise PotentialError("interpolation order must be 1 or 3")
        if self.order == 3 and y.size < 4:
            raise PotentialError("cubic interpolation needs at least four samples")
        object.__setattr__(self, "samples", tuple(float(t) for t in y))
        xs = np.linspace(0.0, self.a, y.size)
        if self.order == 3:
            f = CubicSpline(xs, y, bc_type="clamped")
        else:
            f = interp1d(xs, y, kind="linear", assume_sorted=True)
        object.__setattr__(self, "_interp", f)
        self._check_declared_evenness()

    def _values(self, x):
        return np.asarray(self._interp(x), dtype=float)

    def breakpoints(self):
        if self.order == 1:
            return tuple(np.linspace(0.0, self.a, len(self.samples))[1:-1])
        return ()


@dataclass(frozen=True)
class GraphenePotential(Potential):
    """``q(x) = -0.85 + (d / 1.34) sin^2(pi x / d)``; ``d`` defaults to the edge length."""

    d: Optional[float] = None
    even_declared: bool = True

    kind = "graphene"

    def __post_init__(self):
        super().__post_init__()
        if self.d is None:
            object.__setattr__(self, "d", float(self.a))
        if not np.isfinite(self.d) or self.d <= 0:
            raise PotentialError("bond length d must be positive")
        self._check_declared_evenness()

    def _values(self, x):
        return -0.85 + (self.d / 1.34) * np.sin(np.pi * x / self.d) ** 2

    def minimum(self):
        return -0.85


def zero(a: float = 1.0) -> ZeroPotential:
    return ZeroPotential(a=float(a))


def piecewise_constant(breaks, values, a: Optional[float] = None, even: bool = False):
    breaks = [float(t) for t in breaks]
    return PiecewiseConstant(a=breaks[-1] if a is None else float(a), breaks=tuple(breaks),
                             values=tuple(values), even_declared=even)


def constant(value: float, a: float = 1.0) -> PiecewiseConstant:
    return piecewise_constant([0.0, a], [value], even=True)


def sampled(samples, a: float, order: int = 3, even: bool = False) -> SampledGrid:
    return SampledGrid(a=float(a), samples=tuple(samples), order=order, even_declared=even)


def graphene(a: float = GRAPHENE_BOND, d: Optional[float] = None) -> GraphenePotential:
    d = a if d is None else d
    even = abs(a / d - round(a / d)) < 1e-12
    return GraphenePotential(a=float(a), d=float(d), even_declared=even)


def evaluate(q: Potential, x) -> float:
    """Value of ``q`` at a position on the edge."""
    return q(x)


def check_even(q: Potential, tol: float = EVEN_TOL) -> bool:
    """True iff ``max |q(x) - q(a - x)| <= tol`` on a 1024-point symmetric grid.

    The grid uses cell midpoints so that it is exactly mirror-symmetric and
    never lands on the edge endpoints.
    """
    x = (np.arange(1024) + 0.5) * (q.a / 1024)
    left = q._values(x)
    right = q._values(q.a - x)
    return bool(np.max(np.abs(left - right)) <= tol)
