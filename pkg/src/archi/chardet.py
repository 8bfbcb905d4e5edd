"""Vertex-condition matrices, their determinants and the closed-form expansions.

For each tiling with a known fundamental domain the Floquet vertex conditions
form a square linear system in the coefficients ``(A_j, B_j)`` of
``y_j = A_j C_j + B_j S_j``.  Its determinant is the characteristic function;
the closed forms below are its expansion after using ``C_j S'_j - S_j C'_j = 1``.
``verify_closed_form`` checks one against the other on random
Wronskian-consistent edge data.

Notation used in the expansions (indices are edge numbers):

* ``(X_i Y_j ...)'`` is the product-rule derivative, e.g.
  ``(S_1 S_2)' = S'_1 S_2 + S_1 S'_2``;
* ``(CSS)_{ijk} = C_i S_j S_k + C_j S_k S_i + C_k S_i S_j`` and likewise for
  four indices;
* ``(CS)_{ij} = C_i S_j + S_i C_j`` and ``(CS)_{ij'} = C_i S'_j + S_i C'_j``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hill import WRONSKIAN_TOL, EdgeBasis
from .tiling import Quasimomentum, Tiling

REL_ERR_FLOOR = 1e-12

# closed form / (prefactor * reduced relation) for identical even edges
REDUCTION_SCALE = {
    Tiling.TRIANGULAR: 2.0,
    Tiling.ELONGATED_TRIANGULAR: 1.0,
    Tiling.TRUNCATED_SQUARE: 1.0,
    Tiling.TRIHEXAGONAL: -16.0,
    Tiling.SQUARE: 16.0,
}


class ArityError(ValueError):
    pass


class ConsistencyError(ValueError):
    pass


class FeatureError(NotImplementedError):
    pass


def _theta(theta) -> Quasimomentum:
    return theta if isinstance(theta, Quasimomentum) else Quasimomentum(*theta)


def _columns(bases: Sequence[EdgeBasis]):
    """1-indexed lists C, S, C', S' (index 0 unused)."""
    C = [0.0] + [float(b.c) for b in bases]
    S = [0.0] + [float(b.s) for b in bases]
    Cp = [0.0] + [float(b.cp) for b in bases]
    Sp = [0.0] + [float(b.sp) for b in bases]
    return C, S, Cp, Sp


def _check_arity(tiling: Tiling, bases):
    if len(bases) != tiling.edge_count:
        raise ArityError(f"{tiling.slug} needs {tiling.edge_count} edge bases, got {len(bases)}")


def _check_wronskian(bases, tol):
    for j, b in enumerate(bases, 1):
        scale = max(1.0, abs(float(b.c) * float(b.sp)), abs(float(b.s) * float(b.cp)))
        if b.wronskian_residual > tol * scale:
            raise ConsistencyError(
                f"edge {j}: C S' - S C' = {b.wronskian!r} violates the Wronskian identity")


# -- matrices ----------------------------------------------------------------

def _triangular_matrix(C, S, Cp, Sp, t1, t2):
    a = np.exp(-1j * t1)
    b = np.exp(-1j * t2)
    g = b / a
    return np.array([
        [-1, 1, 0, 0, 0, 0],
        [-1, 0, 1, 0, 0, 0],
        [-1 + a * C[1], 0, 0, a * S[1], 0, 0],
        [-1, b * C[2], 0, 0, b * S[2], 0],
        [-1, 0, g * C[3], 0, 0, g * S[3]],
        [a * Cp[1], b * Cp[2], g * Cp[3], -1 + a * Sp[1], -1 + b * Sp[2], -1 + g * Sp[3]],
    ], dtype=complex)


def _elongated_matrix(C, S, Cp, Sp, t1, t2):
    a = np.exp(1j * t1)
    b = np.exp(-1j * t2)
    return np.array([
        [C[1], -a, 0, 0, 0, S[1], 0, 0, 0, 0],
        [0, C[2] - a, 0, 0, 0, 0, S[2], 0, 0, 0],
        [0, -a, C[3], 0, 0, 0, 0, S[3], 0, 0],
        [0, -a, 0, C[4], 0, 0, 0, 0, S[4], 0],
        [Cp[1], Cp[2], Cp[3], Cp[4], 0, Sp[1], Sp[2] - a, Sp[3], Sp[4], 0],
        [0, 0, 0, -1, C[5], 0, 0, 0, 0, S[5]],
        [0, 0, a, -1, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, -1, a, 0, 0, 0, 0, 0],
        [a * b, 0, 0, -1, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, -Cp[5], a * b, 0, a, 1, a - Sp[5]],
    ], dtype=complex)


def _truncated_square_matrix(C, S, Cp, Sp, t1, t2):
    # Rows 1 and 9 follow the vertex equations A1 = A4 and
    # B2 + B3 = e^{i t1} y5'(a); see CALIBRATION.md.
    a = np.exp(1j * t1)
    b = np.exp(1j * t2)
    return np.array([
        [1, 0, 0, -1, 0, 0, 0, 0, 0, 0, 0, 0],
        [1, 0, 0, 0, -1, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 1, 0],
        [C[1], 0, 0, 0, 0, -1, S[1], 0, 0, 0, 0, 0],
        [0, C[2], 0, 0, 0, -1, 0, S[2], 0, 0, 0, 0],
        [Cp[1], Cp[2], 0, 0, 0, 0, Sp[1], Sp[2], 0, 0, 0, -1],
        [0, 1, -1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, -1, 0, 0, a * C[5], 0, 0, 0, 0, 0, a * S[5], 0],
        [0, 0, 0, 0, a * Cp[5], 0, 0, -1, -1, 0, a * Sp[5], 0],
        [0, 0, -C[3], C[4], 0, 0, 0, 0, -S[3], S[4], 0, 0],
        [0, 0, -C[3], 0, 0, b * C[6], 0, 0, -S[3], 0, 0, b * S[6]],
        [0, 0, Cp[3], Cp[4], 0, b * Cp[6], 0, 0, Sp[3], Sp[4], 0, b * Sp[6]],
    ], dtype=complex)


def _trihexagonal_matrix(C, S, Cp, Sp, t1, t2):
    a = np.exp(1j * t1)
    b = np.exp(1j * t2)
    return np.array([
        [1, 0, -1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [1, 0, 0, -1, 0, 0, 0, 0, 0, 0, 0, 0],
        [1, 0, 0, 0, 0, -1, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 1, 0, 1, 1, 0, 1],
        [0, C[2], -C[3], 0, 0, 0, 0, S[2], -S[3], 0, 0, 0],
        [0, C[2], 0, -a * C[4], 0, 0, 0, S[2], 0, -a * S[4], 0, 0],
        [0, C[2], 0, 0, -a * C[5], 0, 0, S[2], 0, 0, -a * S[5], 0],
        [0, Cp[2], Cp[3], a * Cp[4], a * Cp[5], 0, 0, Sp[2], Sp[3], a * Sp[4], a * Sp[5], 0],
        [0, 1, 0, 0, -b, 0, 0, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 0, -b * C[6], 0, 0, 0, 0, 0, -b * S[6]],
        [-C[1], 1, 0, 0, 0, 0, -S[1], 0, 0, 0, 0, 0],
        [Cp[1], 0, 0, 0, 0, b * Cp[6], Sp[1], -1, 0, 0, -b, b * Sp[6]],
    ], dtype=complex)


_MATRICES = {
    Tiling.TRIANGULAR: _triangular_matrix,
    Tiling.ELONGATED_TRIANGULAR: _elongated_matrix,
    Tiling.TRUNCATED_SQUARE: _truncated_square_matrix,
    Tiling.TRIHEXAGONAL: _trihexagonal_matrix,
}


@dataclass(frozen=True)
class CharSystem:
    tiling: Tiling
    bases: tuple
    theta: Quasimomentum
    matrix: np.ndarray = field(repr=False)


def build_matrix(tiling, bases: Sequence[EdgeBasis], theta,
                 wronskian_tol: float = WRONSKIAN_TOL) -> CharSystem:
    tiling = Tiling.from_name(tiling)
    if not tiling.has_matrix:
        raise FeatureError(f"no vertex matrix is available for the {tiling.slug} tiling")
    _check_arity(tiling, bases)
    _check_wronskian(bases, wronskian_tol)
    theta = _theta(theta)
    m = _MATRICES[tiling](*_columns(bases), theta.theta1, theta.theta2)
    return CharSystem(tiling, tuple(bases), theta, m)


def lu_determinant(matrix) -> tuple[complex, float]:
    """Determinant by Gaussian elimination with partial pivoting.

    Returns ``(det, growth)`` where ``growth`` is ``max|U| / max|A|``.
    """
    u = np.array(matrix, dtype=complex)
    n = u.shape[0]
    scale = np.max(np.abs(u)) if u.size else 1.0
    det = 1.0 + 0.0j
    biggest = scale
    for k in range(n):
        p = k + int(np.argmax(np.abs(u[k:, k])))
        if u[p, k] == 0:
            return 0j, float(biggest / scale) if scale else 1.0
        if p != k:
            u[[k, p]] = u[[p, k]]
            det = -det
        det *= u[k, k]
        if k + 1 < n:
            f = u[k + 1:, k] / u[k, k]
            u[k + 1:, k:] -= np.outer(f, u[k, k:])
            biggest = max(biggest, float(np.max(np.abs(u[k + 1:, k:]))))
    return complex(det), float(biggest / scale) if scale else 1.0


def determinant(system: CharSystem) -> complex:
    return lu_determinant(system.matrix)[0]


# -- closed forms ------------------------------------------------------------

def _D(*factors):
    """Product-rule derivative of a product of (value, derivative) pairs."""
    total = 0.0
    for j in range(len(factors)):
        term = factors[j][1]
        for i, f in enumerate(factors):
            if i != j:
                term = term * f[0]
        total = total + term
    return total


def _triangular_bracket(C, S, Cp, Sp, t1, t2):
    s = [None] + [(S[i], Sp[i]) for i in range(1, 4)]
    css = C[1] * S[2] * S[3] + C[2] * S[3] * S[1] + C[3] * S[1] * S[2]
    return (_D(s[1], s[2], s[3]) + css
            - 2 * S[1] * S[2] * math.cos(t2 - t1)
            - 2 * S[2] * S[3] * math.cos(t1)
            - 2 * S[1] * S[3] * math.cos(t2))


def _elongated_bracket(C, S, Cp, Sp, t1, t2):
    s = [None] + [(S[i], Sp[i]) for i in range(1, 6)]
    c = [None] + [(C[i], Cp[i]) for i in range(1, 6)]
    c1, c2, c12 = math.cos(t1), math.cos(t2), math.cos(t1 - t2)
    csss = (C[1] * S[3] * S[4] * S[5] + C[3] * S[4] * S[5] * S[1]
            + C[4] * S[5] * S[1] * S[3] + C[5] * S[1] * S[3] * S[4])
    return (_D(s[1], s[2], s[3], s[4]) * (C[5] + Sp[5] - 2 * c1)
            + csss * (Sp[2] + C[2] - 2 * c1)
            + S[1] * S[2] * S[5] * (_D(c[4], s[3]) + _D(c[3], s[4]) - 2 * c1)
            + S[2] * S[3] * S[5] * (_D(c[1], s[4]) + Sp[1] * C[4] - 2 * c12)
            + S[2] * S[4] * S[5] * (Sp[1] * C[3] + C[1] * Sp[3] - 2 * c2)
            + S[1] * S[3] * S[4] * (C[2] * Sp[5] - Sp[2] * C[5]
                                    - 2 * (C[2] + Sp[5]) * c1 + 4 * c1 * c1))


def _truncated_square_bracket(C, S, Cp, Sp, t1, t2):
    s = [None] + [(S[i], Sp[i]) for i in range(1, 7)]
    c = [None] + [(C[i], Cp[i]) for i in range(1, 7)]
    c1, c2 = math.cos(t1), math.cos(t2)
    cm, cpl = math.cos(t1 - t2), math.cos(t1 + t2)

    def cs(i, j):
        return C[i] * S[j] + S[i] * C[j]

    def csd(i, j):
        return C[i] * Sp[j] + S[i] * Cp[j]

    css145 = C[1] * S[4] * S[5] + C[4] * S[5] * S[1] + C[5] * S[1] * S[4]
    return (
        (Sp[5] * S[2] * S[3] + S[5] * cs(2, 3))
        * (Cp[1] * _D(s[4], s[6]) + Sp[1] * _D(c[4], s[6]) + S[1] * _D(c[4], c[6])
           + C[1] * _D(s[4], c[6]) - 2 * c2)
        + css145 * (Sp[2] * _D(c[3], s[6]) + Cp[2] * _D(s[3], s[6]) + C[6] * csd(2, 3) - 2 * c2)
        + (C[6] * S[1] * S[2] + S[6] * _D(s[1], s[2]))
        * (Cp[5] * _D(s[3], s[4]) + C[3] * Sp[4] * C[5] + Sp[3] * C[4] * Sp[5] - 2 * c1)
        + _D(s[3], s[4], s[6]) * (C[1] * Sp[2] * Sp[5] + Sp[1] * C[2] * C[5] - 2 * c1)
        + S[5] * S[6] * (csd(1, 4) * csd(3, 2) + csd(4, 1) * csd(2, 3) - 2)
        + S[2] * S[4] * ((Sp[1] * Sp[6] + S[1] * Cp[6]) * (C[3] * C[5] + S[3] * Cp[5])
                         + S[6] * (Cp[1] * Sp[3] * Sp[5] + Sp[1] * Cp[3] * C[5])
                         + C[1] * C[6] * Sp[3] * Sp[5] - 2 * cm)
        + S[1] * S[3] * (Sp[2] * Sp[6] * csd(4, 5) + C[2] * C[5] * _D(s[4], c[6])
                         + S[6] * (Cp[2] * Sp[4] * C[5] + Sp[2] * Cp[4] * Sp[5]) - 2 * cpl)
    )


def _trihexagonal_bracket(C, S, Cp, Sp, t1, t2):
    s = [None] + [(S[i], Sp[i]) for i in range(1, 7)]
    c1, c2, cm = math.cos(t1), math.cos(t2), math.cos(t1 - t2)

    def cs(i, j):
        return C[i] * S[j] + S[i] * C[j]

    def cs_d(i, j):
        return Cp[i] * S[j] + C[i] * Sp[j] + Sp[i] * C[j] + S[i] * Cp[j]

    csss = (C[1] * S[3] * S[4] * S[6] + C[3] * S[4] * S[6] * S[1]
            + C[4] * S[6] * S[1] * S[3] + C[6] * S[1] * S[3] * S[4])
    mixed = S[1] * S[6] * cs(2, 5) + S[2] * S[5] * _D(s[1], s[6])
    return (
        2 * ((S[1] * S[2] * S[4] + S[3] * S[5] * S[6]) * c1
             + (S[1] * S[3] * S[5] + S[2] * S[4] * S[6]) * cm
             + (S[1] * S[4] * S[5] + S[2] * S[3] * S[6]) * c2
             + S[1] * S[2] * S[3] + S[4] * S[5] * S[6])
        + _D(s[2], s[3], s[4], s[5]) * (2 * c2 - cs_d(1, 6))
        + csss * (2 * cm - cs_d(2, 5))
        - _D(s[1], s[6]) * _D(s[2], s[5]) * cs(3, 4)
        - _D(s[3], s[4]) * cs(2, 5) * cs(1, 6)
        + mixed * (2 * c1 - cs_d(3, 4))
    )


def _square_residual(C, S, Cp, Sp, t1, t2):
    s = [None] + [(S[i], Sp[i]) for i in range(1, 5)]
    c = [None] + [(C[i], Cp[i]) for i in range(1, 5)]
    lhs = (_D(c[1], s[2], s[3], s[4]) + _D(s[1], c[2], s[3], s[4])
           + _D(s[1], s[2], c[3], s[4]) + _D(s[1], s[2], s[3], c[4]))
    rhs = 2 * ((S[1] * S[3] + S[2] * S[4]) * math.cos(t1)
               + (S[1] * S[2] + S[3] * S[4]) * math.cos(t2)
               + S[2] * S[3] * math.cos(t1 + t2)
               + S[1] * S[4] * math.cos(t1 - t2))
    return lhs - rhs


_BRACKETS = {
    Tiling.TRIANGULAR: _triangular_bracket,
    Tiling.ELONGATED_TRIANGULAR: _elongated_bracket,
    Tiling.TRUNCATED_SQUARE: _truncated_square_bracket,
    Tiling.TRIHEXAGONAL: _trihexagonal_bracket,
    Tiling.SQUARE: _square_residual,
}


def prefactor(tiling, theta) -> complex:
    """Unimodular factor multiplying the real bracket in the closed form."""
    tiling = Tiling.from_name(tiling)
    if tiling not in _BRACKETS:
        raise FeatureError(f"no general closed form for the {tiling.slug} tiling")
    t1, t2 = _theta(theta)
    return {
        Tiling.TRIANGULAR: -np.exp(-2j * t2),
        Tiling.ELONGATED_TRIANGULAR: -np.exp(4j * t1 - 1j * t2),
        Tiling.TRUNCATED_SQUARE: np.exp(1j * (t1 + t2)),
        Tiling.TRIHEXAGONAL: -np.exp(2j * (t1 + t2)),
        Tiling.SQUARE: 1.0 + 0j,
    }[tiling]


def bracket(tiling, bases: Sequence[EdgeBasis], theta) -> float:
    """Real trigonometric polynomial in the quasimomentum; closed form / prefactor."""
    tiling = Tiling.from_name(tiling)
    if tiling not in _BRACKETS:
        raise FeatureError(f"no general closed form for the {tiling.slug} tiling")
    _check_arity(tiling, bases)
    t1, t2 = _theta(theta)
    return float(_BRACKETS[tiling](*_columns(bases), t1, t2))


def closed_form(tiling, bases: Sequence[EdgeBasis], theta) -> complex:
    """Closed-form characteristic function.

    For the square tiling, which has no vertex matrix here, this is the
    residual (left side minus right side) of its dispersion relation.
    """
    tiling = Tiling.from_name(tiling)
    value = bracket(tiling, bases, theta)
    return complex(prefactor(tiling, theta) * value)


def consistent_basis(c: float, s: float, cp: float) -> EdgeBasis:
    """Complete ``(c, s, c')`` to a basis with ``c s' - s c' = 1`` exactly; needs ``c != 0``."""
    if c == 0:
        raise ValueError("c must be non-zero")
    return EdgeBasis(c, s, cp, (1.0 + s * cp) / c)


def random_consistent_basis(seed=None, magnitude_bound: float = 2.0,
                            min_abs_c: float = 0.1) -> EdgeBasis:
    """Random Wronskian-exact edge data: ``c, s, c'`` uniform in ``[-bound, bound]``."""
    if magnitude_bound <= min_abs_c:
        raise ValueError("magnitude_bound must exceed the |c| rejection threshold")
    rng = np.random.default_rng(seed)
    s, cp = rng.uniform(-magnitude_bound, magnitude_bound, 2)
    while True:
        c = rng.uniform(-magnitude_bound, magnitude_bound)
        if abs(c) >= min_abs_c:
            return consistent_basis(float(c), float(s), float(cp))


def relative_error(x: complex, y: complex, floor: float = REL_ERR_FLOOR) -> float:
    return abs(x - y) / max(abs(x), abs(y), floor)


@dataclass
class VerificationReport:
    tiling: str
    trials: int
    tolerance: float
    max_rel_err: float = 0.0
    max_growth: float = 0.0
    failures: list = field(default_factory=list)
    status: str = "ok"

    @property
    def passed(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        return {"tiling": self.tiling, "trials": self.trials, "status": self.status,
                "tolerance": self.tolerance, "max_rel_err": self.max_rel_err,
                "max_growth": self.max_growth, "failures": self.failures}


def _trial(tiling: Tiling, seq: np.random.SeedSequence, bound: float):
    rng = np.random.default_rng(seq)
    bases = [random_consistent_basis(rng, bound) for _ in range(tiling.edge_count)]
    theta = Quasimomentum(*rng.uniform(-math.pi, math.pi, 2))
    det, growth = lu_determinant(build_matrix(tiling, bases, theta).matrix)
    cf = closed_form(tiling, bases, theta)
    return relative_error(det, cf), growth, theta


def verify_closed_form(tiling, trials: int, seed=0, magnitude_bound: float = 2.0,
                       tol: float = 1e-9, n_jobs: int = 1) -> VerificationReport:
    """Compare determinant and closed form on ``trials`` random inputs.

    Every trial gets its own child seed, so results do not depend on ``n_jobs``.
    """
    tiling = Tiling.from_name(tiling)
    if trials < 1:
        raise ArityError("trials must be at least 1")
    report = VerificationReport(tiling.slug, int(trials), tol)
    if not tiling.has_matrix:
        report.status = "no matrix oracle"
        return report
    seqs = np.random.SeedSequence(seed).spawn(trials)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(lambda s: _trial(tiling, s, magnitude_bound), seqs))
    else:
        results = [_trial(tiling, s, magnitude_bound) for s in seqs]
    for k, (err, growth, theta) in enumerate(results):
        report.max_rel_err = max(report.max_rel_err, err)
        report.max_growth = max(report.max_growth, growth)
        if err > tol:
            report.failures.append({"trial": k, "rel_err": err,
                                    "theta": [theta.theta1, theta.theta2]})
    if report.failures:
        report.status = "failed"
    return report


# -- flat-band predicates ----------------------------------------------------

def theta_coefficients(tiling, bases: Sequence[EdgeBasis], n: int = 8) -> np.ndarray:
    """Fourier coefficients in ``(theta1, theta2)`` of the bracket.

    The bracket has degree at most two in each angle, so an ``n >= 5`` grid
    recovers it exactly.
    """
    th = 2 * math.pi * np.arange(n) / n
    vals = np.array([[bracket(tiling, bases, (a, b)) for b in th] for a in th])
    return np.fft.fft2(vals) / (n * n)


def is_flat_band(tiling, bases: Sequence[EdgeBasis], tol: float = 1e-10) -> bool:
    """True iff the characteristic function vanishes for every quasimomentum.

    Triangular and elongated triangular use the explicit criteria (two,
    respectively three, vanishing ``S_j``); the other tilings test that every
    Fourier coefficient of the bracket vanishes.
    """
    tiling = Tiling.from_name(tiling)
    _check_arity(tiling, bases)
    zeros = sum(abs(float(b.s)) <= tol for b in bases)
    if tiling is Tiling.TRIANGULAR:
        return zeros >= 2
    if tiling is Tiling.ELONGATED_TRIANGULAR:
        return zeros >= 3
    coeffs = theta_coefficients(tiling, bases)
    return bool(np.max(np.abs(coeffs)) <= tol)
