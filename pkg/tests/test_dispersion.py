import math

import numpy as np
import pytest

from archi import chardet as cd
from archi import dispersion as dp
from archi import hill
from archi import potentials as P
from archi.tiling import Tiling
from archi import dispersion  # noqa: F401

from conftest import random_even_step

ALL = list(Tiling)


def poly(tiling, sp, theta):
    return dp.ReducedRelation(tiling, 1.0, sp, theta).polynomial_factor()


def test_examples():
    assert dp.reduced_residual(dp.ReducedRelation("triangular", 0.7, 1.0, (0, 0))) == 0
    r = dp.ReducedRelation("truncated-square", 0.4, 1 / 3, (math.pi, math.pi))
    assert abs(dp.reduced_residual(r)) < 1e-15
    for th in [(0.3, -2.0), (1.0, 1.0), (-3.0, 0.2)]:
        assert dp.reduced_residual(dp.ReducedRelation("trihexagonal", 0.9, -0.5, th)) == 0


def test_trihexagonal_factor_form(rng):
    for _ in range(50):
        t1, t2 = rng.uniform(-math.pi, math.pi, 2)
        sp = rng.uniform(-1.5, 1.5)
        K = math.cos(t1 / 2) * math.cos(t2 / 2) * math.cos((t1 - t2) / 2)
        assert poly("trihexagonal", sp, (t1, t2)) == pytest.approx(
            (2 * sp + 1) * (2 * sp * sp - sp - K), abs=1e-12)


@pytest.mark.parametrize("tiling", ALL)
def test_s_power_factor_vanishes(tiling, rng):
    for th in rng.uniform(-math.pi, math.pi, (100, 2)):
        assert dp.reduced_residual(dp.ReducedRelation(tiling, 0.0, rng.uniform(-2, 2), th)) == 0


def test_membership_examples():
    assert dp.ac_membership("triangular", 1.0)
    assert not dp.ac_membership("triangular", -0.6)
    assert dp.ac_membership("elongated-triangular", -3 / 5)
    assert not dp.ac_membership("truncated-square", -1.0001)
    assert not dp.ac_membership("hexagonal", 1.0 + 1e-12)


def test_witness_examples():
    w = dp.witness_theta("triangular", 1.0)
    assert (w.theta1, w.theta2) == pytest.approx((0.0, 0.0))
    w = dp.witness_theta("triangular", -0.5)
    assert abs(1 + np.exp(1j * w.theta1) + np.exp(1j * w.theta2)) < 1e-7
    w = dp.witness_theta("truncated-square", 0.0)
    assert w.theta1 == pytest.approx(2 * math.pi / 3) and w.theta1 == w.theta2
    assert dp.witness_theta("triangular", -0.51) is None


def _attained(tiling, sp, axis):
    """Does P(sp, .) vanish somewhere on the zone?  Grid scan plus local refinement.

    A sign change between grid neighbours is bisected along the segment; a
    one-signed grid is refined by local minimisation of |P| from its best point.
    """
    from scipy.optimize import minimize

    T1, T2 = np.meshgrid(axis, axis, indexing="ij")
    vals = dp.polynomial_factor(tiling, sp, T1, T2)
    f = lambda t: float(dp.polynomial_factor(tiling, sp, t[0], t[1]))
    h = axis[1] - axis[0]
    for a, b, step in ((vals[:-1], vals[1:], (h, 0.0)), (vals[:, :-1], vals[:, 1:], (0.0, h))):
        hit = np.argwhere(np.sign(a) != np.sign(b))
        if hit.size:
            i, j = hit[0]
            p0 = np.array([T1[i, j], T2[i, j]])
            p1 = p0 + np.array(step)
            for _ in range(80):
                mid = 0.5 * (p0 + p1)
                if np.sign(f(mid)) == np.sign(f(p0)):
                    p0 = mid
                else:
                    p1 = mid
            return min(abs(f(p0)), abs(f(p1)))
    # one-signed grid: push the smooth signed function toward zero
    sgn = 1.0 if vals.flat[0] > 0 else -1.0
    i = np.unravel_index(np.argmin(sgn * vals), vals.shape)
    res = minimize(lambda t: sgn * f(t), [T1[i], T2[i]], method="L-BFGS-B",
                   options={"ftol": 1e-15, "gtol": 1e-12})
    return max(0.0, min(sgn * vals[i], res.fun))


@pytest.mark.parametrize("tiling", ALL)
def test_membership_matches_grid_minimisation(tiling):
    """Membership holds exactly when |P| can be driven to zero over the zone."""
    axis = np.linspace(-math.pi, math.pi, 201)
    for sp in np.linspace(-1.2, 1.2, 200):
        best = _attained(tiling, sp, axis)
        assert (best <= 1e-8) == dp.ac_membership(tiling, sp), (tiling, sp, best)
        w = dp.witness_theta(tiling, sp)
        assert (w is not None) == dp.ac_membership(tiling, sp)
        if w is not None:
            assert abs(poly(tiling, sp, w)) <= 1e-10


def floquet_adjacency(tiling, t1, t2):
    """Floquet adjacency matrix of the vertex lattice, built from the tiling geometry."""
    a, b = np.exp(1j * t1), np.exp(1j * t2)
    if tiling is Tiling.TRIANGULAR:
        return np.array([[a + 1 / a + b + 1 / b + a / b + b / a]])
    if tiling is Tiling.SQUARE:
        # checkerboard cell (four edges): translations (1, 1) and (1, -1)
        z = (1 + 1 / a) * (1 + 1 / b)
        return np.array([[0, z], [np.conj(z), 0]])
    if tiling is Tiling.HEXAGONAL:
        z = 1 + 1 / a + 1 / b
        return np.array([[0, z], [np.conj(z), 0]])
    if tiling is Tiling.ELONGATED_TRIANGULAR:
        # rows of triangles alternate with rows of squares; two sites per cell
        z = 1 + 1 / a + 1 / b
        d = a + 1 / a
        return np.array([[d, z], [np.conj(z), d]])
    if tiling is Tiling.TRIHEXAGONAL:
        # kagome: three sites on the edge midpoints of a triangular lattice
        return np.array([[0, 1 + 1 / a, 1 + 1 / b],
                         [1 + a, 0, 1 + a / b],
                         [1 + b, 1 + b / a, 0]])
    # truncated square: a 4-cycle of sites per cell, linked to neighbouring cells
    m = np.zeros((4, 4), complex)
    for i in range(4):
        m[i, (i + 1) % 4] = m[(i + 1) % 4, i] = 1
    m[0, 2] += 1 / a
    m[2, 0] += a
    m[1, 3] += 1 / b
    m[3, 1] += b
    return m


DEGREE = {Tiling.TRIANGULAR: 6, Tiling.SQUARE: 4, Tiling.HEXAGONAL: 3,
          Tiling.ELONGATED_TRIANGULAR: 5, Tiling.TRIHEXAGONAL: 4, Tiling.TRUNCATED_SQUARE: 3}


@pytest.mark.parametrize("tiling", ALL)
def test_relation_roots_are_adjacency_eigenvalues(tiling, rng):
    """With identical even edges, S' solves the relation iff S' * degree is an
    eigenvalue of the Floquet adjacency matrix."""
    for t1, t2 in rng.uniform(-math.pi, math.pi, (50, 2)):
        eig = np.sort(np.linalg.eigvalsh(floquet_adjacency(tiling, t1, t2))) / DEGREE[tiling]
        for x in eig:
            assert abs(dp.polynomial_factor(tiling, x, t1, t2)) < 1e-10
        roots = np.sort(np.roots(dp.polynomial_coefficients(tiling, (t1, t2))).real)
        if tiling is not Tiling.TRIHEXAGONAL:
            np.testing.assert_allclose(roots, eig, atol=1e-6)


def test_elongated_triangular_band_floor():
    u = 0.25
    t1 = 2 * math.acos(u)
    w = dp.Quasimomentum(t1, t1 / 2)
    assert abs(poly("elongated-triangular", -13 / 20, w)) < 1e-12
    eig = np.linalg.eigvalsh(floquet_adjacency(Tiling.ELONGATED_TRIANGULAR, t1, t1 / 2)) / 5
    assert eig.min() == pytest.approx(-13 / 20, abs=1e-14)
    assert dp.ac_membership("elongated-triangular", -0.62)
    assert not dp.ac_membership("elongated-triangular", -0.6501)


def test_triple_cos_examples():
    assert dp.triple_cos_identity((0, 0)) == pytest.approx((9, 9, 9))
    assert dp.triple_cos_identity((2 * math.pi / 3, -2 * math.pi / 3)) == pytest.approx(
        (0, 0, 0), abs=1e-14)
    assert dp.triple_cos_identity((math.pi, 0)) == pytest.approx((1, 1, 1))


def test_triple_cos_on_grid():
    axis = np.linspace(-math.pi, math.pi, 101)
    worst = max(max(v) - min(v) for v in (dp.triple_cos_identity((a, b))
                                          for a in axis for b in axis))
    assert worst <= 1e-12


@pytest.mark.parametrize("tiling", list(cd.REDUCTION_SCALE))
def test_general_closed_form_reduces(tiling, rng):
    for q in (P.zero(), random_even_step(rng)):
        for lam in rng.uniform(-5, 150, 10):
            b = hill.solve_basis(q, lam)
            th = rng.uniform(-math.pi, math.pi, 2)
            full = cd.closed_form(tiling, [b] * tiling.edge_count, th)
            red = dp.reduced_closed_form(tiling, float(b.s), float(b.sp), th)
            assert cd.relative_error(full, red) <= 1e-8


def test_breakdown_keys():
    d = dp.ReducedRelation("square", 0.5, 0.2, (0.1, 0.2)).breakdown()
    assert d["residual"] == pytest.approx(d["s_factor"] * d["polynomial_factor"])
    assert d["s_power"] == 2
