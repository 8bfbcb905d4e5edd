import math

import numpy as np
import pytest

from archi import dispersion as dp
from archi import hill
from archi import potentials as P
from archi import spectrum as sp
from archi.tiling import MATRIX_TILINGS, Tiling

Q0 = P.zero(1.0)
PI2 = math.pi ** 2


@pytest.mark.parametrize("tiling", ["triangular", "trihexagonal", "elongated-triangular"])
def test_free_bands_match_analytic(tiling):
    bands = sp.ac_bands(tiling, Q0, 500.0)
    ref = sp.q0_reference_bands(tiling, 1.0, 5, lambda_max=500.0)
    assert len(bands) == len(ref)
    for b, r in zip(bands, ref):
        assert b.lo == pytest.approx(r.lo, abs=1e-6)
        assert b.hi == pytest.approx(r.hi, abs=1e-6)


def test_truncated_square_has_no_gaps():
    bands = sp.ac_bands("truncated-square", Q0, 100.0)
    assert len(bands) == 1
    assert bands[0].lo == pytest.approx(0.0, abs=1e-9) and bands[0].hi == 100.0


def test_reference_band_values():
    b = sp.q0_reference_bands("triangular", 1.0, 2)
    assert [b[0].hi, b[1].lo, b[1].hi] == pytest.approx([4 * PI2 / 9, 16 * PI2 / 9, 64 * PI2 / 9])
    assert sp.q0_reference_bands("elongated-triangular", 1.0, 1)[0].hi == pytest.approx(
        math.acos(-13 / 20) ** 2)
    assert sp.q0_reference_bands("truncated-square", 1.0, 1, 100.0) == [sp.Band(0.0, 100.0)]
    assert sp.q0_reference_bands("triangular", 2.0, 1)[0].hi == pytest.approx(PI2 / 9)
    with pytest.raises(ValueError):
        sp.q0_reference_bands("triangular", 1.0, 0)


def test_point_spectrum_free():
    pts = sp.point_spectrum("triangular", Q0, 100.0)
    assert [p.tag for p in pts] == [sp.DIRICHLET] * 3
    assert [p.lam for p in pts] == pytest.approx([PI2, 4 * PI2, 9 * PI2], abs=1e-9)
    th = sp.point_spectrum("trihexagonal", Q0, 80.0)
    flat = [p.lam for p in th if p.tag == sp.FLAT_BAND]
    assert flat == pytest.approx([(2 * math.pi / 3) ** 2, (4 * math.pi / 3) ** 2,
                                  (8 * math.pi / 3) ** 2], abs=1e-9)
    assert all(p.residual <= 1e-9 for p in th)


@pytest.mark.parametrize("tiling", MATRIX_TILINGS)
def test_flat_bands_are_theta_independent(tiling, rng):
    for q in (Q0, P.graphene()):
        for p in sp.point_spectrum(tiling, q, 100.0):
            b = hill.solve_basis(q, p.lam)
            for th in rng.uniform(-math.pi, math.pi, (100, 2)):
                r = dp.ReducedRelation(tiling, float(b.s), float(b.sp), th)
                assert abs(dp.reduced_residual(r)) <= 1e-10


def test_band_functions_at_origin():
    roots = sp.band_functions("triangular", Q0, (0.0, 0.0), 50.0)
    assert roots == pytest.approx([0.0, PI2, 4 * PI2], abs=1e-8)


def test_band_functions_at_cube_root_point():
    roots = sp.band_functions("triangular", Q0, (2 * math.pi / 3, -2 * math.pi / 3), 50.0)
    expected = sorted([PI2, 4 * PI2, (2 * math.pi / 3) ** 2, (4 * math.pi / 3) ** 2])
    assert roots == pytest.approx(expected, abs=1e-8)


def test_trihexagonal_band_functions_contain_flat_band(rng):
    for th in rng.uniform(-math.pi, math.pi, (5, 2)):
        roots = sp.band_functions("trihexagonal", Q0, th, 50.0)
        for lam in ((2 * math.pi / 3) ** 2, (4 * math.pi / 3) ** 2):
            assert np.min(np.abs(roots - lam)) < 1e-8


@pytest.mark.parametrize("tiling", list(Tiling))
def test_band_functions_stable_under_grid_doubling(tiling):
    th = (0.37, -1.21)
    a = sp.band_functions(tiling, Q0, th, 200.0, lambda_grid=4000)
    b = sp.band_functions(tiling, Q0, th, 200.0, lambda_grid=8000)
    assert a.size == b.size
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_band_functions_solve_the_relation(rng):
    q = P.piecewise_constant([0, 0.25, 0.75, 1], [3.0, -2.0, 3.0], even=True)
    for tiling in Tiling:
        th = rng.uniform(-math.pi, math.pi, 2)
        for lam in sp.band_functions(tiling, q, th, 120.0):
            b = hill.solve_basis(q, lam)
            r = dp.ReducedRelation(tiling, float(b.s), float(b.sp), th)
            assert abs(dp.reduced_residual(r)) < 1e-7


def test_constant_potential_shifts_bands():
    c = -3.0
    shifted = sp.ac_bands("triangular", P.constant(c), 60.0)
    free = sp.ac_bands("triangular", Q0, 60.0 - c)
    assert len(shifted) == len(free)
    for s, f in zip(shifted, free):
        assert s.lo == pytest.approx(f.lo + c, abs=1e-8)
        assert s.hi == pytest.approx(min(f.hi + c, 60.0), abs=1e-8)


def test_band_interiors_have_witnesses_and_gaps_none():
    q = P.piecewise_constant([0, 0.3, 0.7, 1], [0.0, 6.0, 0.0], even=True)
    bands = sp.ac_bands("elongated-triangular", q, 80.0)
    grid = sp.spectral_grid(q, sp.lambda_floor(q), 80.0)
    inner = np.concatenate([np.linspace(b.lo, b.hi, 7)[1:-1] for b in bands])
    for lam, x in zip(inner, grid.phi(inner)):
        w = dp.witness_theta("elongated-triangular", x)
        assert w is not None and abs(dp.ReducedRelation("elongated-triangular", 1, x, w)
                                     .polynomial_factor()) <= 1e-8
    gaps = [0.5 * (a.hi + b.lo) for a, b in zip(bands, bands[1:])]
    axis = np.linspace(-math.pi, math.pi, 201)
    T1, T2 = np.meshgrid(axis, axis)
    for x in grid.phi(np.array(gaps)):
        vals = dp.polynomial_factor("elongated-triangular", x, T1, T2)
        assert np.all(vals > 0) or np.all(vals < 0)


@pytest.mark.parametrize("tiling", MATRIX_TILINGS)
def test_union_check_free(tiling):
    rep = sp.union_check(tiling, Q0, 60.0, 41)
    assert rep.passed, rep.to_dict()
    assert rep.soundness <= 1e-8


def test_union_truncated_square_covers_everything():
    rep = sp.union_check("truncated-square", Q0, 60.0, 41)
    assert rep.gaps == []


def test_single_theta_slice_is_strictly_smaller():
    rep = sp.union_check("triangular", Q0, 60.0, 1)
    assert rep.coverage > 1.0          # whole band stretches are missed
    assert rep.soundness <= 1e-8        # but nothing spurious is produced
    assert rep.union_measure == 0.0 < rep.reference_measure
    full = sp.union_check("triangular", Q0, 60.0, 41)
    assert full.union_measure == pytest.approx(full.reference_measure, rel=0.01)


def test_preconditions():
    odd = P.piecewise_constant([0, 0.4, 1], [1.0, 0.0])
    with pytest.raises(hill.PreconditionError):
        sp.ac_bands("triangular", odd, 10.0)
    with pytest.raises(ValueError):
        sp.ac_bands("triangular", Q0, -1.0)
    with pytest.raises(ValueError):
        sp.Band(2.0, 1.0)


def test_report_roundtrip():
    rep = sp.spectrum_report("trihexagonal", Q0, 30.0)
    d = rep.to_dict()
    assert d["tiling"] == "trihexagonal"
    assert {p["tag"] for p in d["point_eigenvalues"]} == {sp.DIRICHLET, sp.FLAT_BAND}
    assert d["grid"]["points"] == sp.LAMBDA_GRID


def test_bisect_vectorised():
    roots = sp.bisect(np.sin, [3.0, 6.0], [3.3, 6.5], [0.0, 0.0], tol=1e-13)
    np.testing.assert_allclose(roots, [math.pi, 2 * math.pi], atol=1e-12)
