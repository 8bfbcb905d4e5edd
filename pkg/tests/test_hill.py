import math
import warnings

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from archi import hill
from archi import potentials as P
from archi.hill import SolverConfig


def plain_rk4(q, lam, x_end, n):
    """Textbook RK4 on the first-order system, one step at a time in floats."""
    h = x_end / n
    qs = q(np.minimum(np.arange(2 * n + 1) * (h / 2), q.a)).tolist()
    c, cp, s, sp = 1.0, 0.0, 0.0, 1.0
    for i in range(n):
        w0, wm, w1 = qs[2 * i] - lam, qs[2 * i + 1] - lam, qs[2 * i + 2] - lam
        out = []
        for y, yp in ((c, cp), (s, sp)):
            k1, l1 = yp, w0 * y
            k2, l2 = yp + h / 2 * l1, wm * (y + h / 2 * k1)
            k3, l3 = yp + h / 2 * l2, wm * (y + h / 2 * k2)
            k4, l4 = yp + h * l3, w1 * (y + h * k3)
            out.append((y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4),
                        yp + h / 6 * (l1 + 2 * l2 + 2 * l3 + l4)))
        (c, cp), (s, sp) = out
    return c, s, cp, sp


def test_free_edge_is_trigonometric():
    for lam in (-3.0, 0.0, 2.0, 50.0):
        b = hill.solve_basis(P.zero(1.0), lam)
        r = np.sqrt(complex(lam))
        c = np.cos(r).real
        s = (np.sin(r) / r).real if lam else 1.0
        cp = (-r * np.sin(r)).real
        assert float(b.c) == pytest.approx(c, abs=1e-14)
        assert float(b.s) == pytest.approx(s, abs=1e-14)
        assert float(b.cp) == pytest.approx(cp, abs=1e-13)
        assert float(b.sp) == pytest.approx(c, abs=1e-14)


def test_dirichlet_root_of_free_edge():
    assert abs(float(hill.solve_basis(P.zero(), math.pi ** 2).s)) < 1e-15


def test_series_branch_matches_near_zero():
    lam = np.array([-1e-3, -1e-9, 0.0, 1e-9, 1e-3])
    c, s, _, _ = hill.basis_arrays(P.zero(), lam)
    r = np.sqrt(np.abs(lam[lam != 0]))
    ref = np.insert(np.where(lam[lam != 0] < 0, np.sinh(r), np.sin(r)) / r, 2, 1.0)
    np.testing.assert_allclose(np.asarray(s, float), ref, rtol=1e-12)
    np.testing.assert_allclose(np.asarray(c, float)[[0, 4]],
                               [np.cosh(np.sqrt(1e-3)), np.cos(np.sqrt(1e-3))], rtol=1e-14)


def test_rk4_agrees_with_exact_step_transfer(even_step):
    lam = np.linspace(-5, 200, 40)
    exact = hill.basis_arrays(even_step, lam, SolverConfig("closed-form"))
    rk = hill.basis_arrays(even_step, lam, SolverConfig("rk4", 4096))
    for e, r in zip(exact, rk):
        np.testing.assert_allclose(np.asarray(r, float), np.asarray(e, float), atol=1e-8)


def test_graphene_against_independent_integrators():
    q = P.graphene()
    for lam in (-20.0, 3.0, 40.0):
        ours = hill.solve_basis(q, lam).as_tuple()
        ref = plain_rk4(q, lam, q.a, 100_000)
        np.testing.assert_allclose(ours, ref, atol=1e-9)
        sol = solve_ivp(lambda x, y: [y[1], (q(min(x, q.a)) - lam) * y[0],
                                      y[3], (q(min(x, q.a)) - lam) * y[2]],
                        (0, q.a), [1, 0, 0, 1], method="DOP853", rtol=1e-12, atol=1e-14)
        cc, ccp, ss, ssp = sol.y[:, -1]
        np.testing.assert_allclose(ours, (cc, ss, ccp, ssp), atol=1e-9)


def test_adaptive_method_agrees():
    q = P.graphene()
    a = hill.solve_basis(q, 12.0, SolverConfig("adaptive")).as_tuple()
    b = hill.solve_basis(q, 12.0).as_tuple()
    np.testing.assert_allclose(a, b, atol=1e-9)


@pytest.mark.parametrize("q", [P.zero(), P.graphene(),
                               P.piecewise_constant([0, 0.2, 1], [5.0, -1.0])])
def test_wronskian_is_one(q):
    lam = np.linspace(-50, 500, 200)
    c, s, cp, sp = hill.basis_arrays(q, lam)
    assert float(np.max(np.abs(c * sp - s * cp - 1))) < 1e-8


def test_even_potential_identities(even_step):
    for q in (even_step, P.graphene(), P.zero(2.0)):
        for lam in (-7.0, 1.5, 33.0, 180.0):
            rep = hill.half_identities(q, lam)
            assert rep.max_residual() < 1e-8


def test_uncorrected_derivative_identity_fails_for_free_edge():
    rep = hill.half_identities(P.zero(1.0), 2.0)
    c = math.cos(math.sqrt(2.0))
    # for q = 0 that right side equals C(a) + 1, while C'(a) = -sqrt(2) sin(sqrt 2)
    expected = -math.sqrt(2) * math.sin(math.sqrt(2)) - (c + 1)
    assert rep.residuals[hill.WRONG_DERIVATIVE_KEY] == pytest.approx(expected, abs=1e-12)
    assert abs(expected) > 2


def test_identities_need_even_potential():
    with pytest.raises(hill.PreconditionError):
        hill.half_identities(P.piecewise_constant([0, 0.4, 1], [1, 0]), 1.0)


def test_phi_warns_for_uneven_potential():
    q = P.piecewise_constant([0, 0.4, 1], [1, 0])
    with pytest.warns(hill.EvennessWarning):
        hill.phi(q, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert hill.phi(P.zero(), 0.0) == pytest.approx(1.0)


def test_phi_vectorised_shape():
    lam = np.linspace(0, 10, 12).reshape(3, 4)
    assert hill.phi(P.zero(), lam).shape == (3, 4)


def test_solver_rejects_bad_input():
    with pytest.raises(hill.SolverError):
        hill.solve_basis(P.zero(), float("nan"))
    with pytest.raises(ValueError):
        SolverConfig("rk4", 8)
    with pytest.raises(ValueError):
        SolverConfig("closed-form").resolve(P.graphene())
    with pytest.raises(ValueError):
        hill.basis_arrays(P.zero(), 1.0, x=2.0)


def test_partial_edge_endpoint():
    b = hill.solve_basis(P.zero(2.0), 4.0, x=0.5)
    assert float(b.c) == pytest.approx(math.cos(1.0), abs=1e-14)
    assert b.a == 0.5
