from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homoclinic.errors import EigenSolverFailure, NotHyperbolic, SymplecticDriftExceeded
from homoclinic.floquet import (
    FloquetData,
    asymptotic_floquet,
    constant_floquet_data,
    constant_spectrum,
    floquet_data,
    hyperbolic_splitting,
    monodromy,
    multipliers,
    symplectic_defect,
)

import oracle_values as ov

J = np.array([[0.0, -1.0], [1.0, 0.0]])
TWO_PI = 2 * np.pi


def const(M):
    M = np.asarray(M, dtype=float)
    return lambda t, lam: M


def periodic(t, lam):
    return np.diag([-1.0 + 0.3 * np.cos(t), 1.0])


def mixed(t, lam):
    return np.array([[1 + 0.5 * np.cos(t), 0.3], [0.3, 2 + np.sin(t)]])


def test_zero_field_gives_identity():
    assert np.allclose(monodromy(const(np.zeros((2, 2))), TWO_PI, 100, 0.0), np.eye(2), atol=0, rtol=0)


def test_constant_monodromy_matches_expm():
    phi = monodromy(const(np.diag([-1.0, 1.0])), TWO_PI, 4000, 0.0)
    assert np.allclose(phi, ov.CONST_MONODROMY, rtol=1e-8)
    rho = multipliers(phi)
    assert np.allclose(rho.real, ov.CONST_MULTIPLIERS, rtol=1e-6)
    assert abs(np.prod(rho) - 1) < 1e-8


def test_periodic_monodromy_matches_reference_integrator():
    phi = monodromy(periodic, TWO_PI, 4000, 0.0)
    assert np.allclose(phi, ov.PERIODIC_MONODROMY, rtol=1e-8)
    assert np.allclose(multipliers(phi).real, ov.PERIODIC_MULTIPLIERS, rtol=1e-6)


def test_rotation_is_on_unit_circle():
    data = floquet_data(const(np.diag([4.0, 1.0])), TWO_PI, 2000, 0.0)
    assert not data.hyperbolic
    assert data.margin < 1e-8
    assert np.allclose(np.abs(data.multipliers), 1.0, atol=1e-8)


@pytest.mark.parametrize("steps", [2000, 4000])
def test_symplectic_and_unimodular(steps):
    for f in (const(np.diag([-1.0, 1.0])), periodic, mixed):
        phi, defect = monodromy(f, TWO_PI, steps, 0.0, return_defect=True)
        assert defect < 1e-8
        assert abs(np.linalg.det(phi) - 1) < 1e-8


def test_defect_convergence_order():
    d = [monodromy(mixed, TWO_PI, s, 0.0, tol_symp=np.inf, return_defect=True)[1] for s in (200, 400, 800)]
    ratios = [d[0] / d[1], d[1] / d[2]]
    # fourth order at least; RK4 is observed to conserve the symplectic form to fifth order here
    assert all(r >= 14 for r in ratios), ratios


def test_drift_detected_with_too_few_steps():
    # a fast rotation under-resolved by RK4 contracts instead of rotating
    with pytest.raises(SymplecticDriftExceeded):
        monodromy(const(np.diag([30.0, 30.0])), TWO_PI, 100, 0.0)


def test_monodromy_preconditions():
    with pytest.raises(ValueError):
        monodromy(periodic, TWO_PI, 50, 0.0)
    with pytest.raises(ValueError):
        monodromy(periodic, -1.0, 200, 0.0)


def test_multipliers_identity_and_nonfinite():
    assert np.allclose(multipliers(np.eye(2)), [1.0, 1.0])
    with pytest.raises(EigenSolverFailure):
        multipliers(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_multipliers_sorted_descending():
    rho = multipliers(monodromy(periodic, TWO_PI, 2000, 0.0))
    assert np.all(np.diff(np.abs(rho)) <= 0)


@pytest.mark.parametrize(
    "A, expected",
    [(np.diag([4.0, 1.0]), [2j, -2j]), (np.diag([-1.0, 1.0]), [1.0, -1.0]), (np.diag([0.0, 1.0]), [0.0, 0.0])],
)
def test_constant_spectrum(A, expected):
    w = constant_spectrum(A)
    assert np.allclose(sorted(w, key=lambda z: (z.real, z.imag)), sorted(expected, key=lambda z: (np.real(z), np.imag(z))),
                       atol=1e-12)


def test_constant_spectrum_requires_symmetry():
    with pytest.raises(ValueError):
        constant_spectrum(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_stable_direction():
    data = constant_floquet_data(np.diag([-1.0, 1.0]), TWO_PI)
    S, U = hyperbolic_splitting(data)
    s = S[:, 0] * np.sign(S[0, 0])
    assert np.allclose(s, ov.STABLE_DIRECTION, atol=1e-12)
    assert S.shape == U.shape == (2, 1)


def test_identity_is_not_hyperbolic():
    data = FloquetData(np.eye(2), np.array([1.0, 1.0]), False, 0.0, None, None, 1.0)
    with pytest.raises(NotHyperbolic):
        hyperbolic_splitting(data)


def test_constant_route_agrees_with_integration():
    A = np.array([[-1.2, 0.4], [0.4, 0.8]])
    c = constant_floquet_data(A, TWO_PI)
    n = floquet_data(const(A), TWO_PI, 4000, 0.0)
    assert np.allclose(np.sort(np.abs(c.multipliers)), np.sort(np.abs(n.multipliers)), rtol=1e-6)
    for X, Y in zip(hyperbolic_splitting(c), hyperbolic_splitting(n)):
        # same subspaces: projectors agree
        assert np.allclose(X @ X.T, Y @ Y.T, atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, -0.2), st.floats(0.2, 3), st.floats(-0.3, 0.3))
def test_multiplier_reciprocity(a, b, c):
    A = np.array([[a, c], [c, b]])
    rho = multipliers(monodromy(const(A), 1.0, 400, 0.0))
    for r in rho:
        if abs(abs(r) - 1) > 1e-6:
            assert np.min(np.abs(r * rho - 1)) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.floats(0.3, 4.0))
def test_splitting_dimensions(mu):
    data = constant_floquet_data(np.diag([-mu, 1.0]), TWO_PI)
    assert data.hyperbolic
    S, U = data.stable_basis, data.unstable_basis
    assert S.shape[1] + U.shape[1] == 2
    assert np.linalg.matrix_rank(np.hstack([S, U])) == 2


def test_asymptotic_floquet_section6(model):
    d = asymptotic_floquet(model, "+", -1.0)
    assert d.hyperbolic and d.generator is not None
    assert d.margin == pytest.approx(1 - np.exp(-TWO_PI), rel=1e-12)
    assert not asymptotic_floquet(model, "-", 1.0).hyperbolic


def test_symplectic_defect_zero_for_rotation():
    c, s = np.cos(0.3), np.sin(0.3)
    assert symplectic_defect(np.array([[c, -s], [s, c]]), J) < 1e-15
