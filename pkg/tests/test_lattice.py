import cmath

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from jacobi_scatter.coefficients import finite_model, free_model, jacobi_family
from jacobi_scatter.errors import EdgeProximityError
from jacobi_scatter.lattice import (
    LAMBDA_GUARD,
    PolySequence,
    SpectralParameter,
    apply_H_array,
    apply_V_array,
    boundary_parameter,
    chebyshev_T,
    chebyshev_U,
    growing_solution,
    leading_coefficients,
    polynomial_table,
    regular_polynomials,
    sqrt_z2m1,
    wronskian,
    z_of,
    zeta_array,
    zeta_of,
)

off_cut = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False).filter(
    lambda z: abs(z.imag) > 1e-3 or abs(z.real) > 1.001
)
disc = st.complex_numbers(min_magnitude=0.05, max_magnitude=0.97, allow_nan=False, allow_infinity=False)


@given(off_cut)
def test_zeta_map_inverts(z):
    sp = zeta_of(z)
    assert abs(sp.zeta) < 1
    assert cmath.isclose(complex(z_of(sp.zeta)), z, rel_tol=1e-12, abs_tol=1e-12)
    # sqrt(z^2 - 1) branch: behaves like z at infinity, i.e. z - sqrt = zeta is small
    assert cmath.isclose(sp.sqrt_z2m1**2, z * z - 1, rel_tol=1e-10, abs_tol=1e-10)


@given(st.floats(-0.999, 0.999))
def test_boundary_convention(lam):
    plus = boundary_parameter(lam, 1)
    minus = boundary_parameter(lam, -1)
    theta = np.arccos(lam)
    assert cmath.isclose(plus.zeta, cmath.exp(-1j * theta))
    assert plus.conjugate() == minus
    # lambda + i eps approaches the + side
    approach = zeta_of(complex(lam, 1e-9)).zeta
    assert abs(approach - plus.zeta) < 1e-4


def test_zeta_of_on_cut_needs_side():
    with pytest.raises(ValueError):
        zeta_of(0.3)
    assert zeta_of(0.3, side=-1).side == "boundary_minus"


def test_spectral_parameter_validation():
    with pytest.raises(ValueError):
        SpectralParameter(1.2)
    with pytest.raises(ValueError):
        SpectralParameter(0.0)
    with pytest.raises(ValueError):
        SpectralParameter(0.5, "boundary_plus")
    with pytest.raises(ValueError):
        SpectralParameter(0.5, "sideways")


def test_zeta_array_matches_scalar_map():
    z = np.array([2.0, -3.0 + 0.5j, 0.1 + 0.2j, 0.1 - 0.2j])
    assert np.allclose(zeta_array(z), [zeta_of(v).zeta for v in z])
    assert np.allclose(sqrt_z2m1(zeta_array(z)) ** 2, z * z - 1)


@given(disc, st.integers(0, 60))
def test_free_polynomials_are_chebyshev(zeta, n):
    sp = SpectralParameter(zeta)
    P = polynomial_table(free_model(), sp.z, n)
    assert cmath.isclose(P[n + 1], chebyshev_U(n, sp), rel_tol=1e-9, abs_tol=1e-9)


def test_chebyshev_T_inside_and_outside():
    lam = np.array([-2.0, -0.3, 0.0, 0.8, 1.5])
    for n in range(6):
        expected = np.polynomial.chebyshev.chebval(lam, [0] * n + [1])
        assert np.allclose(chebyshev_T(n, lam), expected)
    assert chebyshev_T(3, 0.5) == pytest.approx(-1.0)


@given(disc, st.sampled_from([-1, 1]))
def test_scaled_tables_agree(zeta, scale):
    model = jacobi_family(0.3, -0.2)
    sp = SpectralParameter(zeta)
    raw = polynomial_table(model, sp.z, 15)
    scaled = polynomial_table(model, sp.z, 15, scale=scale, zeta=zeta)
    n = np.arange(-1, 16)
    assert np.allclose(scaled * zeta ** (-scale * n.astype(float)), raw, rtol=1e-9, atol=1e-12)


def test_leading_coefficients_match_polyfit():
    model = jacobi_family(0.7, 0.1)
    k, r = leading_coefficients(model, 6)
    x = np.cos(np.linspace(0.1, 3.0, 40))
    P = polynomial_table(model, x, 6).real
    for n in range(1, 7):
        coef = np.polynomial.polynomial.polyfit(x, P[n + 1], n)
        assert coef[n] == pytest.approx(k[n], rel=1e-8)
        assert coef[n - 1] / coef[n] == pytest.approx(r[n], rel=1e-7, abs=1e-10)


@given(disc, st.integers(0, 30))
def test_wronskian_with_jost_is_constant(zeta, n):
    from jacobi_scatter.jost import jost_backward

    model = jacobi_family(0.3, -0.2)
    sp = SpectralParameter(zeta)
    P = regular_polynomials(model, sp, 40, scale=1)
    jost = jost_backward(model, sp, n_keep=42)
    f = PolySequence(jost.normalized[:42], sp, "jost", scale=-1)
    assert cmath.isclose(wronskian(P, f, model, n), wronskian(P, f, model, -1), rel_tol=1e-8, abs_tol=1e-12)


def test_wronskian_index_range():
    sp = SpectralParameter(0.5)
    P = regular_polynomials(free_model(), sp, 5)
    with pytest.raises(IndexError):
        wronskian(P, P, free_model(), 5)


def test_growing_solution_solves_recurrence_and_tends_to_constant():
    model = jacobi_family(0.3, -0.2)
    sp = SpectralParameter(0.6 + 0.2j)
    g = growing_solution(model, sp, 0, 200)
    values = g.value(np.arange(0, 201))
    residual = apply_H_array(model, values) - sp.z * values[:-1]
    assert np.max(np.abs(residual[1:] / np.abs(values[1:-1]))) < 1e-10
    assert abs(g.scaled(200) - 1 / sp.sqrt_z2m1) < 1e-2


def test_apply_V_is_difference_with_free():
    model = finite_model([0.6, 0.4], [0.3, -0.2, 0.1])
    u = np.random.default_rng(1).normal(size=12)
    assert np.allclose(apply_V_array(model, u), apply_H_array(model, u) - apply_H_array(free_model(), u))


def test_boundary_polynomials_are_real():
    model = jacobi_family(0.3, -0.2)
    P = regular_polynomials(model, boundary_parameter(0.2), 10)
    assert np.all(P.values.imag == 0)


def test_lambda_guard_matches_zeta_guard():
    assert LAMBDA_GUARD == pytest.approx(1 - np.cos(1e-6), rel=1e-6)


@given(disc)
def test_chebyshev_U_guard(zeta):
    assume(abs(zeta - 1) > 1e-3 and abs(zeta + 1) > 1e-3)
    chebyshev_U(3, SpectralParameter(zeta))
    with pytest.raises(EdgeProximityError):
        chebyshev_U(3, SpectralParameter(1 - 1e-8))


@pytest.mark.parametrize("z", [1e8, -3e12 + 1j, 5e6j])
def test_zeta_map_far_from_cut(z):
    zeta = zeta_of(z).zeta
    assert zeta != 0
    assert cmath.isclose(zeta, 1 / (2 * z), rel_tol=1e-9)
