import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jacobi_scatter.coefficients import finite_model, free_model, jacobi_family, pollaczek_family
from jacobi_scatter.errors import DecayError, EdgeProximityError
from jacobi_scatter.jost import (
    edge_jost,
    jost_backward,
    jost_function,
    jost_function_array,
    jost_via_polynomials,
    jost_volterra,
    resonance_analysis,
    truncation_for,
)
from jacobi_scatter.lattice import SpectralParameter, apply_H_array, boundary_parameter

disc = st.complex_numbers(min_magnitude=0.05, max_magnitude=0.95, allow_nan=False, allow_infinity=False)
finite_coeffs = st.tuples(
    st.lists(st.floats(0.3, 1.0), min_size=1, max_size=4),
    st.lists(st.floats(-0.8, 0.8), min_size=1, max_size=4),
)


def test_free_jost_solution_is_power():
    sp = SpectralParameter(0.4 + 0.3j)
    jost = jost_backward(free_model(), sp, n_keep=20)
    assert np.allclose(jost.normalized, 1.0)
    assert jost.Omega == 1.0


@given(disc)
def test_jost_solves_recurrence(zeta):
    model = jacobi_family(0.3, -0.2)
    sp = SpectralParameter(zeta)
    jost = jost_backward(model, sp, n_keep=60)
    f = jost.f(np.arange(0, 61))
    residual = apply_H_array(model, f) - sp.z * f[:-1]
    scale = np.abs(f[:-1]) + np.abs(f[1:])
    assert np.max(np.abs(residual[1:]) / scale[1:]) < 1e-12
    # the boundary row a_{-1} f_{-1} + b_0 f_0 + a_0 f_1 = z f_0 defines f_{-1}
    head = 0.5 * jost.f(-1) + model.b(0) * f[0] + model.a(0) * f[1] - sp.z * f[0]
    assert abs(head) < 1e-12 * (abs(f[0]) + abs(jost.f(-1)))


@settings(max_examples=8)
@given(disc)
def test_jost_function_reflection_symmetry(zeta):
    # real coefficients: Omega(conj zeta) = conj Omega(zeta)
    model = jacobi_family(0.3, -0.2)
    values = jost_function_array(model, np.array([zeta, np.conj(zeta)]))
    assert cmath.isclose(values[1], values[0].conjugate(), rel_tol=1e-12, abs_tol=1e-14)


@given(finite_coeffs, disc)
def test_finite_support_backward_volterra_polynomial_agree(coeffs, zeta):
    model = finite_model(*coeffs)
    sp = SpectralParameter(zeta)
    back = jost_backward(model, sp)
    volt = jost_volterra(model, sp)
    k = min(back.normalized.size, volt.normalized.size)
    assert np.allclose(back.normalized[:k], volt.normalized[:k], rtol=1e-10, atol=1e-10)
    assert cmath.isclose(jost_via_polynomials(model, sp), back.Omega, rel_tol=1e-9, abs_tol=1e-10)


@given(finite_coeffs)
def test_finite_support_omega_is_polynomial(coeffs):
    # Omega is a polynomial in zeta of degree <= 2 (support + 1): check it via the unit circle mean
    model = finite_model(*coeffs)
    assert jost_function_array(model, np.asarray(0j), guard=False) == pytest.approx(
        np.mean(jost_function_array(model, 0.5 * np.exp(2j * np.pi * np.arange(64) / 64), guard=False)), abs=1e-12
    )


def test_volterra_monitor_is_factorial():
    model = jacobi_family(0.3, -0.2)
    jost = jost_volterra(model, SpectralParameter(0.3 + 0.3j))
    constants = jost.volterra.implied_constants()
    assert np.all(np.isfinite(constants[constants > 0]))
    assert np.max(constants) < 10


def test_jost_function_refuses_edges_and_vanishing_boundary():
    model = jacobi_family(0.3, -0.2)
    with pytest.raises(EdgeProximityError):
        jost_function(model, SpectralParameter(1 - 1e-8))
    assert abs(jost_function(model, boundary_parameter(0.3))) > 0.1


def test_truncation_grows_with_tolerance():
    model = jacobi_family(0.3, -0.2)
    assert truncation_for(model, 1e-4) < truncation_for(model, 1e-8)
    assert truncation_for(finite_model([0.6], [0.3, -0.2]), 1e-12) <= 3


def test_edge_values_match_nearby_interior():
    model = finite_model([0.6, 0.45], [0.2, -0.1])
    for sign in (1, -1):
        edge = edge_jost(model, sign).Omega
        near = jost_function_array(model, np.asarray(sign * (1 - 1e-7) + 0j), guard=False)
        assert abs(edge - near) < 1e-5


def test_edge_requires_first_moment():
    with pytest.raises(DecayError):
        edge_jost(jacobi_family(0.3, -0.2), 1)
    with pytest.raises(DecayError):
        resonance_analysis(pollaczek_family(1, 0), 1)


def test_resonance_of_chebyshev_second_kind_shift():
    # jacobi(1/2, -1/2): only b_0 = -1/2 differs, resonance at -1 only
    model = jacobi_family(0.5, -0.5)
    minus = resonance_analysis(model, -1)
    plus = resonance_analysis(model, 1)
    assert minus.is_resonance and not plus.is_resonance
    assert minus.gamma_series == pytest.approx(minus.gamma_limit, abs=1e-12)
    assert np.allclose(minus.approach_ratios, 1.0, atol=1e-2)


def test_double_resonance_of_chebyshev_first_kind():
    model = jacobi_family(-0.5, -0.5)
    assert resonance_analysis(model, 1).is_resonance
    assert resonance_analysis(model, -1).is_resonance
