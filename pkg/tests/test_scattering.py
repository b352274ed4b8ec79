import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jacobi_scatter.coefficients import finite_model, free_model, jacobi_family
from jacobi_scatter.errors import DecayError, EdgeProximityError
from jacobi_scatter.lattice import SpectralParameter
from jacobi_scatter.scattering import (
    boundary_phase,
    determinant_oracle,
    isometry_defect,
    perturbation_determinant,
    phase_profile,
    scattering_matrix,
    trace_power_identity,
    trace_resolvent_difference,
    wave_operator_element,
)

disc = st.complex_numbers(min_magnitude=0.05, max_magnitude=0.95, allow_nan=False, allow_infinity=False)
finite_coeffs = st.tuples(
    st.lists(st.floats(0.3, 1.0), min_size=1, max_size=4),
    st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=4),
)


@given(finite_coeffs, disc)
def test_determinant_matches_matrix_oracle(coeffs, zeta):
    model = finite_model(*coeffs)
    sp = SpectralParameter(zeta)
    assert cmath.isclose(perturbation_determinant(model, sp), determinant_oracle(model, zeta), rel_tol=1e-9, abs_tol=1e-11)


def test_determinant_accepts_z_and_is_one_at_infinity():
    model = finite_model([0.6], [0.3, -0.2])
    assert perturbation_determinant(model, 3.0 + 0j) == pytest.approx(determinant_oracle(model, SpectralParameter(3 - 8**0.5).zeta))
    assert perturbation_determinant(model, 1e8 + 0j) == pytest.approx(1.0, abs=1e-6)


def test_oracle_needs_finite_support():
    with pytest.raises(DecayError):
        determinant_oracle(jacobi_family(0.3, -0.2), 0.5)


@settings(max_examples=10)
@given(finite_coeffs, st.floats(0.01, 3.13))
def test_scattering_matrix_is_unitary(coeffs, theta):
    model = finite_model(*coeffs)
    S = scattering_matrix(model, np.cos(theta))
    assert abs(abs(S) - 1) < 1e-12


def test_phase_profile_guard():
    with pytest.raises(EdgeProximityError):
        phase_profile(jacobi_family(0.3, -0.2), [1e-5, 1.0])


def test_free_phase_is_zero():
    prof = phase_profile(free_model(), np.linspace(0.01, 3.13, 30))
    assert np.max(np.abs(prof.xi)) < 1e-15
    assert np.allclose(prof.S, 1.0)


def test_boundary_phase_is_continuous_and_matches_profile():
    model = jacobi_family(1.5, 0.5)
    theta = np.linspace(0.05, 3.09, 120)
    eta = boundary_phase(model, theta)
    assert np.max(np.abs(np.diff(eta))) < 0.2
    # closed form eta/pi = (a+b-1) theta/(2pi) - (2a-1)/4
    expected = np.pi * ((1.5 + 0.5 - 1) * theta / (2 * np.pi) - (2 * 1.5 - 1) / 4)
    assert np.max(np.abs(eta - expected)) < 1e-8


@pytest.mark.parametrize("zeta", [0.5, 0.3 + 0.6j, -0.7 + 0.1j])
def test_trace_resolvent_difference_routes(zeta):
    out = trace_resolvent_difference(finite_model([0.6], [0.3, -0.2]), SpectralParameter(zeta), N=200)
    assert out["ok"] and out["difference"] < 1e-8


def test_trace_power_includes_eigenvalue_ladder():
    model = finite_model([], [1.0])
    out = trace_power_identity(model, 1)
    assert out["lhs"] == pytest.approx(1.0, abs=1e-14)
    assert out["ladder"] != 0
    assert out["residual"] < 1e-8


def test_free_wave_operator_elements():
    assert wave_operator_element(free_model(), 3, 3) == pytest.approx(1.0, abs=1e-12)
    assert wave_operator_element(free_model(), 3, 4) == pytest.approx(0.0, abs=1e-12)


def test_wave_operator_is_isometric_on_finite_model_without_eigenvalues():
    model = finite_model([0.55], [0.1, -0.1])
    assert isometry_defect(model, 10) < 1e-8
