import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jacobi_scatter.coefficients import finite_model, free_model, jacobi_family, pollaczek_family
from jacobi_scatter.errors import DecayError, EdgeProximityError
from jacobi_scatter.spectral import (
    eigenvalues,
    gershgorin_bound,
    gram_matrix,
    resolvent_element,
    spectral_density_element,
    stieltjes_reconstruction,
    stone_jump,
    sturm_count,
    truncated_eigenvalues_oracle,
    truncated_resolvent_oracle,
    weight,
)

upper_half = st.builds(complex, st.floats(-1.5, 1.5), st.floats(0.05, 1.0))
finite_coeffs = st.tuples(
    st.lists(st.floats(0.3, 1.0), min_size=1, max_size=3),
    st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=3),
)


def test_free_weight_is_semicircle():
    lam = np.linspace(-0.9, 0.9, 11)
    assert np.allclose(weight(free_model(), lam), 2 / np.pi * np.sqrt(1 - lam**2), rtol=1e-14)


def test_weight_guards():
    with pytest.raises(EdgeProximityError):
        weight(free_model(), 1.0)
    with pytest.raises(DecayError):
        weight(pollaczek_family(1.0, 0.0), 0.2)


@settings(max_examples=10)
@given(upper_half, st.integers(0, 8), st.integers(0, 8))
def test_resolvent_symmetry_and_herglotz(z, n, m):
    model = jacobi_family(0.3, -0.2)
    assert resolvent_element(model, z, n, m) == pytest.approx(resolvent_element(model, z, m, n), rel=1e-12)
    assert resolvent_element(model, z, n, n).imag > 0
    conj = resolvent_element(model, z.conjugate(), n, m)
    assert conj == pytest.approx(resolvent_element(model, z, n, m).conjugate(), rel=1e-12)


@given(finite_coeffs, upper_half, st.integers(0, 6), st.integers(0, 6))
def test_finite_model_resolvent_matches_oracle(coeffs, z, n, m):
    model = finite_model(*coeffs)
    assert resolvent_element(model, z, n, m) == pytest.approx(
        truncated_resolvent_oracle(model, z, n, m, N=1500), abs=1e-10
    )


def test_stone_jump_matches_density():
    model = finite_model([0.6], [0.3, -0.2])
    for lam in (-0.5, 0.2, 0.7):
        jump = stone_jump(model, lam, 1, 2, eps=1e-7)
        assert jump == pytest.approx(spectral_density_element(model, lam, 1, 2), abs=1e-6)


def test_rank_one_eigenvalue():
    spec = eigenvalues(finite_model([], [1.0]))
    assert len(spec) == 1
    assert spec.eigenvalues[0] == pytest.approx(1.25, abs=1e-12)
    assert spec.mu[0] == pytest.approx(0.5, abs=1e-12)
    assert spec.blaschke_sum() == pytest.approx(0.5)


@pytest.mark.slow
@settings(max_examples=10)
@given(finite_coeffs)
def test_eigenvalues_match_oracle(coeffs):
    model = finite_model(*coeffs)
    spec = eigenvalues(model)
    oracle = truncated_eigenvalues_oracle(model, 3000)
    outside = oracle[np.abs(oracle) > 1 + 1e-3]
    # every confirmed eigenvalue is an oracle eigenvalue, and none clearly outside is missed
    for value in spec.eigenvalues:
        assert np.min(np.abs(oracle - value)) < 1e-8
    assert len(spec) >= outside.size


def test_free_and_jacobi_have_no_eigenvalues():
    assert len(eigenvalues(free_model())) == 0
    assert len(eigenvalues(jacobi_family(0.3, -0.2))) == 0


def test_sturm_count_agrees_with_lapack():
    model = jacobi_family(0.3, -0.2)
    ev = truncated_eigenvalues_oracle(model, 400)
    for x in (-0.99, -0.3, 0.0, 0.5, 0.999):
        assert sturm_count(model, 400, x) == int(np.sum(ev > x))


def test_gershgorin_bounds_spectrum():
    model = finite_model([0.9], [1.4, -0.6])
    bound = gershgorin_bound(model)
    ev = truncated_eigenvalues_oracle(model, 200)
    assert np.max(np.abs(ev)) <= bound


@pytest.mark.slow
def test_gram_matrix_is_identity():
    G = gram_matrix(jacobi_family(1.2, 0.4), 12)
    assert np.max(np.abs(G - np.eye(13))) < 1e-9


def test_stieltjes_from_callable_weight():
    # Chebyshev second-kind weight gives the free model
    rec = stieltjes_reconstruction(lambda lam: 2 / np.pi * np.sqrt(1 - lam**2), 10)
    a, b = rec.arrays(9)
    assert np.allclose(a, 0.5, atol=1e-10) and np.allclose(b, 0.0, atol=1e-10)


def test_stieltjes_round_trip_jacobi_closed_weight():
    model = jacobi_family(0.5, 1.5)
    rec = stieltjes_reconstruction(model.weight, 8, order=40)
    assert np.allclose(rec.arrays(7)[0], model.arrays(7)[0], atol=1e-8)
    assert np.allclose(rec.arrays(7)[1], model.arrays(7)[1], atol=1e-8)


def test_total_mass_with_eigenvalue():
    # continuous mass plus the eigenvalue masses equals one
    model = finite_model([], [1.0])
    from scipy.integrate import quad

    cont, _ = quad(lambda x: weight(model, x), -1 + 1e-9, 1 - 1e-9, limit=200)
    # eigenvector of the rank-one model at 5/4 is mu^n with norm^2 1/(1 - mu^2)
    point = 1 - 0.25
    assert math.isclose(cont + point, 1.0, rel_tol=1e-7)
