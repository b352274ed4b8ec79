import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jacobi_scatter.coefficients import edge_example, finite_model, free_model, jacobi_constant, jacobi_family, pollaczek_family
from jacobi_scatter.errors import ConvergenceError
from jacobi_scatter.szego import (
    blaschke,
    case_sum_rule,
    chebyshev_trace,
    harmonic_conjugacy_residual,
    szego_condition_probe,
    szego_evaluation,
    szego_function,
)

disc = st.complex_numbers(max_magnitude=0.9, allow_nan=False, allow_infinity=False)
finite_coeffs = st.tuples(
    st.lists(st.floats(0.3, 1.0), min_size=1, max_size=3),
    st.lists(st.floats(-1.2, 1.2), min_size=1, max_size=3),
)


def jacobi_szego_closed_form(alpha, beta, zeta):
    kappa = jacobi_constant(alpha, beta)
    return math.sqrt(kappa) * 2 ** (-(alpha + beta + 1) / 2) * (1 - zeta) ** (alpha + 0.5) * (1 + zeta) ** (beta + 0.5)


def test_free_szego_function():
    zeta = np.array([0.0, 0.3 + 0.4j, -0.8])
    assert np.allclose(szego_function(free_model(), zeta), (1 - zeta**2) / math.sqrt(2 * math.pi), rtol=1e-12)


@pytest.mark.parametrize("alpha,beta", [(0.3, -0.2), (1.5, 0.5), (-0.5, -0.5)])
def test_jacobi_szego_closed_form(alpha, beta):
    zeta = np.array([0.1, 0.5 + 0.5j, -0.7 - 0.2j, 0.85j])
    D = szego_function(jacobi_family(alpha, beta), zeta)
    assert np.allclose(D, jacobi_szego_closed_form(alpha, beta, zeta), rtol=1e-9)


def test_szego_function_radius_limit():
    with pytest.raises(ValueError):
        szego_function(free_model(), 0.9999)


@given(st.lists(st.floats(-0.95, 0.95).filter(lambda m: abs(m) > 0.05), min_size=1, max_size=4), st.floats(0, 2 * np.pi))
def test_blaschke_unimodular_on_circle_and_zero_at_mu(mu, t):
    assert abs(abs(blaschke(mu, np.exp(1j * t))) - 1) < 1e-12
    assert abs(blaschke(mu, mu[0])) < 1e-12
    assert blaschke(mu, 0.0).real > 0


def test_blaschke_rejects_bad_zeros():
    with pytest.raises(ValueError):
        blaschke([1.0], 0.2)
    with pytest.raises(ValueError):
        blaschke([0.0], 0.2)


@settings(max_examples=8)
@given(finite_coeffs, disc)
def test_factorization_on_random_finite_models(coeffs, zeta):
    model = finite_model(*coeffs)
    ev = szego_evaluation(model, zeta)
    assert ev.residual < 1e-6 * max(1.0, abs(ev.Delta))


def test_harmonic_conjugacy():
    theta = np.linspace(0.01, 3.13, 50)
    assert harmonic_conjugacy_residual(jacobi_family(0.3, -0.2), theta) < 1e-10
    assert harmonic_conjugacy_residual(finite_model([], [1.0]), theta) < 1e-12


@settings(max_examples=8)
@given(finite_coeffs)
def test_case_rules_on_random_finite_models(coeffs):
    model = finite_model(*coeffs)
    for order in (0, 1, 2):
        assert case_sum_rule(model, order)["residual"] < 1e-7


def test_chebyshev_trace_small_orders():
    # Tr(H - H0) = sum b, Tr(T_0) differences vanish
    model = finite_model([0.6], [0.3, -0.2])
    assert chebyshev_trace(model, 0) == 0.0
    assert chebyshev_trace(model, 1) == pytest.approx(0.1)
    # T_2 = 2 H^2 - 1: 2 * (0.35) = 0.7
    assert chebyshev_trace(model, 2) == pytest.approx(0.7)


@pytest.mark.slow
def test_chebyshev_trace_infinite_model_matches_sum_rule():
    out = case_sum_rule(jacobi_family(0.3, -0.2), 1)
    assert out["residual"] < 1e-8


@pytest.mark.parametrize("model", [free_model(), jacobi_family(0.3, -0.2), edge_example(1.0, 1)])
def test_probe_converges_for_trace_class(model):
    probe = szego_condition_probe(model)
    assert probe["converges"] and probe["weighted_converges"]


def test_probe_detects_pollaczek_rates_at_both_ends():
    a, b = 1.0, 0.5
    probe = szego_condition_probe(pollaczek_family(a, b), predicted_rate=np.pi * (a + b))
    assert not probe["converges"]
    assert probe["right_rate_matches"]
    # ln w ~ -2 pi (a - b)/(pi - theta) at the left end
    assert probe["left_rate"] == pytest.approx(np.pi * (a - b), rel=0.05)


def test_pollaczek_szego_function_refused():
    with pytest.raises(ConvergenceError):
        szego_function(pollaczek_family(1.0, 0.0), 0.3)


def test_case_rules_with_eigenvalue_near_edge():
    # mu ~ 0.70 puts a Jost zero close to the circle; a fixed-order rule leaves 4e-7
    model = finite_model([1.0], [0.0, 1.0, 1.0])
    for order in (0, 1, 2):
        assert case_sum_rule(model, order)["residual"] < 1e-10


def test_factorization_with_weak_hopping():
    # weak a_1, a_2 leave Jost zeros near the circle that a fixed order-20 rule misses
    ev = szego_evaluation(finite_model([0.875, 0.3125, 0.3125], [0.0]), 0j)
    assert ev.residual < 1e-9
