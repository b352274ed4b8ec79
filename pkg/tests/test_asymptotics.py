import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jacobi_scatter.asymptotics import (
    VerdictConfig,
    aitken,
    bernstein_szego_prediction,
    edge_report,
    exterior_limit_report,
    jacobi_book_prediction,
    jacobi_edge_constant,
    oscillation_report,
)
from jacobi_scatter.coefficients import finite_model, free_model, jacobi_family, pollaczek_family
from jacobi_scatter.errors import DecayError
from jacobi_scatter.lattice import SpectralParameter, polynomial_table


@given(st.floats(-0.9, 0.9).filter(lambda r: abs(r) > 0.05), st.floats(-5, 5))
def test_aitken_is_exact_on_geometric_sequences(ratio, limit):
    seq = limit + 2.0 * ratio ** np.arange(8)
    assert np.allclose(aitken(seq)[: 6], limit, atol=1e-9)


def test_bernstein_szego_forms_agree():
    model = jacobi_family(0.3, -0.2)
    n = np.array([10, 100, 1000])
    first, second = bernstein_szego_prediction(model, 0.4, n, both=True)
    assert np.allclose(first, second, atol=1e-14)


def test_bernstein_szego_matches_book_form():
    model = jacobi_family(0.3, -0.2)
    n = np.array([50, 500])
    ours = bernstein_szego_prediction(model, -0.3, n)
    assert np.allclose(ours, jacobi_book_prediction(0.3, -0.2, -0.3, n), atol=1e-10)


def test_free_polynomials_obey_law_exactly():
    rep = oscillation_report(free_model(), -0.45, n_max=20_000)
    assert rep.verdict and np.max(rep.errors) < 1e-12


def test_finite_model_law_is_exact_beyond_support():
    model = finite_model([0.6], [0.3, -0.2])
    rep = oscillation_report(model, 0.3, n_max=5000)
    assert rep.verdict and np.max(rep.errors[rep.n > 10]) < 1e-11


def test_exterior_geometric_for_finite_model():
    model = finite_model([0.6], [0.3, -0.2])
    rep = exterior_limit_report(model, SpectralParameter(0.4 + 0.3j), N_ladder=(10, 20, 50, 100))
    assert rep.kind == "exterior_generic"
    assert rep.errors[-1] < 1e-12


def test_exterior_ladder_validation():
    with pytest.raises(ValueError):
        exterior_limit_report(free_model(), SpectralParameter(0.5), N_ladder=(10, 20))


def test_eigenvalue_branch_constant_is_nonzero():
    model = finite_model([], [1.0])
    rep = exterior_limit_report(model, SpectralParameter(0.5), N_ladder=(10, 100, 1000))
    assert rep.kind == "exterior_eigenvalue"
    assert rep.verdict
    # at the eigenvalue P_n = mu^n is the decaying solution, so zeta^-N P_N is exactly 1
    P = polynomial_table(model, 1.25, 30).real
    assert P[31] * 2.0**30 == pytest.approx(rep.details["d_plus"].real, rel=1e-9)
    assert rep.details["d_plus"] == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("sign", [1, -1])
def test_jacobi_edge_power_law(sign):
    rep = edge_report(jacobi_family(1.5, 0.5), sign, n_max=20_000, config=VerdictConfig(edge_rel=1e-2))
    assert rep.kind == "edge_jacobi_power"
    assert rep.details["fitted_exponent"] == pytest.approx(rep.details["exponent"], abs=1e-3)
    assert rep.verdict


def test_jacobi_edge_constant_symmetry():
    assert jacobi_edge_constant(0.3, -0.2, -1) == pytest.approx(jacobi_edge_constant(-0.2, 0.3, 1))


def test_edge_dichotomy_for_finite_models():
    regular = edge_report(finite_model([0.6], [0.3, -0.2]), 1, n_max=5000)
    assert regular.kind == "edge_regular" and regular.verdict
    resonant = edge_report(jacobi_family(0.5, -0.5), -1, n_max=5000)
    assert resonant.kind == "edge_resonance" and resonant.verdict


def test_edge_report_refuses_weak_decay():
    with pytest.raises(DecayError):
        edge_report(pollaczek_family(1.0, 0.0), 1, n_max=100)
