"""Scattering and spectral theory of Jacobi matrices with decaying perturbations."""

from .coefficients import (
    CoefficientModel,
    DecayClass,
    PowerTail,
    edge_example,
    finite_model,
    free_model,
    jacobi_family,
    load_model,
    normalization_A,
    pollaczek_family,
    save_model,
)
from .errors import ComputationError, ConvergenceError, DecayError, EdgeProximityError, ModelError
from .lattice import SpectralParameter, boundary_parameter, zeta_of

__version__ = "0.1.0"
