"""Weight function, resolvent, discrete spectrum and coefficient reconstruction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal, solve_banded
from scipy.optimize import brentq

from ._quadrature import theta_rule
from .coefficients import CoefficientModel, finite_model
from .errors import ComputationError, DecayError, EdgeProximityError
from .jost import DEFAULT_TOL, jost_backward, jost_function_array, resonance_analysis
from .lattice import LAMBDA_GUARD, SpectralParameter, polynomial_table, zeta_of

__all__ = [
    "DiscreteSpectrum",
    "weight",
    "boundary_jost",
    "resolvent_element",
    "spectral_density_element",
    "stone_jump",
    "eigenvalues",
    "gershgorin_bound",
    "truncated_eigenvalues_oracle",
    "sturm_count",
    "truncated_resolvent_oracle",
    "stieltjes_reconstruction",
    "gram_matrix",
]


def _require_trace_class(model: CoefficientModel) -> None:
    if model.decay_class.kind == "unclassified":
        raise DecayError(f"model {model.name} is not trace class")


def _check_lambda(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if np.any(np.abs(lam) > 1 - LAMBDA_GUARD):
        raise EdgeProximityError(f"lambda must lie in [-1 + {LAMBDA_GUARD:.3g}, 1 - {LAMBDA_GUARD:.3g}]")
    return lam


def boundary_jost(model: CoefficientModel, theta, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Omega(cos theta + i0) = Omega(e^{-i theta}); no edge guard (quadrature use)."""
    theta = np.asarray(theta, dtype=float)
    return jost_function_array(model, np.exp(-1j * theta), tol, guard=False)


def weight_from_theta(model: CoefficientModel, theta, tol: float = DEFAULT_TOL) -> np.ndarray:
    """w(cos theta) = (2/pi) sin(theta) / |Omega(e^{-i theta})|^2."""
    theta = np.asarray(theta, dtype=float)
    return 2 / np.pi * np.sin(theta) / np.abs(boundary_jost(model, theta, tol)) ** 2


def weight(model: CoefficientModel, lam, tol: float = DEFAULT_TOL):
    """Absolutely continuous weight w(lambda) = (2/pi) sqrt(1 - lambda^2) |Omega(lambda + i0)|^-2."""
    _require_trace_class(model)
    lam = _check_lambda(lam)
    out = weight_from_theta(model, np.arccos(lam), tol)
    return out if np.ndim(lam) else float(out)


def _scalar_parameter(sp: Union[SpectralParameter, complex]) -> SpectralParameter:
    return sp if isinstance(sp, SpectralParameter) else zeta_of(sp)


def resolvent_element(model: CoefficientModel, sp, n: int, m: int, tol: float = DEFAULT_TOL) -> complex:
    """(R(z) e_n, e_m) = omega^-1 P_min(n,m)(z) f_max(n,m)(z)."""
    _require_trace_class(model)
    sp = _scalar_parameter(sp)
    if sp.on_boundary:
        raise ValueError("resolvent_element needs an interior spectral parameter")
    lo, hi = min(n, m), max(n, m)
    jost = jost_backward(model, sp, tol, n_keep=hi + 1)
    omega = jost.omega
    if abs(omega) < 1e-12:
        raise ComputationError(f"z = {sp.z} is (numerically) an eigenvalue: |omega| = {abs(omega):.3g}")
    P = polynomial_table(model, sp.z, lo)[lo + 1]
    return complex(P * jost.f(hi) / omega)


def truncated_resolvent_oracle(model: CoefficientModel, z: complex, n: int, m: int, N: int = 2000) -> complex:
    """((H_N - z)^-1)_{nm} for the leading N x N block, by a banded solve."""
    a, b = model.arrays(N - 1)
    ab = np.zeros((3, N), dtype=complex)
    ab[0, 1:] = a[: N - 1]
    ab[1, :] = b[:N] - z
    ab[2, :-1] = a[: N - 1]
    rhs = np.zeros(N, dtype=complex)
    rhs[n] = 1.0
    return complex(solve_banded((1, 1), ab, rhs)[m])


def spectral_density_element(model: CoefficientModel, lam, n: int, m: int, tol: float = DEFAULT_TOL):
    """d(E(lambda) e_n, e_m)/d lambda = w(lambda) P_n(lambda) P_m(lambda)."""
    lam = _check_lambda(lam)
    w = weight(model, lam, tol)
    P = polynomial_table(model, lam, max(n, m)).real
    out = w * P[n + 1] * P[m + 1]
    return out if np.ndim(lam) else float(out)


def stone_jump(model: CoefficientModel, lam: float, n: int, m: int, eps: float = 1e-6, tol: float = DEFAULT_TOL) -> float:
    """(2 pi i)^-1 [(R(lambda + i eps) - R(lambda - i eps)) e_n, e_m]."""
    up = resolvent_element(model, zeta_of(complex(lam, eps)), n, m, tol)
    down = resolvent_element(model, zeta_of(complex(lam, -eps)), n, m, tol)
    return float(((up - down) / (2j * np.pi)).real)


# ---------------------------------------------------------------------------
# Discrete spectrum


def gershgorin_bound(model: CoefficientModel, n_max: Optional[int] = None) -> float:
    """Lambda = max_n (|b_n| + a_n + a_{n-1}) over the explicit coefficients."""
    if n_max is None:
        support = model.support
        n_max = support + 2 if support is not None else 20_000
    a, b = model.arrays(max(n_max, 1))
    a_prev = np.concatenate([[0.5], a[:-1]])
    return float(max(np.max(np.abs(b) + a + a_prev), 1.0))


def truncated_eigenvalues_oracle(model: CoefficientModel, N: int) -> np.ndarray:
    """Eigenvalues of the leading N x N block (LAPACK Sturm bisection), ascending."""
    a, b = model.arrays(max(N - 1, 0))
    return eigvalsh_tridiagonal(b[:N], a[: N - 1], lapack_driver="stebz")


def _outer_oracle(model: CoefficientModel, N: int, Lam: float) -> np.ndarray:
    a, b = model.arrays(max(N - 1, 0))
    d, e = b[:N], a[: N - 1]
    parts = [
        eigvalsh_tridiagonal(d, e, select="v", select_range=(lo, hi), lapack_driver="stebz")
        for lo, hi in ((-Lam - 1, -1.0), (1.0, Lam + 1))
    ]
    return np.concatenate(parts)


def sturm_count(model: CoefficientModel, N: int, x: float) -> int:
    """Number of eigenvalues of the N x N block strictly above x."""
    a, b = model.arrays(max(N - 1, 0))
    below = 0
    d = 1.0
    for k in range(N):
        off = a[k - 1] ** 2 / d if k else 0.0
        d = b[k] - x - off
        if d == 0.0:
            d = -1e-300
        if d < 0:
            below += 1
    return N - below


@dataclass(frozen=True)
class DiscreteSpectrum:
    """Eigenvalues outside [-1, 1], sorted by |lambda| descending."""

    eigenvalues: np.ndarray
    mu: np.ndarray
    resonance: dict = field(default_factory=dict)
    window: float = 1.0
    oracle: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self) -> int:
        return int(self.eigenvalues.size)

    def blaschke_sum(self) -> float:
        return float(np.sum(1 - np.abs(self.mu)))


def _scan_side(model: CoefficientModel, sign: int, zeta_lo: float, tol: float, points: int) -> list:
    # real zeta in (zeta_lo, 1 - 1e-6], graded towards the edge where zeros accumulate
    gap_hi = 1 - zeta_lo
    grid = 1 - np.geomspace(gap_hi, 1e-6, points)
    grid = np.concatenate([np.linspace(zeta_lo, grid[0], points // 4, endpoint=False), grid])
    zs = sign * grid
    vals = jost_function_array(model, zs.astype(complex), tol, guard=False).real
    roots = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0):
        lo, hi = zs[i], zs[i + 1]
        if vals[i] == 0:
            roots.append(lo)
            continue
        if vals[i + 1] == 0:
            continue

        def f(t):
            return float(jost_function_array(model, np.asarray(complex(t)), tol, guard=False).real)

        roots.append(brentq(f, min(lo, hi), max(lo, hi), xtol=1e-15, rtol=1e-15))
    return roots


def eigenvalues(model: CoefficientModel, tol: float = DEFAULT_TOL, points: int = 300, oracle_size: int = 4000) -> DiscreteSpectrum:
    """Zeros of Omega on the real zeta-axis, confirmed by the truncated-matrix oracle."""
    _require_trace_class(model)
    Lam = gershgorin_bound(model)
    zeta_lo = Lam - math.sqrt(Lam * Lam - 1) if Lam > 1 else 0.0
    zeta_lo = max(zeta_lo * 0.999, 0.0)
    mus = []
    for sign in (1, -1):
        mus.extend(_scan_side(model, sign, zeta_lo, tol, points))
    mu = np.array(mus, dtype=float)
    lam = (mu + 1 / mu) / 2 if mu.size else np.zeros(0)
    order = np.argsort(-np.abs(lam), kind="stable")
    lam, mu = lam[order], mu[order]

    N = oracle_size
    oracle = _outer_oracle(model, N, Lam)
    matched = []
    for value in lam:
        best = oracle[np.argmin(np.abs(oracle - value))]
        if abs(best - value) > 1e-5:
            raise ComputationError(f"eigenvalue {value!r} not confirmed by the truncated oracle (nearest {best!r})")
        matched.append(best)
    margin = max(1e-4, 10 * (np.pi / N) ** 2)
    outside = oracle[np.abs(oracle) > 1 + margin]
    for value in outside:
        if lam.size == 0 or np.min(np.abs(lam - value)) > 1e-5:
            raise ComputationError(f"oracle eigenvalue {value!r} missed by the Jost-function scan")

    resonance = {}
    if model.decay_class.at_least("first_moment"):
        for sign in (1, -1):
            resonance[sign] = resonance_analysis(model, sign).is_resonance
    return DiscreteSpectrum(lam, mu, resonance, Lam, np.array(matched))


# ---------------------------------------------------------------------------
# Orthonormality and reconstruction


def gram_matrix(model: CoefficientModel, n_max: int, tol: float = DEFAULT_TOL, order: int = 20) -> np.ndarray:
    """Quadrature Gram matrix of P_0..P_n_max against the computed weight."""
    theta, wts = theta_rule(order)
    w = weight_from_theta(model, theta, tol)
    lam = np.cos(theta)
    P = polynomial_table(model, lam, n_max).real[1:]
    scaled = P * (w * np.sin(theta) * wts)
    return scaled @ P.T


WeightInput = Union[Callable[[np.ndarray], np.ndarray], tuple]


def stieltjes_reconstruction(weight_input: WeightInput, N: int, order: int = 20) -> CoefficientModel:
    """Recover a_0..a_{N-1}, b_0..b_{N-1} from a measure on [-1, 1].

    ``weight_input`` is either a callable weight w(lambda) or a pair
    ``(nodes, weights)`` of a discrete quadrature for the measure.  The
    orthonormal polynomials are built by Gram-Schmidt on lambda q_n with
    full reorthogonalisation; their monomial coefficients give
    k_n and r_n, and a_n = k_n / k_{n+1}, b_n = r_n - r_{n+1}.
    """
    if callable(weight_input):
        theta, wts = theta_rule(order)
        x = np.cos(theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            mass = weight_input(x) * np.sin(theta) * wts
        # nodes within rounding of +-1 carry a negligible share of an integrable weight
        mass = np.where(np.isfinite(mass), mass, 0.0)
    else:
        x, mass = (np.asarray(v, dtype=float) for v in weight_input)
    total = float(np.sum(mass))
    if not total > 0:
        raise ComputationError("measure has no positive mass")
    Q = np.zeros((N + 1, x.size))
    C = np.zeros((N + 1, N + 2))  # monomial coefficients, C[n, j] multiplies lambda^j
    Q[0] = 1 / math.sqrt(total)
    C[0, 0] = Q[0, 0]
    for n in range(N):
        v = x * Q[n]
        c = np.concatenate([[0.0], C[n, :-1]])
        for _ in range(2):
            proj = (Q[: n + 1] * mass) @ v
            v = v - proj @ Q[: n + 1]
            c = c - proj @ C[: n + 1]
        norm2 = float(np.sum(mass * v * v))
        if not norm2 > 0:
            raise ComputationError(f"Gram process lost positivity at degree {n + 1}")
        norm = math.sqrt(norm2)
        Q[n + 1] = v / norm
        C[n + 1] = c / norm
    k = np.array([C[n, n] for n in range(N + 1)])
    r = np.array([C[n, n - 1] / C[n, n] if n else 0.0 for n in range(N + 1)])
    a = k[:-1] / k[1:]
    b = r[:-1] - r[1:]
    return finite_model(a, b, name=f"stieltjes:{N}")
