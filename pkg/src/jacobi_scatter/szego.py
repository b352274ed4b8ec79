"""Szegő function, Blaschke product, the determinant factorization and Case sum rules.

Everything here is a boundary integral of ln w in the angle variable.  The
integrands carry logarithmic (or, for the free weight ratio, log|sin|)
singularities at theta = 0 and pi, so all integrals use the graded angle
rule rather than Gauss-Chebyshev nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from ._quadrature import graded_rule, theta_rule
from .coefficients import CoefficientModel, normalization_A
from .errors import ConvergenceError, DecayError
from .jost import DEFAULT_TOL, jost_function_array
from .spectral import DiscreteSpectrum, eigenvalues, weight_from_theta

__all__ = [
    "SzegoEvaluation",
    "szego_function",
    "blaschke",
    "szego_evaluation",
    "factorization_residual",
    "harmonic_conjugacy_residual",
    "case_sum_rule",
    "chebyshev_trace",
    "szego_condition_probe",
]

DEFAULT_EPS_LADDER = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


@lru_cache(maxsize=16)
def _log_weight_ratio(model: CoefficientModel, order: int, tol: float):
    """ln(w / w0) at the nodes of the graded angle rule on (0, pi)."""
    theta, wts = theta_rule(order)
    if model.decay_class.kind == "unclassified":
        if model.log_weight is None:
            raise DecayError(f"model {model.name} is not trace class and has no closed-form weight")
        log_w = model.log_weight(np.cos(theta))
    else:
        log_w = np.log(weight_from_theta(model, theta, tol))
    ratio = log_w - np.log(2 / np.pi * np.sin(theta))
    ratio.setflags(write=False)
    return theta, wts, ratio


def _settled_sum(model: CoefficientModel, reduce, quad_order: int, tol: float, max_order: int = 1280):
    """reduce(theta, wts, ratio) on the graded rule, doubling the panel order until it settles.

    An eigenvalue close to an edge, or a Jost zero on the second sheet close to the
    circle, makes ln w vary on a short scale; order 20 can then be off by 1e-6.
    """
    prev = np.asarray(reduce(*_log_weight_ratio(model, quad_order, tol)))
    while quad_order < max_order:
        quad_order *= 2
        cur = np.asarray(reduce(*_log_weight_ratio(model, quad_order, tol)))
        if np.all(np.abs(cur - prev) <= 1e-10 * np.maximum(1.0, np.abs(cur))):
            return cur
        prev = cur
    raise ConvergenceError(f"log-weight quadrature for {model.name} unsettled at order {quad_order}")


def _require_szego(model: CoefficientModel) -> None:
    if model.decay_class.kind != "unclassified":
        return
    probe = szego_condition_probe(model)
    if not probe["converges"]:
        raise ConvergenceError(
            f"Szegő condition fails for {model.name}: partial log-integral grows like "
            f"{probe['growth_rate']:.4g} ln(1/eps)"
        )


def szego_function(model: CoefficientModel, zeta, order: int = 20, tol: float = DEFAULT_TOL):
    """D(zeta) = exp((4 pi)^-1 int (e^{it} + zeta)/(e^{it} - zeta) ln(w(cos t)|sin t|) dt)."""
    zeta = np.asarray(zeta, dtype=complex)
    if np.any(np.abs(zeta) > 0.999):
        raise ValueError("szego_function needs |zeta| <= 0.999")
    _require_szego(model)
    z = zeta.reshape(-1, 1)

    def exponent(theta, wts, ratio):
        log_integrand = ratio + np.log(2 / np.pi * np.sin(theta) ** 2)
        # ln(w|sin|) is even in t: fold (-pi, 0) onto (0, pi)
        e = np.exp(1j * theta)
        kernel = (e + z) / (e - z) + (np.conj(e) + z) / (np.conj(e) - z)
        return kernel @ (log_integrand * wts) / (4 * np.pi)

    out = np.exp(_settled_sum(model, exponent, order, tol))
    out = out.reshape(zeta.shape)
    return out if out.ndim else complex(out)


def blaschke(mu_list: Sequence[float], zeta):
    """B(zeta) = prod (mu/|mu|) (mu - zeta) / (1 - mu zeta)."""
    mu = np.asarray(mu_list, dtype=float).ravel()
    if np.any(mu == 0):
        raise ValueError("mu = 0 would be an eigenvalue at infinity")
    if np.any(np.abs(mu) >= 1):
        raise ValueError("Blaschke zeros must lie inside the unit disc")
    zeta = np.asarray(zeta, dtype=complex)
    out = np.ones(zeta.shape, dtype=complex)
    for m in mu:
        out = out * (np.sign(m) * (m - zeta) / (1 - m * zeta))
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class SzegoEvaluation:
    zeta: complex
    D: complex
    B: complex
    Delta: complex
    residual: float
    szego_integral: float

    @property
    def outer_factor(self) -> complex:
        return self.Delta / self.B


def _szego_integral(model: CoefficientModel, order: int, tol: float) -> float:
    """int ln w (1 - lambda^2)^-1/2 d lambda."""
    return float(_settled_sum(model, lambda theta, wts, ratio: np.sum((ratio + np.log(2 / np.pi * np.sin(theta))) * wts), order, tol))


def szego_evaluation(model: CoefficientModel, zeta: complex, spectrum: Optional[DiscreteSpectrum] = None, order: int = 20, tol: float = DEFAULT_TOL) -> SzegoEvaluation:
    spectrum = eigenvalues(model) if spectrum is None else spectrum
    D = complex(szego_function(model, zeta, order, tol))
    B = complex(blaschke(spectrum.mu, zeta))
    A = normalization_A(model)
    Delta = A * complex(jost_function_array(model, np.asarray(complex(zeta)), tol))
    predicted = A * B * (1 - zeta**2) / (math.sqrt(2 * math.pi) * D)
    return SzegoEvaluation(complex(zeta), D, B, Delta, abs(Delta - predicted), _szego_integral(model, order, tol))


def factorization_residual(model: CoefficientModel, zeta_grid, spectrum: Optional[DiscreteSpectrum] = None, order: int = 20, tol: float = DEFAULT_TOL) -> float:
    """max |Delta(zeta) - A B(zeta) (1 - zeta^2) / (sqrt(2 pi) D(zeta))| over the grid."""
    zeta = np.asarray(zeta_grid, dtype=complex).ravel()
    if np.any(np.abs(zeta) > 0.999):
        raise ValueError("factorization residual is only evaluated for |zeta| <= 0.999")
    spectrum = eigenvalues(model) if spectrum is None else spectrum
    A = normalization_A(model)
    Delta = A * jost_function_array(model, zeta, tol)
    D = szego_function(model, zeta, order, tol)
    predicted = A * blaschke(spectrum.mu, zeta) * (1 - zeta**2) / (math.sqrt(2 * math.pi) * D)
    return float(np.max(np.abs(Delta - predicted)))


def harmonic_conjugacy_residual(model: CoefficientModel, theta, tol: float = DEFAULT_TOL) -> float:
    """max |2 ln|Delta(e^{-it})| + ln(w |sin t|) - ln(2 A^2 sin^2 t / pi)| on a boundary grid."""
    theta = np.asarray(theta, dtype=float)
    A = normalization_A(model)
    Delta = A * jost_function_array(model, np.exp(-1j * theta), tol, guard=False)
    w = weight_from_theta(model, theta, tol)
    s = np.abs(np.sin(theta))
    r = 2 * np.log(np.abs(Delta)) + np.log(w * s) - np.log(2 / np.pi * A**2 * s**2)
    return float(np.max(np.abs(r)))


# ---------------------------------------------------------------------------
# Case sum rules


def _chebyshev_trace_block(model: CoefficientModel, n: int, N: int) -> float:
    a, b = model.arrays(N - 1)
    H = sparse.diags([a[: N - 1], b[:N], a[: N - 1]], [-1, 0, 1], format="csr")
    H0 = sparse.diags([np.full(N - 1, 0.5), np.full(N - 1, 0.5)], [-1, 1], shape=(N, N), format="csr")
    I = sparse.identity(N, format="csr")
    T, T0 = [I, H], [I, H0]
    for _ in range(n - 1):
        T = [T[1], 2 * H @ T[1] - T[0]]
        T0 = [T0[1], 2 * H0 @ T0[1] - T0[0]]
    current, free = (T[1], T0[1]) if n else (I, I)
    return math.fsum(current.diagonal() - free.diagonal())


def chebyshev_trace(model: CoefficientModel, n: int, tol: float = 1e-9) -> float:
    """Tr(T_n(H) - T_n(H0)) from truncated matrices.

    T_n(H) has bandwidth n, so for a finite-support model a block of size
    support + 2n + 4 is exact; otherwise the block is doubled with a
    Richardson step for the O(1/N) tail of n^-2 coefficients.
    """
    if n < 0:
        raise ValueError("order must be non-negative")
    support = model.support
    if support is not None:
        return _chebyshev_trace_block(model, n, max(support, 0) + 2 * n + 4)
    if model.decay_class.kind == "unclassified":
        raise DecayError(f"Tr(T_n(H) - T_n(H0)) is not defined for {model.name}")
    N = 1024
    prev_raw = _chebyshev_trace_block(model, n, N)
    prev_ext = None
    while N < 2**22:
        N *= 2
        raw = _chebyshev_trace_block(model, n, N)
        ext = 2 * raw - prev_raw
        if prev_ext is not None and abs(ext - prev_ext) < tol:
            return ext
        prev_raw, prev_ext = raw, ext
    raise ConvergenceError(f"Chebyshev trace of order {n} did not settle")


def _cosine_moment(model: CoefficientModel, order: int, quad_order: int, tol: float) -> float:
    """int_0^pi ln(w / w0) cos(order theta) d theta."""
    return float(_settled_sum(model, lambda theta, wts, ratio: np.sum(ratio * np.cos(order * theta) * wts), quad_order, tol))


def case_sum_rule(model: CoefficientModel, order: int, spectrum: Optional[DiscreteSpectrum] = None, quad_order: int = 20, tol: float = DEFAULT_TOL) -> dict:
    """Case sum rule of the given order: lhs, rhs and their difference."""
    _require_szego(model)
    spectrum = eigenvalues(model) if spectrum is None else spectrum
    mu = np.asarray(spectrum.mu, dtype=float)
    integral = _cosine_moment(model, order, quad_order, tol)
    if order == 0:
        lhs = math.log(normalization_A(model)) + math.fsum(np.log(np.abs(mu)))
        rhs = integral / (2 * np.pi)
        ladder = 0.0
    else:
        lhs = chebyshev_trace(model, order)
        ladder = -0.5 * math.fsum(mu**order - mu ** (-order))
        rhs = ladder + order / (2 * np.pi) * integral
    return {"order": order, "lhs": lhs, "rhs": rhs, "eigenvalue_term": ladder, "residual": abs(lhs - rhs)}


# ---------------------------------------------------------------------------
# Szegő condition


def _log_weight_on(model: CoefficientModel, theta: np.ndarray, tol: float) -> np.ndarray:
    if model.log_weight is not None:
        return model.log_weight(np.cos(theta))
    return np.log(weight_from_theta(model, theta, tol))


def _segment_rule(lo: float, hi: float, order: int = 20):
    # integrands grow at most like 1/theta towards the cut, so grade at lo only
    return graded_rule(float(lo), float(hi), order, 4, 1e-3 * lo, True, False)


def _nested_segments(cut: np.ndarray, order: int):
    """Rules on [cut_0, pi/2] and [cut_k, cut_(k-1)], each with a segment label."""
    bounds = [(cut[0], np.pi / 2)] + [(cut[k], cut[k - 1]) for k in range(1, cut.size)]
    nodes, weights, labels = [], [], []
    for k, (lo, hi) in enumerate(bounds):
        t, w = _segment_rule(lo, hi, order)
        nodes.append(t)
        weights.append(w)
        labels.append(np.full(t.size, k))
    return np.concatenate(nodes), np.concatenate(weights), np.concatenate(labels)


def _settles(increments: np.ndarray) -> bool:
    mag = np.abs(increments)
    if mag[-1] < 1e-3:
        return True
    return bool(mag.size >= 3 and mag[-1] < 0.5 * mag[-2] and mag[-2] < 0.5 * mag[-3])


def szego_condition_probe(
    model: CoefficientModel,
    eps_ladder: Sequence[float] = DEFAULT_EPS_LADDER,
    tol: float = 1e-8,
    predicted_rate: Optional[float] = None,
    rate_tolerance: float = 0.05,
    order: int = 20,
) -> dict:
    """Partial Szegő integrals int ln w (1 - lambda^2)^-1/2 d lambda cut at 1 - eps and -1 + eps.

    Each endpoint is probed separately on a half interval; the weighted
    partial integrals use (1 - lambda^2)^(1/2) over the whole cut interval.  The growth rate
    is the fitted slope of the partial integral against ln(1/eps); the
    integral is declared convergent when its increments per unit of
    ln(1/eps) are negligible or still shrinking geometrically.
    """
    eps = np.asarray(sorted(eps_ladder, reverse=True), dtype=float)
    log_inv = np.log(1 / eps)
    cut = np.arccos(1 - eps)
    t, w, label = _nested_segments(cut, order)
    # one weight evaluation serves both endpoints: theta near 0 and pi - theta near pi
    log_w = _log_weight_on(model, np.concatenate([t, np.pi - t]), tol)
    sin2 = np.sin(t) ** 2
    report = {"eps": eps}
    converges = True
    rates = {}
    weighted = np.zeros(cut.size)
    for name, f in (("right", log_w[: t.size]), ("left", log_w[t.size :])):
        pieces = np.bincount(label, weights=f * w, minlength=cut.size)
        values = np.cumsum(pieces)
        weighted += np.cumsum(np.bincount(label, weights=f * sin2 * w, minlength=cut.size))
        slope = np.polyfit(log_inv, values, 1)[0]
        increments = np.diff(values) / np.diff(log_inv)
        converges &= _settles(increments)
        rates[name] = float(-slope)
        report[f"{name}_partial"] = values
        report[f"{name}_increments"] = increments
    report.update(
        converges=converges,
        right_rate=rates["right"],
        left_rate=rates["left"],
        growth_rate=rates["right"] + rates["left"],
        weighted_partial=weighted,
        weighted_converges=_settles(np.diff(weighted) / np.diff(log_inv)),
    )
    if predicted_rate is not None:
        report["predicted_right_rate"] = predicted_rate
        report["right_rate_matches"] = abs(rates["right"] - predicted_rate) <= rate_tolerance * abs(predicted_rate)
    return report
