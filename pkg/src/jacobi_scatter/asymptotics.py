"""Large-n laws for the orthonormal polynomials, checked against computed data.

Each report holds the n ladder, observed and predicted values, the error
sequence and a fitted constant, plus a verdict whose thresholds come from
``VerdictConfig``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .coefficients import CoefficientModel, jacobi_constant, tail_bound
from .errors import ComputationError, DecayError, EdgeProximityError
from .jost import DEFAULT_TOL, edge_jost, jost_backward, jost_function_array, resonance_analysis
from .lattice import EDGE_GUARD, LAMBDA_GUARD, SpectralParameter, growing_solution, polynomial_table, regular_polynomials, wronskian, zeta_of

__all__ = [
    "VerdictConfig",
    "AsymptoticReport",
    "bernstein_szego_prediction",
    "jacobi_book_prediction",
    "jacobi_edge_constant",
    "oscillation_report",
    "exterior_limit_report",
    "edge_report",
    "aitken",
]


@dataclass(frozen=True)
class VerdictConfig:
    """Pass/fail thresholds for the asymptotic reports.

    ``slow_rel`` applies at the ladder top when the error decays like a
    power of 1/N; ``geometric_rel`` when it decays geometrically.
    ``edge_rel`` is the relative tolerance for the Jacobi edge power law.
    ``stability_factor`` bounds the growth of a fitted constant between the
    last two decades.  ``zero_tol`` is the roundoff floor for errors that
    vanish exactly.
    """

    slow_rel: float = 1e-2
    geometric_rel: float = 1e-6
    stability_factor: float = 2.0
    zero_tol: float = 1e-12
    monotone_from: int = 1000
    edge_rel: float = 1e-3


DEFAULT_VERDICT = VerdictConfig()


@dataclass(frozen=True)
class AsymptoticReport:
    kind: str
    n: np.ndarray
    observed: np.ndarray
    predicted: np.ndarray
    errors: np.ndarray
    fitted_constant: float
    verdict: bool
    details: dict = field(default_factory=dict)

    def summary(self) -> str:
        state = "pass" if self.verdict else "fail"
        return f"{self.kind}: {state} (C = {self.fitted_constant:.4g}, max error {np.max(self.errors):.3g})"


def aitken(seq: Sequence[complex]) -> np.ndarray:
    """Aitken delta-squared transform; entries with a vanishing denominator are passed through."""
    s = np.asarray(seq, dtype=complex)
    if s.size < 3:
        return s[-1:].copy()
    d1 = s[1:-1] - s[:-2]
    d2 = s[2:] - 2 * s[1:-1] + s[:-2]
    safe = np.abs(d2) > 1e-300
    out = s[2:].copy()
    out[safe] = s[2:][safe] - (s[2:][safe] - s[1:-1][safe]) ** 2 / d2[safe]
    return out


# ---------------------------------------------------------------------------
# Bernstein-Szegő law on the cut


def _boundary_amplitude_phase(model: CoefficientModel, lam: float, tol: float):
    from .scattering import phase_profile

    theta = math.acos(lam)
    prof = phase_profile(model, [theta], tol, guard=EDGE_GUARD)
    return theta, float(prof.kappa[0]), float(prof.eta[0]), float(prof.w[0])


def bernstein_szego_prediction(model: CoefficientModel, lam: float, n, tol: float = DEFAULT_TOL, both: bool = False):
    """kappa(theta) / sin(theta) * sin((n + 1) theta + eta(theta)).

    With ``both=True`` the weight form
    sqrt(2/pi) w^-1/2 (1 - lambda^2)^-1/4 sin((n + 1) arccos(lambda) + pi xi)
    is returned alongside.
    """
    if model.decay_class.kind == "unclassified":
        raise DecayError(f"model {model.name} is not trace class")
    if abs(lam) > 1 - LAMBDA_GUARD:
        raise EdgeProximityError("lambda too close to the spectrum edge")
    theta, kappa, eta, w = _boundary_amplitude_phase(model, lam, tol)
    n = np.asarray(n, dtype=float)
    amplitude_form = kappa / math.sin(theta) * np.sin((n + 1) * theta + eta)
    if not both:
        return amplitude_form
    xi = eta / math.pi
    weight_form = math.sqrt(2 / math.pi) * w**-0.5 * (1 - lam * lam) ** -0.25 * np.sin((n + 1) * math.acos(lam) + math.pi * xi)
    return amplitude_form, weight_form


def jacobi_book_prediction(alpha: float, beta: float, lam: float, n):
    """Classical large-n form of the normalised Jacobi polynomials."""
    kappa = jacobi_constant(alpha, beta)
    n = np.asarray(n, dtype=float)
    amp = math.sqrt(2 / (math.pi * kappa)) * (1 - lam) ** (-(1 + 2 * alpha) / 4) * (1 + lam) ** (-(1 + 2 * beta) / 4)
    return amp * np.sin((n + (alpha + beta + 1) / 2) * math.acos(lam) - (2 * alpha - 1) * math.pi / 4)


def _extended_polynomials(model: CoefficientModel, lam: float, n_max: int) -> np.ndarray:
    # real recurrence in extended precision: the double-precision error grows like n eps / sin(theta)
    a, b = model.arrays(n_max)
    a = a.astype(np.longdouble)
    b = b.astype(np.longdouble)
    x = np.longdouble(lam)
    out = np.empty(n_max + 1, dtype=np.longdouble)
    prev, cur, a_prev = np.longdouble(0), np.longdouble(1), np.longdouble(0.5)
    out[0] = cur
    for k in range(n_max):
        prev, cur = cur, ((x - b[k]) * cur - a_prev * prev) / a[k]
        a_prev = a[k]
        out[k + 1] = cur
    return out


def _decades(n_max: int, start: int = 10) -> list:
    edges = [start]
    while edges[-1] * 10 <= n_max:
        edges.append(edges[-1] * 10)
    if edges[-1] < n_max:
        edges.append(n_max)
    return edges


def oscillation_report(model: CoefficientModel, lam: float, n_max: int = 100_000, tol: float = DEFAULT_TOL, config: VerdictConfig = DEFAULT_VERDICT) -> AsymptoticReport:
    """e_n = |P_n(lambda) - prediction| for n <= n_max, with C fitted per decade in e_n <= C rho_n."""
    theta, kappa, eta, _ = _boundary_amplitude_phase(model, lam, tol)
    P = _extended_polynomials(model, lam, n_max)
    n = np.arange(n_max + 1)
    th = np.arccos(np.longdouble(lam))
    predicted = np.longdouble(kappa) / np.sin(th) * np.sin((n + 1) * th + np.longdouble(eta))
    errors = np.abs(P - predicted).astype(float)
    P, predicted = P.astype(float), predicted.astype(float)

    edges = _decades(n_max)
    support = model.support
    decade_C, decade_nE = [], []
    tb = tail_bound(model)
    for lo, hi in zip(edges[:-1], edges[1:]):
        seg = slice(lo, hi + 1)
        decade_nE.append(float(np.max(errors[seg] * n[seg])))
        rho = tb.rho(np.array([lo, hi]))
        # rho_n is decreasing: bound C on the decade by dividing by its smallest value
        decade_C.append(float(np.max(errors[seg]) / rho[1]) if rho[1] > 0 else 0.0)
    if support is not None and n_max > support + 1:
        beyond = errors[support + 1 :]
        floor = config.zero_tol * max(1.0, kappa / math.sin(theta)) * max(1.0, n_max / 1000)
        verdict = bool(np.max(beyond) <= floor)
        constant = float(np.max(beyond))
    else:
        verdict = bool(len(decade_C) < 2 or decade_C[-1] <= config.stability_factor * decade_C[-2])
        constant = decade_C[-1] if decade_C else 0.0
    details = {
        "lambda": lam,
        "theta": theta,
        "kappa": kappa,
        "eta": eta,
        "decade_edges": edges,
        "decade_constants": decade_C,
        "decade_n_times_error": decade_nE,
    }
    return AsymptoticReport("bernstein_szego", n, P, predicted, errors, constant, verdict, details)


# ---------------------------------------------------------------------------
# Exterior limits


DEFAULT_LADDER = (100, 200, 500, 1000, 2000, 5000, 10_000, 20_000, 50_000, 100_000)


def exterior_limit_report(model: CoefficientModel, sp, N_ladder: Sequence[int] = DEFAULT_LADDER, tol: float = DEFAULT_TOL, eigen_tol: float = 1e-10, config: VerdictConfig = DEFAULT_VERDICT) -> AsymptoticReport:
    """zeta^N P_N -> Omega / (1 - zeta^2), or zeta^-N P_N -> {P, g} at an eigenvalue."""
    sp = sp if isinstance(sp, SpectralParameter) else zeta_of(sp)
    if sp.on_boundary:
        raise ValueError("exterior limits need an interior parameter")
    zeta = complex(sp.zeta)
    ladder = np.asarray(sorted(N_ladder), dtype=int)
    if ladder.size < 3:
        raise ValueError("the N ladder needs at least three entries to resolve a limit")
    Omega = complex(jost_function_array(model, np.asarray(zeta), tol))
    if abs(Omega) > eigen_tol:
        scaled = polynomial_table(model, sp.z, int(ladder[-1]), scale=1, zeta=zeta)[ladder + 1]
        target = Omega / (1 - zeta**2)
        errors = np.abs(scaled - target) / abs(target)
        accelerated = aitken(scaled)
        tail = ladder >= config.monotone_from
        monotone = bool(np.all(np.diff(errors[tail]) <= 0)) if tail.sum() > 1 else True
        geometric = abs(zeta) ** (2 * ladder[0]) < 1e-12 and model.support is not None
        threshold = config.geometric_rel if geometric else config.slow_rel
        at_top = errors[ladder == config.monotone_from]
        first_ok = bool(at_top.size == 0 or at_top[0] < threshold)
        verdict = bool(first_ok and monotone and errors[-1] < threshold)
        return AsymptoticReport(
            "exterior_generic",
            ladder,
            scaled,
            np.full(ladder.shape, target),
            errors,
            float(np.max(errors * ladder)),
            verdict,
            {"Omega": Omega, "zeta": zeta, "accelerated": accelerated, "monotone": monotone, "d_minus": Omega / (2 * zeta)},
        )

    # eigenvalue branch: P is proportional to the decaying solution
    n1 = 4
    jost = jost_backward(model, sp, tol, n_keep=int(ladder[-1]) + 2)
    g = growing_solution(model, sp, 1, n1 + 2, jost=jost)
    P_seq = regular_polynomials(model, sp, n1 + 2)
    d_plus = wronskian(P_seq, g, model, n1)
    if abs(d_plus) < eigen_tol:
        raise ComputationError("{P, g} vanishes at an eigenvalue; the Jost solution is unreliable")
    # forward values are trusted while the contaminating growth eps |zeta|^-2N stays small
    safe = int(math.floor(math.log(1e8) / (-2 * math.log(abs(zeta))))) if abs(zeta) < 1 else 0
    P_forward = polynomial_table(model, sp.z, max(safe, n1) + 1)
    h = np.ones(int(ladder[-1]) + 3, dtype=complex)
    stored = jost.normalized
    h[: min(stored.size, h.size)] = stored[: h.size]
    anchor = max(min(safe, n1), 0)
    ratio = P_forward[anchor + 1] * zeta**-anchor / h[anchor + 1]
    observed = np.empty(ladder.size, dtype=complex)
    for i, N in enumerate(ladder):
        if N <= safe:
            observed[i] = P_forward[N + 1] * zeta ** (-float(N))
        else:
            observed[i] = ratio * h[N + 1]
    errors = np.abs(observed - d_plus) / abs(d_plus)
    verdict = bool(errors[-1] < config.geometric_rel and abs(d_plus) > eigen_tol)
    return AsymptoticReport(
        "exterior_eigenvalue",
        ladder,
        observed,
        np.full(ladder.shape, d_plus),
        errors,
        abs(d_plus),
        verdict,
        {"Omega": Omega, "zeta": zeta, "d_plus": d_plus, "forward_safe_up_to": safe, "accelerated": aitken(observed)},
    )


# ---------------------------------------------------------------------------
# Edge points


def jacobi_edge_constant(alpha: float, beta: float, sign: int = 1) -> float:
    """Limit of (sign)^n P_n(sign) n^-(alpha_s + 1/2) for Jacobi polynomials, alpha_s the exponent at that edge."""
    kappa = jacobi_constant(alpha, beta)
    a_s = alpha if sign > 0 else beta
    return math.exp(-0.5 * math.log(kappa) - gammaln(a_s + 1) - (alpha + beta) / 2 * math.log(2))


def edge_report(model: CoefficientModel, sign: int, n_max: int = 100_000, tol: float = 1e-6, config: VerdictConfig = DEFAULT_VERDICT) -> AsymptoticReport:
    """Growth of P_n(+-1): linear (regular), bounded (resonance) or the Jacobi power law."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    n = np.arange(1, n_max + 1)
    P = polynomial_table(model, float(sign), n_max).real[2:]  # P_1..P_n_max
    signed = P * float(sign) ** n
    growth_bound = float(np.max(np.abs(P) / (n + 1)))
    details = {"growth_bound": growth_bound}

    if model.decay_class.at_least("first_moment"):
        res = resonance_analysis(model, sign, tol)
        details["resonance"] = res
        if res.is_resonance:
            observed, target, kind = signed, res.gamma, "edge_resonance"
        else:
            observed, target, kind = signed / n, edge_jost(model, sign).Omega, "edge_regular"
    elif model.name.startswith("jacobi:") and len(model.parameters) == 2:
        alpha, beta = model.parameters
        expo = (alpha if sign > 0 else beta) + 0.5
        observed = signed * n ** -expo
        target = jacobi_edge_constant(alpha, beta, sign)
        kind = "edge_jacobi_power"
        top = n >= n_max // 10
        details["fitted_exponent"] = float(np.polyfit(np.log(n[top]), np.log(np.abs(signed[top])), 1)[0])
        details["exponent"] = expo
    else:
        raise DecayError(f"{model.name}: decay too weak for the edge dichotomy; only the growth bound {growth_bound:.4g} is available")

    errors = np.abs(observed - target) / max(abs(target), 1e-300)
    edges = _decades(n_max)
    decade_top = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        seg = slice(lo - 1, hi)
        decade_top.append(float(np.max(errors[seg] * n[seg])))
    details["decade_n_times_error"] = decade_top
    details["target"] = target
    verdict = bool(errors[-1] < (config.edge_rel if kind == "edge_jacobi_power" else config.slow_rel))
    return AsymptoticReport(kind, n, observed, np.full(n.shape, target), errors, decade_top[-1] if decade_top else 0.0, verdict, details)
