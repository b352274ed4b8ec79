"""Jost solutions and the Jost function.

The Jost solution ``f_n(z)`` solves the three-term recurrence and behaves like
``zeta^n`` as ``n -> infinity``.  It is handled through the normalised
sequence ``h_n = zeta^-n f_n``, which is bounded on the closed disc and obeys

    a_{n-1} h_{n-1} = ((1 + zeta^2)/2 - zeta b_n) h_n - zeta^2 a_n h_{n+1}.

With ``a_{-1} = 1/2`` the Jost function is simply ``Omega = zeta f_{-1} = h_{-1}``.

Two solvers are provided.  The primary one runs this recurrence backwards
from a truncation index ``M``; the backward direction is the stable one
because the competing solution decays as ``n`` decreases.  The second solves
the discrete Volterra equation for ``g_n = 2 a_n h_n`` by Neumann iteration
and serves as an independent check.

Both solvers treat the coefficients beyond ``M`` through the first Born term
of the Volterra equation, evaluated in closed form from the model's
power-law tail.  The remaining error is second order in the tail sum
``rho_M``, which is what allows moderate truncation indices for models whose
perturbation decays only like ``n^-2``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import lfilter
from scipy.special import exp1, gammaln, hankel2e, zeta as hurwitz_zeta

from .coefficients import CoefficientModel, normalization_A, tail_bound
from .errors import ConvergenceError, DecayError, EdgeProximityError
from .lattice import EDGE_GUARD, SpectralParameter, polynomial_table

__all__ = [
    "JostSolution",
    "VolterraState",
    "EdgeJost",
    "ResonanceReport",
    "truncation_for",
    "jost_backward",
    "jost_volterra",
    "jost_function",
    "jost_function_array",
    "jost_via_polynomials",
    "volterra_kernel",
    "edge_jost",
    "resonance_analysis",
    "worker_count",
]

DEFAULT_TOL = 1e-12
MAX_TRUNCATION = 400_000
MIN_TRUNCATION = 64


def worker_count() -> int:
    """Worker cap from JACOBI_SCATTER_THREADS (default: 1)."""
    raw = os.environ.get("JACOBI_SCATTER_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# Truncation and the closed-form tail


def truncation_for(model: CoefficientModel, tol: float = DEFAULT_TOL, moment: int = 0) -> int:
    """Truncation index for the Jost solvers.

    Finite-support models are exact from one index past the support.  For
    power-law tails the seed error is quadratic in the tail sum, so the index
    is chosen where that sum (or its first moment, for edge points) falls
    below ``sqrt(tol)``.
    """
    kind = model.decay_class.kind
    if kind == "unclassified":
        raise DecayError(f"model {model.name} is not trace class; the Jost solution is not available")
    support = model.support
    if support is not None:
        return max(support + 1, 0)
    rule = model.tail_rule
    if rule is None:
        raise DecayError(f"model {model.name} declares no tail rule")
    target = math.sqrt(tol)
    p = rule.exponent
    if moment:
        if p <= 2:
            raise DecayError(f"model {model.name} lacks first-moment decay")
        m = int(math.ceil((rule.strength / ((p - 2) * target)) ** (1.0 / (p - 2)))) if rule.strength else 0
    else:
        m = tail_bound(model).truncation_index(target) if rule.strength else 0
    start = rule.exact_from or 0
    return int(min(max(m, start + 1, MIN_TRUNCATION), max(MAX_TRUNCATION, start + 1)))


def _scaled_e1(w: np.ndarray) -> np.ndarray:
    """exp(w) E1(w) for Re w >= 0, w != 0."""
    w = np.asarray(w, dtype=complex)
    out = np.empty_like(w)
    small = np.abs(w) <= 40
    if np.any(small):
        ws = w[small]
        out[small] = np.exp(ws) * exp1(ws)
    if np.any(~small):
        wl = w[~small]
        term = 1.0 / wl
        acc = term.copy()
        for k in range(1, 25):
            term = -term * k / wl
            acc = acc + term
        out[~small] = acc
    return out


def _tail_components(model: CoefficientModel, n0: int):
    """Power-law pieces (A, B, p) describing the coefficients beyond ``n0``.

    The declared tail law is used as is when it is exact.  When it is only
    the leading asymptotic term, a next-order term ``n^-(p+1)`` is fitted
    from the model at a moderate index, where the residual is still well
    above rounding level.
    """
    rule = model.tail_rule
    if model.support is not None or rule is None or rule.strength == 0:
        return []
    A, B, p = rule.a_coef, rule.b_coef, int(rule.exponent)
    parts = [(A, B, p)]
    if rule.exact_from is None:
        n1 = min(n0, 2000)
        scale = float(n1) ** (p + 1)
        A1 = (model.deviation(n1) - A * float(n1) ** -p) * scale
        B1 = (float(model.b(n1)) - B * float(n1) ** -p) * scale
        parts.append((A1, B1, p + 1))
    return parts


def _power_sums(x: np.ndarray, n0: int, p: int):
    """Phi- = sum_{m>n0} m^-p, Phi+ = sum_{m>n0} x^(m-n0) m^-p and Psi = (Phi- - Phi+)/(1-x)."""
    phi_minus = np.full(x.shape, float(hurwitz_zeta(p, n0 + 1)), dtype=complex)
    phi_plus = np.empty_like(phi_minus)
    psi = np.empty_like(phi_minus)
    direct = np.abs(x) <= 0.8
    if np.any(direct):
        xd = x[direct]
        j = np.arange(1, 201)
        powers = xd[:, None] ** j[None, :]
        phi_plus[direct] = powers @ ((n0 + j) ** (-float(p)))
        psi[direct] = (phi_minus[direct] - phi_plus[direct]) / (1 - xd)
    far = ~direct
    if np.any(far):
        # midpoint-integral forms, consistent between both sums as x -> 1
        X = n0 + 0.5
        L = np.log(x[far])
        J = _scaled_e1(-L * X)
        for q in range(2, p):
            J = X ** (1 - q) / (q - 1) + L / (q - 1) * J
        num = X ** (1 - p) * (-np.expm1(L / 2)) - L * np.exp(L / 2) * J
        psi[far] = num / ((p - 1) * (-np.expm1(L)))
        phi_minus[far] = X ** (1 - p) / (p - 1)
        phi_plus[far] = phi_minus[far] - psi[far] * (1 - x[far])
    return phi_minus, phi_plus, psi


def _born_pieces(model: CoefficientModel, zeta: np.ndarray, n0: int):
    """First Born sums beyond ``n0``.

    Returns ``(S, sigma_plus, sigma_minus)`` with

        S           = sum_{m > n0} G_{n0, m}
        sigma_plus  = sum_{m > n0} x^(m - n0) c+_m
        sigma_minus = sum_{m > n0} c-_m

    where ``x = zeta^2`` and ``G_{n,m} = (x^(m-n) c+_m - c-_m) / (1 - x)``.
    """
    zeta = np.asarray(zeta, dtype=complex)
    S = np.zeros_like(zeta)
    parts = _tail_components(model, n0)
    if not parts:
        return S, S.copy(), S.copy()
    x = zeta * zeta
    alpha_n0 = model.deviation(n0)
    sigma_plus = 2 * x * alpha_n0
    sigma_minus = 2 * x * alpha_n0
    for A, B, p in parts:
        phi_minus, phi_plus, psi = _power_sums(x, n0, p)
        S = S - 2 * ((zeta * B + 2 * x * A) * psi + A * phi_minus)
        sigma_plus = sigma_plus + 2 * (zeta * B + 2 * x * A) * phi_plus
        sigma_minus = sigma_minus + 2 * (zeta * B + (1 + x) * A) * phi_minus
    return S, sigma_plus, sigma_minus


def _born_edge(model: CoefficientModel, sign: int, n0: int) -> float:
    """First Born sum beyond ``n0`` at zeta = sign (first-moment tails)."""
    S = 0.0
    for A, B, p in _tail_components(model, n0):
        moment = float(hurwitz_zeta(p - 1, n0 + 1)) - n0 * float(hurwitz_zeta(p, n0 + 1))
        S -= 2 * ((sign * B + 2 * A) * moment + A * float(hurwitz_zeta(p, n0 + 1)))
    return S


def _tail_error(model: CoefficientModel, zeta, M: int) -> float:
    if model.support is not None:
        return 0.0
    rho = tail_bound(model).rho(M)
    gap = np.min(np.abs(1 - np.asarray(zeta) ** 2))
    scale = max(1.0, 1.0 / max(gap, 1e-300))
    return float(2 * (rho * scale) ** 2 + rho / max(M, 1))


# ---------------------------------------------------------------------------
# Jost solution containers


@dataclass(frozen=True)
class JostSolution:
    """Normalised Jost solution h_n = zeta^-n f_n for n = -1..len-2."""

    normalized: np.ndarray = field(repr=False)
    parameter: SpectralParameter
    truncation: int
    tail_error: float
    method: str
    iterations: int = 0
    volterra: Optional["VolterraState"] = None

    @property
    def Omega(self) -> complex:
        return complex(self.normalized[0])

    @property
    def omega(self) -> complex:
        """Wronskian {P, f} = -f_{-1}/2."""
        return -self.f(-1) / 2

    @property
    def last_index(self) -> int:
        return self.normalized.shape[0] - 2

    def f(self, n):
        n = np.asarray(n)
        return self.normalized[n + 1] * self.parameter.zeta ** n.astype(float)

    @property
    def values(self) -> np.ndarray:
        n = np.arange(-1, self.last_index + 1)
        return self.f(n)

    def decay_constant(self, model: CoefficientModel) -> float:
        """Empirical C in |f_n zeta^-n - 1| <= C rho_n over the last stored decade."""
        top = min(self.last_index, self.truncation)
        n = np.arange(max(top // 10, 1), top + 1)
        rho = np.asarray([tail_bound(model).rho(int(k)) for k in n])
        ok = rho > 0
        if not np.any(ok):
            return 0.0
        return float(2 * np.max(np.abs(self.normalized[n[ok] + 1] - 1) / rho[ok]))


@dataclass(frozen=True)
class VolterraState:
    """Monitor of the Neumann series for g_n = 2 a_n zeta^-n f_n.

    ``term_norms[k]`` is the sup norm of the k-th iterate and ``tail_sum``
    the total perturbation beyond n = -1; the iterates should obey
    ``|g^(k)| <= (C tail_sum)^k / k!`` for a moderate constant C.
    """

    term_norms: np.ndarray
    tail_sum: float
    partial: np.ndarray = field(repr=False)

    def implied_constants(self) -> np.ndarray:
        k = np.arange(1, self.term_norms.size)
        norms = self.term_norms[1:]
        with np.errstate(divide="ignore"):
            logs = (np.log(norms) + gammaln(k + 1)) / k - math.log(self.tail_sum)
        return np.exp(logs)


def _backward_core(a: np.ndarray, alpha: np.ndarray, b: np.ndarray, zeta, h_M, d_M, M: int, keep: int):
    """Backward recurrence for h from index M down to -1.

    Runs on the differences ``d_n = h_n - h_{n+1}``,

        a_{n-1} d_{n-1} = zeta^2 a_n d_n - (alpha_{n-1} + zeta^2 alpha_n + zeta b_n) h_n,

    with ``alpha_n = a_n - 1/2``.  Near zeta = +-1 the two solutions are
    almost degenerate and the plain form loses accuracy like ``M^2 eps``;
    this form only ever adds small corrections to ``h``.

    ``a``, ``alpha`` and ``b`` hold entries 0..M+1.  Returns ``(h_{-1}, stored)`` with
    ``stored`` holding h_{-1..keep} (``keep <= M + 1``), or None if keep < -1.
    """
    keep = min(keep, M + 1)
    if np.ndim(zeta) == 0:
        z_ = complex(zeta)
        x = z_ * z_
        al, bl, dl = a.tolist(), b.tolist(), alpha.tolist()
        h, d = complex(h_M), complex(d_M)
        store = [0j] * (keep + 2) if keep >= -1 else None
        if store is not None:
            if keep >= M + 1:
                store[M + 2] = h - d
            if keep >= M:
                store[M + 1] = h
        for n in range(M, -1, -1):
            a_prev, al_prev = (al[n - 1], dl[n - 1]) if n >= 1 else (0.5, 0.0)
            d = (x * al[n] * d - (al_prev + x * dl[n] + z_ * bl[n]) * h) / a_prev
            h = h + d
            if store is not None and n - 1 <= keep:
                store[n] = h
        return h, (np.asarray(store, dtype=complex) if store is not None else None)

    zeta = np.asarray(zeta, dtype=complex)
    x = zeta * zeta
    h = np.broadcast_to(np.asarray(h_M, dtype=complex), zeta.shape).copy()
    d = np.broadcast_to(np.asarray(d_M, dtype=complex), zeta.shape).copy()
    store = None
    if keep >= -1:
        store = np.zeros((keep + 2,) + zeta.shape, dtype=complex)
        if keep >= M + 1:
            store[M + 2] = h - d
        if keep >= M:
            store[M + 1] = h
    for n in range(M, -1, -1):
        a_prev, al_prev = (a[n - 1], alpha[n - 1]) if n >= 1 else (0.5, 0.0)
        d = ((a[n] * x) * d - (al_prev + alpha[n] * x + b[n] * zeta) * h) / a_prev
        h = h + d
        if store is not None and n - 1 <= keep:
            store[n] = h
    return h, store


def _check_guard(zeta, guard: bool) -> None:
    if not guard:
        return
    zeta = np.asarray(zeta)
    near = np.minimum(np.abs(zeta - 1), np.abs(zeta + 1))
    if np.any(near < EDGE_GUARD):
        raise EdgeProximityError(f"zeta within {EDGE_GUARD:g} of +-1; use edge_jost for the edge points")


def _bessel_seed(parts, zeta: np.ndarray, sign: int, n: int):
    """h_n for an inverse-square tail from the Hankel-function solution.

    Near zeta = sign the recurrence with a_n - 1/2 ~ A n^-2, b_n ~ B n^-2
    reduces to f'' + (k^2 - (nu^2 - 1/4) n^-2) f = 0 with k = i log(sign zeta)
    and nu^2 = 1/4 - 2 (2A + sign B), whose decaying solution is
    sqrt(n) H2_nu(k n).  The next order of the tail enters as a shift of n,
    the dispersion of the lattice as a phase correction.  Returns None when
    the order nu is not real.
    """
    (A, B, _), *rest = parts
    A3, B3 = (rest[0][0], rest[0][1]) if rest else (0.0, 0.0)
    c0 = 2 * A + sign * B
    if 0.25 - 2 * c0 <= 0 or c0 == 0:
        return None
    nu = math.sqrt(0.25 - 2 * c0)
    # keep k in the right half plane, off the branch cut; f(conj zeta) = conj f(zeta)
    flip = (sign * zeta).imag > 0
    zeta = np.where(flip, np.conj(zeta), zeta)
    k = 1j * np.log(sign * zeta)
    ck = k / np.sin(k) * (2 * A * np.cos(k) + sign * B)
    u = k * (n - (2 * (A + A3) + sign * B3) / (2 * c0))
    f = np.sqrt(np.pi * u / 2) * np.exp(-1j * (nu * np.pi / 2 + np.pi / 4)) * hankel2e(nu, u)
    f = f * np.exp(1j * (ck - c0) / u)
    return np.where(flip, np.conj(f), f)


def _seeds(model: CoefficientModel, zeta, M: int):
    """(h_M, h_M - h_{M+1}) from the closed-form tail."""
    z = np.atleast_1d(np.asarray(zeta, dtype=complex)).ravel()
    h_M = (1 + _born_pieces(model, z, M)[0]) / (2 * float(model.a(M)))
    h_M1 = (1 + _born_pieces(model, z, M + 1)[0]) / (2 * float(model.a(M + 1)))
    parts = _tail_components(model, M)
    if parts and parts[0][2] == 2:
        for sign in (1, -1):
            sel = (sign * z.real >= 0) & (np.abs(z) >= 0.5)
            if not np.any(sel):
                continue
            hb = _bessel_seed(parts, z[sel], sign, M)
            if hb is None:
                continue
            h_M[sel] = hb
            h_M1[sel] = _bessel_seed(parts, z[sel], sign, M + 1)
    d_M = h_M - h_M1
    if np.ndim(zeta) == 0:
        return complex(h_M[0]), complex(d_M[0])
    return h_M.reshape(np.shape(zeta)), d_M.reshape(np.shape(zeta))


def jost_backward(
    model: CoefficientModel,
    sp: SpectralParameter,
    tol: float = DEFAULT_TOL,
    n_keep: Optional[int] = None,
    truncation: Optional[int] = None,
) -> JostSolution:
    """Jost solution by backward recurrence from a Born-corrected seed."""
    _check_guard(sp.zeta, True)
    M = truncation if truncation is not None else truncation_for(model, tol)
    keep = M + 1 if n_keep is None else min(n_keep, M + 1)
    a, b = model.arrays(M + 1)
    alpha = model.deviations(M + 1)
    h_M, d_M = _seeds(model, sp.zeta, M)
    _, stored = _backward_core(a, alpha, b, sp.zeta, h_M, d_M, M, keep)
    if model.support is not None and n_keep is not None and n_keep + 2 > stored.shape[0]:
        # beyond the support the Jost solution is exactly zeta^n
        stored = np.concatenate([stored, np.ones(n_keep + 2 - stored.shape[0], dtype=complex)])
    return JostSolution(stored, sp, M, _tail_error(model, sp.zeta, M), "backward")


def jost_function_array(
    model: CoefficientModel,
    zeta,
    tol: float = DEFAULT_TOL,
    guard: bool = True,
    truncation: Optional[int] = None,
) -> np.ndarray:
    """Omega(zeta) for an array of points of the closed disc (zeta = 0 allowed)."""
    zeta = np.asarray(zeta, dtype=complex)
    _check_guard(zeta, guard)
    M = truncation if truncation is not None else truncation_for(model, tol)
    a, b = model.arrays(M + 1)
    alpha = model.deviations(M + 1)
    flat = zeta.ravel()
    if flat.size == 0:
        return zeta.copy()
    if flat.size == 1:
        h_M, d_M = _seeds(model, complex(flat[0]), M)
        omega, _ = _backward_core(a, alpha, b, complex(flat[0]), h_M, d_M, M, -2)
        return np.full(zeta.shape, omega, dtype=complex)

    def run(chunk):
        h_M, d_M = _seeds(model, chunk, M)
        omega, _ = _backward_core(a, alpha, b, chunk, h_M, d_M, M, -2)
        return omega

    workers = worker_count()
    if workers > 1 and flat.size >= 2 * 256:
        chunks = np.array_split(flat, min(workers, flat.size // 256))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
        out = np.concatenate(parts)
    else:
        out = run(flat)
    return np.asarray(out, dtype=complex).reshape(zeta.shape)


def jost_function(model: CoefficientModel, sp: SpectralParameter, tol: float = DEFAULT_TOL) -> complex:
    """Omega = zeta f_{-1}; refuses boundary points where Omega vanishes."""
    _check_guard(sp.zeta, True)
    value = complex(jost_function_array(model, np.asarray(sp.zeta), tol))
    if sp.on_boundary and abs(value) < 1e-12:
        raise ConvergenceError(f"Omega vanishes at boundary point lambda = {sp.lam}; impossible for a trace-class model")
    return value


# ---------------------------------------------------------------------------
# Volterra route


def _kernel_terms(a: np.ndarray, alpha: np.ndarray, b: np.ndarray, zeta: complex):
    """c+_m and c-_m for m = 0..len-1, using a_{-1} = 1/2."""
    x = zeta * zeta
    alpha_prev = np.concatenate([[0.0], alpha[:-1]])
    c_plus = (zeta * b + alpha_prev + x * alpha) / a
    c_minus = (zeta * b + x * alpha_prev + alpha) / a
    return c_plus, c_minus


def volterra_kernel(model: CoefficientModel, sp: SpectralParameter, n, m):
    """G_{n,m}(z) of the Volterra equation g_n = 1 + sum_{m>n} G_{n,m} g_m."""
    n = np.asarray(n)
    m = np.asarray(m)
    zeta = complex(sp.zeta)
    x = zeta * zeta
    a_m = model.a(m)
    alpha = np.vectorize(model.deviation, otypes=[float])(m)
    alpha_prev = np.vectorize(model.deviation, otypes=[float])(m - 1)
    b_m = model.b(m)
    c_plus = (zeta * b_m + alpha_prev + x * alpha) / a_m
    c_minus = (zeta * b_m + x * alpha_prev + alpha) / a_m
    return np.where(m > n, (x ** (m - n) * c_plus - c_minus) / (1 - x), 0.0)


def jost_volterra(
    model: CoefficientModel,
    sp: SpectralParameter,
    tol: float = DEFAULT_TOL,
    max_iter: int = 200,
    truncation: Optional[int] = None,
) -> JostSolution:
    """Jost solution from the Neumann series of the discrete Volterra equation."""
    _check_guard(sp.zeta, True)
    M = truncation if truncation is not None else truncation_for(model, tol)
    zeta = complex(sp.zeta)
    x = zeta * zeta
    a, b = model.arrays(M)
    alpha = model.deviations(M)
    c_plus, c_minus = _kernel_terms(a, alpha, b, zeta)
    # inhomogeneous term 1 + tau_n for n = -1..M, tail beyond M in closed form
    S_M, _, sig_minus = _born_pieces(model, np.asarray([zeta]), M)
    S_M, sig_minus = complex(S_M[0]), complex(sig_minus[0])
    k = M - np.arange(-1, M + 1)
    if abs(1 - x) > 0.25:
        geom = (1 - x ** k) / (1 - x)
    else:
        L = np.log(x)
        geom = np.expm1(k * L) / np.expm1(L)
    tau = x ** k * S_M - sig_minus * geom
    term = 1.0 + tau
    total = term.copy()
    norms = [float(np.max(np.abs(term)))]
    # c-values aligned with n = -1..M: entry for m sits at position m + 1
    cp = np.concatenate([[0.0], c_plus])
    cm = np.concatenate([[0.0], c_minus])
    it = 0
    for it in range(1, max_iter + 1):
        v_plus = cp * term
        v_minus = cm * term
        # sum_{m>n} x^(m-n) v_plus[m] via a first-order filter on the reversed sequence
        rev = v_plus[::-1]
        shifted = np.concatenate([[0.0], rev[:-1]])
        T = lfilter([x], [1.0, -x], shifted)[::-1]
        R = np.concatenate([np.cumsum(v_minus[::-1])[::-1][1:], [0.0]])
        term = (T - R) / (1 - x)
        total = total + term
        norms.append(float(np.max(np.abs(term))))
        if norms[-1] < tol:
            break
    else:
        raise ConvergenceError(f"Volterra iteration did not reach {tol:g} in {max_iter} steps")
    a_ext = np.concatenate([[0.5], a])
    h = total / (2 * a_ext)
    tail_sum = tail_bound(model).rho(0) if model.support is None or model.support >= 0 else 0.0
    state = VolterraState(np.asarray(norms), float(tail_sum), total)
    return JostSolution(h, sp, M, _tail_error(model, zeta, M), "volterra", iterations=it, volterra=state)


# ---------------------------------------------------------------------------
# Polynomial route


def jost_via_polynomials(model: CoefficientModel, sp: SpectralParameter, N: Optional[int] = None, tol: float = DEFAULT_TOL):
    """Omega = 1 - 2 sum_n zeta^(n+1) (V P)_n, with a closed-form tail correction.

    Beyond ``N`` the scaled polynomials zeta^n P_n are replaced by their limit
    Omega / (1 - zeta^2), which turns the truncated sum into a linear
    equation for Omega.
    """
    if N is None:
        N = truncation_for(model, tol)
    zeta = complex(sp.zeta)
    x = zeta * zeta
    p = polynomial_table(model, sp.z, N + 1, scale=1, zeta=zeta)  # zeta^n P_n, n = -1..N+1
    a, b = model.arrays(N + 1)
    alpha = model.deviations(N + 1)
    alpha_prev = np.concatenate([[0.0], alpha[:-1]])
    n = np.arange(N + 1)
    terms = alpha_prev[n] * x * p[n] + b[n] * zeta * p[n + 1] + alpha[n] * p[n + 2]
    partial = 1 - 2 * complex(np.sum(terms))
    rule = model.tail_rule
    if model.support is not None and N > model.support or rule is None:
        return partial
    A, B, q = rule.a_coef, rule.b_coef, rule.exponent
    phi = float(hurwitz_zeta(q, N + 1))
    T = x * (alpha[N] + A * phi) + zeta * B * phi + A * phi
    return partial / (1 + 2 * T / (1 - x))


# ---------------------------------------------------------------------------
# Edge points


@dataclass(frozen=True)
class EdgeJost:
    sign: int
    normalized: np.ndarray = field(repr=False)  # sign^-n f_n(sign), n = -1..M+1
    truncation: int

    @property
    def Omega(self) -> float:
        return float(self.normalized[0].real)

    def f(self, n):
        n = np.asarray(n)
        return self.normalized[n + 1].real * float(self.sign) ** n


def _require_first_moment(model: CoefficientModel) -> None:
    if not model.decay_class.at_least("first_moment"):
        raise DecayError(f"model {model.name} lacks first-moment decay; edge values are not defined")


def edge_jost(model: CoefficientModel, sign: int, tol: float = DEFAULT_TOL) -> EdgeJost:
    """f_n(+-1) by backward recurrence at zeta = +-1 and Omega(+-1) = f_{-1}(+-1) (+-1)."""
    _require_first_moment(model)
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    M = truncation_for(model, tol, moment=1)
    a, b = model.arrays(M + 1)
    alpha = model.deviations(M + 1)
    S0 = _born_edge(model, sign, M)
    S1 = _born_edge(model, sign, M + 1)
    h_M = (1 + S0) / (2 * a[M])
    h_M1 = (1 + S1) / (2 * a[M + 1])
    _, stored = _backward_core(a, alpha, b, float(sign), h_M, h_M - h_M1, M, M + 1)
    return EdgeJost(sign, stored.real.astype(float), M)


@dataclass(frozen=True)
class ResonanceReport:
    sign: int
    Omega: float
    threshold: float
    is_resonance: bool
    gamma: Optional[float] = None
    gamma_series: Optional[float] = None
    gamma_limit: Optional[float] = None
    gamma_agreement: Optional[float] = None
    approach_ratios: tuple = ()


def resonance_analysis(model: CoefficientModel, sign: int, tol: float = 1e-6, threshold: Optional[float] = None) -> ResonanceReport:
    """Decide whether Omega(+-1) = 0 and, if so, compute gamma by two routes."""
    _require_first_moment(model)
    A = normalization_A(model)
    if threshold is None:
        threshold = 1e-6 * (1 + 1 / A)
    edge = edge_jost(model, sign)
    omega = edge.Omega
    if abs(omega) >= threshold:
        return ResonanceReport(sign, omega, threshold, False)

    support = model.support
    N = (support + 2) if support is not None else min(truncation_for(model, 1e-16, moment=1), MAX_TRUNCATION)
    N = max(N, 8)
    P = polynomial_table(model, float(sign), N + 1).real  # P_{-1..N+1}(sign)
    a, b = model.arrays(N + 1)
    m = np.arange(N + 1)
    da = model.deviations(N + 1)
    da_prev = np.concatenate([[0.0], da[:-1]])
    VP = da_prev[m] * P[m] + b[m] * P[m + 1] + da[m] * P[m + 2]
    gamma_series = 1 + 2 * math.fsum(float(sign) ** (m - 1) * m * VP)
    gamma_limit = float(sign) ** N * P[N + 1]
    agreement = abs(gamma_series - gamma_limit)
    if agreement > tol:
        raise ConvergenceError(
            f"resonance coefficient estimates disagree: series {gamma_series!r}, limit {gamma_limit!r}"
        )
    ratios = []
    for eps in (1e-2, 1e-3, 1e-4):
        zeta = sign * (1 - eps)
        om = complex(jost_function_array(model, np.asarray(zeta), guard=False))
        s = (1 / zeta - zeta) / 2
        ratios.append(float((om / (sign * gamma_series * s)).real))
    return ResonanceReport(
        sign, omega, threshold, True, gamma_series, gamma_series, gamma_limit, agreement, tuple(ratios)
    )
