"""Perturbation determinant, spectral shift, scattering matrix and wave operators.

The scattering phase is the boundary argument of the Jost function,
Omega(lambda + i0) = kappa(theta) e^{i eta(theta)}.  Its 2 pi ambiguity is
fixed by continuation along the radius r e^{-i theta}, r from 0 to 1:
Omega(0) = 1/A is positive, and for real coefficients the zeros of Omega
are real, so no radius with 0 < theta < pi meets one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse

from ._quadrature import theta_rule
from .coefficients import CoefficientModel, normalization_A
from .errors import ComputationError, DecayError, EdgeProximityError
from .jost import DEFAULT_TOL, jost_backward, jost_function_array, resonance_analysis
from .lattice import LAMBDA_GUARD, SpectralParameter, polynomial_table, zeta_of
from .spectral import eigenvalues, weight_from_theta

__all__ = [
    "ScatteringProfile",
    "perturbation_determinant",
    "determinant_oracle",
    "trace_resolvent_difference",
    "phase_profile",
    "boundary_phase",
    "scattering_matrix",
    "wave_operator_element",
    "wave_operator_block",
    "intertwining_residual",
    "isometry_defect",
    "trace_power_identity",
    "levinson_check",
]


def perturbation_determinant(model: CoefficientModel, sp, tol: float = DEFAULT_TOL) -> complex:
    """Delta = A Omega; Delta(zeta = 0) = 1."""
    sp = sp if isinstance(sp, SpectralParameter) else zeta_of(sp)
    omega = complex(jost_function_array(model, np.asarray(sp.zeta), tol))
    return normalization_A(model) * omega


def _free_resolvent_block(zeta: complex, K: int) -> np.ndarray:
    n = np.arange(K)
    s = (1 / zeta - zeta) / 2
    return (zeta ** (n[:, None] + n[None, :] + 2) - zeta ** np.abs(n[:, None] - n[None, :])) / s


def determinant_oracle(model: CoefficientModel, zeta: complex) -> complex:
    """det(I + V R0(z)) on the active block of a finite-support model."""
    support = model.support
    if support is None:
        raise DecayError("the determinant oracle needs a finite-support model")
    if support < 0:
        return 1.0 + 0j
    K = support + 2
    a, b = model.arrays(K - 1)
    alpha = model.deviations(K - 1)
    V = np.diag(b[:K]).astype(complex)
    V += np.diag(alpha[: K - 1], 1) + np.diag(alpha[: K - 1], -1)
    return complex(np.linalg.det(np.eye(K) + V @ _free_resolvent_block(complex(zeta), K)))


def trace_resolvent_difference(model: CoefficientModel, sp, N: int = 10_000, tol: float = DEFAULT_TOL) -> dict:
    """Tr(R(z) - R0(z)) by -Omega'/Omega and by summing diagonal resolvent elements."""
    sp = sp if isinstance(sp, SpectralParameter) else zeta_of(sp)
    if sp.on_boundary:
        raise ValueError("trace_resolvent_difference needs an interior parameter")
    zeta = complex(sp.zeta)
    s = complex(sp.sqrt_z2m1)
    step = 1e-6 * max(abs(zeta), 1e-3)
    pts = np.array([zeta - step, zeta + step, zeta])
    vals = jost_function_array(model, pts, tol)
    d_omega = (vals[1] - vals[0]) / (2 * step)
    derivative = -d_omega * zeta / s  # d Omega / dz, using dz/dzeta = -s/zeta
    route_log = complex(-derivative / vals[2])

    jost = jost_backward(model, sp, tol, n_keep=N)
    scaled_P = polynomial_table(model, sp.z, N, scale=1, zeta=zeta)[1 : N + 2]
    n = np.arange(N + 1)
    h = np.ones(N + 1, dtype=complex)
    stored = jost.normalized[1 : N + 2]
    h[: stored.size] = stored
    diag = scaled_P * h / jost.omega
    free = (zeta ** (2 * n + 2) - 1) / s
    route_sum = complex(math.fsum((diag - free).real) + 1j * math.fsum((diag - free).imag))
    tail = float(jost.tail_error + _tail_sum(model, N))
    bound = max(1e-6, 10 * tail)
    agree = abs(route_log - route_sum)
    return {"log_derivative": route_log, "diagonal_sum": route_sum, "difference": agree, "bound": bound, "ok": agree <= bound}


def _tail_sum(model: CoefficientModel, N: int) -> float:
    from .coefficients import tail

    return float(tail(model, N + 1)) if model.decay_class.kind != "unclassified" else float("inf")


# ---------------------------------------------------------------------------
# Phase and scattering matrix


@dataclass(frozen=True)
class ScatteringProfile:
    theta: np.ndarray
    lam: np.ndarray
    kappa: np.ndarray
    eta: np.ndarray
    xi: np.ndarray
    S: np.ndarray
    w: np.ndarray
    Delta: np.ndarray
    radial_steps: np.ndarray = field(repr=False, default=None)

    def max_adjacent_jump(self) -> float:
        return float(np.max(np.abs(np.diff(self.xi * np.pi)))) if self.xi.size > 1 else 0.0


def _radial_phase(model: CoefficientModel, theta: np.ndarray, tol: float, max_levels: int = 40):
    """Unwrapped arg Omega(e^{-i theta}) by continuation from zeta = 0."""
    radii = [np.array([0.0, 0.25, 0.5, 0.7, 0.85, 0.93, 0.97, 0.99, 0.997, 1.0]) for _ in theta]
    values = [None] * theta.size
    pending = list(range(theta.size))
    for _ in range(max_levels):
        if not pending:
            break
        # evaluate all new points in one vectorised pass
        need = []
        for i in pending:
            r = radii[i]
            old = values[i]
            if old is None:
                need.append((i, np.arange(r.size)))
            else:
                need.append((i, np.flatnonzero(np.isnan(old))))
        flat = np.concatenate([radii[i][idx] * np.exp(-1j * theta[i]) for i, idx in need])
        omega = jost_function_array(model, flat, tol, guard=False)
        pos = 0
        for i, idx in need:
            if values[i] is None:
                values[i] = np.full(radii[i].size, np.nan, dtype=complex)
            values[i][idx] = omega[pos : pos + idx.size]
            pos += idx.size
        still = []
        for i in pending:
            steps = np.angle(values[i][1:] / values[i][:-1])
            bad = np.flatnonzero(np.abs(steps) >= np.pi / 4)
            if bad.size == 0:
                continue
            r = radii[i]
            mids = (r[bad] + r[bad + 1]) / 2
            new_r = np.insert(r, bad + 1, mids)
            new_v = np.insert(values[i], bad + 1, np.nan)
            radii[i], values[i] = new_r, new_v
            still.append(i)
        pending = still
    else:
        raise ComputationError("radial phase continuation did not resolve; a zero of Omega lies near the path")
    eta = np.empty(theta.size)
    boundary = np.empty(theta.size, dtype=complex)
    steps_used = np.empty(theta.size, dtype=int)
    for i in range(theta.size):
        v = values[i]
        eta[i] = np.angle(v[0]) + np.sum(np.angle(v[1:] / v[:-1]))
        boundary[i] = v[-1]
        steps_used[i] = v.size
    return eta, boundary, steps_used


def boundary_phase(model: CoefficientModel, theta, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Unwrapped eta on a dense theta grid: unwrap along theta, branch fixed radially at one node."""
    theta = np.asarray(theta, dtype=float)
    order = np.argsort(theta)
    t = theta[order]
    omega = jost_function_array(model, np.exp(-1j * t), tol, guard=False)
    steps = np.angle(omega[1:] / omega[:-1])
    if steps.size and np.max(np.abs(steps)) >= np.pi / 4:
        return _radial_phase(model, theta, tol)[0]
    eta_sorted = np.angle(omega[0]) + np.concatenate([[0.0], np.cumsum(steps)])
    anchor = int(np.argmin(np.abs(t - np.pi / 2)))
    eta_anchor = _radial_phase(model, t[anchor : anchor + 1], tol)[0][0]
    eta_sorted += 2 * np.pi * np.round((eta_anchor - eta_sorted[anchor]) / (2 * np.pi))
    eta = np.empty_like(eta_sorted)
    eta[order] = eta_sorted
    return eta


def phase_profile(model: CoefficientModel, theta_grid, tol: float = DEFAULT_TOL, guard: float = 1e-3) -> ScatteringProfile:
    """kappa, eta, xi = eta / pi, S = e^{-2 i eta}, w and Delta on a theta grid in (0, pi)."""
    if model.decay_class.kind == "unclassified":
        raise DecayError(f"model {model.name} is not trace class")
    theta = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    if np.any(theta < guard) or np.any(theta > np.pi - guard):
        raise EdgeProximityError(f"theta grid must stay {guard:g} away from 0 and pi")
    eta, omega, steps = _radial_phase(model, theta, tol)
    kappa = np.abs(omega)
    A = normalization_A(model)
    return ScatteringProfile(
        theta=theta,
        lam=np.cos(theta),
        kappa=kappa,
        eta=eta,
        xi=eta / np.pi,
        S=np.exp(-2j * eta),
        w=2 / np.pi * np.sin(theta) / kappa**2,
        Delta=A * omega,
        radial_steps=steps,
    )


def scattering_matrix(model: CoefficientModel, lam, tol: float = DEFAULT_TOL):
    """S(lambda) = Omega(lambda - i0) / Omega(lambda + i0)."""
    lam = np.asarray(lam, dtype=float)
    if np.any(np.abs(lam) > 1 - LAMBDA_GUARD):
        raise EdgeProximityError("lambda too close to the spectrum edge")
    theta = np.arccos(lam)
    zeta = np.exp(-1j * theta)
    both = jost_function_array(model, np.stack([zeta, np.conj(zeta)]), tol)
    out = both[1] / both[0]
    return out if np.ndim(lam) else complex(out)


# ---------------------------------------------------------------------------
# Wave operators


def _eigenfunction_tables(model: CoefficientModel, n_max: int, m_max: int, tol: float, order: int):
    theta, wts = theta_rule(order)
    omega = jost_function_array(model, np.exp(-1j * theta), tol, guard=False)
    w = 2 / np.pi * np.sin(theta) / np.abs(omega) ** 2
    w0 = 2 / np.pi * np.sin(theta)
    lam = np.cos(theta)
    P = polynomial_table(model, lam, n_max).real[1:]
    U = np.sin(np.outer(np.arange(1, m_max + 2), theta)) / np.sin(theta)
    psi = P * np.sqrt(w)
    psi0 = U * np.sqrt(w0)
    sigma = omega / np.abs(omega)
    return theta, wts * np.sin(theta), psi, psi0, sigma


def wave_operator_block(model: CoefficientModel, n_max: int, m_max: int, sign: int = 1, tol: float = DEFAULT_TOL, order: int = 20) -> np.ndarray:
    """Matrix elements (W_+- e_m, e_n) = int psi_n sigma_+-^(sign) psi0_m d lambda for n <= n_max, m <= m_max."""
    _, dl, psi, psi0, sigma = _eigenfunction_tables(model, n_max, m_max, tol, order)
    sig = sigma if sign > 0 else np.conj(sigma)
    return (psi * (sig * dl)) @ psi0.T


def wave_operator_element(model: CoefficientModel, n: int, m: int, sign: int = 1, tol: float = DEFAULT_TOL, order: int = 20) -> complex:
    return complex(wave_operator_block(model, n, m, sign, tol, order)[n, m])


def intertwining_residual(model: CoefficientModel, size: int = 20, sign: int = 1, tol: float = DEFAULT_TOL, order: int = 20) -> float:
    """max |(H W - W H0)_nm| over n, m < size, from a (size + 1)-block of W."""
    W = wave_operator_block(model, size, size, sign, tol, order)
    a, b = model.arrays(size)
    J = np.diag(b[: size + 1]) + np.diag(a[:size], 1) + np.diag(a[:size], -1)
    J0 = (np.eye(size + 1, k=1) + np.eye(size + 1, k=-1)) / 2
    # row and column `size` would need W beyond the block
    R = (J @ W - W @ J0)[:size, :size]
    return float(np.max(np.abs(R)))


def isometry_defect(model: CoefficientModel, n: int, tol: float = DEFAULT_TOL, order: int = 20) -> float:
    """1 - sum_m |W_nm|^2 = 1 - int w P_n^2 d lambda: the point-spectrum mass of e_n."""
    theta, wts = theta_rule(order)
    w = weight_from_theta(model, theta, tol)
    P = polynomial_table(model, np.cos(theta), n).real[n + 1]
    return float(1 - np.sum(w * P * P * np.sin(theta) * wts))


# ---------------------------------------------------------------------------
# Trace identities


def _trace_power_truncated(model: CoefficientModel, power: int, N: int) -> float:
    a, b = model.arrays(N - 1)
    H = sparse.diags([a[: N - 1], b[:N], a[: N - 1]], [-1, 0, 1], format="csr")
    H0 = sparse.diags([np.full(N - 1, 0.5), np.zeros(N), np.full(N - 1, 0.5)], [-1, 0, 1], format="csr")
    Hp, H0p = H.copy(), H0.copy()
    for _ in range(power - 1):
        Hp, H0p = Hp @ H, H0p @ H0
    d = Hp.diagonal() - H0p.diagonal()
    return math.fsum(d)


def trace_power_identity(model: CoefficientModel, n_power: int, tol: float = 1e-6, spectrum=None, theta_order: int = 20) -> dict:
    """Tr(H^n - H0^n) against n int xi lambda^(n-1) d lambda plus the eigenvalue ladders."""
    if n_power < 1:
        raise ValueError("power must be at least 1")
    support = model.support
    N = max(64, (support + 2 * n_power + 4) if support is not None else 1024)
    lhs = _trace_power_truncated(model, n_power, N)
    if support is None:
        # partial traces converge like 1/N for n^-2 tails: Richardson on doubling N
        prev_raw, prev_ext = lhs, None
        while N < 2**22:
            N *= 2
            raw = _trace_power_truncated(model, n_power, N)
            ext = 2 * raw - prev_raw
            if prev_ext is not None and abs(ext - prev_ext) < tol / 10:
                lhs = ext
                break
            prev_raw, prev_ext, lhs = raw, ext, ext
    a, b = model.arrays(max(N - 1, 1))
    diagonal = None
    if n_power == 1:
        diagonal = math.fsum(b[:N])
    elif n_power == 2:
        dev = model.deviations(max(N - 1, 1))
        diagonal = math.fsum(b[:N] ** 2) + 2 * math.fsum(dev[: N - 1] * (a[: N - 1] + 0.5))

    theta, wts = theta_rule(theta_order)
    profile_eta = boundary_phase(model, theta)
    lam = np.cos(theta)
    integral = n_power * float(np.sum(profile_eta / np.pi * lam ** (n_power - 1) * np.sin(theta) * wts))

    if spectrum is None:
        spectrum = eigenvalues(model)
    ladder = 0.0
    for side in (1, -1):
        ev = np.sort(spectrum.eigenvalues[side * spectrum.eigenvalues > 1])[::-1 if side > 0 else 1]
        ext = np.concatenate([ev, [float(side)]])
        ladder += sum((k + 1) * (ext[k] ** n_power - ext[k + 1] ** n_power) for k in range(ev.size))
    rhs = integral + ladder
    return {
        "lhs": lhs,
        "diagonal_sum": diagonal,
        "integral": integral,
        "ladder": ladder,
        "rhs": rhs,
        "residual": abs(lhs - rhs),
    }


def levinson_check(model: CoefficientModel, tol: float = DEFAULT_TOL) -> dict:
    """xi(1 - 0) - xi(-1 + 0) against N + kappa (kappa from edge resonances)."""
    if not model.decay_class.at_least("first_moment"):
        raise DecayError(f"model {model.name} lacks first-moment decay")
    t = np.array([4e-4, 2e-4, 1e-4])
    right = phase_profile(model, t, tol, guard=t[-1]).xi
    left = phase_profile(model, np.pi - t, tol, guard=t[-1]).xi
    # quadratic Richardson extrapolation in theta to the edges
    xi_right = (8 * right[2] - 6 * right[1] + right[0]) / 3
    xi_left = (8 * left[2] - 6 * left[1] + left[0]) / 3
    spec = eigenvalues(model)
    res = {s: resonance_analysis(model, s).is_resonance for s in (1, -1)}
    kappa = 0.5 * sum(res.values())
    jump = xi_right - xi_left
    return {
        "xi_right": xi_right,
        "xi_left": xi_left,
        "xi_jump": jump,
        "N_eigenvalues": len(spec),
        "kappa_resonance": kappa,
        "residual": abs(jump - len(spec) - kappa),
    }
