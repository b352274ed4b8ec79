"""The zeta-map, three-term recurrences, Wronskians and operator application.

Conventions
-----------
``zeta = z - sqrt(z^2 - 1)`` is the root of ``zeta + 1/zeta = 2 z`` inside the
unit disc.  The square root is never taken directly: ``sqrt(z^2 - 1)`` always
means ``(1/zeta - zeta) / 2`` for the selected ``zeta``, so a single branch
decision is made.  On the cut, ``zeta(lambda +- i0) = exp(-+ i theta)`` with
``lambda = cos(theta)``.

Sequences indexed from ``-1`` are stored with an offset of one, so the entry
for index ``n`` lives at position ``n + 1``.  Sequences may also be stored
scaled, ``stored_n = zeta^(scale * n) * true_n``, to keep exponentially
growing or decaying solutions representable for large ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coefficients import CoefficientModel
from .errors import EdgeProximityError

__all__ = [
    "EDGE_GUARD",
    "LAMBDA_GUARD",
    "SpectralParameter",
    "PolySequence",
    "zeta_of",
    "boundary_parameter",
    "zeta_array",
    "z_of",
    "sqrt_z2m1",
    "regular_polynomials",
    "polynomial_table",
    "leading_coefficients",
    "chebyshev_U",
    "chebyshev_T",
    "wronskian",
    "growing_solution",
    "apply_H",
    "apply_V",
    "apply_H_array",
    "apply_V_array",
]

EDGE_GUARD = 1e-6
# the same guard on the lambda side: theta < EDGE_GUARD means 1 - |lambda| < EDGE_GUARD^2 / 2 to leading order
LAMBDA_GUARD = EDGE_GUARD**2 / 2

SIDES = ("interior", "boundary_plus", "boundary_minus")


def z_of(zeta):
    """Inverse of the zeta-map: z = (zeta + 1/zeta) / 2."""
    zeta = np.asarray(zeta, dtype=complex)
    return (zeta + 1.0 / zeta) / 2


def sqrt_z2m1(zeta):
    """sqrt(z^2 - 1) on the branch fixed by the zeta-map."""
    zeta = np.asarray(zeta, dtype=complex)
    return (1.0 / zeta - zeta) / 2


def zeta_array(z) -> np.ndarray:
    """Vectorised zeta-map for points off the cut [-1, 1]."""
    z = np.asarray(z, dtype=complex)
    w = np.sqrt(z * z - 1)
    first = z - w
    second = z + w
    # the small root as the reciprocal of the large one avoids cancellation for large |z|
    large = np.where(np.abs(first) > np.abs(second), first, second)
    return 1 / large


def _guard_edges(zeta, what: str = "operation") -> None:
    zeta = np.asarray(zeta)
    near = np.minimum(np.abs(zeta - 1), np.abs(zeta + 1))
    if np.any(near < EDGE_GUARD):
        raise EdgeProximityError(f"{what}: zeta within {EDGE_GUARD:g} of an edge point +-1")


@dataclass(frozen=True)
class SpectralParameter:
    """A point of the closed unit disc standing for z or for lambda +- i0."""

    zeta: complex
    side: str = "interior"

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}")
        modulus = abs(self.zeta)
        if self.side == "interior":
            if not modulus < 1:
                raise ValueError("interior parameters need |zeta| < 1")
            if self.zeta == 0:
                raise ValueError("zeta = 0 corresponds to z = infinity")
        else:
            if abs(modulus - 1) > 1e-12:
                raise ValueError("boundary parameters need |zeta| = 1")
            if self.zeta in (1, -1):
                raise ValueError("boundary parameters exclude zeta = +-1")

    @property
    def z(self) -> complex:
        if self.side != "interior":
            return complex(self.lam)
        return complex(z_of(self.zeta))

    @property
    def sqrt_z2m1(self) -> complex:
        return complex(sqrt_z2m1(self.zeta))

    @property
    def theta(self) -> float:
        if self.side == "interior":
            raise ValueError("theta is defined for boundary parameters only")
        return float(abs(np.angle(self.zeta)))

    @property
    def lam(self) -> float:
        if self.side == "interior":
            raise ValueError("lambda is defined for boundary parameters only")
        return float(np.cos(self.theta))

    @property
    def on_boundary(self) -> bool:
        return self.side != "interior"

    def conjugate(self) -> "SpectralParameter":
        flip = {"interior": "interior", "boundary_plus": "boundary_minus", "boundary_minus": "boundary_plus"}
        return SpectralParameter(complex(np.conj(self.zeta)), flip[self.side])

    def near_edge(self, guard: float = EDGE_GUARD) -> bool:
        return min(abs(self.zeta - 1), abs(self.zeta + 1)) < guard


def boundary_parameter(lam: float, side: int = 1) -> SpectralParameter:
    """lambda + i0 (side = +1) or lambda - i0 (side = -1) for lambda in (-1, 1)."""
    if not -1 < lam < 1:
        raise ValueError(f"boundary values need lambda in (-1, 1), got {lam}")
    theta = np.arccos(lam)
    if side > 0:
        return SpectralParameter(complex(np.exp(-1j * theta)), "boundary_plus")
    return SpectralParameter(complex(np.exp(1j * theta)), "boundary_minus")


def zeta_of(z, side: Optional[int] = None) -> SpectralParameter:
    """Map z to the disc.  Points of [-1, 1] need ``side`` = +1 or -1."""
    z = complex(z)
    on_cut = z.imag == 0 and -1 <= z.real <= 1
    if on_cut:
        if side is None:
            raise ValueError(f"z = {z.real} lies on the cut; give side=+1 or side=-1")
        return boundary_parameter(z.real, side)
    return SpectralParameter(complex(zeta_array(z)), "interior")


# ---------------------------------------------------------------------------
# Sequences


@dataclass(frozen=True)
class PolySequence:
    """Values of a solution of the three-term recurrence for indices -1..N."""

    values: np.ndarray = field(repr=False)
    parameter: SpectralParameter
    kind: str
    scale: int = 0

    @property
    def last_index(self) -> int:
        return self.values.shape[0] - 2

    def scaled(self, n):
        """Stored values zeta^(scale n) u_n."""
        return self.values[np.asarray(n) + 1]

    def value(self, n):
        """True values u_n."""
        n = np.asarray(n)
        out = self.values[n + 1]
        if self.scale:
            out = out * self.parameter.zeta ** (-self.scale * n.astype(float))
        return out

    def __len__(self):
        return self.values.shape[0]


def _forward(a: np.ndarray, b: np.ndarray, z, zeta, n_max: int, scale: int) -> np.ndarray:
    """Forward recurrence for P_n, stored as zeta^(scale n) P_n, indices -1..n_max.

    ``z`` and ``zeta`` may be arrays of the same shape; the result has shape
    ``(n_max + 2,) + shape``.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    if scale:
        t = np.asarray(zeta, dtype=complex) ** scale
        tz = (np.asarray(zeta, dtype=complex) ** (scale + 1) + np.asarray(zeta, dtype=complex) ** (scale - 1)) / 2
    else:
        t = np.ones(shape, dtype=complex)
        tz = z
    out = np.empty((n_max + 2,) + shape, dtype=complex)
    out[0] = 0.0
    out[1] = 1.0
    if shape == ():
        # scalar fast path with Python complex arithmetic
        t_s, tz_s, t2 = complex(t), complex(tz), complex(t) ** 2
        prev, cur = 0j, 1 + 0j
        a_prev = 0.5
        al, bl = a.tolist(), b.tolist()
        vals = [0j, 1 + 0j]
        for n in range(n_max):
            nxt = ((tz_s - t_s * bl[n]) * cur - t2 * a_prev * prev) / al[n]
            vals.append(nxt)
            prev, cur, a_prev = cur, nxt, al[n]
        return np.asarray(vals, dtype=complex)
    t2 = t * t
    a_prev = 0.5
    for n in range(n_max):
        out[n + 2] = ((tz - t * b[n]) * out[n + 1] - t2 * a_prev * out[n]) / a[n]
        a_prev = a[n]
    return out


def polynomial_table(model: CoefficientModel, z, n_max: int, scale: int = 0, zeta=None) -> np.ndarray:
    """P_{-1..n_max}(z) for an array of z, optionally scaled by zeta^(scale n)."""
    a, b = model.arrays(max(n_max, 0))
    if scale and zeta is None:
        zeta = zeta_array(z)
    return _forward(a, b, z, zeta, n_max, scale)


def regular_polynomials(model: CoefficientModel, sp: SpectralParameter, N: int, scale: int = 0) -> PolySequence:
    """Orthonormal polynomials P_{-1}, ..., P_N at a spectral parameter.

    ``scale = +1`` stores zeta^n P_n (bounded outside the spectrum) and
    ``scale = -1`` stores zeta^-n P_n (bounded at an eigenvalue).
    """
    if N < 0:
        raise ValueError("N must be non-negative")
    if sp.on_boundary and scale == 0:
        values = polynomial_table(model, sp.lam, N).real.astype(complex)
    else:
        values = polynomial_table(model, sp.z, N, scale=scale, zeta=sp.zeta)
    return PolySequence(values, sp, "regular_P", scale)


def leading_coefficients(model: CoefficientModel, N: int) -> tuple[np.ndarray, np.ndarray]:
    """k_n and r_n in P_n(z) = k_n (z^n + r_n z^(n-1) + ...), n = 0..N."""
    a, b = model.arrays(max(N, 0))
    k = np.ones(N + 1)
    k[1:] = np.exp(-np.cumsum(np.log(a[:N])))
    r = np.zeros(N + 1)
    r[1:] = -np.cumsum(b[:N])
    return k, r


# ---------------------------------------------------------------------------
# Chebyshev polynomials


def chebyshev_U(n: int, sp: SpectralParameter) -> complex:
    """Free-operator polynomial P_n^(0) = (zeta^(-n-1) - zeta^(n+1)) / (2 sqrt(z^2-1))."""
    if sp.on_boundary:
        theta = sp.theta
        return complex(np.sin((n + 1) * theta) / np.sin(theta))
    _guard_edges(sp.zeta, "chebyshev_U")
    zeta = sp.zeta
    return complex((zeta ** (-n - 1) - zeta ** (n + 1)) / (2 * sp.sqrt_z2m1))


def chebyshev_T(n: int, lam):
    """Chebyshev polynomial of the first kind, T_n(lambda) = cos(n arccos lambda)."""
    lam = np.asarray(lam, dtype=float)
    inside = np.abs(lam) <= 1
    with np.errstate(invalid="ignore"):
        out = np.where(inside, np.cos(n * np.arccos(np.clip(lam, -1, 1))), 0.0)
        if not np.all(inside):
            x = lam[~inside] if lam.ndim else lam
            outside = np.sign(x) ** n * np.cosh(n * np.arccosh(np.abs(x)))
            if lam.ndim:
                out = out.copy()
                out[~inside] = outside
            else:
                out = outside
    return out if lam.ndim else float(out)


# ---------------------------------------------------------------------------
# Wronskians and the growing solution


def wronskian(u: PolySequence, v: PolySequence, model: CoefficientModel, n: int) -> complex:
    """{u, v}_n = a_n (u_n v_{n+1} - u_{n+1} v_n)."""
    top = min(u.last_index, v.last_index)
    if not -1 <= n < top:
        raise IndexError(f"Wronskian index {n} outside [-1, {top - 1}]")
    a_n = model.a(n)
    if u.scale + v.scale == 0 and (u.scale or v.scale):
        zeta = u.parameter.zeta
        # zeta powers cancel between the two products up to one factor
        un, un1 = u.scaled(n), u.scaled(n + 1)
        vn, vn1 = v.scaled(n), v.scaled(n + 1)
        return complex(a_n * (un * vn1 * zeta ** (-v.scale) - un1 * vn * zeta ** (-u.scale)))
    return complex(a_n * (u.value(n) * v.value(n + 1) - u.value(n + 1) * v.value(n)))


def growing_solution(model: CoefficientModel, sp: SpectralParameter, n0: int, N: int, jost=None) -> PolySequence:
    """Second solution g_n = f_n Theta_n with Theta_n = sum_{m=n0}^n (a_{m-1} f_{m-1} f_m)^-1.

    The result is stored scaled as zeta^n g_n, which tends to 1/sqrt(z^2-1).
    Entries below ``n0`` are left at zero.
    """
    if sp.on_boundary:
        raise ValueError("the growing solution is built for interior parameters")
    if jost is None:
        from .jost import jost_backward

        jost = jost_backward(model, sp, n_keep=N + 1)
    if jost.normalized.shape[0] < N + 3:
        raise ValueError("Jost solution too short for the requested range")
    h = jost.normalized  # h_n = zeta^-n f_n at position n + 1
    zeta = sp.zeta
    x = zeta * zeta
    out = np.zeros(N + 2, dtype=complex)
    acc = 0j
    for n in range(max(n0, 0), N + 1):
        hm, hn = h[n], h[n + 1]
        if hm == 0 or hn == 0:
            raise ZeroDivisionError(f"f vanishes near n = {n}; choose a larger n0")
        acc = x * acc + zeta / (model.a(n - 1) * hm * hn)
        out[n + 1] = hn * acc
    return PolySequence(out, sp, "growing_g", scale=1)


# ---------------------------------------------------------------------------
# Operator application


def _neighbourhood(u, n):
    u = np.asarray(u)
    if n < 0 or n + 1 >= u.shape[0]:
        raise IndexError(f"sequence of length {u.shape[0]} has no neighbourhood around {n}")
    left = u[n - 1] if n >= 1 else 0.0
    return left, u[n], u[n + 1]


def apply_H(model: CoefficientModel, u, n: int):
    """(H u)_n for a sequence u indexed from 0 (u_{-1} = 0)."""
    left, mid, right = _neighbourhood(u, n)
    return model.a(n - 1) * left * (n >= 1) + model.b(n) * mid + model.a(n) * right


def apply_V(model: CoefficientModel, u, n: int):
    """((H - H_0) u)_n."""
    left, mid, right = _neighbourhood(u, n)
    return (model.a(n - 1) - 0.5) * left * (n >= 1) + model.b(n) * mid + (model.a(n) - 0.5) * right


def apply_H_array(model: CoefficientModel, u) -> np.ndarray:
    """(H u)_n for n = 0..len(u)-2."""
    u = np.asarray(u)
    m = u.shape[0] - 1
    a, b = model.arrays(m)
    left = np.concatenate([[0.0], a[: m - 1] * u[: m - 1]])
    return left + b[:m] * u[:m] + a[:m] * u[1 : m + 1]


def apply_V_array(model: CoefficientModel, u) -> np.ndarray:
    """((H - H_0) u)_n for n = 0..len(u)-2."""
    u = np.asarray(u)
    m = u.shape[0] - 1
    a, b = model.arrays(m)
    da = a - 0.5
    left = np.concatenate([[0.0], da[: m - 1] * u[: m - 1]])
    return left + b[:m] * u[:m] + da[:m] * u[1 : m + 1]
