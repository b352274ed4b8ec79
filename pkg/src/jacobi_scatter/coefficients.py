"""Jacobi coefficient sequences.

A model is a pair of sequences ``a_n > 0`` (off-diagonal) and ``b_n``
(diagonal) indexed by ``n >= 0``, together with a declared decay class and,
for models whose perturbation of the free operator does not have finite
support, an asymptotic power-law description of the tail.  The convention
``a_{-1} = 1/2`` is used throughout the package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln, zeta as hurwitz_zeta

from .errors import ModelError

__all__ = [
    "DecayClass",
    "PowerTail",
    "CoefficientModel",
    "TailBound",
    "tail_bound",
    "edge_eigenvector",
    "ModelError",
    "free_model",
    "finite_model",
    "jacobi_family",
    "jacobi_constant",
    "pollaczek_family",
    "edge_example",
    "load_model",
    "save_model",
    "tail",
    "normalization_A",
]

# Explicit summation horizon used before switching to the power-law tail.
EXPLICIT_HORIZON = 100_000

_DECAY_ORDER = {"finite_support": 0, "first_moment": 1, "trace_class": 2, "unclassified": 3}


@dataclass(frozen=True)
class DecayClass:
    kind: str
    support: Optional[int] = None

    def __post_init__(self):
        if self.kind not in _DECAY_ORDER:
            raise ModelError(f"unknown decay class {self.kind!r}")
        if self.kind == "finite_support" and self.support is None:
            raise ModelError("finite_support needs the index of the last perturbed entry")

    def at_least(self, kind: str) -> bool:
        """True when this class is at least as strong as ``kind``."""
        return _DECAY_ORDER[self.kind] <= _DECAY_ORDER[kind]

    def __str__(self):
        if self.kind == "finite_support":
            return f"finite_support({self.support})"
        return self.kind


@dataclass(frozen=True)
class PowerTail:
    """Tail law a_n - 1/2 ~ a_coef n^-p, b_n ~ b_coef n^-p.

    ``exact_from`` marks the first index at which the law holds exactly;
    ``None`` means it is only the leading asymptotic term.
    """

    a_coef: float
    b_coef: float
    exponent: int
    exact_from: Optional[int] = None

    def __post_init__(self):
        if int(self.exponent) != self.exponent or self.exponent < 2:
            raise ModelError("power tails need an integer exponent >= 2")

    @property
    def strength(self) -> float:
        return abs(self.a_coef) + abs(self.b_coef)


def _as_index(n) -> np.ndarray:
    return np.asarray(n, dtype=np.int64)


@dataclass(frozen=True)
class CoefficientModel:
    """Immutable description of a Jacobi matrix.

    ``a_rule`` and ``b_rule`` are vectorised callables on integer arrays of
    indices ``n >= 0``.  ``log_weight`` optionally carries the closed-form
    logarithm of the absolutely continuous weight, as a function of
    ``lambda`` in (-1, 1).  ``deviation_rule``, when given, returns
    ``a_n - 1/2`` to full relative precision; far out in a slowly decaying
    tail the difference of stored values only carries absolute precision.
    """

    name: str
    a_rule: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    b_rule: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    decay_class: DecayClass
    tail_rule: Optional[PowerTail] = None
    log_weight: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    parameters: tuple = ()
    deviation_rule: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def a(self, n):
        """Off-diagonal entries; index -1 returns 1/2."""
        idx = _as_index(n)
        safe = np.maximum(idx, 0)
        out = np.asarray(self.a_rule(safe), dtype=float)
        out = np.where(idx < 0, 0.5, out)
        return out if np.ndim(n) else float(out)

    def b(self, n):
        idx = _as_index(n)
        out = np.asarray(self.b_rule(np.maximum(idx, 0)), dtype=float)
        out = np.where(idx < 0, 0.0, out)
        return out if np.ndim(n) else float(out)

    def arrays(self, n_max: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(a[0..n_max], b[0..n_max])``."""
        idx = np.arange(n_max + 1)
        a = np.broadcast_to(np.asarray(self.a_rule(idx), dtype=float), idx.shape).copy()
        b = np.broadcast_to(np.asarray(self.b_rule(idx), dtype=float), idx.shape).copy()
        return a, b

    def deviations(self, n_max: int) -> np.ndarray:
        """a_n - 1/2 for n = 0..n_max."""
        idx = np.arange(n_max + 1)
        if self.deviation_rule is None:
            return np.asarray(self.a_rule(idx), dtype=float) - 0.5
        return np.broadcast_to(np.asarray(self.deviation_rule(idx), dtype=float), idx.shape).copy()

    def deviation(self, n) -> float:
        """a_n - 1/2 at a single index (zero for n = -1)."""
        n = int(n)
        if n < 0:
            return 0.0
        idx = np.array([n])
        if self.deviation_rule is None:
            return float(np.asarray(self.a_rule(idx), dtype=float).ravel()[0]) - 0.5
        return float(np.broadcast_to(np.asarray(self.deviation_rule(idx), dtype=float), idx.shape)[0])

    def perturbation(self, n_max: int) -> np.ndarray:
        """|a_n - 1/2| + |b_n| for n = 0..n_max."""
        return np.abs(self.deviations(n_max)) + np.abs(self.arrays(n_max)[1])

    @property
    def support(self) -> Optional[int]:
        return self.decay_class.support if self.decay_class.kind == "finite_support" else None

    def weight(self, lam):
        if self.log_weight is None:
            raise ModelError(f"model {self.name} carries no closed-form weight")
        return np.exp(self.log_weight(np.asarray(lam, dtype=float)))


# ---------------------------------------------------------------------------
# Built-in families


def _constant(value: float):
    return lambda n: np.full(np.shape(n), value, dtype=float)


def free_model() -> CoefficientModel:
    return CoefficientModel(
        name="free",
        a_rule=_constant(0.5),
        b_rule=_constant(0.0),
        decay_class=DecayClass("finite_support", -1),
        log_weight=lambda lam: np.log(2 / np.pi) + 0.5 * np.log1p(-lam * lam),
    )


def finite_model(a: Sequence[float], b: Sequence[float], name: str = "finite") -> CoefficientModel:
    """Model equal to the free operator beyond the given prefixes."""
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if np.any(a_arr <= 0):
        bad = int(np.flatnonzero(a_arr <= 0)[0])
        raise ModelError(f"a[{bad}] = {a_arr[bad]} is not positive")
    changed = np.concatenate([np.flatnonzero(a_arr != 0.5), np.flatnonzero(b_arr != 0.0)])
    support = int(changed.max()) if changed.size else -1

    def a_rule(n):
        n = np.asarray(n)
        return np.where(n < a_arr.size, a_arr[np.minimum(n, max(a_arr.size - 1, 0))] if a_arr.size else 0.5, 0.5)

    def b_rule(n):
        n = np.asarray(n)
        return np.where(n < b_arr.size, b_arr[np.minimum(n, max(b_arr.size - 1, 0))] if b_arr.size else 0.0, 0.0)

    return CoefficientModel(
        name=name,
        a_rule=a_rule,
        b_rule=b_rule,
        decay_class=DecayClass("finite_support", support),
        parameters=(tuple(a_arr), tuple(b_arr)),
    )


def _first_row_rule(first: float, rest: float):
    return lambda n: np.where(np.asarray(n) == 0, first, rest).astype(float)


def jacobi_constant(alpha: float, beta: float) -> float:
    """Normalisation kappa of the weight kappa (1-x)^alpha (1+x)^beta."""
    return math.exp(
        gammaln(alpha + beta + 2)
        - (alpha + beta + 1) * math.log(2)
        - gammaln(alpha + 1)
        - gammaln(beta + 1)
    )


def jacobi_family(alpha: float, beta: float) -> CoefficientModel:
    """Orthonormal Jacobi polynomials for the weight (1-x)^alpha (1+x)^beta."""
    if not (alpha > -1 and beta > -1):
        raise ModelError(f"jacobi parameters must exceed -1, got ({alpha}, {beta})")
    s = alpha + beta

    def a_rule(n):
        n = np.asarray(n, dtype=float)
        head = 4 * (n + 1) * (n + alpha + 1) * (n + beta + 1) / ((2 * n + s + 3) * (2 * n + s + 2) ** 2)
        num = n + s + 1
        den = 2 * n + s + 1
        # at n = 0 the last factor is identically one (including the 0/0 case s = -1)
        with np.errstate(invalid="ignore", divide="ignore"):
            last = np.where(n == 0, 1.0, num / np.where(den == 0, 1.0, den))
        return np.sqrt(head * last)

    def deviation_rule(n):
        # a_n^2 - 1/4 = ((1 - 2 alpha^2 - 2 beta^2) m^2 + (alpha^2 - beta^2)^2) / (4 m^2 (m^2 - 1)), m = 2n + s + 2
        n = np.asarray(n, dtype=float)
        a = a_rule(n)
        m = 2 * n + s + 2
        with np.errstate(invalid="ignore", divide="ignore"):
            sq = ((1 - 2 * alpha**2 - 2 * beta**2) * m**2 + (alpha**2 - beta**2) ** 2) / (4 * m**2 * (m**2 - 1))
        return np.where(n == 0, a - 0.5, sq / (a + 0.5))

    def b_rule(n):
        n = np.asarray(n, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            rest = (beta**2 - alpha**2) / ((2 * n + s) * (2 * n + s + 2))
        return np.where(n == 0, (beta - alpha) / (s + 2), rest)

    kappa = jacobi_constant(alpha, beta)
    log_kappa = math.log(kappa)

    def log_weight(lam):
        return log_kappa + alpha * np.log1p(-lam) + beta * np.log1p(lam)

    a_coef = (1 - 2 * alpha**2 - 2 * beta**2) / 16
    b_coef = (beta**2 - alpha**2) / 4
    if abs(abs(alpha) - 0.5) < 1e-15 and abs(abs(beta) - 0.5) < 1e-15:
        # |alpha| = |beta| = 1/2: only the first row can differ from the free operator
        a0 = float(a_rule(np.array([0]))[0])
        b0 = float(b_rule(np.array([0]))[0])
        support = 0 if (abs(a0 - 0.5) > 1e-14 or abs(b0) > 1e-14) else -1
        a_rule = _first_row_rule(a0, 0.5)
        b_rule = _first_row_rule(b0, 0.0)
        deviation_rule = _first_row_rule(a0 - 0.5, 0.0)
        decay, tail_rule = DecayClass("finite_support", support), None
    else:
        decay, tail_rule = DecayClass("trace_class"), PowerTail(a_coef, b_coef, 2)

    return CoefficientModel(
        name=f"jacobi:{alpha:g},{beta:g}",
        a_rule=a_rule,
        b_rule=b_rule,
        decay_class=decay,
        tail_rule=tail_rule,
        log_weight=log_weight,
        parameters=(alpha, beta),
        deviation_rule=deviation_rule,
    )


def _log_cosh(y):
    y = np.abs(y)
    return y + np.log1p(np.exp(-2 * y)) - math.log(2)


def pollaczek_family(alpha: float, beta: float) -> CoefficientModel:
    """Normalised Pollaczek polynomials; V is Hilbert-Schmidt but not trace class."""
    if not alpha > abs(beta):
        raise ModelError(f"pollaczek parameters need alpha > |beta|, got ({alpha}, {beta})")

    def a_rule(n):
        n = np.asarray(n, dtype=float)
        return (n + 1) / np.sqrt((2 * n + 2 * alpha + 1) * (2 * n + 2 * alpha + 3))

    def b_rule(n):
        n = np.asarray(n, dtype=float)
        return -2 * beta / (2 * n + 2 * alpha + 1)

    def log_weight(lam):
        theta = np.arccos(lam)
        h = (alpha * np.cos(theta) + beta) / np.sin(theta)
        return math.log(alpha + 0.5) + (2 * theta - np.pi) * h - _log_cosh(np.pi * h)

    return CoefficientModel(
        name=f"pollaczek:{alpha:g},{beta:g}",
        a_rule=a_rule,
        b_rule=b_rule,
        decay_class=DecayClass("unclassified"),
        log_weight=log_weight,
        parameters=(alpha, beta),
    )


def edge_example(l: float, sign: int = 1) -> CoefficientModel:
    """Free off-diagonal with b_n chosen so that (+-1)^n (n+1)^-l is an eigenvector at +-1."""
    if not l > 0.5:
        raise ModelError(f"edge example needs l > 1/2 for a square-summable eigenvector, got {l}")
    if sign not in (1, -1):
        raise ModelError("sign must be +1 or -1")

    def b_rule(n):
        # 1 - ((n+1)/n)^l / 2 - ((n+1)/(n+2))^l / 2 written without cancellation:
        # with u, v the two exponents, e^u + e^v - 2 = 2 (expm1(m) cosh d + 2 sinh(d/2)^2)
        n = np.asarray(n, dtype=float)
        safe = np.maximum(n, 1.0)
        m = 0.5 * l * np.log1p(1 / (safe * (safe + 2)))
        d = 0.5 * l * (np.log1p(1 / safe) - np.log1p(-1 / (safe + 2)))
        tail = -(np.expm1(m) * np.cosh(d) + 2 * np.sinh(d / 2) ** 2)
        first = 1.0 - 0.5 * 0.5**l
        return sign * np.where(n == 0, first, tail)

    return CoefficientModel(
        name=f"edge:{l:g},{'+' if sign > 0 else '-'}",
        a_rule=_constant(0.5),
        b_rule=b_rule,
        decay_class=DecayClass("trace_class"),
        tail_rule=PowerTail(0.0, -sign * l * (l + 1) / 2, 2),
        parameters=(l, sign),
    )


def edge_eigenvector(l: float, sign: int, n_max: int) -> np.ndarray:
    n = np.arange(n_max + 1, dtype=float)
    return float(sign) ** np.arange(n_max + 1) * (n + 1) ** (-l)


# ---------------------------------------------------------------------------
# File models


def _power_rule(prefix: np.ndarray, base: float, coef: float, p: int):
    def rule(n):
        n = np.asarray(n)
        nf = np.maximum(n, 1).astype(float)
        law = base + coef * nf ** (-float(p))
        if prefix.size == 0:
            return law
        return np.where(n < prefix.size, prefix[np.minimum(n, prefix.size - 1)], law)

    return rule


def load_model(path) -> CoefficientModel:
    """Read a model from the JSON schema ``{"a", "b", "tail", "decay_class"}``."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ModelError("model file must contain a JSON object")
    for key in ("a", "b"):
        if key not in data or not isinstance(data[key], list):
            raise ModelError(f"model file needs a list field {key!r}")
    if "tail" not in data:
        raise ModelError("model file needs a tail rule")
    try:
        a = np.asarray(data["a"], dtype=float)
        b = np.asarray(data["b"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"non-numeric coefficient: {exc}") from exc
    if np.any(~np.isfinite(a)) or np.any(~np.isfinite(b)):
        raise ModelError("coefficients must be finite")
    if np.any(a <= 0):
        bad = int(np.flatnonzero(a <= 0)[0])
        raise ModelError(f"a[{bad}] = {a[bad]} is not positive")
    name = data.get("name", Path(path).stem)
    tail_spec = data["tail"]
    declared = data.get("decay_class")
    if declared is None:
        raise ModelError("model file must declare decay_class")

    if tail_spec == "free":
        model = finite_model(a, b, name=name)
        if declared not in ("finite_support", str(model.decay_class)) and not declared.startswith("finite_support"):
            raise ModelError(f"free tail is inconsistent with declared decay class {declared!r}")
        return model
    if not (isinstance(tail_spec, dict) and tail_spec.get("kind") == "power"):
        raise ModelError(f"unsupported tail rule {tail_spec!r}")
    try:
        a_coef = float(tail_spec["a_coef"])
        b_coef = float(tail_spec["b_coef"])
        p = tail_spec["exponent"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"power tail needs a_coef, b_coef, exponent: {exc}") from exc
    if declared not in ("trace_class", "first_moment", "unclassified"):
        raise ModelError(f"decay class {declared!r} is not valid for a power tail")
    if declared == "first_moment" and p <= 2:
        raise ModelError("first_moment decay needs exponent > 2")
    start = max(a.size, b.size)
    tail_rule = PowerTail(a_coef, b_coef, int(p) if float(p).is_integer() else p, exact_from=start)
    a_rule = _power_rule(a, 0.5, a_coef, p)
    if np.any(np.asarray(a_rule(np.arange(start, start + 64))) <= 0):
        raise ModelError("power tail produces non-positive a_n")
    return CoefficientModel(
        name=name,
        a_rule=a_rule,
        b_rule=_power_rule(b, 0.0, b_coef, p),
        decay_class=DecayClass(declared),
        tail_rule=tail_rule,
        deviation_rule=_power_rule(a - 0.5, 0.0, a_coef, p),
    )


def save_model(model: CoefficientModel, path, n_max: int) -> None:
    """Write the first ``n_max + 1`` coefficients with a free tail."""
    a, b = model.arrays(n_max)
    payload = {
        "name": model.name,
        "a": [float(x) for x in a],
        "b": [float(x) for x in b],
        "tail": "free",
        "decay_class": "finite_support",
    }
    Path(path).write_text(json.dumps(payload, indent=1))


# ---------------------------------------------------------------------------
# Tail sums


def _asymptotic_tail(rule: PowerTail, start) -> np.ndarray:
    """sum_{m >= start} strength * m^-p via the Hurwitz zeta function."""
    return rule.strength * hurwitz_zeta(float(rule.exponent), np.asarray(start, dtype=float))


@dataclass(frozen=True)
class TailBound:
    """The tail sums rho_n = sum_{m >= n} (|a_m - 1/2| + |b_m|) of a model."""

    model: CoefficientModel
    horizon: int = EXPLICIT_HORIZON

    def __post_init__(self):
        if self.model.decay_class.kind == "unclassified":
            raise ModelError(f"model {self.model.name} has no summable tail")

    def _explicit_limit(self) -> int:
        support = self.model.support
        if support is not None:
            return support + 1
        rule = self.model.tail_rule
        if rule is not None and rule.exact_from is not None:
            return rule.exact_from
        return self.horizon

    @cached_property
    def _suffix(self) -> np.ndarray:
        """Suffix sums of the perturbation over the explicit region, with a trailing zero."""
        top = max(self._explicit_limit(), 0)
        if top == 0:
            return np.zeros(1)
        pert = self.model.perturbation(top)[:top]
        return np.concatenate([np.cumsum(pert[::-1])[::-1], [0.0]])

    def rho(self, n):
        """Tail sum rho_n (scalar or array of indices)."""
        n_arr = np.atleast_1d(np.asarray(n, dtype=np.int64))
        suffix = self._suffix
        top = suffix.size - 1
        rule = self.model.tail_rule
        out = np.empty(n_arr.shape, dtype=float)
        for i, k in enumerate(n_arr):
            k = max(int(k), 0)
            head = suffix[k] if k < top else 0.0
            rest = 0.0
            if rule is not None:
                rest = float(_asymptotic_tail(rule, max(k, top, 1)))
            out[i] = head + rest
        return out if np.ndim(n) else float(out[0])

    def truncation_index(self, tol: float) -> int:
        """Smallest M with rho(M) < tol."""
        support = self.model.support
        if support is not None:
            # rho vanishes beyond the support; find the first index inside it
            if support < 0:
                return 0
            rhos = self.rho(np.arange(support + 2))
            return int(np.flatnonzero(rhos < tol)[0])
        rule = self.model.tail_rule
        if rule is None or rule.strength == 0:
            hi = self._explicit_limit()
        else:
            p = rule.exponent
            hi = int(math.ceil((rule.strength / ((p - 1) * tol)) ** (1.0 / (p - 1)))) + 2
            hi = max(hi, 2)
            while self.rho(hi) >= tol:
                hi *= 2
        lo = 0
        if self.rho(lo) < tol:
            return 0
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.rho(mid) < tol:
                hi = mid
            else:
                lo = mid
        return hi


@lru_cache(maxsize=32)
def tail_bound(model: CoefficientModel) -> TailBound:
    """Shared TailBound per model, so the explicit suffix sums are built once."""
    return TailBound(model)


def tail(model: CoefficientModel, n):
    """rho_n = sum_{m >= n} (|a_m - 1/2| + |b_m|)."""
    return tail_bound(model).rho(n)


def normalization_A(model: CoefficientModel, cutoff: Optional[int] = None) -> float:
    """A = prod (2 a_k), evaluated as exp(sum log(2 a_k)).

    Beyond ``cutoff`` (default: the explicit horizon) the logarithms are
    summed from the power-law tail in closed form.
    """
    kind = model.decay_class.kind
    if kind == "unclassified":
        raise ModelError(f"product of 2 a_k diverges for model {model.name}")
    support = model.support
    if support is not None:
        return math.exp(math.fsum(np.log1p(2 * model.deviations(max(support, 0)))))
    rule = model.tail_rule
    limit = cutoff or EXPLICIT_HORIZON
    if rule is not None and rule.exact_from is not None:
        limit = max(limit, rule.exact_from)
    total = math.fsum(np.log1p(2 * model.deviations(limit - 1)))
    if rule is not None and rule.a_coef != 0.0:
        # log(1 + 2 c m^-p) ~ 2 c m^-p beyond the explicit region
        total += 2 * rule.a_coef * float(hurwitz_zeta(float(rule.exponent), float(limit)))
    return math.exp(total)
