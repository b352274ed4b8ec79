"""Command-line front end.

    jacobi-scatter weight --model jacobi:0.3,-0.2 --grid 101
    jacobi-scatter verify --model free

Exit codes: 0 success, 1 a verification check failed, 2 configuration
error, 3 computation error (diagnostic as JSON on stderr).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__
from .coefficients import (
    CoefficientModel,
    edge_example,
    free_model,
    jacobi_family,
    load_model,
    normalization_A,
    pollaczek_family,
)
from .errors import ComputationError, ModelError

SCHEMA = "jacobi-scatter/1"
EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Model grammar


def _numbers(text: str, count: int, spec: str) -> list:
    parts = text.split(",")
    if len(parts) != count:
        raise ConfigError(f"model {spec!r} needs {count} comma-separated parameters")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"model {spec!r}: {exc}") from exc


def parse_model(spec: str) -> CoefficientModel:
    """free | jacobi:<alpha>,<beta> | pollaczek:<alpha>,<beta> | edge:<l>,<+|-> | file:<path>."""
    spec = spec.strip()
    family, _, args = spec.partition(":")
    try:
        if family == "free" and not args:
            return free_model()
        if family == "jacobi":
            return jacobi_family(*_numbers(args, 2, spec))
        if family == "pollaczek":
            return pollaczek_family(*_numbers(args, 2, spec))
        if family == "edge":
            l_text, _, sign_text = args.partition(",")
            if sign_text not in ("+", "-", "+1", "-1"):
                raise ConfigError(f"model {spec!r}: edge sign must be + or -")
            return edge_example(_numbers(l_text, 1, spec)[0], 1 if sign_text.startswith("+") else -1)
        if family == "file" and args:
            return load_model(args)
    except ModelError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unrecognised model spec {spec!r}")


# ---------------------------------------------------------------------------
# Tables


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    passed: bool = True


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _jsonable(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else repr(v)
    if isinstance(value, (complex, np.complexfloating)):
        return [_jsonable(value.real), _jsonable(value.imag)]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    return value


def render(table: Table, fmt: str, command: str, model: str) -> str:
    if fmt == "json":
        doc = {
            "schema": SCHEMA,
            "version": __version__,
            "command": command,
            "model": model,
            "columns": table.columns,
            "rows": _jsonable(table.rows),
            "meta": _jsonable(table.meta),
            "passed": table.passed,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Commands


def _theta_grid(count: int, guard: float = 1e-3) -> np.ndarray:
    return np.linspace(guard, np.pi - guard, count)


def _zeta_grid(count: int, radius: float) -> np.ndarray:
    g = np.linspace(-radius, radius, count)
    Z = (g[None, :] + 1j * g[:, None]).ravel()
    return Z[np.abs(Z) <= radius]


def cmd_weight(model, args) -> Table:
    from .spectral import weight

    lam = np.linspace(-args.lam_max, args.lam_max, args.grid)
    w = weight(model, lam, args.tol)
    table = Table(["lambda", "w"], [[l, v] for l, v in zip(lam, w)])
    if model.log_weight is not None:
        exact = model.weight(lam)
        table.columns.append("w_closed_form")
        table.rows = [r + [e] for r, e in zip(table.rows, exact)]
        table.meta["max_rel_error"] = float(np.max(np.abs(w / exact - 1)))
    return table


def cmd_scattering(model, args) -> Table:
    from .scattering import phase_profile

    prof = phase_profile(model, _theta_grid(args.grid), args.tol)
    cols = ["theta", "lambda", "kappa", "eta", "xi", "S_re", "S_im", "w"]
    rows = [
        [t, l, k, e, x, s.real, s.imag, w]
        for t, l, k, e, x, s, w in zip(prof.theta, prof.lam, prof.kappa, prof.eta, prof.xi, prof.S, prof.w)
    ]
    return Table(cols, rows, {"max_unitarity_defect": float(np.max(np.abs(np.abs(prof.S) - 1)))})


def cmd_determinant(model, args) -> Table:
    from .jost import jost_function_array

    Z = _zeta_grid(args.zeta_grid, args.radius)
    omega = jost_function_array(model, Z, args.tol)
    A = normalization_A(model)
    rows = [[z.real, z.imag, (A * o).real, (A * o).imag, o.real, o.imag] for z, o in zip(Z, omega)]
    return Table(["zeta_re", "zeta_im", "Delta_re", "Delta_im", "Omega_re", "Omega_im"], rows, {"A": A})


def cmd_spectrum(model, args) -> Table:
    from .spectral import eigenvalues

    spec = eigenvalues(model, args.tol)
    rows = [[i, l, m, o] for i, (l, m, o) in enumerate(zip(spec.eigenvalues, spec.mu, spec.oracle))]
    meta = {"count": len(spec), "gershgorin": spec.window, "blaschke_sum": spec.blaschke_sum()}
    meta["resonance"] = {("plus" if k > 0 else "minus"): v for k, v in spec.resonance.items()}
    return Table(["index", "lambda", "mu", "oracle_lambda"], rows, meta)


def cmd_szego(model, args) -> Table:
    from .jost import jost_function_array
    from .spectral import eigenvalues
    from .szego import blaschke, szego_function

    Z = _zeta_grid(args.zeta_grid, min(args.radius, 0.9))
    spec = eigenvalues(model, args.tol)
    A = normalization_A(model)
    D = szego_function(model, Z, args.order, args.tol)
    B = blaschke(spec.mu, Z)
    Delta = A * jost_function_array(model, Z, args.tol)
    resid = np.abs(Delta - A * B * (1 - Z**2) / (math.sqrt(2 * math.pi) * D))
    rows = [[z.real, z.imag, d.real, d.imag, b.real, b.imag, r] for z, d, b, r in zip(Z, D, B, resid)]
    cols = ["zeta_re", "zeta_im", "D_re", "D_im", "B_re", "B_im", "factorization_residual"]
    return Table(cols, rows, {"max_residual": float(np.max(resid))})


def cmd_sumrules(model, args) -> Table:
    from .scattering import trace_power_identity
    from .spectral import eigenvalues
    from .szego import case_sum_rule

    spec = eigenvalues(model, args.tol)
    rows = []
    for n in range(args.order + 1):
        r = case_sum_rule(model, n, spec, tol=args.tol)
        rows.append(["case", n, r["lhs"], r["rhs"], r["residual"]])
    for n in range(1, args.order + 1):
        r = trace_power_identity(model, n, spectrum=spec)
        rows.append(["trace_power", n, r["lhs"], r["rhs"], r["residual"]])
    worst = max(row[-1] for row in rows)
    return Table(["identity", "order", "lhs", "rhs", "residual"], rows, {"max_residual": worst}, worst <= args.check_tol)


def cmd_asymptotics(model, args) -> Table:
    from .asymptotics import edge_report, exterior_limit_report, oscillation_report
    from .lattice import zeta_of

    reports = [("oscillation", lam, oscillation_report(model, lam, args.nmax, args.tol)) for lam in args.lam]
    z = (args.zeta + 1 / args.zeta) / 2
    reports.append(("exterior", args.zeta, exterior_limit_report(model, zeta_of(z), tol=args.tol)))
    for sign in (1, -1):
        try:
            reports.append(("edge", sign, edge_report(model, sign, args.nmax)))
        except ComputationError as exc:
            reports.append(("edge", sign, exc))
    rows = []
    passed = True
    for name, where, rep in reports:
        if isinstance(rep, Exception):
            rows.append([name, where, "unavailable", float("nan"), float("nan"), str(rep)])
            continue
        passed &= rep.verdict
        rows.append([name, where, rep.kind, rep.fitted_constant, float(rep.errors[-1]), "pass" if rep.verdict else "fail"])
    return Table(["law", "point", "kind", "fitted_constant", "final_error", "verdict"], rows, passed=passed)


def _verify_checks(model: CoefficientModel, tol: float) -> list:
    """(name, callable returning residual, threshold) for the invariants that apply to the model."""
    from .jost import jost_backward, jost_volterra
    from .lattice import SpectralParameter, zeta_of
    from .scattering import levinson_check, phase_profile, trace_power_identity
    from ._quadrature import theta_rule
    from .spectral import eigenvalues, gram_matrix, resolvent_element, stieltjes_reconstruction, truncated_resolvent_oracle, weight_from_theta
    from .szego import case_sum_rule, factorization_residual, harmonic_conjugacy_residual, szego_condition_probe

    if model.decay_class.kind == "unclassified":
        def szego_divergence():
            probe = szego_condition_probe(model)
            return 0.0 if not probe["converges"] and probe["weighted_converges"] else 1.0

        return [("szego_condition_fails_weighted_converges", szego_divergence, 0.5)]

    cache: dict = {}

    def spectrum():
        if "spec" not in cache:
            cache["spec"] = eigenvalues(model, tol)
        return cache["spec"]

    def gram():
        G = gram_matrix(model, 10, tol)
        return float(np.max(np.abs(G - np.eye(11))))

    def volterra():
        sp = SpectralParameter(0.5 + 0.2j, "interior")
        return abs(jost_backward(model, sp, tol).Omega - jost_volterra(model, sp, tol).Omega)

    def resolvent():
        worst = 0.0
        for z, n, m in ((0.3 + 0.4j, 0, 3), (-1.5 + 0.1j, 2, 2), (0.1 - 0.8j, 5, 1)):
            worst = max(worst, abs(resolvent_element(model, zeta_of(z), n, m, tol) - truncated_resolvent_oracle(model, z, n, m)))
        return worst

    def unitarity():
        return float(np.max(np.abs(np.abs(phase_profile(model, _theta_grid(33), tol).S) - 1)))

    def conjugacy():
        return harmonic_conjugacy_residual(model, _theta_grid(33), tol)

    def factorization():
        return factorization_residual(model, _zeta_grid(9, 0.9), spectrum(), tol=tol)

    def stieltjes():
        theta, wts = theta_rule(20)
        mass = weight_from_theta(model, theta, tol) * np.sin(theta) * wts
        rec = stieltjes_reconstruction((np.cos(theta), mass), 10)
        a, b = model.arrays(9)
        ra, rb = rec.arrays(9)
        return float(max(np.max(np.abs(ra - a)), np.max(np.abs(rb - b))))

    checks = [
        ("gram_orthonormality", gram, 1e-8),
        ("backward_vs_volterra", volterra, 1e-10),
        ("resolvent_vs_oracle", resolvent, 1e-8),
        ("scattering_unitarity", unitarity, 1e-10),
        ("harmonic_conjugacy", conjugacy, 1e-6),
        ("szego_factorization", factorization, 1e-6),
        ("case_sum_rule_0", lambda: case_sum_rule(model, 0, spectrum(), tol=tol)["residual"], 1e-6),
        ("case_sum_rule_1", lambda: case_sum_rule(model, 1, spectrum(), tol=tol)["residual"], 1e-6),
        ("trace_identity_1", lambda: trace_power_identity(model, 1, spectrum=spectrum())["residual"], 1e-6),
        ("stieltjes_round_trip", stieltjes, 1e-8),
    ]
    if model.decay_class.at_least("first_moment"):
        checks.append(("levinson", lambda: levinson_check(model, tol)["residual"], 1e-4))
    return checks


def cmd_verify(model, args) -> Table:
    rows = []
    passed = True
    for name, fn, threshold in _verify_checks(model, args.tol):
        try:
            value = float(fn())
            ok = value <= threshold
            note = ""
        except ComputationError as exc:
            value, ok, note = float("nan"), False, f"{type(exc).__name__}: {exc}"
        passed &= ok
        rows.append([name, value, threshold, "pass" if ok else "fail", note])
    return Table(["check", "residual", "threshold", "status", "note"], rows, passed=passed)


COMMANDS: dict[str, Callable] = {
    "weight": cmd_weight,
    "scattering": cmd_scattering,
    "determinant": cmd_determinant,
    "spectrum": cmd_spectrum,
    "szego": cmd_szego,
    "sumrules": cmd_sumrules,
    "asymptotics": cmd_asymptotics,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# Argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from exc
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from exc
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def _tolerance(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from exc
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("tolerance must lie in (0, 1)")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jacobi-scatter", description="Scattering data and polynomial asymptotics of Jacobi matrices.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--model", default="free", help="free | jacobi:a,b | pollaczek:a,b | edge:l,+|- | file:path (default free)")
        p.add_argument("--grid", type=_positive_int, default=101, help="number of lambda or theta points (default 101)")
        p.add_argument("--zeta-grid", type=_positive_int, default=20, help="points per axis of the zeta grid (default 20)")
        p.add_argument("--radius", type=float, default=0.95, help="zeta grid radius (default 0.95)")
        p.add_argument("--lam-max", type=float, default=0.95, help="largest |lambda| on the weight grid (default 0.95)")
        p.add_argument("--nmax", type=_positive_int, default=100_000, help="largest polynomial index (default 1e5)")
        p.add_argument("--order", type=_nonneg_int, default=20 if name == "szego" else 3, help="quadrature order (szego) or sum-rule order")
        p.add_argument("--tol", type=_tolerance, default=1e-12, help="Jost-solution tolerance (default 1e-12)")
        p.add_argument("--check-tol", type=_tolerance, default=1e-6, help="pass threshold for identity residuals (default 1e-6)")
        p.add_argument("--lam", type=float, nargs="+", default=[-0.6, 0.1, 0.7], help="cut points for oscillation laws")
        p.add_argument("--zeta", type=float, default=0.5, help="real exterior point for the limit law (default 0.5)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", type=Path, default=None, help="output file (default stdout)")
    return parser


def _diagnostic(kind: str, exc: Exception) -> str:
    return json.dumps({"schema": SCHEMA, "error": kind, "type": type(exc).__name__, "message": str(exc)}, sort_keys=True)


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "szego" and args.order < 2:
            raise ConfigError("quadrature order must be at least 2")
        if args.command == "asymptotics" and (not 0 < abs(args.zeta) < 1):
            raise ConfigError("--zeta must satisfy 0 < |zeta| < 1")
        model = parse_model(args.model)
    except ConfigError as exc:
        print(_diagnostic("config", exc), file=sys.stderr)
        return EXIT_CONFIG
    try:
        table = COMMANDS[args.command](model, args)
    except (ComputationError, ArithmeticError) as exc:
        print(_diagnostic("computation", exc), file=sys.stderr)
        return EXIT_COMPUTE
    except (ModelError, ValueError) as exc:
        print(_diagnostic("config", exc), file=sys.stderr)
        return EXIT_CONFIG
    text = render(table, args.format, args.command, args.model)
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="\n", encoding="utf-8") as handle:
            handle.write(text)
    return EXIT_OK if table.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
