"""Command-line interface.

Exit codes: 0 on success, 1 on a computation or input error (a JSON object
``{"error": code, "detail": text}`` is written to stdout), 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from typing import Sequence

import numpy as np

from . import convexity, experiments, fisher, lindblad
from .exceptions import MalformedInputError, QFIError, UnboundedError
from .qcore import (
    KrausChannel,
    Measurement,
    check_density_matrix,
    dump_matrix,
    load_matrix,
    matrix_from_json,
    matrix_to_json,
)

PRECISION_ENV = "QFI_PRECISION"


class InputFileError(QFIError):
    code = "file-not-found"


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputFileError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"{path}: {exc}") from None


def load_state(path: str) -> np.ndarray:
    return check_density_matrix(_load(path))


def _load(path: str) -> np.ndarray:
    try:
        return load_matrix(path)
    except FileNotFoundError:
        raise InputFileError(f"{path}: no such file") from None


def _matrices(obj, key: str) -> list[np.ndarray]:
    if key not in obj or not isinstance(obj[key], list):
        raise MalformedInputError(f"missing list field {key!r}")
    return [matrix_from_json(m) for m in obj[key]]


def _tolerance() -> float | None:
    raw = os.environ.get(PRECISION_ENV)
    if raw is None or raw == "":
        return None
    try:
        tol = float(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{PRECISION_ENV} must be a number, got {raw!r}") from None
    if not tol >= 0:
        raise argparse.ArgumentTypeError(f"{PRECISION_ENV} must be non-negative")
    return tol


def _derivative(args, rho: np.ndarray) -> np.ndarray:
    if args.finite_diff:
        plus, minus = _load(args.state_plus), _load(args.state_minus)
        return (plus - minus) / (2 * args.param_step)
    return _load(args.dstate)


# ---------------------------------------------------------------------------
# verbs
# ---------------------------------------------------------------------------

def cmd_qfi(args, tol):
    rho = load_state(args.state)
    return {"qfi": fisher.qfi(rho, _derivative(args, rho), tol)}


def cmd_sld(args, tol):
    rho = load_state(args.state)
    drho = _derivative(args, rho)
    sld = fisher.solve_sld(rho, drho, tol)
    if args.dump:
        dump_matrix(sld, args.dump)
    return {"qfi": fisher.qfi(rho, drho, tol), "sld": matrix_to_json(sld)}


def cmd_cfi(args, tol):
    rho = load_state(args.state)
    drho = _derivative(args, rho)
    povm = Measurement(tuple(_matrices(_read_json(args.povm), "elements")))
    return {"cfi": fisher.cfi_of_measurement(rho, drho, povm), "qfi": fisher.qfi(rho, drho, tol)}


def cmd_conv_bound(args, tol):
    obj = _read_json(args.ensemble)
    weights = np.asarray(obj.get("weights"), dtype=float)
    dweights = np.asarray(obj.get("dweights", np.zeros_like(weights)), dtype=float)
    states = _matrices(obj, "states")
    dstates = _matrices(obj, "dstates") if "dstates" in obj else [np.zeros_like(s) for s in states]
    ens = convexity.Ensemble(lambda x: weights, lambda x: states,
                             lambda x: dweights, lambda x: dstates)
    split = convexity.split_f_conv(ens, 0.0, tol)
    mix, dmix = ens.mixture(0.0), ens.mixture_derivative(0.0)
    return {
        "f_conv": split.total,
        "classical": split.classical,
        "quantum": split.quantum,
        "qfi_mixture": fisher.qfi(mix, dmix, tol),
    }


def cmd_ext_bound(args, tol):
    rho = load_state(args.state)
    drho = _derivative(args, rho)
    out = {"qfi": fisher.qfi(rho, drho, tol)}
    if args.nsld:
        out["ext_qfi"] = fisher.extended_qfi(rho, _load(args.nsld), drho)
    out["uhlmann_ext_qfi"] = fisher.uhlmann_ext_qfi(rho, drho, tol)
    try:
        out["inverse_quadratic_bound"] = fisher.inverse_quadratic_bound(rho, drho, tol)
    except UnboundedError:
        out["inverse_quadratic_bound"] = None
    return out


def cmd_channel_bound(args, tol):
    obj = _read_json(args.channel)
    kraus = _matrices(obj, "kraus")
    dkraus = _matrices(obj, "dkraus")
    ch = KrausChannel(lambda x: kraus, lambda x: dkraus)
    rho0 = load_state(args.state)
    terms, bound = convexity.channel_bound_min(ch, rho0, 0.0)
    ens = convexity.channel_ensemble(ch, rho0, 0.0)
    out_state = ens.mixture(0.0)
    if args.dump:
        dump_matrix(out_state, args.dump)
    result = {"h1": terms.h1, "h2": terms.h2, "eta_star": terms.eta_star, "bound": bound}
    if args.eta is not None:
        result["bound_at_eta"] = convexity.channel_bound_eta(ch, rho0, 0.0, args.eta)
    result["qfi_output"] = fisher.qfi(out_state, ens.mixture_derivative(0.0), tol)
    return result


def load_model(path: str) -> lindblad.LindbladModel:
    obj = _read_json(path)
    try:
        h = matrix_from_json(obj["hamiltonian"])
        jumps = tuple((matrix_from_json(j["gamma"]), float(j["rate"])) for j in obj.get("jumps", []))
        return lindblad.LindbladModel(h, float(obj.get("x0", 0.0)), jumps, float(obj.get("tau", 0.0)))
    except (KeyError, TypeError) as exc:
        raise MalformedInputError(f"{path}: bad model field {exc}") from None


def cmd_lindblad_bound(args, tol):
    model = load_model(args.model)
    rho = lindblad.evolve(model, load_state(args.state))
    if args.dump:
        dump_matrix(rho, args.dump)
    if args.param == "x0":
        ext = lindblad.ext_qfi_x0(model, rho)
        drho = lindblad.drho_x0(model, rho)
    else:
        ext = lindblad.ext_qfi_xa(model, rho, args.jump)
        drho = lindblad.drho_xa(model, rho, args.jump)
    return {"param": args.param if args.param == "x0" else f"x{args.jump + 1}",
            "ext_qfi": ext, "qfi": fisher.qfi(rho, drho, tol)}


def cmd_example1(args, tol):
    alpha = "optimal" if args.alpha == "optimal" else float(args.alpha)
    cfg = experiments.Example1Config(args.q, args.tau, args.x, args.n, alpha)
    row = experiments.sweep_row(cfg)
    a = cfg.resolved_alpha()
    c1, c2 = experiments.example1_coeffs(a, args.q, args.tau)
    try:
        threshold = experiments.example1_threshold(args.q)
    except QFIError:
        threshold = None
    return {
        "n": row.n, "alpha": a, "c1": c1, "c2": c2, "threshold": threshold,
        "f_conv": row.f_conv, "f_classical": row.f_classical, "f_quantum": row.f_quantum,
        "f_exact": row.f_exact, "err_bound": row.err_bound, "err_exact": row.err_exact,
    }


def cmd_example2(args, tol):
    res = experiments.example2_ext_qfi(args.n, args.tau, args.x, args.state)
    return {"n": args.n, "state": args.state, "bound": res.bound, "exact": res.exact}


def cmd_sweep1(args, tol):
    alpha = "optimal" if args.alpha == "optimal" else float(args.alpha)
    template = experiments.Example1Config(args.q, args.tau, args.x, args.n_min, alpha)
    return experiments.sweep_example1(template, args.n_min, args.n_max)


# ---------------------------------------------------------------------------
# parser and dispatch
# ---------------------------------------------------------------------------

def _positive(v: str) -> float:
    f = float(v)
    if not f > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return f


def _add_derivative_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--state", required=True, help="state matrix file")
    p.add_argument("--dstate", help="derivative matrix file")
    p.add_argument("--finite-diff", action="store_true",
                   help="central difference from --state-plus/--state-minus")
    p.add_argument("--state-plus", help="state at x + h")
    p.add_argument("--state-minus", help="state at x - h")
    p.add_argument("--param-step", type=_positive, default=1e-5, help="h for --finite-diff")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfibound", description=__doc__.splitlines()[0])
    parser.add_argument("--format", choices=["json", "csv"], default=None)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("qfi", help="quantum Fisher information")
    _add_derivative_flags(p)
    p.set_defaults(func=cmd_qfi, needs_derivative=True)

    p = sub.add_parser("sld", help="symmetric logarithmic derivative")
    _add_derivative_flags(p)
    p.add_argument("--dump", help="write the SLD matrix here")
    p.set_defaults(func=cmd_sld, needs_derivative=True)

    p = sub.add_parser("cfi", help="classical Fisher information of a POVM")
    _add_derivative_flags(p)
    p.add_argument("--povm", required=True, help='JSON {"elements": [matrix, ...]}')
    p.set_defaults(func=cmd_cfi, needs_derivative=True)

    p = sub.add_parser("conv-bound", help="extended-convexity bound of an ensemble")
    p.add_argument("--ensemble", required=True,
                   help='JSON {"weights", "dweights", "states", "dstates"}')
    p.set_defaults(func=cmd_conv_bound)

    p = sub.add_parser("ext-bound", help="extended QFI bounds")
    _add_derivative_flags(p)
    p.add_argument("--nsld", help="non-Hermitian SLD matrix file")
    p.set_defaults(func=cmd_ext_bound, needs_derivative=True)

    p = sub.add_parser("channel-bound", help="eta-minimized Kraus-channel bound")
    p.add_argument("--channel", required=True, help='JSON {"kraus": [...], "dkraus": [...]}')
    p.add_argument("--state", required=True, help="input state file")
    p.add_argument("--eta", type=float, help="also evaluate the bound at this eta")
    p.add_argument("--dump", help="write the output state here")
    p.set_defaults(func=cmd_channel_bound)

    p = sub.add_parser("lindblad-bound", help="closed-form extended QFI for a Lindblad rate")
    p.add_argument("--model", required=True, help="Lindblad model JSON")
    p.add_argument("--state", required=True, help="initial state file")
    p.add_argument("--param", choices=["x0", "xa"], default="x0")
    p.add_argument("--jump", type=int, default=0, help="jump index for --param xa")
    p.add_argument("--dump", help="write the evolved state here")
    p.set_defaults(func=cmd_lindblad_bound)

    p = sub.add_parser("example1", help="GHZ probes under the lossy phase channel")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", default="optimal")
    p.set_defaults(func=cmd_example1)

    p = sub.add_parser("example2", help="dephasing-rate estimation closed forms")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--state", choices=["product", "ghz"], default="product")
    p.set_defaults(func=cmd_example2)

    p = sub.add_parser("sweep1", help="probe-number sweep of example1 (CSV)")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--alpha", default="optimal")
    p.set_defaults(func=cmd_sweep1)
    return parser


def _emit(result, fmt: str, out) -> None:
    if isinstance(result, list):
        if fmt == "csv":
            experiments.write_sweep_csv(result, out)
        else:
            json.dump([r.__dict__ for r in result], out)
            out.write("\n")
        return
    if fmt == "csv":
        flat = {k: v for k, v in result.items() if not isinstance(v, dict)}
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(flat.keys())
        writer.writerow(["" if v is None else (f"{v:.12g}" if isinstance(v, float) else v)
                         for v in flat.values()])
    else:
        json.dump(result, out)
        out.write("\n")


def main(argv: Sequence[str] | None = None, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "needs_derivative", False):
        if args.finite_diff and not (args.state_plus and args.state_minus):
            parser.print_usage(sys.stderr)
            print("error: --finite-diff needs --state-plus and --state-minus", file=sys.stderr)
            return 2
        if not args.finite_diff and not args.dstate:
            parser.print_usage(sys.stderr)
            print("error: give --dstate or --finite-diff", file=sys.stderr)
            return 2
    try:
        tol = _tolerance()
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    fmt = args.format or ("csv" if args.verb == "sweep1" else "json")
    try:
        result = args.func(args, tol)
    except QFIError as exc:
        json.dump({"error": exc.code, "detail": str(exc)}, stdout)
        stdout.write("\n")
        return 1
    buf = io.StringIO()
    _emit(result, fmt, buf)
    stdout.write(buf.getvalue())
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
