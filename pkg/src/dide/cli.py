"""Command-line front end.

Subcommands: simulate (CSV trace), spectrum (CSV root table), resolvent
(CSV matrix grid), verify (full check suite), info (spec summary).
Exit codes: 0 ok, 1 usage, 2 invalid spec, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import NumericalError, SpecError
from .kernels import KernelPoleError
from .resolvent import compute_resolvent
from .solver import solve_mild
from .spectral import CharacteristicFunction, find_roots
from .system import load_spec
from .traces import write_resolvent_csv, write_roots_csv, write_solution_csv
from . import verify as verify_mod

__all__ = ["main", "console_main"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="dide", description="delay integro-differential systems toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, step=False, horizon=False, region=False):
        p.add_argument("--spec", required=True, help="path to the JSON system description")
        if step:
            p.add_argument("--step", type=float, required=True, help="grid step h")
        if horizon:
            p.add_argument("--horizon", type=float, required=True, help="final time T")
        if region:
            p.add_argument("--region", required=True, help='search rectangle "re_min,re_max,im_min,im_max"')
            p.add_argument("--grid", type=int, default=32, help="cells per rectangle side (default 32)")
        p.add_argument("--tol", type=float, default=1e-9, help="certification tolerance")
        p.add_argument("--out", help="output CSV path (default stdout)")

    add_common(sub.add_parser("simulate", help="run the delay solver, emit a t,x,y trace"), step=True, horizon=True)
    add_common(sub.add_parser("spectrum", help="scan a rectangle for characteristic roots"), region=True)
    add_common(sub.add_parser("resolvent", help="compute the resolvent family grid"), step=True, horizon=True)
    sub.add_parser("verify", help="run the full verification suite")
    p_info = sub.add_parser("info", help="print a summary of a spec file")
    p_info.add_argument("--spec", required=True)
    return parser


def _parse_region(text: str):
    parts = text.split(",")
    if len(parts) != 4:
        raise UsageError(f'region must be "re_min,re_max,im_min,im_max", got {text!r}')
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError:
        raise UsageError(f"region values must be numbers, got {text!r}") from None
    if not (vals[0] < vals[1] and vals[2] < vals[3]):
        raise UsageError(f"region {text!r} is empty")
    return vals


def _open_out(path):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline="\n"), True


def _check_positive(args, *names) -> None:
    for name in names:
        value = getattr(args, name, None)
        if value is not None and value <= 0:
            raise UsageError(f"--{name} must be positive, got {value}")


def _cmd_simulate(args) -> int:
    _check_positive(args, "step", "horizon", "tol")
    spec = load_spec(args.spec)
    report = solve_mild(spec, args.step, args.horizon)
    fh, close = _open_out(args.out)
    try:
        write_solution_csv(report, fh)
    finally:
        if close:
            fh.close()
    return 0


def _cmd_spectrum(args) -> int:
    _check_positive(args, "tol")
    if args.grid < 8:
        raise UsageError(f"--grid must be >= 8, got {args.grid}")
    spec = load_spec(args.spec)
    cf = CharacteristicFunction.from_system(spec)
    report = find_roots(cf, _parse_region(args.region), args.grid, args.tol)
    fh, close = _open_out(args.out)
    try:
        write_roots_csv(report, fh)
    finally:
        if close:
            fh.close()
    for note in report.warnings:
        print(f"dide: note: {note}", file=sys.stderr)
    return 0


def _cmd_resolvent(args) -> int:
    _check_positive(args, "step", "horizon")
    spec = load_spec(args.spec)
    fam = compute_resolvent(spec.A, spec.kernel, args.step, args.horizon)
    fh, close = _open_out(args.out)
    try:
        write_resolvent_csv(fam, fh)
    finally:
        if close:
            fh.close()
    return 0


def _cmd_info(args) -> int:
    spec = load_spec(args.spec)
    d, m, q = spec.state_dim, spec.input_dim, spec.output_dim
    print(f"dimensions: state d={d}, input m={m}, output q={q}")
    print(f"delay horizon r={spec.r}")
    if spec.kernel.is_zero:
        print("kernel: zero (pure delay system)")
    else:
        print(f"kernel: {len(spec.kernel.terms)} term(s), poles at {list(spec.kernel.poles)}")
    for name in ("L", "K", "C", "D"):
        mu = getattr(spec, name)
        if mu is None:
            print(f"{name}: absent")
        elif mu.is_zero:
            print(f"{name}: zero measure ({mu.out_dim}x{mu.in_dim})")
        else:
            locs = ", ".join(f"{th:g}" for th, _ in mu.atoms) or "none"
            print(
                f"{name}: {mu.out_dim}x{mu.in_dim}, atoms at [{locs}], "
                f"{len(mu.density)} density piece(s), |mu|([-r,0]) = {mu.total_variation(mu.horizon):.6g}"
            )
    print(f"phi covers [{spec.phi.start:g}, {spec.phi.end:g}] at step {spec.phi.step:g}")
    for name in ("u", "f"):
        traj = getattr(spec, name)
        if traj is None:
            print(f"{name}: absent (zero)")
        else:
            print(f"{name} covers [{traj.start:g}, {traj.end:g}] at step {traj.step:g}")
    if spec.notes:
        print(f"notes: {spec.notes}")
    return 0


def _cmd_verify(_args) -> int:
    return 0 if verify_mod.run_all(sys.stdout) else 3


_HANDLERS = {
    "simulate": _cmd_simulate,
    "spectrum": _cmd_spectrum,
    "resolvent": _cmd_resolvent,
    "verify": _cmd_verify,
    "info": _cmd_info,
}


def _fail(kind: str, message: str) -> None:
    line = " ".join(str(message).split())
    print(f"dide: error: {kind}: {line}", file=sys.stderr)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _fail("usage", str(exc))
        return 1
    try:
        return _HANDLERS[args.command](args)
    except UsageError as exc:
        _fail("usage", str(exc))
        return 1
    except SpecError as exc:
        _fail("spec-invalid", str(exc))
        return 2
    except (NumericalError, KernelPoleError) as exc:
        _fail("numerical", str(exc))
        return 3
    except (ValueError, ArithmeticError) as exc:
        _fail("numerical", str(exc))
        return 3


def console_main() -> None:
    sys.exit(main())
