"""Command-line front end.

Exit codes: 0 success, 1 a property requested via ``--assert`` does not
hold, 2 usage, parse or validation error, 3 numerical failure.
"""
import argparse
import json
import sys as _sys

import numpy as np

from . import __version__
from .errors import DimensionError, DtphError, NumericalFailure, SingularMatrix
from .kyp import TOL_LMI, TOL_STRICT
from .sysmodel import _decode, _encode, load_system, save_system

EXIT_OK, EXIT_ASSERT, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class _UsageError(Exception):
    pass


def _parse_number(tok):
    try:
        return complex(tok.strip().replace(" ", "")) if "j" in tok else float(tok)
    except ValueError as exc:
        raise _UsageError(f"cannot parse number {tok!r}") from exc


def _parse_vector(text):
    text = text.strip()
    if text.startswith("["):
        arr = _decode([json.loads(text)], "vector")[0]
        return arr
    vals = [_parse_number(t) for t in text.split(",") if t.strip()]
    return np.array(vals)


def _load_inputs(spec, m, steps):
    """Input sequence from ``zero``, ``const:v1,v2``, a CSV file or a JSON file."""
    if spec in (None, "zero"):
        if steps is None:
            raise _UsageError("--steps is required with a zero input")
        return np.zeros((steps, m))
    if spec.startswith("const:"):
        if steps is None:
            raise _UsageError("--steps is required with a constant input")
        v = _parse_vector(spec[6:])
        if v.size != m:
            raise _UsageError(f"constant input needs {m} entries")
        return np.tile(v, (steps, 1))
    if spec.endswith(".json"):
        with open(spec, encoding="utf-8") as fh:
            u = _decode(json.load(fh), "input")
    else:
        rows = []
        with open(spec, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line and not line.startswith("#"):
                    rows.append([_parse_number(t) for t in line.split(",")])
        u = np.array(rows)
    if u.ndim == 1:
        u = u.reshape(-1, 1)
    if steps is not None:
        u = u[:steps]
    return u


def _meta(source, op, **extra):
    return {"source_hash": source.content_hash(), "tool_version": __version__, "operation": op, **extra}


def _emit(obj, out):
    text = json.dumps(obj, indent=1, default=_json_default)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return _encode(np.atleast_2d(o))
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _save_or_print(sys, out):
    if out:
        save_system(sys, out)
    else:
        print(json.dumps(sys.to_dict(), indent=1))


def cmd_classify(args):
    from .classify import classify

    s = load_system(args.file)
    rep = classify(s, tol_rank=args.tol_rank, tol_lmi=args.tol_lmi, tol_strict=args.tol_strict,
                   cond_max=args.cond_max, radii=args.radii, n_angles=args.angles, jobs=args.jobs)
    d = rep.to_dict()
    if args.json:
        _emit(d, args.json)
    if args.format == "json":
        _emit(d, None)
    else:
        print(rep.table())
        if rep.notes:
            print("\nnotes:")
            for n in rep.notes:
                print(f"  {n}")
    failed = [p for p in args.assert_ or [] if rep.verdicts.get(p) is not True]
    unknown = [p for p in args.assert_ or [] if p not in rep.verdicts]
    if unknown:
        raise _UsageError(f"unknown properties for --assert: {unknown}")
    if failed:
        print(f"assertion failed: {', '.join(failed)}", file=_sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def cmd_to_ph(args):
    from .ph import is_ph

    s = load_system(args.file)
    v = is_ph(s, args.tol_lmi, args.tol_strict)
    out = {"schema": 1, "tool_version": __version__, "system_hash": s.content_hash(), "is_ph": v.is_ph,
           "certificate": v.certificate.to_dict(), "notes": v.notes}
    if v.is_ph:
        out["representation"] = v.representation.to_dict()
        if args.out_system:
            sysout = v.representation.as_system().replace(meta=_meta(s, "to-ph"))
            save_system(sysout, args.out_system)
    _emit(out, args.out)
    if args.assert_ and not v.is_ph:
        return EXIT_ASSERT
    return EXIT_OK


def cmd_cayley(args):
    from .cayley import external_cayley

    s = load_system(args.file)
    r = external_cayley(s, args.direction, restrict=not args.no_restrict)
    meta = _meta(s, "external-cayley", direction=args.direction, restricted=r.restricted,
                 condition=float(r.cond))
    _save_or_print(r.transformed.replace(meta=meta), args.out)
    return EXIT_OK


def cmd_discretize(args):
    from .cayley import internal_cayley

    s = load_system(args.file)
    alpha = _parse_number(args.alpha)
    r = internal_cayley(s, alpha)
    meta = _meta(s, "internal-cayley", alpha=[complex(alpha).real, complex(alpha).imag],
                 condition=float(r.cond))
    _save_or_print(r.discrete.replace(meta=meta), args.out)
    return EXIT_OK


def _storage(spec, s, supply_kind):
    from .kyp import check_passivity

    if spec is None:
        return None, None
    if spec == "auto":
        v = check_passivity(s, supply_kind, allow_zero_E=True)
        if not v.passive:
            raise _UsageError(f"--storage auto: system is not {supply_kind} passive")
        return v.X, v
    with open(spec, encoding="utf-8") as fh:
        return _decode(json.load(fh), "storage"), None


def cmd_simulate(args):
    from .sim import SupplyRate, audit_dissipation, simulate, write_csv

    s = load_system(args.file)
    u = _load_inputs(args.input, s.m, args.steps)
    x0 = _parse_vector(args.x0) if args.x0 else np.zeros(s.n)
    if x0.size != s.n:
        raise DimensionError(f"--x0 has {x0.size} entries, the system has {s.n} states")
    traj = simulate(s, u, x0, project=args.project)
    X, _ = _storage(args.storage, s, args.supply)
    audit = None
    if X is not None:
        audit = audit_dissipation(traj, SupplyRate.of(args.supply, s.m), X, s.E)
    if args.out_csv:
        write_csv(args.out_csv, traj, audit)
    summary = {"schema": 1, "tool_version": __version__, "system_hash": s.content_hash(), "steps": traj.K,
               "max_residual": float(np.max(traj.residuals(s), initial=0.0))}
    if audit is not None:
        summary["audit"] = {"supply": args.supply, "verdict": audit.verdict,
                            "violations": audit.violations, "max_excess": audit.max_violation,
                            "conservative": audit.conservative, "strict": audit.strict}
    _emit(summary, args.out)
    if args.assert_ and audit is not None and not audit.dissipative:
        return EXIT_ASSERT
    return EXIT_OK


def cmd_transfer(args):
    from .transfer import TransferFunction, check_realness, grid_points

    s = load_system(args.file)
    tf = TransferFunction(s)
    out = {"schema": 1, "tool_version": __version__, "system_hash": s.content_hash()}
    if args.points:
        pts = [_parse_number(t) for t in args.points.split(";") if t.strip()]
    elif args.grid:
        pts = grid_points(args.radii, args.angles)
    else:
        pts = []
    out["values"] = [{"z": [complex(z).real, complex(z).imag], "T": _encode(tf(z))} for z in pts]
    code = EXIT_OK
    if args.realness:
        kw = {"points": pts} if args.points else {"radii": args.radii, "n_angles": args.angles}
        r = check_realness(tf, args.realness, jobs=args.jobs, **kw)
        out["realness"] = r.to_dict()
        if args.assert_ and not r.holds_on_grid:
            code = EXIT_ASSERT
    _emit(out, args.out)
    return code


def _radii(text):
    vals = [float(t) for t in text.split(",") if t.strip()]
    if not vals or any(r <= 1 for r in vals):
        raise argparse.ArgumentTypeError("radii must be a comma list of values > 1")
    return tuple(vals)


def build_parser():
    p = argparse.ArgumentParser(prog="dtph", description="Passivity and port-Hamiltonian analysis of "
                                "discrete-time descriptor systems.")
    p.add_argument("--version", action="version", version=f"dtph {__version__}")
    tol = argparse.ArgumentParser(add_help=False)
    tol.add_argument("--tol-rank", type=float, default=1e-10)
    tol.add_argument("--tol-lmi", type=float, default=TOL_LMI)
    tol.add_argument("--tol-strict", type=float, default=TOL_STRICT)
    tol.add_argument("--cond-max", type=float, default=1e8)
    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--radii", type=_radii, default=(1.01, 1.1, 2.0, 10.0))
    grid.add_argument("--angles", type=int, default=32)
    grid.add_argument("--jobs", type=int, default=1, help="threads for grid evaluation")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", parents=[tol, grid], help="full classification report")
    c.add_argument("file")
    c.add_argument("--format", choices=("table", "json"), default="table")
    c.add_argument("--json", metavar="PATH", help="also write the JSON report to PATH")
    c.add_argument("--assert", dest="assert_", nargs="+", metavar="PROP",
                   help="exit 1 unless every listed property holds")
    c.set_defaults(fn=cmd_classify)

    c = sub.add_parser("to-ph", parents=[tol], help="port-Hamiltonian representation")
    c.add_argument("file")
    c.add_argument("--out")
    c.add_argument("--out-system", help="write the transformed system file")
    c.add_argument("--assert", dest="assert_", action="store_true", help="exit 1 unless the system is pH")
    c.set_defaults(fn=cmd_to_ph)

    c = sub.add_parser("cayley", help="external Cayley transform")
    c.add_argument("file")
    c.add_argument("--direction", choices=("imp->scat", "scat->imp"), required=True)
    c.add_argument("--no-restrict", action="store_true", help="do not restrict inputs when I + D is singular")
    c.add_argument("--out")
    c.set_defaults(fn=cmd_cayley)

    c = sub.add_parser("discretize", help="internal Cayley (Tustin) discretization")
    c.add_argument("file")
    c.add_argument("--alpha", required=True, help="real or complex, e.g. 2 or 1+1j")
    c.add_argument("--out")
    c.set_defaults(fn=cmd_discretize)

    c = sub.add_parser("simulate", help="simulate and optionally audit dissipation")
    c.add_argument("file")
    c.add_argument("--input", default="zero", help="zero, const:v1,v2, a CSV file or a JSON file")
    c.add_argument("--x0", help="comma list or JSON row")
    c.add_argument("--steps", type=int)
    c.add_argument("--project", action="store_true", help="project an inconsistent x0")
    c.add_argument("--storage", help="JSON matrix file, or 'auto' for a KYP witness")
    c.add_argument("--supply", choices=("impedance", "scattering"), default="scattering")
    c.add_argument("--out-csv")
    c.add_argument("--out")
    c.add_argument("--assert", dest="assert_", action="store_true", help="exit 1 on audit violations")
    c.set_defaults(fn=cmd_simulate)

    c = sub.add_parser("transfer", parents=[grid], help="transfer function values and realness")
    c.add_argument("file")
    g = c.add_mutually_exclusive_group()
    g.add_argument("--points", help="semicolon list, e.g. '2;1+1j'")
    g.add_argument("--grid", action="store_true")
    c.add_argument("--realness", choices=("positive", "bounded"))
    c.add_argument("--out")
    c.add_argument("--assert", dest="assert_", action="store_true", help="exit 1 if realness fails")
    c.set_defaults(fn=cmd_transfer)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (NumericalFailure, SingularMatrix) as exc:
        print(f"numerical failure: {exc}", file=_sys.stderr)
        return EXIT_NUMERIC
    except (_UsageError, DtphError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    _sys.exit(main())
