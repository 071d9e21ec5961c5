"""Command-line entry point.

Exit codes: 0 success / all checks pass, 1 a geometric check failed,
2 bad input (parse errors, malformed files, bad flags), 3 size guard.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .expr import ExprError, NumericDomainError
from .family import FamilyInput, self_intersect, solve_family, split_pairs
from .mesh import MeshSlice, sample_mesh
from .relations import (
    PolyBasis,
    SizeGuardError,
    build_mu,
    diagonalize,
    dimension_report,
    emit_map,
    first_nontrivial,
    kernel,
    report_csv,
)
from .weierstrass import DataFormatError, Tolerances, data_from_json, data_to_json, verify_data

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_GUARD = 0, 1, 2, 3


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    tolerances: Tolerances = field(default_factory=Tolerances)
    samples: int = 100
    lines: int = 10
    radius: float = 2.0
    seed: int = 0
    resolution: int = 21
    cap: int = 20000


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _write(text: str, path: Optional[str]):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_data(path: str):
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return data_from_json(doc)
    except (ExprError, DataFormatError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _config(args) -> RunConfig:
    try:
        tol = Tolerances(
            closed=args.tol_closed,
            conformality=args.tol_conf,
            rank=args.tol_rank,
            mean_curvature=args.tol_mc,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return RunConfig(args.command, tol, args.samples, args.lines, args.radius, args.seed)


def cmd_verify(args) -> int:
    data = _load_data(args.data)
    cfg = _config(args)
    rng = np.random.default_rng(cfg.seed)
    reports = verify_data(data, rng, cfg.samples, cfg.lines, cfg.radius, cfg.tolerances)
    passed = all(r.passed for r in reports)
    doc = {
        "data": args.data,
        "seed": cfg.seed,
        "samples": cfg.samples,
        "passed": passed,
        "checks": [r.to_json() for r in reports],
    }
    _write(_dump(doc), args.out)
    for r in reports:
        if not r.passed:
            where = f" form {r.worst_form}" if r.worst_form is not None else ""
            print(f"FAIL {r.name}{where}: worst {r.worst:.3g} (tol {r.tolerance:g})", file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_family(args) -> int:
    if args.input:
        try:
            inp = FamilyInput.from_json(json.loads(Path(args.input).read_text()))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise InputError(f"{args.input}: {exc}") from None
    else:
        if args.f is None or args.g is None:
            raise InputError("need --f and --g (or --input)")
        inp = FamilyInput.parse(args.f, args.g)
    six = solve_family(inp)
    _, data = split_pairs(six)
    doc = data_to_json(data)
    doc["family"] = {**inp.to_json(), "P": [str(p) for p in six.P]}
    _write(_dump(doc), args.out)
    return EXIT_OK


def cmd_relations(args) -> int:
    basis = PolyBasis(args.m, args.n)
    mu = build_mu(basis, args.cap)
    rels = kernel(mu)
    rows = dimension_report(args.m, range(1, args.n + 1), args.cap)
    doc = {
        "m": args.m,
        "n": args.n,
        "kernel_dimension": len(rels),
        "first_nontrivial_n": first_nontrivial(rows),
        "relations": [r.to_json()["gamma"] for r in rels],
    }
    _write(_dump(doc), args.out)
    if args.csv:
        _write(report_csv(rows), args.csv)
    if args.emit is not None:
        if not 0 <= args.emit < len(rels):
            raise InputError(f"--emit {args.emit}: kernel has {len(rels)} elements")
        diag = diagonalize(rels[args.emit], seed=args.seed)
        if not diag.certified:
            print(
                f"warning: residual certification failed "
                f"(coefficients {diag.coefficient_residual:.3g}, points {diag.point_residual:.3g})",
                file=sys.stderr,
            )
        data = emit_map(diag.primitives(), args.m, args.ensure_immersion, seed=args.seed)
        out = data_to_json(data)
        out["relation"] = {"index": args.emit, "rank": diag.rank, "point_residual": diag.point_residual}
        _write(_dump(out), args.data_out)
    return EXIT_OK


def _indices(text: str) -> List[int]:
    try:
        idx = [int(s) - 1 for s in text.split(",")]
    except ValueError:
        raise InputError(f"bad projection {text!r}") from None
    if len(idx) != 3:
        raise InputError("projection needs three indices")
    return idx


def cmd_mesh(args) -> int:
    data = _load_data(args.data)
    proj = _indices(args.project)
    if len(set(proj)) != 3 or min(proj) < 0 or max(proj) >= data.n:
        raise InputError(f"projection indices must be distinct and in 1..{data.n}")
    try:
        sl = MeshSlice.parse(args.curve, resolution=args.resolution, projection=tuple(proj), radius=args.radius)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    mesh = sample_mesh(data, sl)
    _write(mesh.to_obj(), args.out)
    return EXIT_OK


def cmd_selfintersect(args) -> int:
    data = _load_data(args.data)
    if data.primitives is None:
        raise InputError("self-intersection search needs primitives")
    hit = self_intersect(data, starts=args.starts, seed=args.seed, delta=args.delta)
    doc = {
        "data": args.data,
        "starts": args.starts,
        "seed": args.seed,
        "delta": args.delta,
        "found": hit is not None,
        "pair": None if hit is None else hit.to_json(),
    }
    _write(_dump(doc), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pluriminimal", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="check the Weierstrass conditions on a data file")
    v.add_argument("data")
    v.add_argument("--out", default=None)
    v.add_argument("--tol-conf", type=float, default=1e-12)
    v.add_argument("--tol-closed", type=float, default=1e-10)
    v.add_argument("--tol-rank", type=float, default=1e-9)
    v.add_argument("--tol-mc", type=float, default=1e-6)
    v.add_argument("--samples", type=int, default=100)
    v.add_argument("--lines", type=int, default=10)
    v.add_argument("--radius", type=float, default=2.0)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("family", help="generate C^2 -> R^6 data from entire f, g")
    f.add_argument("--f")
    f.add_argument("--g")
    f.add_argument("--input", help="JSON file {\"f\": ..., \"g\": ...}")
    f.add_argument("--out", default=None)
    f.set_defaults(func=cmd_family)

    r = sub.add_parser("relations", help="exact quadratic relations among polynomial 1-forms")
    r.add_argument("--m", type=int, required=True)
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--out", default=None)
    r.add_argument("--csv", default=None)
    r.add_argument("--emit", type=int, default=None, help="kernel element to turn into data")
    r.add_argument("--data-out", default=None)
    r.add_argument("--ensure-immersion", action="store_true")
    r.add_argument("--cap", type=int, default=20000)
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_relations)

    ms = sub.add_parser("mesh", help="export the image of a complex curve as an OBJ quad mesh")
    ms.add_argument("data")
    ms.add_argument("--curve", required=True, help="comma-separated expressions in z1")
    ms.add_argument("--resolution", type=int, default=21)
    ms.add_argument("--radius", type=float, default=1.0)
    ms.add_argument("--project", default="1,2,3", help="three 1-based coordinates of R^n")
    ms.add_argument("--out", default=None)
    ms.set_defaults(func=cmd_mesh)

    s = sub.add_parser("selfintersect", help="search for p != q with f(p) = f(q)")
    s.add_argument("data")
    s.add_argument("--starts", type=int, default=64)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--delta", type=float, default=0.1)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_selfintersect)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ExprError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SizeGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except NumericDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
