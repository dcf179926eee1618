"""Command-line entry point: ``isodrums {spectrum,compare,verify,admissible}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import admissible as adm
from .assembly import FormSpec, assemble_block
from .geometry import DOMAIN_IDS, CoefficientField, ReferenceTriangle, builtin_layout, check_embedding, planar_placements
from .gluing import assemble_glued, build_glued_space, write_matrix_market
from .mesh import refine_uniform
from .spectra import compare, nonsym_eigs, sym_eigs
from .transplant import (
    NAMED,
    TransplantError,
    TransplantMatrix,
    induced_map,
    intertwine_residual,
    named_matrix,
    subspace_residual,
    unitary_bhat,
)

FORMAT_VERSION = 1
DEFAULT_TOL = 1e-6
VERIFY_TOL = 1e-12

log = logging.getLogger("isodrums")


class CLIError(Exception):
    pass


def _common(refine=3):
    # a fresh parent per subcommand: argparse shares parent actions, so
    # per-command defaults would otherwise leak between subcommands
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--bc", default="neumann", choices=["neumann", "dirichlet", "robin"])
    common.add_argument("--beta", type=float, default=None, help="Robin coefficient (default 1 for robin)")
    common.add_argument("--refine", type=int, default=refine)
    common.add_argument("--coeff", type=Path, help="coefficient JSON file")
    common.add_argument("--triangle", type=float, nargs=6, metavar="X",
                        help="reference triangle as x1 y1 x2 y2 x3 y3")
    common.add_argument("--out", type=Path, help="output file (default stdout)")
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--emit-mesh", type=Path, help="write the refined triangle mesh as JSON")
    common.add_argument("--emit-layout", type=Path, help="write the layout table(s) as JSON")
    common.add_argument("--export-matrices", type=Path, metavar="DIR",
                        help="write glued K and M as Matrix Market files")
    common.add_argument("--check-overlap", action="store_true",
                        help="fail if the planar embedding self-overlaps")
    return common


def _parser():
    p = argparse.ArgumentParser(prog="isodrums", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", parents=[_common()], help="eigenvalues of one glued domain")
    s.add_argument("--domain", default="omega1", choices=DOMAIN_IDS)
    s.add_argument("--num", type=int, default=20)

    c = sub.add_parser("compare", parents=[_common()], help="compare the spectra of both domains")
    c.add_argument("--num", type=int, default=20)
    c.add_argument("--summary", type=Path, help="summary JSON file (default: stderr)")

    v = sub.add_parser("verify", parents=[_common(refine=2)], help="check a transplantation matrix")
    v.add_argument("--matrix", default="B", help=f"one of {NAMED + ('BHAT',)} or a JSON file")
    v.add_argument("--alpha", type=float, help="BHAT alpha (default: unitary member)")
    v.add_argument("--gamma", type=float, help="BHAT gamma")

    a = sub.add_parser("admissible", help="exact space of transplantation matrices")
    a.add_argument("--bc", default="neumann", choices=list(adm.SYSTEMS))
    a.add_argument("--beta", type=float, default=1.0)
    a.add_argument("--out", type=Path)
    return p


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _formspec(args):
    coef = CoefficientField.load(args.coeff) if args.coeff else CoefficientField.identity()
    beta = args.beta if args.beta is not None else (1.0 if args.bc == "robin" else 0.0)
    return FormSpec(args.bc, beta, coef)


def _triangle(args):
    return ReferenceTriangle.from_coords(args.triangle) if args.triangle else ReferenceTriangle()


def _setup(args, domains):
    tri = _triangle(args)
    formspec = _formspec(args)
    mesh = refine_uniform(tri, args.refine)
    if args.emit_mesh:
        Path(args.emit_mesh).write_text(mesh.to_json())
    layouts = [builtin_layout(d) for d in domains]
    if args.emit_layout:
        data = {lay.domain_id: lay.to_dict() for lay in layouts}
        Path(args.emit_layout).write_text(json.dumps(data, indent=2))
    if args.check_overlap:
        for lay in layouts:
            overlaps = check_embedding(planar_placements(lay, tri), tri)
            if overlaps:
                raise CLIError(f"{lay.domain_id}: planar embedding overlaps at copy pairs {overlaps}")
    block = assemble_block(mesh, formspec.coefficient)
    pairs = []
    for lay in layouts:
        space = build_glued_space(lay, mesh, formspec.bc)
        if space.free_dim == 0:
            raise CLIError(f"empty {formspec.bc.capitalize()} space at r={args.refine}")
        pair = assemble_glued(space, block, formspec)
        if args.export_matrices:
            d = Path(args.export_matrices)
            d.mkdir(parents=True, exist_ok=True)
            write_matrix_market(d / f"{lay.domain_id}_K.mtx", pair.K)
            write_matrix_market(d / f"{lay.domain_id}_M.mtx", pair.M)
        pairs.append(pair)
    return formspec, pairs


def _eigs(pair, num):
    num = min(num, pair.free_dim)
    if pair.formspec.coefficient.is_hermitian:
        return sym_eigs(pair, num)
    return nonsym_eigs(pair, num)


def cmd_spectrum(args) -> int:
    _, (pair,) = _setup(args, [args.domain])
    spec = _eigs(pair, args.num)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "lambda_re", "lambda_im", "residual"])
    for i, (lam, res) in enumerate(zip(spec.values, spec.residuals)):
        lam = complex(lam)
        w.writerow([i, repr(lam.real), repr(lam.imag), repr(float(res))])
    _write(args.out, buf.getvalue())
    return 0


def cmd_compare(args) -> int:
    formspec, (p1, p2) = _setup(args, DOMAIN_IDS)
    s1, s2 = _eigs(p1, args.num), _eigs(p2, args.num)
    informational = formspec.bc == "robin"
    tol = None if informational else (args.tol if args.tol is not None else DEFAULT_TOL)
    report = compare(s1, s2, tol)
    _write(args.out, report.to_csv())
    summary = {
        "format_version": FORMAT_VERSION,
        "bc": formspec.bc,
        "beta": formspec.beta,
        "refine": args.refine,
        "count": int(len(report.abs_diff)),
        "max_abs_diff": report.max_abs_diff,
        "max_rel_diff": report.max_rel_diff,
        "tol": tol,
        "informational": informational,
        "passed": report.passed,
        "per_index_abs_diff": [float(x) for x in report.abs_diff],
    }
    text = json.dumps(summary, indent=2) + "\n"
    if args.summary:
        Path(args.summary).write_text(text)
    else:
        sys.stderr.write(text)
    return 0 if informational or report.passed else 1


def _resolve_matrix(args):
    name = args.matrix
    if name in NAMED:
        return named_matrix(name)
    if name == "BHAT":
        if args.alpha is None and args.gamma is None:
            return unitary_bhat()[0]
        from .transplant import bhat

        return bhat(args.alpha if args.alpha is not None else 0.0, args.gamma if args.gamma is not None else 1.0)
    path = Path(name)
    if not path.exists():
        raise CLIError(f"unknown matrix {name!r}")
    return TransplantMatrix.load(path)


def _num(x):
    return str(x) if not isinstance(x, float) else x


def cmd_verify(args) -> int:
    P = _resolve_matrix(args)
    formspec, (p1, p2) = _setup(args, DOMAIN_IDS)
    tol = args.tol if args.tol is not None else VERIFY_TOL
    checks = []

    fwd = subspace_residual(P, p1.space, p2.space)
    bwd = subspace_residual(P.T, p2.space, p1.space)
    checks.append({"check": "maps_space_1_into_2", "residual": _num(fwd), "passed": float(fwd) <= tol})
    checks.append({"check": "transpose_maps_space_2_into_1", "residual": _num(bwd), "passed": float(bwd) <= tol})
    if float(fwd) <= tol and float(bwd) <= tol:
        F = induced_map(P, p1.space, p2.space).matrix
        smin = float(np.linalg.svd(F, compute_uv=False).min()) if F.size else 0.0
        checks.append({"check": "induced_map_invertible", "min_singular_value": smin,
                       "passed": F.shape[0] == F.shape[1] and smin > 1e-8})
        rho_k, rho_m = intertwine_residual(P, p1, p2)
        checks.append({"check": "intertwines_stiffness", "residual": rho_k, "passed": rho_k <= tol})
        checks.append({"check": "intertwines_mass", "residual": rho_m, "passed": rho_m <= tol})
    else:
        checks.append({"check": "induced_map_invertible", "passed": False, "skipped": "not a subspace map"})
    report = {
        "format_version": FORMAT_VERSION,
        "matrix": P.name,
        "bc": formspec.bc,
        "beta": formspec.beta,
        "refine": args.refine,
        "tol": tol,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }
    _write(args.out, json.dumps(report, indent=2) + "\n")
    return 0 if report["passed"] else 1


def cmd_admissible(args) -> int:
    space = adm.admissible_space(args.bc, beta=args.beta)
    data = space.to_dict()
    data["contains"] = {name: space.contains(named_matrix(name).entries) for name in NAMED}
    _write(args.out, json.dumps(data, indent=2) + "\n")
    return 0


COMMANDS = {
    "spectrum": cmd_spectrum,
    "compare": cmd_compare,
    "verify": cmd_verify,
    "admissible": cmd_admissible,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (CLIError, ValueError, TransplantError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
