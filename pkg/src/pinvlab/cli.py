"""Command-line experiment harness.

Subcommands cover the package's reproducible demonstrations: pseudoinverse
reports, projection indices, stratum classification, continuity
certification of sequence families, Taylor remainder decay, stratum
census under random perturbation, fiber-chart round trips and polar
decomposition.  Every experiment is deterministic in its seed; CSV is
emitted with 17 significant digits so doubles round-trip exactly.

Exit codes: 0 success, 2 usage or malformed input, 3 hypothesis
violation, 4 internal inconsistency.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import codim, generate, monotone, pinv, polar, strata
from .errors import (
    ConsistencyError,
    OutsideNeighborhoodError,
    PinvLabError,
    PreconditionError,
)
from .matcore import (
    DEFAULT_TOL,
    GaugeNorm,
    as_matrix,
    gauge_norm,
    load_matrix,
    matrix_to_json,
    save_matrix,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_HYPOTHESIS = 3
EXIT_INCONSISTENT = 4


def _fmt(x) -> str:
    return "%.17g" % float(x)


def _emit(text: str, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report(obj: dict, args) -> None:
    if args.json:
        _emit(json.dumps(obj, indent=2, sort_keys=True) + "\n", args.out)
    else:
        lines = [f"{key}: {val}" for key, val in sorted(obj.items())]
        _emit("\n".join(lines) + "\n", args.out)


def _penrose_residuals(a, a_pinv) -> dict:
    return {
        "residual_axa": float(np.linalg.norm(a @ a_pinv @ a - a)),
        "residual_xax": float(np.linalg.norm(a_pinv @ a @ a_pinv - a_pinv)),
        "residual_ax_hermitian": float(
            np.linalg.norm(a @ a_pinv - (a @ a_pinv).conj().T)),
        "residual_xa_hermitian": float(
            np.linalg.norm(a_pinv @ a - (a_pinv @ a).conj().T)),
    }


def cmd_pinv(args) -> int:
    a = load_matrix(args.input)
    res = pinv.moore_penrose(a)
    if args.matrix_out:
        save_matrix(res.pinv, args.matrix_out)
    report = {"gamma": res.gamma, "rank": res.rank}
    report.update(_penrose_residuals(a, res.pinv))
    _report(report, args)
    return EXIT_OK


def cmd_codim(args) -> int:
    p = codim.Projector.from_matrix(load_matrix(args.p))
    q = codim.Projector.from_matrix(load_matrix(args.q))
    index = codim.essential_codimension(p, q)
    _report({"index": index, "rank_p": p.rank(), "rank_q": q.rank()}, args)
    return EXIT_OK


def cmd_stratify(args) -> int:
    a = load_matrix(args.a)
    b = load_matrix(args.b)
    k = strata.stratum_index(b, a).k
    rng_ = strata.index_range(a)
    _report({"index": k, "k_min": rng_.k_min, "k_max": rng_.k_max}, args)
    return EXIT_OK


def cmd_polar(args) -> int:
    a = load_matrix(args.input)
    parts = polar.polar_decompose(a)
    if args.matrix_out:
        payload = {
            "polar_factor": matrix_to_json(parts.polar_factor),
            "modulus": matrix_to_json(parts.modulus),
        }
        with open(args.matrix_out, "w") as fh:
            json.dump(payload, fh)
    vtv = parts.polar_factor.conj().T @ parts.polar_factor
    _report({
        "factorization_residual": float(
            np.linalg.norm(parts.polar_factor @ parts.modulus - a)),
        "initial_projector_residual": float(np.linalg.norm(vtv @ vtv - vtv)),
        "modulus_rank": int(np.linalg.matrix_rank(parts.modulus)),
    }, args)
    return EXIT_OK


def cmd_continuity(args) -> int:
    rng = generate.rng_from_seed(args.seed)
    g = GaugeNorm.parse(args.gauge)
    d = args.dim
    r = max(1, d // 2)
    lines = [
        "family,kind,record,n,index,pinv_norm,pinv_gap,"
        "nullproj_gap_gauge,nullproj_gap_op,intersection_dim,verdicts,consistent"
    ]
    all_consistent = True
    for family in range(args.trials):
        kind = "in_stratum" if family % 2 == 0 else "jump"
        b = generate.fixed_rank(rng, d, d, r)
        if kind == "in_stratum":
            seq = generate.in_stratum_family(rng, b, 8)
        else:
            seq = generate.jump_family(rng, b, 8)
        report = strata.continuity_report(b, seq, n0=2, g=g)
        for row in report.rows:
            lines.append(
                f"{family},{kind},data,{row.n},{row.index},"
                f"{_fmt(row.pinv_norm)},{_fmt(row.pinv_gap)},"
                f"{_fmt(row.nullproj_gap_gauge)},{_fmt(row.nullproj_gap_op)},"
                f"{row.intersection_dim},,"
            )
        verdicts = ";".join(
            f"{key}={int(val)}" for key, val in sorted(report.verdicts.items()))
        lines.append(
            f"{family},{kind},summary,,,,,,,,{verdicts},{int(report.consistent)}"
        )
        all_consistent = all_consistent and report.consistent
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if all_consistent else EXIT_INCONSISTENT


def _load_function(name: str) -> monotone.MonotoneFunction:
    if name == "sqrt":
        return monotone.make_sqrt()
    if name.startswith("atomic:"):
        with open(name[len("atomic:"):]) as fh:
            return monotone.monotone_from_json(json.load(fh))
    raise PreconditionError(f"unknown function {name!r}")


def cmd_taylor(args) -> int:
    rng = generate.rng_from_seed(args.seed)
    g = GaugeNorm.parse(args.gauge)
    f = _load_function(args.function)
    d = args.dim
    c = generate.positive_definite(rng, d)
    gamma = float(np.linalg.eigvalsh(c)[0])
    delta = generate.hermitian(rng, d)
    delta *= args.delta_scale * gamma / gauge_norm(delta, g)
    # Radius check: bounds are undefined at or beyond the series radius.
    monotone.taylor_remainder_bound(f, c, delta, 1, g)
    dist = gauge_norm(delta, g)
    fc = monotone.matrix_eval_spectral(f, c)
    target = monotone.matrix_eval_spectral(f, c + delta)
    tail_coeff = float(monotone.measure_integral(
        f, lambda t: (t + gamma) ** -2.0))
    partial = fc.copy()
    lines = ["m,remainder_gauge,bound_gauge,ratio"]
    ok = True
    for m in range(1, args.mmax + 1):
        partial = partial + monotone.taylor_term(f, c, delta, m)
        remainder = gauge_norm(target - partial, g)
        ratio_rad = dist / gamma
        bound = tail_coeff * ratio_rad**m * dist / (1.0 - ratio_rad)
        ratio = remainder / bound if bound > 0 else 0.0
        ok = ok and ratio <= 1.0 + 1e-6
        lines.append(f"{m},{_fmt(remainder)},{_fmt(bound)},{_fmt(ratio)}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_INCONSISTENT


def cmd_census(args) -> int:
    rng = generate.rng_from_seed(args.seed)
    g = GaugeNorm.parse(args.gauge)
    d = args.dim
    a = generate.fixed_rank(rng, d, d, max(1, d - 1))
    admissible = strata.index_range(a)
    ks = list(range(admissible.k_min, admissible.k_max + 1))
    lines = ["trial,k,pinv_norm,dist_gauge"]
    for trial in range(args.trials):
        k_target = ks[trial % len(ks)]
        rep = strata.stratum_representative(a, k_target)
        b = generate.rank_preserving_perturbation(rng, rep, 0.02)
        k = strata.stratum_index(b, a).k
        if k != k_target:
            raise ConsistencyError(
                f"census sample landed in stratum {k}, wanted {k_target}")
        res = pinv.moore_penrose(b)
        pinv_norm = 1.0 / res.gamma if res.rank else 0.0
        lines.append(
            f"{trial},{k},{_fmt(pinv_norm)},{_fmt(gauge_norm(b - a, g))}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_fiber(args) -> int:
    rng = generate.rng_from_seed(args.seed)
    d = args.dim
    r = max(1, d // 2)
    a = generate.fixed_rank(rng, d, d, r)
    parts = polar.polar_decompose(a)
    c0, v0 = parts.modulus, parts.polar_factor
    alpha_res, v_res = [], []
    outside = 0
    for _ in range(args.trials):
        b = generate.rank_preserving_perturbation(rng, a, 0.05)
        try:
            mod, fib = polar.trivialize_alpha(b, c0, a)
            back = polar.trivialize_alpha_inverse(mod, fib, c0)
            alpha_res.append(float(np.linalg.norm(back - b)))
            fac, fib = polar.trivialize_v(b, v0, a)
            back = polar.trivialize_v_inverse(fac, fib, v0)
            v_res.append(float(np.linalg.norm(back - b)))
        except OutsideNeighborhoodError:
            outside += 1
    report = {
        "trials": args.trials,
        "outside_chart": outside,
        "alpha_max_residual": max(alpha_res) if alpha_res else 0.0,
        "v_max_residual": max(v_res) if v_res else 0.0,
    }
    _report(report, args)
    worst = max(report["alpha_max_residual"], report["v_max_residual"])
    return EXIT_OK if worst <= 1e-7 else EXIT_INCONSISTENT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pinvlab",
        description="Pseudoinverse and polar-decomposition experiment harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--dim", type=int, default=4)
        sp.add_argument("--trials", type=int, default=20)
        sp.add_argument("--gauge", default="op",
                        help="op | s1 | s2 | sp:<p> | kyfan:<k>")
        sp.add_argument("--out", default=None)
        sp.add_argument("--json", action="store_true")

    sp = sub.add_parser("pinv", help="pseudoinverse of a matrix file")
    sp.add_argument("--input", required=True)
    sp.add_argument("--matrix-out", default=None)
    common(sp)
    sp.set_defaults(func=cmd_pinv)

    sp = sub.add_parser("codim", help="index of a pair of projector files")
    sp.add_argument("--p", required=True)
    sp.add_argument("--q", required=True)
    common(sp)
    sp.set_defaults(func=cmd_codim)

    sp = sub.add_parser("stratify", help="stratum index of B relative to A")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    common(sp)
    sp.set_defaults(func=cmd_stratify)

    sp = sub.add_parser("polar", help="polar decomposition of a matrix file")
    sp.add_argument("--input", required=True)
    sp.add_argument("--matrix-out", default=None)
    common(sp)
    sp.set_defaults(func=cmd_polar)

    sp = sub.add_parser("continuity",
                        help="six-condition certification of random families")
    common(sp)
    sp.set_defaults(func=cmd_continuity)

    sp = sub.add_parser("taylor", help="Taylor remainder decay experiment")
    sp.add_argument("--function", default="sqrt",
                    help="sqrt | atomic:<json-file>")
    sp.add_argument("--mmax", type=int, default=6)
    sp.add_argument("--delta-scale", type=float, default=0.3)
    common(sp)
    sp.set_defaults(func=cmd_taylor)

    sp = sub.add_parser("census", help="stratum histogram of perturbations")
    common(sp)
    sp.set_defaults(func=cmd_census)

    sp = sub.add_parser("fiber", help="chart round-trip experiment")
    common(sp)
    sp.set_defaults(func=cmd_fiber)
    return parser


def _validate(args) -> None:
    if getattr(args, "dim", 1) < 1 or getattr(args, "dim", 1) > 64:
        raise PreconditionError("--dim must be between 1 and 64")
    if getattr(args, "trials", 1) < 1:
        raise PreconditionError("--trials must be at least 1")
    GaugeNorm.parse(getattr(args, "gauge", "op"))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        _validate(args)
        return args.func(args)
    except (PreconditionError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OutsideNeighborhoodError as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except PinvLabError as exc:
        print(f"inconsistency: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT


if __name__ == "__main__":
    sys.exit(main())
