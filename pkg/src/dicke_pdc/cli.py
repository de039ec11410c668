"""Command-line front end: point evaluation, sweeps, closed forms, regression.

Exit codes: 0 success, 2 flag errors (argparse), 3 photon-cap exhaustion on
`point` (the result is still printed), 1 failed validation or a sweep with
more than 10 % failed points.  Identical flags always produce identical
output bytes; there is no randomness anywhere in the pipeline.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__, analytic
from .entanglement import entropy_of_entanglement, pair_concurrence, reduce_to_ensemble
from .model import ModelParams
from .observables import observe
from .spectral import TruncationConfig, converge_ground_state
from .sweep import (
    CSV_COLUMNS,
    SweepGrid,
    default_grid,
    desk_grid,
    run_sweep,
)
from .validate import format_report, run_validation


def _add_params_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-atoms", type=int, required=True, help="ensemble size N")
    parser.add_argument("--lambda", dest="coupling", type=float, required=True,
                        help="linear coupling strength (units of omega_a)")
    parser.add_argument("--kappa", type=float, required=True,
                        help="two-photon nonlinearity (units of omega_a)")
    _add_freq_flags(parser)


def _add_freq_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--omega-a", type=float, default=1.0, help="atomic frequency (default 1)")
    parser.add_argument("--omega-f", type=float, default=1.0, help="field frequency (default 1)")


def _add_truncation_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-start", type=int, default=40, help="initial photon cutoff")
    parser.add_argument("--n-max-cap", type=int, default=200, help="maximum photon cutoff")
    parser.add_argument("--epsilon", type=float, default=1e-10, help="truncation residual target")
    parser.add_argument("--epsilon-d", type=float, default=1e-10, help="degeneracy threshold")


def _truncation_from_args(args: argparse.Namespace) -> TruncationConfig:
    return TruncationConfig(
        n_start=min(args.n_start, args.n_max_cap),
        n_cap=args.n_max_cap,
        epsilon=args.epsilon,
        epsilon_d=args.epsilon_d,
    )


def _params_from_args(args: argparse.Namespace) -> ModelParams:
    return ModelParams(
        n_atoms=args.n_atoms, coupling=args.coupling, kappa=args.kappa,
        omega_a=args.omega_a, omega_f=args.omega_f,
    )


def _json_safe(obj):
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _fmt(value: float) -> str:
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def cmd_point(args: argparse.Namespace) -> int:
    params = _params_from_args(args)
    config = _truncation_from_args(args)
    if args.dry_run:
        print(json.dumps({"subcommand": "point", "params": asdict(params),
                          "truncation": asdict(config)}, indent=2, sort_keys=True))
        return 0
    result = converge_ground_state(params, config)
    record = observe(result.vector, result.basis)
    entropy = entropy_of_entanglement(reduce_to_ensemble(result.vector, result.basis))
    concurrence = pair_concurrence(result.vector, result.basis) if params.n_atoms >= 2 else 0.0
    payload = {
        "params": asdict(params),
        "analytic": {
            "lambda_weak": analytic.critical_coupling_weak(params),
            "lambda_strong": analytic.critical_coupling_strong(params),
        },
        "ground_state": {
            "energy": result.energy,
            "gap": result.gap,
            "degenerate": result.degenerate,
            "parity": result.parity,
            "residual": result.residual,
            "residual_mode": result.residual_mode,
            "n_max_used": result.n_max_used,
            "converged": result.converged,
        },
        "observables": record.as_dict(),
        "entanglement": {
            "entropy_bits": entropy,
            "concurrence": concurrence,
            "concurrence_scaled": (params.n_atoms - 1) * concurrence,
        },
    }
    if args.dump_state:
        _dump_state(Path(args.dump_state), result)
    if args.json:
        print(json.dumps(_json_safe(payload), indent=2, sort_keys=True))
    elif args.csv:
        obs = record.as_dict()
        row = {
            "lambda": params.coupling, "kappa": params.kappa,
            "energy": result.energy, "gap": result.gap,
            "degenerate": result.degenerate, "residual": result.residual,
            "n_max_used": result.n_max_used,
            "phase_product": obs["phase_product"],
            "entropy_bits": entropy, "concurrence": concurrence,
            "concurrence_scaled": (params.n_atoms - 1) * concurrence,
        }
        row.update({k: obs[k] for k in ("mean_Jz", "mean_n", "var_n", "var_X", "var_Y",
                                        "uncert_XY", "mean_Jx", "var_Jx", "var_Jy", "var_Jz")})
        print(",".join(CSV_COLUMNS))
        print(",".join(_fmt(row[c]) for c in CSV_COLUMNS))
    else:
        print(f"point: N={params.n_atoms} lambda={params.coupling} kappa={params.kappa} "
              f"omega_a={params.omega_a} omega_f={params.omega_f}")
        print(f"  analytic thresholds: lambda_W={payload['analytic']['lambda_weak']:.10g} "
              f"lambda_S={payload['analytic']['lambda_strong']:.10g}")
        gs = payload["ground_state"]
        print(f"  E1={gs['energy']:.10g}  gap={gs['gap']:.4g}  degenerate={gs['degenerate']} "
              f"parity={gs['parity']}")
        print(f"  residual={gs['residual']:.3e} ({gs['residual_mode']}) "
              f"n_max={gs['n_max_used']} converged={gs['converged']}")
        for key in ("mean_n", "var_n", "var_X", "var_Y", "uncert_XY", "mean_Jx", "var_Jx",
                    "mean_Jy", "var_Jy", "mean_Jz", "var_Jz", "phase_product"):
            print(f"  {key:14s} = {_fmt(record.as_dict()[key])}")
        ent = payload["entanglement"]
        print(f"  entropy_bits   = {_fmt(ent['entropy_bits'])}")
        print(f"  concurrence    = {_fmt(ent['concurrence'])}")
    return 0 if result.converged else 3


def _dump_state(path: Path, result) -> None:
    basis = result.basis
    lines = ["# n m coefficient"]
    for idx, coeff in enumerate(result.vector):
        n, m = basis.unflatten(idx)
        lines.append(f"{n} {m:g} {coeff:.17g}")
    path.write_text("\n".join(lines) + "\n")


def _parse_range(spec: str) -> tuple[float, ...]:
    try:
        lo, hi, step = (float(part) for part in spec.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"range must be 'start:stop:step', got {spec!r}"
        ) from exc
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad range {spec!r}")
    count = int(round((hi - lo) / step)) + 1
    return tuple(lo + i * step for i in range(count) if lo + i * step <= hi + 1e-12)


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _truncation_from_args(args)
    if args.grid:
        maker = desk_grid if args.grid == "desk" else default_grid
        grid = maker(args.n_atoms, omega_a=args.omega_a, omega_f=args.omega_f,
                     truncation=config, axis_mode=args.axis_mode)
    else:
        if not (args.lambda_range and args.kappa_range):
            print("sweep: need either --grid or both --lambda-range and --kappa-range",
                  file=sys.stderr)
            return 2
        grid = SweepGrid(
            lambda_axis=_parse_range(args.lambda_range),
            kappa_axis=_parse_range(args.kappa_range),
            n_atoms=args.n_atoms, omega_a=args.omega_a, omega_f=args.omega_f,
            truncation=config, axis_mode=args.axis_mode,
        )
    out_dir = os.environ.get("DICKE_PDC_OUT_DIR") or args.out_dir
    if args.dry_run:
        print(json.dumps({"subcommand": "sweep", "grid": grid.spec_dict(),
                          "config_hash": grid.config_hash(), "workers": args.workers,
                          "out_dir": out_dir, "resume": args.resume},
                         indent=2, sort_keys=True))
        return 0
    if out_dir is None:
        print("sweep: no output directory (use --out-dir or DICKE_PDC_OUT_DIR)", file=sys.stderr)
        return 2
    result = run_sweep(grid, workers=args.workers, out_dir=out_dir,
                       resume=args.resume, progress=not args.quiet)
    counts = result.manifest["counts"]
    print(f"sweep: {counts['points']} points, {counts['failed']} failed, "
          f"{counts['not_converged']} hit the photon cap; outputs in {out_dir}")
    if counts["failed"] > 0.10 * counts["points"]:
        return 1
    return 0


def cmd_analytic(args: argparse.Namespace) -> int:
    params = _params_from_args(args)
    t = analytic.transformed_params(params)
    mf = analytic.mean_field_solution(params)
    basis = params.basis(4)
    _, e_weak = analytic.weak_ground_state(params, basis)
    rows = {
        "lambda_weak": analytic.critical_coupling_weak(params),
        "lambda_strong": analytic.critical_coupling_strong(params),
        "eta": t.eta,
        "omega_f_tilde": t.omega_f_tilde,
        "g_tilde": t.g_tilde,
        "kappa_tilde": t.kappa_tilde,
        "xi": t.xi,
        "omega_a_tilde": t.omega_a_tilde,
        "lambda_tilde": t.lambda_tilde,
        "alpha_r_squared": mf.alpha_sq,
        "beta_aux": mf.beta_aux,
        "superradiant": mf.superradiant,
        "energy_weak_state": e_weak,
        "energy_strong_state": mf.energy,
    }
    if args.json:
        payload = dict(rows)
        payload["validity"] = {"eta_valid": t.eta_valid, "xi_valid": t.xi_valid}
        print(json.dumps(_json_safe(payload), indent=2, sort_keys=True))
        return 0
    print(f"analytic: N={params.n_atoms} lambda={params.coupling} kappa={params.kappa} "
          f"omega_a={params.omega_a} omega_f={params.omega_f}")
    for key, value in rows.items():
        print(f"  {key:20s} = {_fmt(value)}")
    if not t.eta_valid:
        print(f"  note: eta={t.eta:.4g} >= 0.1, outside the weak-transform validity range")
    if not t.xi_valid:
        print(f"  note: xi={t.xi:.4g} >= 0.1, outside the weak-transform validity range")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    comparisons, summary = run_validation(strict=args.strict)
    if args.report == "json":
        payload = {
            "summary": summary,
            "cells": [
                {"marker": c.marker, "cell": c.cell, "ours": c.ours,
                 "reference": c.reference, "status": c.status, "detail": c.detail}
                for c in comparisons
            ],
        }
        print(json.dumps(_json_safe(payload), indent=2, sort_keys=True))
    else:
        print(format_report(comparisons, summary))
    return 0 if summary["ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dicke-pdc",
        description="Ground-state phase diagram of a two-level ensemble coupled to a "
                    "degenerate parametric field mode: exact diagonalization, closed-form "
                    "thresholds, entanglement and squeezing statistics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_point = sub.add_parser("point", help="evaluate one parameter point")
    _add_params_flags(p_point)
    _add_truncation_flags(p_point)
    p_point.add_argument("--json", action="store_true", help="print the panel as JSON")
    p_point.add_argument("--csv", action="store_true", help="print the panel as one CSV row")
    p_point.add_argument("--dump-state", metavar="PATH", help="write the state vector to PATH")
    p_point.add_argument("--dry-run", action="store_true", help="echo the resolved config only")
    p_point.set_defaults(func=cmd_point)

    p_sweep = sub.add_parser("sweep", help="evaluate a (lambda, kappa) grid")
    p_sweep.add_argument("--n-atoms", type=int, required=True)
    _add_freq_flags(p_sweep)
    _add_truncation_flags(p_sweep)
    p_sweep.add_argument("--grid", choices=("desk", "default"),
                         help="preset grid (desk: 21x21, default: 51x51) over [0,5]^2")
    p_sweep.add_argument("--lambda-range", metavar="A:B:STEP", help="coupling axis (axis-mode units)")
    p_sweep.add_argument("--kappa-range", metavar="A:B:STEP", help="nonlinearity axis")
    p_sweep.add_argument("--axis-mode", choices=("lambda", "lambda_over_sqrtN"),
                         default="lambda_over_sqrtN",
                         help="meaning of the coupling axis (default: lambda/sqrt(N))")
    p_sweep.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p_sweep.add_argument("--resume", action="store_true",
                         help="skip points already in the records file")
    p_sweep.add_argument("--out-dir", help="output directory (DICKE_PDC_OUT_DIR overrides)")
    p_sweep.add_argument("--quiet", action="store_true", help="suppress progress lines")
    p_sweep.add_argument("--dry-run", action="store_true", help="echo the resolved config only")
    p_sweep.set_defaults(func=cmd_sweep)

    p_analytic = sub.add_parser("analytic", help="closed-form thresholds and limit states")
    _add_params_flags(p_analytic)
    p_analytic.add_argument("--json", action="store_true")
    p_analytic.set_defaults(func=cmd_analytic)

    p_validate = sub.add_parser("validate", help="regress the built-in benchmark markers")
    p_validate.add_argument("--report", choices=("text", "json"), default="text")
    p_validate.add_argument("--strict", action="store_true",
                            help="count documented benchmark errata as failures")
    p_validate.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
