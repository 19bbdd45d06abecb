"""Command-line interface.

Subcommands: analyze, synthesize, verify, sweep-alpha and demo (the built-in
example system; no input file).  Exit codes: 0 success / certified, 2 usage
or input parse error, 3 infeasible or uncertified, 4 numerical failure,
5 invalid alpha path.  Reports are deterministic: identical flags and seed
produce byte-identical output.
"""

import argparse
import json
import sys

from .config import DEFAULTS
from .errors import AlphaPathError, DesconError, PlantFormatError
from .examples import demo_plant
from .io import gain_from_json, plant_from_json
from .lmi import assemble_robust_brl
from .model import check_admissibility, svd_equivalent_form
from .sdp import SdpProblem, solve_feasibility
from .synth import closed_loop, synthesize, synthesize_optimal
from .verify import alpha_sweep, robust_verify, sample_uncertainty

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNCERTIFIED = 3
EXIT_NUMERICAL = 4
EXIT_ALPHA = 5


def _add_common(p, needs_input=True):
    if needs_input:
        p.add_argument("--input", help="plant JSON document")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--format", choices=["json", "text", "csv"], default="json")
    p.add_argument("--config", help="JSON config file (flags take precedence)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--delta-grid", type=int, default=None,
                   help="grid size for scalar Delta sampling")
    p.add_argument("--samples", type=int, default=None,
                   help="random sample count for matrix Delta")
    p.add_argument("--solver.margin", dest="solver_margin", type=float,
                   default=None, help="strictness margin scale")
    p.add_argument("--solver.tol", dest="solver_tol", type=float, default=None)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="descon",
        description="Robust peak-gain analysis and state-feedback synthesis "
                    "for discrete-time descriptor systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="admissibility plus a robust "
                       "performance certificate at a fixed gamma")
    _add_common(p)
    p.add_argument("--gamma", type=float, required=True)

    for name, help_text in (("synthesize", "state-feedback design"),
                            ("demo", "run the built-in example system")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p, needs_input=(name == "synthesize"))
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--minimize", action="store_true",
                       help="minimise gamma instead of fixing it")
        p.add_argument("--alpha", type=float, default=None)

    p = sub.add_parser("verify", help="sampled robustness report for a plant "
                       "and an optional gain")
    _add_common(p)
    p.add_argument("--gain", help="gain JSON document")
    p.add_argument("--gamma", type=float, default=None,
                   help="target level the sampled worst case must stay below")

    p = sub.add_parser("sweep-alpha", help="minimised gamma per alpha value")
    _add_common(p)
    p.add_argument("--alphas", required=True,
                   help="comma-separated alpha values")
    return parser


def _config_from(args):
    cfg = DEFAULTS
    if getattr(args, "config", None):
        cfg = cfg.__class__.from_file(args.config)
    updates = {}
    for flag, key in (("seed", "seed"), ("delta_grid", "delta_grid"),
                      ("samples", "samples"), ("solver_margin", "margin_scale"),
                      ("solver_tol", "solver_tol"), ("alpha", "alpha")):
        val = getattr(args, flag, None)
        if val is not None:
            updates[key] = val
    return cfg.replace(**updates) if updates else cfg


def _load_plant(args, allow_demo=False):
    path = getattr(args, "input", None)
    if path is None:
        if allow_demo:
            return demo_plant()
        raise PlantFormatError("--input is required for this command")
    return plant_from_json(path)


def _emit(args, text):
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_report(args, doc, to_text=None):
    if args.format == "json":
        _emit(args, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    elif args.format == "text" and to_text is not None:
        _emit(args, to_text() + "\n")
    elif args.format == "text":
        lines = [f"{k}: {json.dumps(doc[k], sort_keys=True)}" for k in sorted(doc)]
        _emit(args, "\n".join(lines) + "\n")
    else:
        raise PlantFormatError(f"format {args.format!r} is not valid here")


def _delta_samples(uplant, cfg):
    if uplant.s == 1:
        return sample_uncertainty(1, cfg.delta_grid, "grid")
    return sample_uncertainty(uplant.s, cfg.samples, "random", cfg.seed)


def _cmd_analyze(args):
    cfg = _config_from(args)
    uplant = _load_plant(args)
    import numpy as np
    if np.any(uplant.plant.Bu):
        print("warning: control input map is nonzero and ignored by analyze",
              file=sys.stderr)
    form = svd_equivalent_form(uplant, cfg.rank_tol)
    ami = assemble_robust_brl(form, args.gamma)
    sol = solve_feasibility(SdpProblem.from_ami(ami, cfg.margin_scale))
    grid = robust_verify(uplant, gain=None, samples=_delta_samples(uplant, cfg),
                         gamma_target=args.gamma, grid_points=cfg.grid_points,
                         refine_tol=cfg.refine_tol)
    nominal = check_admissibility(uplant.plant.E, uplant.plant.A, cfg.rank_tol)
    doc = {
        "command": "analyze",
        "gamma": args.gamma,
        "nominal_admissibility": nominal.to_dict(),
        "certificate": {
            "status": sol.status,
            "margin": sol.margin,
            "iterations": sol.iterations,
        },
        "sampled": grid.to_dict(),
        "certified": sol.feasible,
    }
    _emit_report(args, doc)
    if sol.feasible:
        return EXIT_OK
    return EXIT_NUMERICAL if sol.status == "numerical_failure" else EXIT_UNCERTIFIED


def _cmd_synthesize(args, demo=False):
    cfg = _config_from(args)
    if demo and getattr(args, "input", None):
        raise PlantFormatError("demo runs the built-in system; --input is not allowed")
    uplant = _load_plant(args, allow_demo=demo)
    if args.minimize and args.gamma is not None:
        raise PlantFormatError("--minimize and --gamma are mutually exclusive")
    if not args.minimize and args.gamma is None:
        raise PlantFormatError("either --gamma or --minimize is required")
    alpha = cfg.alpha
    if args.minimize:
        result = synthesize_optimal(uplant, alpha=alpha, config=cfg)
    else:
        result = synthesize(uplant, args.gamma, alpha=alpha, config=cfg)
    doc = result.to_dict()
    doc["command"] = "demo" if demo else "synthesize"
    doc["alpha"] = alpha
    doc["open_loop_admissibility"] = check_admissibility(
        uplant.plant.E, uplant.plant.A, cfg.rank_tol).to_dict()
    if result.ok:
        chain = robust_verify(uplant, gain=result.gain,
                              samples=_delta_samples(uplant, cfg),
                              gamma_target=result.gamma + 1e-3,
                              grid_points=cfg.grid_points,
                              refine_tol=cfg.refine_tol)
        doc["verification"] = chain.to_dict()
        _emit_report(args, doc)
        if not chain.passed:
            print("warning: certificate verification failed on the sampled "
                  "uncertainty set", file=sys.stderr)
            return EXIT_NUMERICAL
        return EXIT_OK
    _emit_report(args, doc)
    return (EXIT_UNCERTIFIED if result.status == "infeasible"
            else EXIT_NUMERICAL)


def _cmd_verify(args):
    cfg = _config_from(args)
    uplant = _load_plant(args)
    gain = gain_from_json(args.gain) if args.gain else None
    report = robust_verify(uplant, gain=gain,
                           samples=_delta_samples(uplant, cfg),
                           gamma_target=args.gamma,
                           grid_points=cfg.grid_points,
                           refine_tol=cfg.refine_tol)
    _emit_report(args, report.to_dict(), to_text=report.to_text)
    return EXIT_OK if report.passed else EXIT_UNCERTIFIED


def _cmd_sweep_alpha(args):
    cfg = _config_from(args)
    uplant = _load_plant(args, allow_demo=True)
    try:
        alphas = [float(a) for a in args.alphas.split(",") if a.strip() != ""]
    except ValueError as exc:
        raise PlantFormatError(f"bad --alphas list: {exc}") from exc
    if not alphas:
        raise PlantFormatError("--alphas must name at least one value")
    unique = sorted(set(alphas))
    if len(unique) != len(alphas):
        print("warning: duplicate alpha values were dropped", file=sys.stderr)
    if any(a > 0 for a in unique) and not uplant.uncertainty_only_in_a:
        raise AlphaPathError("alpha sweep requires uncertainty confined to "
                             "the state matrix")
    curve = alpha_sweep(uplant, unique, cfg)
    if args.format == "csv":
        _emit(args, curve.to_csv())
    else:
        _emit_report(args, curve.to_dict())
    return EXIT_OK


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "synthesize":
            return _cmd_synthesize(args)
        if args.command == "demo":
            return _cmd_synthesize(args, demo=True)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "sweep-alpha":
            return _cmd_sweep_alpha(args)
        raise AssertionError(f"unhandled command {args.command}")
    except AlphaPathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALPHA
    except (PlantFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
