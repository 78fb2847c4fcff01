"""Command-line interface.

Reports go to stdout (or --out) and are byte-stable run to run; timing
and status chatter go to stderr.  Exit codes: 0 certified or positive
result, 1 definite negative, 2 inconclusive, 3 usage or input error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .certify import (
    certify_global_stability,
    closed_form_conditions,
    default_candidates,
    schwarzian_test,
    two_cycle_oracle,
)
from .config import SystemConfig, config_from_dict, config_to_system, parse_system_config
from .envelopes import structural_check, envelops, fit_mobius
from .models import check_axioms_callable, verify_population_axioms
from .numerics import GridConfig
from .periodic import (
    compose_array,
    find_fixed_points,
    find_geometric_cycles,
    iterate_orbit,
)
from .report import ReportDocument, emit_plot_data, emit_report, plain, render_svg

__all__ = ["main", "run_command", "build_parser"]

_STATUS_EXIT = {
    "CertifiedGlobal": 0,
    "NotPopulationModel": 1,
    "EnvelopeNotFound": 1,
    "LocalOnly": 1,
    "Inconclusive": 2,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise _UsageError(message)


def _bundled_names() -> list[str]:
    root = resources.files("envcert").joinpath("configs")
    return sorted(p.name[: -len(".yaml")] for p in root.iterdir() if p.name.endswith(".yaml"))


def _load_config(name: str) -> SystemConfig:
    path = Path(name)
    if path.exists():
        return parse_system_config(path)
    base = name[: -len(".yaml")] if name.endswith(".yaml") else name
    res = resources.files("envcert").joinpath("configs", f"{base}.yaml")
    if res.is_file():
        try:
            data = yaml.safe_load(res.read_text())
        except yaml.YAMLError as exc:
            raise ValueError(f"config parse error in bundled {base}: {exc}") from exc
        return config_from_dict(data)
    raise ValueError(
        f"no such config file or bundled name: {name!r}; "
        f"bundled configs: {', '.join(_bundled_names())}"
    )


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="envcert",
        description="Certify global stability of periodic population models "
                    "by enveloping.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("config", help="config file path or bundled config name")
        sp.add_argument("--grid-cells", type=int, help="seed grid cells override")
        sp.add_argument("--tol", type=float, help="absolute tolerance override")
        sp.add_argument("--out", help="write the report here instead of stdout "
                                      "(ENVCERT_OUT_DIR prefixes bare names)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    common(sub.add_parser("certify", help="run the full certification pipeline"))
    common(sub.add_parser("axioms", help="population-model axioms per map and "
                                         "for the composition"))
    common(sub.add_parser("envelope-check", help="structural and enveloping "
                                                 "checks for each candidate"))
    sp = sub.add_parser("mobius-fit", help="scan the Moebius alpha parameter")
    common(sp)
    sp.add_argument("--alpha-cells", type=int, default=1000)
    sp = sub.add_parser("cycles", help="geometric cycles up to a period count")
    common(sp)
    sp.add_argument("--r-max", type=int, default=3)
    sp = sub.add_parser("orbit", help="iterate an initial point")
    common(sp)
    sp.add_argument("--x0", type=float, default=0.5)
    sp.add_argument("--periods", type=int, default=50)
    common(sub.add_parser("schwarzian", help="negative-Schwarzian test per map"))
    common(sub.add_parser("conditions", help="closed-form parameter regions"))
    sp = sub.add_parser("plot-data", help="tabulate maps, composition, and "
                                          "envelopes for plotting")
    common(sp)
    sp.add_argument("--samples", type=int, default=512)
    return p


def _grid_from(args, cfg: SystemConfig) -> GridConfig:
    grid = cfg.grid
    if getattr(args, "grid_cells", None):
        grid = replace(grid, seed_cells=args.grid_cells)
    if getattr(args, "tol", None):
        grid = replace(grid, abs_tol=args.tol)
    return grid


def _resolve_out(raw: str) -> Path:
    out = Path(raw)
    prefix = os.environ.get("ENVCERT_OUT_DIR")
    # only bare file names get the prefix; an explicit ./ or any
    # directory component pins the path to the working directory
    if prefix and os.path.dirname(raw) == "":
        out = Path(prefix) / out
    return out


def _write(text: str, args) -> None:
    if args.out:
        out = _resolve_out(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        print(f"wrote {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _emit(command: str, cfg: SystemConfig, grid: GridConfig, result: dict, args) -> None:
    doc = ReportDocument(
        command=command,
        config=cfg.raw,
        tolerances={
            "abs_tol": grid.abs_tol,
            "rel_tol": grid.rel_tol,
            "seed_cells": grid.seed_cells,
            "max_refinement_depth": grid.max_refinement_depth,
            "exclusion_radius": grid.exclusion_radius,
        },
        result=result,
    )
    _write(emit_report(doc, args.format), args)


def run_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 3
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    t0 = time.perf_counter()
    try:
        cfg = _load_config(args.config)
        grid = _grid_from(args, cfg)
        system = config_to_system(cfg)
        code = _dispatch(args, cfg, grid, system)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(
        f"{args.command}: done in {time.perf_counter() - t0:.2f}s",
        file=sys.stderr,
    )
    return code


def _dispatch(args, cfg: SystemConfig, grid: GridConfig, system) -> int:
    cmd = args.command

    if cmd == "certify":
        cert = certify_global_stability(
            system, candidates=cfg.envelopes or None, cfg=grid
        )
        _emit(cmd, cfg, grid, plain(cert), args)
        print(f"status: {cert.status}", file=sys.stderr)
        return _STATUS_EXIT[cert.status]

    if cmd == "axioms":
        maps = [verify_population_axioms(f, grid) for f in system.maps]
        comp_viol, comp_info = check_axioms_callable(
            lambda t: compose_array(system, t),
            system.working_interval.hi,
            grid,
            "composition",
        )
        result = {
            "maps": plain(maps),
            "composition": {
                "violations": plain(comp_viol),
                "fixed_point_residuals": plain(comp_info["fixed_point_residuals"]),
            },
            "working_interval": [system.working_interval.lo, system.working_interval.hi],
        }
        _emit(cmd, cfg, grid, result, args)
        all_viol = [v for r in maps for v in r.violations] + comp_viol
        if any(v.kind == "violation" for v in all_viol):
            return 1
        return 2 if all_viol else 0

    if cmd == "envelope-check":
        envs = cfg.envelopes or default_candidates(system)
        entries = []
        any_pass = False
        all_definite = True
        for h in envs:
            struct = structural_check(h, grid)
            verdicts = [envelops(h, f, grid) for f in system.maps] if struct.passed else []
            passed = struct.passed and bool(verdicts) and all(v.passed for v in verdicts)
            any_pass = any_pass or passed
            if not passed:
                definite = (not struct.passed) or any(v.has_violation for v in verdicts)
                all_definite = all_definite and definite
            entries.append({
                "envelope": h.label,
                "structural": plain(struct),
                "verdicts": plain(verdicts),
                "passed": passed,
            })
        _emit(cmd, cfg, grid, {"candidates": entries}, args)
        if any_pass:
            return 0
        return 1 if all_definite else 2

    if cmd == "mobius-fit":
        fit = fit_mobius(system, grid, alpha_cells=args.alpha_cells)
        _emit(cmd, cfg, grid, plain(fit), args)
        return 0 if fit.feasible else 1

    if cmd == "cycles":
        cycles = find_geometric_cycles(system, args.r_max, grid)
        fixed = find_fixed_points(system, grid)
        result = {
            "fixed_points": plain(fixed),
            "cycles": plain(cycles),
            "r_max": args.r_max,
        }
        _emit(cmd, cfg, grid, result, args)
        return 0

    if cmd == "orbit":
        try:
            orbit = iterate_orbit(system, args.x0, args.periods)
        except ValueError as exc:
            _emit(cmd, cfg, grid, {"error": str(exc), "x0": args.x0}, args)
            return 1
        result = {
            "x0": args.x0,
            "periods": args.periods,
            "values": plain(orbit),
            "final": float(orbit[-1]),
            "distance_to_one": abs(float(orbit[-1]) - 1.0),
        }
        _emit(cmd, cfg, grid, result, args)
        return 0

    if cmd == "schwarzian":
        reports = [schwarzian_test(f, grid) for f in system.maps]
        _emit(cmd, cfg, grid, {"maps": plain(reports)}, args)
        return 0 if all(r.passed for r in reports) else 1

    if cmd == "conditions":
        rep = closed_form_conditions(system)
        _emit(cmd, cfg, grid, plain(rep), args)
        if rep.aggregate is None:
            return 2
        return 0 if rep.aggregate else 1

    if cmd == "plot-data":
        W = system.working_interval
        columns = [(f.label, f.eval_array) for f in system.maps]
        columns.append(("composition", lambda t: compose_array(system, t)))
        for h in cfg.envelopes:
            columns.append((h.label, h.eval_array))
        columns.append(("diagonal", lambda t: np.asarray(t, dtype=float)))
        csv_text, arrays = emit_plot_data(columns, (W.lo, W.hi), args.samples)
        _write(csv_text, args)
        if args.out:
            svg_path = _resolve_out(args.out).with_suffix(".svg")
            svg_path.parent.mkdir(parents=True, exist_ok=True)
            svg_path.write_text(render_svg(arrays, title=system.label))
            print(f"wrote {svg_path}", file=sys.stderr)
        return 0

    raise ValueError(f"unhandled command {cmd!r}")


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))
