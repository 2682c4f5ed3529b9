"""Command-line front end.

One JSON config in, deterministic artifacts out.  Subcommands map onto
the library pipelines: radial (background classification), solve (one
stream-function solve), sweep (parameter march), critical (bisection for
the removability boundary), limit (ladder toward choking).  Exit codes:
0 success, 2 config validation, 3 numerical failure, 4 I/O failure.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import continuation as ct
from .config import parse_config, sweep_values
from .errors import (
    ConfigError,
    InternalConsistencyError,
    MeshQualityError,
    NonConvergenceError,
    NonMonotoneError,
    RegimeError,
)
from .gas import GasModel
from .meshing import build_annulus_mesh, mesh_quality_report
from .radial import RadialBackground
from .solver import (
    boundary_flux,
    decay_report,
    recover_fields,
    weak_residuals,
)
from .vtkio import write_vtk

_NUMERICAL_ERRORS = (
    NonConvergenceError,
    NonMonotoneError,
    RegimeError,
    MeshQualityError,
    InternalConsistencyError,
)


def _fmt(x):
    """17 significant digits: enough to round-trip any double exactly."""
    return format(float(x), ".17g")


def _write_text(path: Path, text: str):
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path: Path, obj):
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, bool):
                cells.append("true" if v else "false")
            else:
                cells.append(_fmt(v))
        lines.append(",".join(cells))
    _write_text(path, "\n".join(lines) + "\n")


def _say(quiet, msg):
    if not quiet:
        print(msg)


def _background(cfg):
    return RadialBackground(GasModel(cfg.gamma, 0.1), cfg.kappa1, cfg.kappa2)


def _mesh(cfg):
    return build_annulus_mesh(cfg.body.build(), cfg.mesh.R_out, cfg.mesh.h)


def _base_report(cfg):
    return {
        "spec_version": 1,
        "config_sha1": cfg.sha1,
        "gamma": cfg.gamma,
        "kappa1": cfg.kappa1,
        "kappa2": cfg.kappa2,
        "far_field": cfg.far_field,
    }


# ----------------------------------------------------------------------
# subcommands


def _run_radial(cfg, outdir, quiet):
    section = cfg.radial or {}
    r_max = float(section.get("r_max", 50.0))
    bg = _background(cfg)
    cls = bg.classify(r_max=r_max)
    m1sq, m2sq, _ = bg.mach_numbers_at_body()
    report = _base_report(cfg)
    report.update(
        {
            "regime": cls.regime.value,
            "r_max": r_max,
            "max_msq": cls.max_msq,
            "ode_vs_algebra_mismatch": cls.max_rel_mismatch,
            "body_state": {
                "rho0": bg.rho0,
                "M1sq": m1sq,
                "M2sq": m2sq,
                "source_strength": bg.source_strength,
            },
        }
    )
    _write_json(outdir / "report.json", report)
    _say(quiet, f"regime: {cls.regime.value}  (max M^2 = {cls.max_msq:.6g})")


def _run_solve(cfg, outdir, quiet):
    bg = _background(cfg)
    mesh = _mesh(cfg)
    rem = ct.solve_with_truncation_removal(
        bg,
        mesh,
        schedule=cfg.eps_schedule,
        far_field=cfg.far_field,
        newton_tol=cfg.tolerances.newton_tol,
    )
    sol = rem.solution
    fields = recover_fields(sol)
    irrot, mass = weak_residuals(sol)
    decay = decay_report(sol)
    quality = mesh_quality_report(mesh)

    write_vtk(
        outdir / "solution.vtk",
        mesh,
        point_data={"correction": sol.u_full},
        cell_data={
            "density": fields.density,
            "speed": fields.speed,
            "mach": fields.mach,
            "mass_flux_sq": sol.mass_flux_sq,
            "velocity": fields.velocity,
        },
        title="spiral flow past a porous body",
    )
    _write_csv(
        outdir / "rings.csv",
        ("ring_radius", "max_correction_gradient"),
        zip(decay.ring_radii, decay.ring_maxima),
    )
    report = _base_report(cfg)
    report.update(
        {
            "mesh": {
                "h": cfg.mesh.h,
                "R_out": cfg.mesh.R_out,
                "points": mesh.n_points,
                "triangles": mesh.n_triangles,
                "min_angle_deg": quality.min_angle_deg,
            },
            "removed": rem.removed,
            "eps_final": rem.eps_final,
            "rungs": [
                {
                    "eps": r.eps,
                    "s_max": r.s_max,
                    "q_max": r.q_max,
                    "energy": r.energy,
                    "newton_iterations": r.newton_iterations,
                    "certified": r.certified,
                }
                for r in rem.rungs
            ],
            "energy": rem.energy,
            "q_max": rem.q_max,
            "s_max": rem.s_max,
            "irrot_residual": irrot,
            "mass_residual": mass,
            "body_flux": boundary_flux(sol),
            "body_flux_expected": float(2.0 * np.pi * bg.source_strength),
            "decay": {
                "exact_match": decay.exact_match,
                "slope": decay.slope,
            },
        }
    )
    _write_json(outdir / "report.json", report)
    _say(
        quiet,
        f"solved: removed={rem.removed} eps={rem.eps_final:g} "
        f"q_max={rem.q_max:.6g} energy={rem.energy:.6g}",
    )


def _sweep_like_csv(path, rows):
    _write_csv(
        path,
        ("kappa1", "kappa2", "eps", "q_max", "s_max", "energy", "removed", "converged"),
        rows,
    )


def _run_sweep(cfg, outdir, quiet):
    values = sweep_values(cfg)
    res = ct.parameter_sweep(
        cfg.gamma,
        cfg.kappa1,
        cfg.kappa2,
        cfg.axis,
        values,
        _mesh(cfg),
        schedule=cfg.eps_schedule,
        far_field=cfg.far_field,
        newton_tol=cfg.tolerances.newton_tol,
    )
    _sweep_like_csv(
        outdir / "sweep.csv",
        [
            (r.kappa1, r.kappa2, r.eps, r.q_max, r.s_max, r.energy, r.removed, r.converged)
            for r in res.rows
        ],
    )
    report = _base_report(cfg)
    report.update(
        {
            "axis": cfg.axis,
            "n_points": len(res.rows),
            "n_converged": sum(r.converged for r in res.rows),
            "n_removed": sum(r.removed for r in res.rows if r.converged),
            "modulus_of_continuity": res.modulus_of_continuity(),
        }
    )
    _write_json(outdir / "report.json", report)
    _say(quiet, f"swept {len(res.rows)} points along {cfg.axis}")


def _run_critical(cfg, outdir, quiet):
    search = cfg.section("search")
    lo = float(search.get("lo", 0.05))
    hi = float(search.get("hi", 0.9))
    n_grid = int(search.get("n_grid", 9))
    res = ct.find_critical_parameter(
        cfg.gamma,
        cfg.kappa1,
        cfg.kappa2,
        cfg.axis,
        lo,
        hi,
        _mesh(cfg),
        n_grid=n_grid,
        tol=cfg.tolerances.critical_tol,
        schedule=cfg.eps_schedule,
        far_field=cfg.far_field,
        newton_tol=cfg.tolerances.newton_tol,
    )
    report = _base_report(cfg)
    report.update(
        {
            "axis": cfg.axis,
            "bracket_lo": res.lo,
            "bracket_hi": res.hi,
            "bracket_width": res.width,
            "midpoint": res.midpoint,
            "n_evaluations": len(res.evaluations),
            "evaluations": [
                {"value": v, "removed": bool(f)} for v, f in res.evaluations
            ],
        }
    )
    _write_json(outdir / "report.json", report)
    _say(quiet, f"critical bracket: [{res.lo:.6g}, {res.hi:.6g}]")


def _run_limit(cfg, outdir, quiet):
    ladder = cfg.section("ladder")
    lo = float(ladder.get("lo", 0.1))
    hi = float(ladder.get("hi", 0.8))
    n_seq = int(ladder.get("n_seq", 6))
    annulus = tuple(ladder.get("annulus", (1.5, 4.0)))
    study = ct.sonic_limit_study(
        cfg.gamma,
        cfg.kappa1,
        cfg.kappa2,
        cfg.axis,
        lo,
        hi,
        n_seq,
        _mesh(cfg),
        annulus=annulus,
        schedule=cfg.eps_schedule,
        far_field=cfg.far_field,
        newton_tol=cfg.tolerances.newton_tol,
    )
    _sweep_like_csv(
        outdir / "ladder.csv",
        [
            (r.kappa1, r.kappa2, r.eps, r.q_max, r.s_max, r.energy, r.removed, True)
            for r in study.rungs
        ],
    )
    report = _base_report(cfg)
    report.update(
        {
            "axis": cfg.axis,
            "annulus": list(study.annulus),
            "n_seq": n_seq,
            "rungs": [
                {
                    "kappa1": r.kappa1,
                    "kappa2": r.kappa2,
                    "eps": r.eps,
                    "removed": r.removed,
                    "q_max": r.q_max,
                    "s_max": r.s_max,
                    "energy": r.energy,
                    "irrot_residual": r.irrot_residual,
                    "mass_residual": r.mass_residual,
                    "velocity_shift": r.velocity_shift,
                }
                for r in study.rungs
            ],
        }
    )
    _write_json(outdir / "report.json", report)
    _say(quiet, f"ladder of {n_seq} rungs; final q_max = {study.rungs[-1].q_max:.6g}")


_RUNNERS = {
    "radial": _run_radial,
    "solve": _run_solve,
    "sweep": _run_sweep,
    "critical": _run_critical,
    "limit": _run_limit,
}


# ----------------------------------------------------------------------
# entry point


def _apply_threads(args):
    raw = args.threads
    if raw is None:
        raw = os.environ.get("SPIRALFLOW_THREADS")
    if raw is None:
        return
    try:
        n = int(raw)
    except (TypeError, ValueError):
        raise ConfigError("threads", f"expected a positive integer, got {raw!r}")
    if n < 1:
        raise ConfigError("threads", "thread count must be positive")
    # best-effort cap for the BLAS pools scipy/numpy use
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spiralflow",
        description="Subsonic spiral flow outside a porous body.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("radial", "classify the radial background flow"),
        ("solve", "one stream-function solve with truncation removal"),
        ("sweep", "march a swirl parameter across a grid"),
        ("critical", "bisect for the removability boundary"),
        ("limit", "ladder study approaching choking"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--output", default=None, help="artifact directory")
        p.add_argument("--threads", default=None, help="BLAS thread cap")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _apply_threads(args)
        try:
            raw = Path(args.config).read_bytes()
        except OSError as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return 4
        cfg = parse_config(raw)
        outdir = Path(args.output or cfg.output_dir or ".")
        try:
            outdir.mkdir(parents=True, exist_ok=True)
            _RUNNERS[args.command](cfg, outdir, args.quiet)
        except OSError as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return 4
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
