"""``casim`` command-line driver.

Exit codes: 0 success, 1 usage or input error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from . import _sums
from .analytic import sweep_rows
from .constants import UM
from .kernel import compute_forces, potential_field
from .raster import rasterize
from .scene import SceneError, load_scene, validate_scene
from .studies import DESK_GRID, PAPER_GRID, STUDIES, StudyError, calibrate_normalization, default_base, run_study, \
    write_study


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _grid(text):
    vals = _int_list(text)
    if len(vals) != 3 or min(vals) < 1:
        raise argparse.ArgumentTypeError("grid must be NX,NY,NZ with positive integers")
    return tuple(vals)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $CASIM_THREADS or all cores)")

    scene_opts = argparse.ArgumentParser(add_help=False)
    scene_opts.add_argument("--scene", required=True, help="scene file")
    scene_opts.add_argument("--out", default=None, help="output CSV (default: stdout)")
    scene_opts.add_argument("--grid", type=_grid, default=None, help="override grid points NX,NY,NZ")
    scene_opts.add_argument("--include-self", action="store_true", help="include self-interaction")

    p = _Parser(prog="casim", description="Pairwise Casimir-Polder force simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", parents=[common, scene_opts], help="per-object forces")
    run.add_argument("--normalize", action="store_true",
                     help="divide forces by the plate-plate normalization factor")

    sub.add_parser("field", parents=[common, scene_opts], help="absolute potential field")

    an = sub.add_parser("analytic", parents=[common], help="closed-form plate-plate sweep")
    an.add_argument("--r-min", type=float, required=True, help="smallest separation (m)")
    an.add_argument("--r-max", type=float, default=None, help="largest separation (m)")
    an.add_argument("--steps", type=int, default=1)
    an.add_argument("--temp", type=float, default=300.0, help="temperature (K)")
    an.add_argument("--plasma", type=float, default=None, help="plasma frequency (rad/s)")
    an.add_argument("--out", default=None)

    st = sub.add_parser("study", parents=[common], help="run a named study")
    st.add_argument("name", help=f"one of: {', '.join(STUDIES)}")
    st.add_argument("--out-dir", default=".", help="directory for the study files")
    st.add_argument("--scene", default=None, help="base scene (domain, grid, material)")
    st.add_argument("--grid", type=_grid, default=None, help="override grid points NX,NY,NZ")
    st.add_argument("--paper-grid", action="store_true", help=f"use the {PAPER_GRID[0]}^3 grid")
    st.add_argument("--grids", type=_int_list, default=None, help="convergence: grid sizes, e.g. 20,40,60")
    st.add_argument("--separations", type=_float_list, default=None, help="plates: gaps in um")
    st.add_argument("--thicknesses", type=_float_list, default=None, help="thickness: plate thicknesses in um")
    st.add_argument("--offsets", type=_float_list, default=None, help="wire: offsets below plate centre in um")

    val = sub.add_parser("validate", help="check a scene file")
    val.add_argument("--scene", required=True)
    return p


def _configure_threads(n):
    if n is None:
        env = os.environ.get("CASIM_THREADS")
        if env:
            try:
                n = int(env)
            except ValueError:
                raise UsageError(f"CASIM_THREADS must be an integer, got {env!r}") from None
    if n is not None:
        if n < 1:
            raise UsageError("--threads must be at least 1")
        _sums.set_threads(n)


def _load(args):
    scene = load_scene(args.scene)
    if args.grid is not None:
        scene = scene.with_grid(args.grid)
    if getattr(args, "include_self", False):
        scene = scene.with_options(include_self_interaction=True)
    if getattr(args, "normalize", False):
        scene = scene.with_options(normalize=True)
    problems = validate_scene(scene)
    if problems:
        raise SceneError("; ".join(map(str, problems)))
    return scene


def _open_out(path):
    if path is None:
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


def cmd_run(args):
    scene = _load(args)
    rep = compute_forces(rasterize(scene))
    if scene.options.normalize:
        o = scene.options
        kappa, _, _ = calibrate_normalization(scene, temperature=o.temperature_k,
                                              plasma_frequency=o.plasma_frequency)
        print(f"normalization factor: {kappa:.17g}", file=sys.stderr)
        rep = rep.scaled(1.0 / kappa)
    if args.out:
        rep.to_csv(args.out)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["object_id", "fx_N_per_m", "fy_N_per_m"])
        for oid, fx, fy in rep.rows():
            w.writerow([oid, f"{fx:.17g}", f"{fy:.17g}"])


def cmd_field(args):
    scene = _load(args)
    grid = rasterize(scene)
    field = potential_field(grid, grid.object_materials[0])
    if args.out:
        field.to_csv(args.out, absolute=True, header="phi")
        return
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["ix", "iy", "phi"])
    for ix in range(grid.nx):
        for iy in range(grid.ny):
            w.writerow([ix, iy, f"{abs(float(field.values[ix, iy])):.17g}"])


def cmd_analytic(args):
    r_max = args.r_max if args.r_max is not None else args.r_min
    if not args.r_min > 0 or r_max < args.r_min or args.steps < 1:
        raise UsageError("need 0 < --r-min <= --r-max and --steps >= 1")
    if args.temp < 0 or (args.plasma is not None and args.plasma <= 0):
        raise UsageError("temperature must be >= 0 and plasma frequency > 0")
    rows = sweep_rows(args.r_min, r_max, args.steps, args.temp, args.plasma)
    fh, close = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r_m", "ideal_Pa", "temp_factor", "cond_factor", "corrected_Pa"])
        for row in rows:
            w.writerow([f"{v:.17g}" for v in row])
    finally:
        if close:
            fh.close()


def cmd_study(args):
    if args.name not in STUDIES:
        raise UsageError(f"unknown study {args.name!r}; valid studies: {', '.join(STUDIES)}")
    grid = args.grid or (PAPER_GRID if args.paper_grid else DESK_GRID)
    if args.scene:
        base = load_scene(args.scene)
        if args.grid or args.paper_grid:
            base = base.with_grid(grid)
    else:
        base = default_base(grid)
    overrides = {
        "grids": args.grids,
        "separations": [s * UM for s in args.separations] if args.separations else None,
        "thicknesses": [t * UM for t in args.thicknesses] if args.thicknesses else None,
        "offsets": [o * UM for o in args.offsets] if args.offsets else None,
    }
    result = run_study(args.name, base, **overrides)
    for path in write_study(result, args.out_dir):
        print(path)


def cmd_validate(args):
    scene = load_scene(args.scene)
    problems = validate_scene(scene)
    for v in problems:
        print(v)
    if problems:
        raise UsageError(f"{len(problems)} violation(s) in {args.scene}")
    print("ok")


COMMANDS = {"run": cmd_run, "field": cmd_field, "analytic": cmd_analytic, "study": cmd_study,
            "validate": cmd_validate}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse exits on usage errors and --help
        return exc.code
    try:
        _configure_threads(getattr(args, "threads", None))
        COMMANDS[args.command](args)
    except (UsageError, SceneError, FileNotFoundError) as exc:
        print(f"casim: error: {exc}", file=sys.stderr)
        return 1
    except (StudyError, RuntimeError, ValueError, OSError) as exc:
        print(f"casim: runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
