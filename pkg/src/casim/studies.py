"""Scripted parameter studies on plate, wire and groove geometries.

Every study returns plain rows plus a provenance block and can be written
out as ``<name>.csv`` (data), ``<name>.fit.csv`` (fit parameters and
summary values, ``parameter,value``) and ``<name>.meta`` (JSON provenance).
Lengths passed to the study functions are in metres.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import AnalyticParams, corrected_pressure, ideal_pressure, normalization_factor, per_area
from .constants import UM
from .fitting import FitError, FitResult, fit_exp_decay, fit_power_law
from .kernel import ForceReport, compute_forces
from .raster import Grid, object_cells, rasterize
from .scene import Scene, SceneError, SceneObject, ShapeSpec, plate_pair_objects, serialize_scene, table1_scene

STUDIES = ("plates", "convergence", "thickness", "wire", "groove")

DESK_GRID = (60, 60, 60)
PAPER_GRID = (100, 100, 100)


class StudyError(RuntimeError):
    pass


@dataclass
class SweepResult:
    name: str
    columns: list[str]
    rows: list[tuple]
    provenance: dict = field(default_factory=dict)
    fit: FitResult | None = None
    summary: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    def column(self, name):
        k = self.columns.index(name)
        return np.array([row[k] for row in self.rows])


def default_base(grid=DESK_GRID) -> Scene:
    return table1_scene(1.0, grid)


def _um(x_m):
    # lengths arrive in metres; scenes hold micrometres
    return round(x_m / UM, 9)


def _material(base: Scene):
    return base.objects[0].material if base.objects else next(iter(base.materials))


def _grid_for(base: Scene, objects) -> Grid:
    scene = base.with_objects(objects)
    try:
        return rasterize(scene)
    except SceneError as exc:
        raise StudyError(f"infeasible geometry: {exc}") from exc


def provenance(base: Scene, parameters: dict) -> dict:
    text = serialize_scene(base)
    o = base.options
    return {
        "scene_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
        "domain_um": list(base.domain_size_um),
        "grid": list(base.grid_points),
        "options": {"include_self_interaction": o.include_self_interaction, "normalize": o.normalize,
                    "temperature_k": o.temperature_k, "plasma_frequency": o.plasma_frequency},
        "parameters": parameters,
        "code_version": __version__,
    }


def _check_increasing(values, what):
    if len(values) == 0:
        raise StudyError(f"no {what} given")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise StudyError(f"{what} must be strictly increasing")


def plate_height(grid: Grid, object_id: str) -> float:
    """Rasterized plate height (m): number of occupied rows times dy."""
    return len({c.iy for c in object_cells(grid, object_id)}) * grid.dy


# -- plate-plate -------------------------------------------------------------

def plate_forces(base: Scene, separation, thickness=1e-6, height=9e-6):
    objs = plate_pair_objects(_um(separation), _um(thickness), _um(height), base.domain_size_um[:2],
                              _material(base))
    grid = _grid_for(base, objs)
    return grid, compute_forces(grid)


def plate_sweep(separations, base: Scene | None = None, thickness=1e-6, height=9e-6,
                temperature=300.0, plasma_frequency=None) -> SweepResult:
    """Force on a symmetric plate pair versus gap, next to the closed-form pressure."""
    base = base or default_base()
    separations = [float(s) for s in separations]
    _check_increasing(separations, "separations")
    t0 = time.perf_counter()
    rows = []
    for sep in separations:
        grid, rep = plate_forces(base, sep, thickness, height)
        f_left, f_right = rep["plate_left"][0], rep["plate_right"][0]
        h = plate_height(grid, "plate_left")
        numeric = per_area(f_left, h)
        ideal = ideal_pressure(sep)
        corrected = corrected_pressure(AnalyticParams(sep, temperature, plasma_frequency))
        rows.append((sep, f_left, f_right, h, numeric, ideal, corrected, ideal / numeric))
    columns = ["separation_m", "fx_left_N_per_m", "fx_right_N_per_m", "plate_height_m",
               "numeric_Pa", "ideal_Pa", "corrected_Pa", "ideal_over_numeric"]
    params = {"separations_m": separations, "thickness_m": thickness, "height_m": height,
              "temperature_k": temperature, "plasma_frequency": plasma_frequency}
    result = SweepResult("plates", columns, rows, provenance(base, params))
    if len(rows) >= 3:
        result.fit = fit_power_law(result.column("separation_m"), np.abs(result.column("fx_left_N_per_m")))
    ratios = result.column("ideal_over_numeric")
    result.summary = {"ratio_min": float(ratios.min()), "ratio_max": float(ratios.max())}
    result.timing = {"runtime_s": time.perf_counter() - t0}
    return result


def calibrate_normalization(base: Scene | None = None, separation=2e-6, temperature=0.0,
                            plasma_frequency=None, thickness=1e-6, height=None):
    """Normalization factor from a plate pair at ``separation`` on the base scene's grid.

    Returns ``(kappa, numeric_pressure, exact_pressure)``.
    """
    base = base or default_base()
    if height is None:
        height = 0.9 * base.domain_size_um[1] * UM
    grid, rep = plate_forces(base, separation, thickness, height)
    numeric = per_area(rep["plate_left"][0], plate_height(grid, "plate_left"))
    params = AnalyticParams(separation, temperature, plasma_frequency)
    kappa = normalization_factor(numeric, params)
    return kappa, numeric, corrected_pressure(params)


# -- grid convergence --------------------------------------------------------

def grid_convergence(resolutions, base: Scene | None = None, separation=2e-6) -> SweepResult:
    """Plate-pair force at fixed geometry for increasing grid resolution."""
    base = base or default_base()
    resolutions = [tuple(int(n) for n in r) for r in resolutions]
    _check_increasing([r[0] for r in resolutions], "resolutions")
    t0 = time.perf_counter()
    rows = []
    prev = None
    for res in resolutions:
        try:
            _, rep = plate_forces(base.with_grid(res), separation)
        except SceneError as exc:
            raise StudyError(f"grid {res} too coarse: {exc}") from exc
        f = rep["plate_left"][0]
        change = math.nan if prev is None else abs(f - prev) / abs(f)
        rows.append((res[0], res[1], res[2], f, rep["plate_right"][0], change))
        prev = f
    columns = ["nx", "ny", "nz", "fx_left_N_per_m", "fx_right_N_per_m", "rel_change"]
    params = {"resolutions": [list(r) for r in resolutions], "separation_m": separation}
    result = SweepResult("convergence", columns, rows, provenance(base, params))
    changes = [(r[0], r[5]) for r in rows[1:] if r[5] > 0]
    if len(changes) >= 3:
        result.fit = fit_power_law([c[0] for c in changes], [c[1] for c in changes])
    if len(rows) >= 2:
        result.summary = {"finest_rel_change": rows[-1][5]}
    result.timing = {"runtime_s": time.perf_counter() - t0}
    return result


# -- plate thickness ---------------------------------------------------------

def thickness_study(thicknesses, base: Scene | None = None, separation=2e-6, height=9e-6):
    """Plate-pair force versus plate thickness with a saturating exponential fit.

    Returns ``(SweepResult, FitResult)``; the fit runs in micrometres and
    ``f_inf`` is the extrapolated force per length for infinitely thick
    plates.
    """
    base = base or default_base()
    thicknesses = [float(t) for t in thicknesses]
    _check_increasing(thicknesses, "thicknesses")
    t0 = time.perf_counter()
    rows = []
    for t in thicknesses:
        _, rep = plate_forces(base, separation, t, height)
        rows.append((t, rep["plate_left"][0], rep["plate_right"][0]))
    columns = ["thickness_m", "fx_left_N_per_m", "fx_right_N_per_m"]
    params = {"thicknesses_m": thicknesses, "separation_m": separation, "height_m": height}
    result = SweepResult("thickness", columns, rows, provenance(base, params))
    t_um = result.column("thickness_m") / UM
    f = np.abs(result.column("fx_left_N_per_m"))
    fit = fit_exp_decay(t_um, f)
    f_1um = f[np.argmin(np.abs(t_um - 1.0))] if np.any(np.isclose(t_um, 1.0)) else float(fit(1.0))
    result.fit = fit
    result.summary = {"f_inf_N_per_m": fit.params["f_inf"], "tau_m": fit.params["tau"] * UM,
                      "f_1um_N_per_m": float(f_1um), "f_inf_over_f_1um": fit.params["f_inf"] / float(f_1um)}
    result.timing = {"runtime_s": time.perf_counter() - t0}
    return result, fit


# -- wire next to a plate ----------------------------------------------------

def wire_plate(offset, base: Scene | None = None, wire_size=0.5e-6, gap=1e-6,
               plate_x=(3e-6, 4e-6), plate_y=(0.5e-6, 9.5e-6)) -> ForceReport:
    """Square wire beside the right face of a vertical plate.

    ``offset`` is the distance of the wire centre below the plate centre,
    so a positive lateral force ``fy`` on the wire points toward the
    plate centre when ``offset > 0``.
    """
    base = base or default_base()
    mat = _material(base)
    cy = 0.5 * (plate_y[0] + plate_y[1]) - offset
    x0 = plate_x[1] + gap
    objs = (
        SceneObject("plate", ShapeSpec.rect((_um(plate_x[0]), _um(plate_x[1])),
                                            (_um(plate_y[0]), _um(plate_y[1]))), mat),
        SceneObject("wire", ShapeSpec.rect((_um(x0), _um(x0 + wire_size)),
                                           (_um(cy - wire_size / 2), _um(cy + wire_size / 2))), mat),
    )
    rep = compute_forces(_grid_for(base, objs))
    rep.metadata.update({"offset_m": offset, "wire_size_m": wire_size, "gap_m": gap,
                         "fy_convention": "positive fy on the wire points toward the plate centre for offset > 0"})
    return rep


def wire_scan(offsets, base: Scene | None = None, **geometry) -> SweepResult:
    base = base or default_base()
    offsets = [float(o) for o in offsets]
    _check_increasing(offsets, "offsets")
    t0 = time.perf_counter()
    rows = []
    for off in offsets:
        rep = wire_plate(off, base, **geometry)
        (wx, wy), (px, py) = rep["wire"], rep["plate"]
        rows.append((off, wx, wy, px, py))
    columns = ["offset_m", "wire_fx_N_per_m", "wire_fy_N_per_m", "plate_fx_N_per_m", "plate_fy_N_per_m"]
    result = SweepResult("wire", columns, rows, provenance(base, {"offsets_m": offsets, **geometry}))
    scale = max(abs(r[1]) for r in rows)
    result.summary = {
        "max_third_law_residual": max(max(abs(r[1] + r[3]), abs(r[2] + r[4])) for r in rows) / scale,
        "fy_toward_centre_all": all((r[2] > 0) == (r[0] > 0) for r in rows if r[0] != 0),
    }
    result.timing = {"runtime_s": time.perf_counter() - t0}
    return result


# -- groove ------------------------------------------------------------------

@dataclass(frozen=True)
class GrooveParams:
    """Tongue-and-groove pair, lengths in metres.

    The left body is a base bar with two arms (a groove opening to the
    right); the right body is a base bar with one tongue reaching into the
    groove. The pair is mirror symmetric about the horizontal midline.
    ``gap`` is the side clearance between tongue and arms, ``tip_gap`` the
    clearance at both tooth tips.
    """

    tooth_width: float = 1e-6
    depth: float = 2e-6
    gap: float = 1e-6
    tip_gap: float = 1e-6
    base_thickness: float = 1e-6


def groove_objects(p: GrooveParams, domain_um, material, cell_um=None):
    """Scene objects and body grouping of a groove centred in the domain.

    With ``cell_um`` given, the left edge is snapped down to a cell edge so
    abutting parts of one body do not both claim a row of cell centres.
    """
    w, d, g, tg, bt = (_um(v) for v in (p.tooth_width, p.depth, p.gap, p.tip_gap, p.base_thickness))
    cx, cy = domain_um[0] / 2, domain_um[1] / 2
    x0 = cx - (2 * bt + d + tg) / 2
    if cell_um:
        x0 = math.floor(x0 / cell_um + 1e-9) * cell_um
    half_h = 1.5 * w + g
    arm_in = w / 2 + g
    objs = (
        SceneObject("left_base", ShapeSpec.rect((x0, x0 + bt), (cy - half_h, cy + half_h)), material),
        SceneObject("left_arm_top", ShapeSpec.rect((x0 + bt, x0 + bt + d), (cy + arm_in, cy + half_h)), material),
        SceneObject("left_arm_bottom", ShapeSpec.rect((x0 + bt, x0 + bt + d), (cy - half_h, cy - arm_in)), material),
        SceneObject("right_tongue", ShapeSpec.rect((x0 + bt + tg, x0 + bt + tg + d), (cy - w / 2, cy + w / 2)),
                    material),
        SceneObject("right_base", ShapeSpec.rect((x0 + bt + tg + d, x0 + 2 * bt + tg + d),
                                                 (cy - half_h, cy + half_h)), material),
    )
    bodies = {"left": ("left_base", "left_arm_top", "left_arm_bottom"), "right": ("right_tongue", "right_base")}
    return objs, bodies


def groove(params: GrooveParams | None = None, base: Scene | None = None) -> ForceReport:
    """Forces on the two bodies of a tongue-and-groove pair; ``fx < 0`` on the left body means repulsion."""
    params = params or GrooveParams()
    base = base or default_base()
    cell_um = base.domain_size_um[0] / base.grid_points[0]
    objs, bodies = groove_objects(params, base.domain_size_um, _material(base), cell_um)
    rep = compute_forces(_grid_for(base, objs), bodies=bodies)
    rep.metadata.update({"groove": {k: getattr(params, k) for k in params.__dataclass_fields__},
                         "repulsive": rep["left"][0] < 0})
    return rep


def groove_scan(depths=(1e-6, 2e-6, 3e-6), gaps=(0.5e-6, 1e-6), tip_gaps=(0.5e-6, 1e-6, 2e-6),
                base: Scene | None = None, template: GrooveParams | None = None) -> SweepResult:
    """Scan groove geometry; ``summary['repulsive_found']`` records whether any case repels."""
    base = base or default_base()
    template = template or GrooveParams()
    t0 = time.perf_counter()
    rows = []
    for d in depths:
        for g in gaps:
            for tg in tip_gaps:
                p = replace(template, depth=d, gap=g, tip_gap=tg)
                try:
                    rep = groove(p, base)
                except StudyError:
                    continue
                (lx, ly), (rx, ry) = rep["left"], rep["right"]
                rows.append((d, g, tg, lx, ly, rx, ry, int(lx < 0)))
    if not rows:
        raise StudyError("no feasible groove geometry in the scan")
    columns = ["depth_m", "gap_m", "tip_gap_m", "left_fx_N_per_m", "left_fy_N_per_m",
               "right_fx_N_per_m", "right_fy_N_per_m", "repulsive"]
    params = {"depths_m": list(depths), "gaps_m": list(gaps), "tip_gaps_m": list(tip_gaps),
              "tooth_width_m": template.tooth_width, "base_thickness_m": template.base_thickness}
    result = SweepResult("groove", columns, rows, provenance(base, params))
    result.summary = {
        "cases": len(rows),
        "repulsive_found": any(r[7] for r in rows),
        "repulsive_cases": sum(r[7] for r in rows),
        "max_abs_fy_over_fx": max(max(abs(r[4]), abs(r[6])) / abs(r[3]) for r in rows),
    }
    result.timing = {"runtime_s": time.perf_counter() - t0}
    return result


# -- output ------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_study(result: SweepResult, out_dir) -> list[Path]:
    """Write ``<name>.csv``, ``<name>.fit.csv`` and ``<name>.meta``; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data = out_dir / f"{result.name}.csv"
    with open(data, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(result.columns)
        for row in result.rows:
            writer.writerow([_fmt(v) for v in row])
    fitp = out_dir / f"{result.name}.fit.csv"
    with open(fitp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["parameter", "value"])
        if result.fit is not None:
            writer.writerow(["model", result.fit.model])
            for k, v in result.fit.params.items():
                writer.writerow([k, _fmt(v)])
            writer.writerow(["residual", _fmt(result.fit.residual)])
            writer.writerow(["rms_rel", _fmt(result.fit.rms_rel)])
        for k, v in result.summary.items():
            writer.writerow([k, _fmt(v)])
    meta = out_dir / f"{result.name}.meta"
    payload = {"study": result.name, "provenance": result.provenance, "timing": result.timing}
    meta.write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n", encoding="utf-8")
    return [data, fitp, meta]


DEFAULTS = {
    "plates": {"separations": [s * UM for s in (1, 2, 3, 4, 5, 6)]},
    "convergence": {"grids": [20, 40, 60, 100]},
    "thickness": {"thicknesses": [t * UM for t in (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)]},
    "wire": {"offsets": [o * UM for o in (-3, -2, -1, 0, 1, 2, 3)]},
    "groove": {},
}


def run_study(name, base: Scene | None = None, **overrides) -> SweepResult:
    """Run a named study with its defaults updated by ``overrides``."""
    if name not in STUDIES:
        raise KeyError(f"unknown study {name!r}; valid: {', '.join(STUDIES)}")
    base = base or default_base()
    opts = {**DEFAULTS[name], **{k: v for k, v in overrides.items() if v is not None}}
    if name == "plates":
        return plate_sweep(opts["separations"], base, temperature=opts.get("temperature", 300.0),
                           plasma_frequency=opts.get("plasma_frequency"))
    if name == "convergence":
        return grid_convergence([(n, n, n) for n in opts["grids"]], base)
    if name == "thickness":
        return thickness_study(opts["thicknesses"], base)[0]
    if name == "wire":
        return wire_scan(opts["offsets"], base)
    return groove_scan(base=base)
