"""Pairwise Casimir-Polder summation: energies, potentials and forces.

Each object is extruded through the full Z extent of the domain; only the
central Z-layer is evaluated. For a cell (or probe position) ``i`` of
object A the interaction energy is

    U_i = -(23 hbar c / 4 pi) * alpha_A N_A * sum_j alpha_B(j) N_B(j) * K(i - j)

where ``j`` runs over the cells of every other object and ``K`` collapses
the Z-column of source cells at offsets ``k dz``, ``k = -nz..nz``, into a
single table entry. ``U_i`` is the energy of all ``N_A`` atoms in the
cell. Forces per unit length come from central differences of ``U`` at
probe positions displaced by one cell, divided by ``dz``.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _sums
from .constants import HBAR_C
from .raster import EMPTY, Grid, object_cells
from .scene import Material

CP_COEFF = 23.0 * HBAR_C / (4.0 * math.pi)

BRUTE_FORCE_LIMIT = 10**8


def pair_energy(r, alpha_a, alpha_b):
    """Retarded electric-electric interaction energy (J) of two atoms at distance ``r`` (m)."""
    if not r > 0:
        raise ValueError(f"separation must be positive, got {r!r}")
    return -23.0 * HBAR_C * alpha_a * alpha_b / (4.0 * math.pi * r**7)


def pair_energy_full(r, ae_a, am_a, ae_b, am_b):
    """Interaction energy including magnetic polarizabilities; positive means repulsive."""
    if not r > 0:
        raise ValueError(f"separation must be positive, got {r!r}")
    bracket = 23.0 * (ae_a * ae_b + am_a * am_b) - 7.0 * (ae_a * am_b + ae_b * am_a)
    return -HBAR_C / (4.0 * math.pi * r**7) * bracket


@lru_cache(maxsize=16)
def _kernel_table(nx, ny, nz, dx, dy, dz):
    q = _sums.kernel_quadrant(nx, ny, nz, dx, dy, dz)
    # mirror the quadrant so K(di, dj) = K(|di|, |dj|) holds bit for bit
    top = np.concatenate([q[:0:-1], q], axis=0)
    table = np.ascontiguousarray(np.concatenate([top[:, :0:-1], top], axis=1))
    table.setflags(write=False)
    return table


def z_column_kernel(grid: Grid) -> np.ndarray:
    """Z-collapsed kernel table in m^-7.

    Entry ``[di + nx, dj + ny]`` holds ``K(di, dj)`` for ``|di| <= nx`` and
    ``|dj| <= ny`` (one cell wider than the grid on each side, so probes
    displaced past the domain edge stay in range).
    """
    return _kernel_table(grid.nx, grid.ny, grid.nz, float(grid.dx), float(grid.dy), float(grid.dz))


def _source_set(grid: Grid, exclude_labels=(), include_self: bool = False):
    mask = grid.labels != EMPTY
    if not include_self:
        for lab in exclude_labels:
            mask &= grid.labels != lab
    idx = np.argwhere(mask)
    sx = np.ascontiguousarray(idx[:, 0], dtype=np.int64)
    sy = np.ascontiguousarray(idx[:, 1], dtype=np.int64)
    sw = grid.weights()[grid.labels[sx, sy]]
    position = np.full((grid.nx, grid.ny), -1, dtype=np.int64)
    position[sx, sy] = np.arange(len(sx))
    return sx, sy, sw, position


def _sums_at(grid, px, py, skip, sources):
    sx, sy, sw, _ = sources
    px = np.ascontiguousarray(px, dtype=np.int64)
    py = np.ascontiguousarray(py, dtype=np.int64)
    skip = np.ascontiguousarray(skip, dtype=np.int64)
    if len(sx) == 0:
        return np.zeros(len(px))
    return _sums.probe_sums(px, py, skip, sx, sy, sw, z_column_kernel(grid), grid.nx, grid.ny)


def _probe_material(grid, exclude, material):
    if material is not None:
        return material
    if exclude is None:
        raise ValueError("probe material required when no owning object is given")
    return grid.material_of(exclude)


def cell_energy(grid: Grid, cell, exclude: str | None = None, include_self: bool = False,
                material: Material | None = None) -> float:
    """Interaction energy (J) of the atoms of one cell at position ``cell``.

    ``cell`` may lie one step outside the grid (displaced evaluation).
    ``exclude`` defaults to the object owning ``cell``; its cells are not
    sources unless ``include_self`` is set, in which case only the source
    cell sitting at ``cell`` itself is skipped.
    """
    ix, iy = int(cell[0]), int(cell[1])
    inside = 0 <= ix < grid.nx and 0 <= iy < grid.ny
    owner = int(grid.labels[ix, iy]) if inside else EMPTY
    if exclude is None and owner != EMPTY:
        exclude = grid.object_ids[owner - 1]
    mat = _probe_material(grid, exclude, material)
    labels = (grid.label_of(exclude),) if exclude is not None else ()
    sources = _source_set(grid, labels, include_self)
    skip = sources[3][ix, iy] if (include_self and inside) else -1
    s = _sums_at(grid, [ix], [iy], [skip], sources)[0]
    return -CP_COEFF * mat.alpha_e * grid.atoms_per_cell(mat) * s


def brute_force_energy(grid: Grid, cell, exclude: str | None = None, include_self: bool = False,
                       material: Material | None = None) -> float:
    """Reference energy by explicit summation over every source cell and Z-layer.

    Uses physical positions and :func:`pair_energy` for every atom pair and
    an exactly rounded sum; no kernel table. Same arguments as
    :func:`cell_energy`.
    """
    nterms = grid.nx * grid.ny * (2 * grid.nz + 1)
    if nterms > BRUTE_FORCE_LIMIT:
        raise ValueError(f"grid too large for brute-force summation ({nterms} terms)")
    ix, iy = int(cell[0]), int(cell[1])
    inside = 0 <= ix < grid.nx and 0 <= iy < grid.ny
    owner = int(grid.labels[ix, iy]) if inside else EMPTY
    if exclude is None and owner != EMPTY:
        exclude = grid.object_ids[owner - 1]
    mat = _probe_material(grid, exclude, material)
    excl = grid.label_of(exclude) if exclude is not None else EMPTY
    n_a = mat.density * grid.dx * grid.dy * grid.dz
    x0 = (ix + 0.5) * grid.dx
    y0 = (iy + 0.5) * grid.dy
    terms = []
    for jx in range(grid.nx):
        for jy in range(grid.ny):
            lab = int(grid.labels[jx, jy])
            if lab == EMPTY:
                continue
            if include_self:
                if (jx, jy) == (ix, iy):
                    continue
            elif lab == excl:
                continue
            src = grid.object_materials[lab - 1]
            n_b = src.density * grid.dx * grid.dy * grid.dz
            ddx = x0 - (jx + 0.5) * grid.dx
            ddy = y0 - (jy + 0.5) * grid.dy
            for k in range(-grid.nz, grid.nz + 1):
                r = math.sqrt(ddx * ddx + ddy * ddy + (k * grid.dz) ** 2)
                if r == 0.0:
                    continue
                terms.append(n_a * n_b * pair_energy(r, mat.alpha_e, src.alpha_e))
    return math.fsum(terms)


# -- fields ------------------------------------------------------------------

def _write_field_csv(path, values, header, transform=None):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["ix", "iy", header])
        nx, ny = values.shape
        for ix in range(nx):
            for iy in range(ny):
                v = float(values[ix, iy])
                if transform is not None:
                    v = transform(v)
                writer.writerow([ix, iy, f"{v:.17g}"])


@dataclass
class EnergyField:
    values: np.ndarray  # J, zero on empty cells
    grid: Grid

    def to_csv(self, path):
        _write_field_csv(path, self.values, "value")


@dataclass
class PotentialField:
    values: np.ndarray  # U / (alpha_e N) of a probe at each cell
    grid: Grid

    def to_csv(self, path, absolute=False, header="value"):
        _write_field_csv(path, self.values, header, abs if absolute else None)


def energy_field(grid: Grid, include_self: bool = False) -> EnergyField:
    """``U_i`` at every labeled cell; empty cells hold 0."""
    values = np.zeros((grid.nx, grid.ny))
    for k, oid in enumerate(grid.object_ids):
        label = k + 1
        cells = np.argwhere(grid.labels == label)
        if len(cells) == 0:
            continue
        sources = _source_set(grid, (label,), include_self)
        skip = sources[3][cells[:, 0], cells[:, 1]] if include_self else np.full(len(cells), -1)
        s = _sums_at(grid, cells[:, 0], cells[:, 1], skip, sources)
        mat = grid.object_materials[k]
        values[cells[:, 0], cells[:, 1]] = -CP_COEFF * mat.alpha_e * grid.atoms_per_cell(mat) * s
    return EnergyField(values, grid)


def potential_field(grid: Grid, probe_material: Material | None = None) -> PotentialField:
    """Potential ``phi = U / (alpha_e N)`` of a probe placed at every cell.

    Cells of an object see all other objects; empty cells see every object.
    The probe's own ``alpha_e`` and density cancel, so ``probe_material``
    only matters for documenting the probe and may be omitted.
    """
    values = np.zeros((grid.nx, grid.ny))
    for label in range(len(grid.object_ids) + 1):
        cells = np.argwhere(grid.labels == label)
        if len(cells) == 0:
            continue
        sources = _source_set(grid, (label,))
        s = _sums_at(grid, cells[:, 0], cells[:, 1], np.full(len(cells), -1), sources)
        values[cells[:, 0], cells[:, 1]] = -CP_COEFF * s
    return PotentialField(values, grid)


# -- forces ------------------------------------------------------------------

def _body_labels(grid: Grid, object_ids):
    labels = tuple(grid.label_of(oid) for oid in object_ids)
    for oid in object_ids:
        object_cells(grid, oid)  # surfaces objects that rasterized to nothing
    return labels


def _cell_forces(grid: Grid, object_ids, include_self: bool):
    """Per-cell (fx, fy) in N/m for a body made of ``object_ids``, uncorrected."""
    labels = _body_labels(grid, object_ids)
    cells = np.argwhere(np.isin(grid.labels, labels))
    ix, iy = cells[:, 0], cells[:, 1]
    sources = _source_set(grid, labels, include_self)
    skip = sources[3][ix, iy] if include_self else np.full(len(cells), -1)
    px = np.concatenate([ix - 1, ix + 1, ix, ix])
    py = np.concatenate([iy, iy, iy - 1, iy + 1])
    s = _sums_at(grid, px, py, np.tile(skip, 4), sources).reshape(4, len(cells))
    u = -CP_COEFF * grid.weights()[grid.labels[ix, iy]] * s
    fx = (u[0] - u[1]) / (2.0 * grid.dx * grid.dz)
    fy = (u[2] - u[3]) / (2.0 * grid.dy * grid.dz)
    return cells, fx, fy


def point_force(grid: Grid, cell, owner: str, include_self: bool = False) -> tuple[float, float]:
    """Central-difference force per unit length (N/m) on one cell of ``owner``."""
    ix, iy = int(cell[0]), int(cell[1])
    label = grid.label_of(owner)
    if not (0 <= ix < grid.nx and 0 <= iy < grid.ny) or grid.labels[ix, iy] != label:
        raise ValueError(f"cell ({ix}, {iy}) does not belong to {owner!r}")
    sources = _source_set(grid, (label,), include_self)
    sk = sources[3][ix, iy] if include_self else -1
    s = _sums_at(grid, [ix - 1, ix + 1, ix, ix], [iy, iy, iy - 1, iy + 1], [sk] * 4, sources)
    u = -CP_COEFF * grid.weights()[label] * s
    return (u[0] - u[1]) / (2.0 * grid.dx * grid.dz), (u[2] - u[3]) / (2.0 * grid.dy * grid.dz)


def reference_correction(grid: Grid, object_id, include_self: bool = True):
    """Per-cell (fx, fy) an object feels when alone in the domain.

    ``object_id`` may be a single id or a tuple of ids forming one body.
    Arrays are aligned with the body's cells in row-major order. Without
    self-interaction an isolated object feels nothing, so zeros come back.
    """
    ids = (object_id,) if isinstance(object_id, str) else tuple(object_id)
    labels = _body_labels(grid, ids)
    n = int(np.isin(grid.labels, labels).sum())
    if not include_self:
        return np.zeros(n), np.zeros(n)
    _, fx, fy = _cell_forces(grid.only(*ids), ids, True)
    return fx, fy


def _corrected_cell_forces(grid, object_ids, include_self):
    cells, fx, fy = _cell_forces(grid, object_ids, include_self)
    if include_self:
        rx, ry = reference_correction(grid, object_ids, True)
        fx = fx - rx
        fy = fy - ry
    return cells, fx, fy


def object_force(grid: Grid, object_id: str, include_self: bool = False) -> tuple[float, float]:
    """Total force per unit length (N/m) on one object."""
    _, fx, fy = _corrected_cell_forces(grid, (object_id,), include_self)
    return math.fsum(fx), math.fsum(fy)


@dataclass
class ForceReport:
    forces: dict[str, tuple[float, float]]
    cell_fx: np.ndarray
    cell_fy: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.forces[name]

    def scaled(self, factor) -> ForceReport:
        forces = {k: (fx * factor, fy * factor) for k, (fx, fy) in self.forces.items()}
        return ForceReport(forces, self.cell_fx * factor, self.cell_fy * factor, dict(self.metadata))

    def rows(self):
        return [(name, fx, fy) for name, (fx, fy) in self.forces.items()]

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["object_id", "fx_N_per_m", "fy_N_per_m"])
            for name, fx, fy in self.rows():
                writer.writerow([name, f"{fx:.17g}", f"{fy:.17g}"])


def compute_forces(grid: Grid, include_self: bool | None = None, bodies=None) -> ForceReport:
    """Per-body and per-cell forces.

    ``bodies`` maps a reported name to the object ids forming one rigid
    body; by default every object is its own body. Objects of the same body
    do not act on each other. ``include_self`` defaults to the scene option;
    with it on, each body's stand-alone reference forces are subtracted
    cell by cell.
    """
    if include_self is None:
        include_self = bool(grid.scene and grid.scene.options.include_self_interaction)
    if bodies is None:
        bodies = {oid: (oid,) for oid in grid.object_ids}
    t0 = time.perf_counter()
    cell_fx = np.zeros((grid.nx, grid.ny))
    cell_fy = np.zeros((grid.nx, grid.ny))
    forces = {}
    for name, ids in bodies.items():
        cells, fx, fy = _corrected_cell_forces(grid, tuple(ids), include_self)
        cell_fx[cells[:, 0], cells[:, 1]] = fx
        cell_fy[cells[:, 0], cells[:, 1]] = fy
        forces[name] = (math.fsum(fx), math.fsum(fy))
    meta = {
        "grid": grid.spec(),
        "include_self_interaction": include_self,
        "threads": _sums.get_threads(),
        "runtime_s": time.perf_counter() - t0,
    }
    return ForceReport(forces, cell_fx, cell_fy, meta)
