"""Rasterization of scenes onto a homogeneous rectangular grid.

Cell membership uses the cell-centre rule: a cell belongs to an object when
its centre lies inside the object's outline (boundary inclusive). Geometry
is evaluated in cell units, where cell ``i`` has its centre at ``i + 0.5``,
so mirrored scenes give mirrored label maps.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .constants import UM
from .scene import Material, Scene, SceneError, ShapeSpec, validate_scene

EMPTY = 0

# boundary tolerance in cell units; makes ties at cell centres count as inside
_EPS = 1e-9


class OverlapError(SceneError):
    pass


class EmptyObjectError(SceneError):
    pass


class CellIndex(NamedTuple):
    ix: int
    iy: int


@dataclass(frozen=True, eq=False)
class Grid:
    """Label map of one Z-layer plus the spacings of the full 3D grid.

    ``labels[ix, iy]`` is 0 for empty cells and ``k + 1`` for the ``k``-th
    declared object. Spacings are in metres.
    """

    nx: int
    ny: int
    nz: int
    dx: float
    dy: float
    dz: float
    labels: np.ndarray
    object_ids: tuple[str, ...]
    object_materials: tuple[Material, ...]
    scene: Scene | None = None

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy * self.dz

    def atoms_per_cell(self, material: Material) -> float:
        return material.density * self.cell_volume

    def label_of(self, object_id: str) -> int:
        try:
            return self.object_ids.index(object_id) + 1
        except ValueError:
            raise KeyError(f"unknown object id {object_id!r}") from None

    def material_of(self, object_id: str) -> Material:
        return self.object_materials[self.label_of(object_id) - 1]

    def only(self, *object_ids: str) -> Grid:
        """Copy of this grid in which every other object has been removed."""
        keep = [self.label_of(oid) for oid in object_ids]
        labels = np.where(np.isin(self.labels, keep), self.labels, EMPTY).astype(self.labels.dtype)
        labels.setflags(write=False)
        return Grid(self.nx, self.ny, self.nz, self.dx, self.dy, self.dz, labels,
                    self.object_ids, self.object_materials, self.scene)

    def weights(self) -> np.ndarray:
        """Per-label ``alpha_e * N`` (index 0 is the empty label)."""
        w = [0.0] + [m.alpha_e * self.atoms_per_cell(m) for m in self.object_materials]
        return np.array(w, dtype=np.float64)

    def spec(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "nz": self.nz, "dx_m": self.dx, "dy_m": self.dy, "dz_m": self.dz}


def _cell_centres(n):
    return np.arange(n, dtype=np.float64) + 0.5


def _rect_mask(u, v, xr, yr):
    return (u >= xr[0] - _EPS) & (u <= xr[1] + _EPS) & (v >= yr[0] - _EPS) & (v <= yr[1] + _EPS)


def _ellipse_mask(u, v, centre, rx, ry):
    q = ((u - centre[0]) / rx) ** 2 + ((v - centre[1]) / ry) ** 2
    return q <= 1.0 + _EPS


def _triangle_mask(u, v, verts):
    (x1, y1), (x2, y2), (x3, y3) = verts
    orient = np.sign((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1))
    mask = np.ones(np.broadcast(u, v).shape, dtype=bool)
    for (ax, ay), (bx, by) in (((x1, y1), (x2, y2)), ((x2, y2), (x3, y3)), ((x3, y3), (x1, y1))):
        cross = (bx - ax) * (v - ay) - (by - ay) * (u - ax)
        mask &= orient * cross >= -_EPS * np.hypot(bx - ax, by - ay)
    return mask


def shape_mask(shape: ShapeSpec, nx, ny, domain_um) -> np.ndarray:
    """Boolean (nx, ny) mask of the cells whose centres fall inside ``shape``."""
    sx = nx / domain_um[0]
    sy = ny / domain_um[1]
    u = _cell_centres(nx)[:, None]
    v = _cell_centres(ny)[None, :]
    w = shape.wall
    if shape.family == "rect":
        xr = (shape.x_um[0] * sx, shape.x_um[1] * sx)
        yr = (shape.y_um[0] * sy, shape.y_um[1] * sy)
        mask = _rect_mask(u, v, xr, yr)
        if shape.is_open:
            inner_x = (xr[0] + w, xr[1] - w)
            inner_y = (yr[0] + w, yr[1] - w)
            if inner_x[0] <= inner_x[1] and inner_y[0] <= inner_y[1]:
                mask &= ~_rect_mask(u, v, inner_x, inner_y)
    elif shape.family == "triangle":
        verts = [(x * sx, y * sy) for x, y in shape.vertices_um]
        mask = _triangle_mask(u, v, verts)
    else:
        centre = (shape.center_um[0] * sx, shape.center_um[1] * sy)
        rx, ry = shape.radius_um * sx, shape.radius_um * sy
        mask = _ellipse_mask(u, v, centre, rx, ry)
        if shape.is_open and rx > w and ry > w:
            mask &= ~_ellipse_mask(u, v, centre, rx - w, ry - w)
    return np.broadcast_to(mask, (nx, ny)).copy()


def rasterize(scene: Scene) -> Grid:
    """Label every cell of the evaluated Z-layer with the object covering it.

    Raises :class:`OverlapError` when two objects claim the same cell.
    """
    problems = validate_scene(scene)
    if problems:
        raise SceneError("invalid scene: " + "; ".join(map(str, problems)))
    nx, ny, nz = scene.grid_points
    X, Y, Z = scene.domain_size_um
    labels = np.zeros((nx, ny), dtype=np.int32)
    for k, obj in enumerate(scene.objects):
        mask = shape_mask(obj.shape, nx, ny, (X, Y))
        clash = mask & (labels != EMPTY)
        if clash.any():
            ix, iy = np.argwhere(clash)[0]
            other = scene.objects[labels[ix, iy] - 1].id
            raise OverlapError(f"objects {other!r} and {obj.id!r} overlap at cell ({ix}, {iy})")
        labels[mask] = k + 1
    labels.setflags(write=False)
    return Grid(
        nx=nx, ny=ny, nz=nz,
        dx=X * UM / nx, dy=Y * UM / ny, dz=Z * UM / nz,
        labels=labels,
        object_ids=tuple(o.id for o in scene.objects),
        object_materials=tuple(scene.materials[o.material] for o in scene.objects),
        scene=scene,
    )


def cell_center(grid: Grid, c) -> tuple[float, float]:
    ix, iy = c
    if not (0 <= ix < grid.nx and 0 <= iy < grid.ny):
        raise IndexError(f"cell ({ix}, {iy}) outside a {grid.nx}x{grid.ny} grid")
    return (ix + 0.5) * grid.dx, (iy + 0.5) * grid.dy


def object_cells(grid: Grid, object_id: str) -> list[CellIndex]:
    """Cells of one object in row-major order (``ix`` slowest)."""
    label = grid.label_of(object_id)
    idx = np.argwhere(grid.labels == label)
    if len(idx) == 0:
        raise EmptyObjectError(f"object {object_id!r} covers no cell centre (thinner than one cell?)")
    return [CellIndex(int(ix), int(iy)) for ix, iy in idx]


def export_labels_csv(grid: Grid, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["ix", "iy", "object_id"])
        for ix, iy in np.argwhere(grid.labels != EMPTY):
            writer.writerow([int(ix), int(iy), grid.object_ids[grid.labels[ix, iy] - 1]])
