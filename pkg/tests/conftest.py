from __future__ import annotations

import numpy as np
import pytest

from casim.raster import Grid
from casim.scene import GOLD, Material, Scene, SceneObject, ShapeSpec, table1_scene

SILVER = Material("silver", alpha_e=1.2e-30, density=5.8e28)


def make_grid(labels, materials=(GOLD,), dx=1e-7, dy=1e-7, dz=1e-7, nz=2, ids=None):
    """Grid built directly from a label array (bypasses scene rasterization)."""
    labels = np.asarray(labels, dtype=np.int32)
    labels.setflags(write=False)
    n_obj = int(labels.max())
    ids = ids or tuple(f"obj{k}" for k in range(n_obj))
    mats = tuple(materials[k % len(materials)] for k in range(n_obj))
    return Grid(labels.shape[0], labels.shape[1], nz, dx, dy, dz, labels, tuple(ids), mats)


def random_scene(rng, max_n=20) -> Scene:
    """2-3 objects of random kinds and materials in disjoint vertical bands."""
    nx, ny = (int(v) for v in rng.integers(4, max_n + 1, size=2))
    nz = int(rng.integers(1, max_n + 1))
    X, Y, Z = (float(v) for v in rng.uniform(1.0, 5.0, size=3))
    mats = {
        "m0": Material("m0", alpha_e=float(rng.uniform(0.5, 3.0)) * 1e-30, density=float(rng.uniform(1, 9)) * 1e28),
        "m1": Material("m1", alpha_e=float(rng.uniform(0.5, 3.0)) * 1e-30, density=float(rng.uniform(1, 9)) * 1e28),
    }
    n_obj = int(rng.integers(2, 4))
    band = X / n_obj
    kinds = ["rect_filled", "rect_open", "triangle_filled", "circle_filled", "circle_open"]
    objects = []
    for k in range(n_obj):
        x0, x1 = k * band, (k + 1) * band
        kind = kinds[int(rng.integers(len(kinds)))]
        # keep a tiny margin so neighbouring bands never share a cell-centre column
        lo, hi = x0 + 0.02 * band, x1 - 0.02 * band
        if kind.startswith("rect"):
            a, b = sorted(rng.uniform(lo, hi, size=2))
            c, d = sorted(rng.uniform(0, Y, size=2))
            shape = ShapeSpec.rect((a, min(b + 0.3 * band, hi)), (c, min(d + 0.1, Y)), open=kind == "rect_open")
        elif kind == "triangle_filled":
            xs = rng.uniform(lo, hi, size=3)
            ys = rng.uniform(0, Y, size=3)
            shape = ShapeSpec.triangle(list(zip(xs, ys)))
        else:
            r = float(rng.uniform(0.2, 0.5)) * (hi - lo) / 2 * 1.9
            r = min(r, (hi - lo) / 2, Y / 2)
            cx = (lo + hi) / 2
            cy = float(rng.uniform(r, Y - r))
            shape = ShapeSpec.circle((cx, cy), r, open=kind == "circle_open")
        objects.append(SceneObject(f"o{k}", shape, f"m{int(rng.integers(2))}"))
    return Scene((X, Y, Z), (nx, ny, nz), mats, tuple(objects))


@pytest.fixture
def plate_grid_coarse():
    from casim.raster import rasterize
    return rasterize(table1_scene(2.0, (20, 20, 20)))


@pytest.fixture
def table1():
    return table1_scene(1.0)


# -- acceptance report ---------------------------------------------------------

_CRITERIA = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[props["criterion"]] = (report.outcome, props.get("measured", ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda k: int(k.split(".")[0])):
        outcome, measured = _CRITERIA[name]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  {measured}")
