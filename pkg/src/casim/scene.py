"""Scene description: domain, grid resolution, materials and shaped objects.

Scene files are UTF-8 text made of bracketed sections holding ``key = value``
lines::

    [domain]
    size_um   = 10 10 10
    grid      = 100 100 100

    [material gold]
    alpha_e = 1.88e-30
    density = 5.9e28

    [object plate_left]
    shape    = rect_filled
    material = gold
    x_um     = 3.0 4.0
    y_um     = 0.5 9.5

Lengths in files and in :class:`Scene` are micrometres; conversion to SI
happens when the scene is rasterized.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

SHAPE_KINDS = ("rect_filled", "rect_open", "triangle_filled", "circle_filled", "circle_open")

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")


class SceneError(ValueError):
    """Raised for malformed or inconsistent scene files."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column or 1}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Material:
    name: str
    alpha_e: float  # m^3 / atom
    density: float  # atoms / m^3
    alpha_m: float = 0.0


@dataclass(frozen=True)
class ShapeSpec:
    """Geometry of one extruded object; coordinates in micrometres.

    Only the fields relevant to ``kind`` are set: ``x_um``/``y_um`` for
    rectangles, ``vertices_um`` for triangles, ``center_um``/``radius_um``
    for circles. ``wall`` is the wall thickness in cells of open shapes.
    """

    kind: str
    x_um: tuple[float, float] | None = None
    y_um: tuple[float, float] | None = None
    vertices_um: tuple[tuple[float, float], ...] | None = None
    center_um: tuple[float, float] | None = None
    radius_um: float | None = None
    wall: int = 1

    @classmethod
    def rect(cls, x_um, y_um, *, open=False, wall=1):
        kind = "rect_open" if open else "rect_filled"
        return cls(kind, x_um=tuple(map(float, x_um)), y_um=tuple(map(float, y_um)), wall=wall)

    @classmethod
    def triangle(cls, vertices_um):
        return cls("triangle_filled", vertices_um=tuple((float(x), float(y)) for x, y in vertices_um))

    @classmethod
    def circle(cls, center_um, radius_um, *, open=False, wall=1):
        kind = "circle_open" if open else "circle_filled"
        return cls(kind, center_um=tuple(map(float, center_um)), radius_um=float(radius_um), wall=wall)

    @property
    def is_open(self) -> bool:
        return self.kind.endswith("_open")

    @property
    def family(self) -> str:
        return self.kind.split("_")[0]

    def bounds(self):
        """Axis-aligned bounding box ``(xmin, xmax, ymin, ymax)`` in micrometres."""
        if self.family == "rect":
            return (*self.x_um, *self.y_um)
        if self.family == "triangle":
            xs = [v[0] for v in self.vertices_um]
            ys = [v[1] for v in self.vertices_um]
            return min(xs), max(xs), min(ys), max(ys)
        (cx, cy), r = self.center_um, self.radius_um
        return cx - r, cx + r, cy - r, cy + r

    def area_um2(self) -> float:
        """Area of the filled outline in square micrometres."""
        if self.family == "rect":
            return (self.x_um[1] - self.x_um[0]) * (self.y_um[1] - self.y_um[0])
        if self.family == "triangle":
            return abs(triangle_signed_area(self.vertices_um))
        return math.pi * self.radius_um**2


def triangle_signed_area(vertices) -> float:
    (x1, y1), (x2, y2), (x3, y3) = vertices
    return 0.5 * ((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1))


@dataclass(frozen=True)
class SceneObject:
    id: str
    shape: ShapeSpec
    material: str


@dataclass(frozen=True)
class SceneOptions:
    include_self_interaction: bool = False
    normalize: bool = False
    temperature_k: float = 0.0
    plasma_frequency: float | None = None  # rad / s


@dataclass(frozen=True)
class Scene:
    domain_size_um: tuple[float, float, float]
    grid_points: tuple[int, int, int]
    materials: dict[str, Material]
    objects: tuple[SceneObject, ...]
    options: SceneOptions = field(default_factory=SceneOptions)

    def object(self, object_id: str) -> SceneObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(f"unknown object id {object_id!r}")

    def material_of(self, object_id: str) -> Material:
        return self.materials[self.object(object_id).material]

    def with_grid(self, grid_points) -> Scene:
        return replace(self, grid_points=tuple(int(n) for n in grid_points))

    def with_objects(self, objects) -> Scene:
        return replace(self, objects=tuple(objects))

    def with_options(self, **changes) -> Scene:
        return replace(self, options=replace(self.options, **changes))


# -- table 1 defaults --------------------------------------------------------

GOLD = Material("gold", alpha_e=1.88e-30, density=5.9e28)


def plate_pair_objects(separation_um, thickness_um=1.0, height_um=9.0, domain_um=(10.0, 10.0),
                       material="gold"):
    """Two vertical plates placed symmetrically about the domain centre."""
    cx = domain_um[0] / 2
    cy = domain_um[1] / 2
    half = separation_um / 2
    y = (cy - height_um / 2, cy + height_um / 2)
    return (
        SceneObject("plate_left", ShapeSpec.rect((cx - half - thickness_um, cx - half), y), material),
        SceneObject("plate_right", ShapeSpec.rect((cx + half, cx + half + thickness_um), y), material),
    )


def table1_scene(separation_um=1.0, grid=(100, 100, 100)) -> Scene:
    """Gold plate pair in a 10 um cube domain (the reference configuration)."""
    return Scene(
        domain_size_um=(10.0, 10.0, 10.0),
        grid_points=tuple(grid),
        materials={"gold": GOLD},
        objects=plate_pair_objects(separation_um),
    )


# -- parsing ----------------------------------------------------------------

_DOMAIN_KEYS = {"size_um", "grid"}
_MATERIAL_KEYS = {"alpha_e", "alpha_m", "density"}
_OPTION_KEYS = {"include_self_interaction", "normalize", "temperature_k", "plasma_frequency"}
_GEOMETRY_KEYS = {
    "rect": {"x_um", "y_um"},
    "triangle": {"vertices_um"},
    "circle": {"center_um", "radius_um"},
}


@dataclass
class _Entry:
    value: str
    line: int
    column: int  # of the value
    key_column: int = 1


@dataclass
class _Section:
    kind: str
    name: str | None
    line: int
    entries: dict[str, _Entry] = field(default_factory=dict)


def _split_sections(text):
    sections = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        indent = len(line) - len(line.lstrip()) + 1
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise SceneError("unterminated section header", lineno, indent)
            parts = stripped[1:-1].split()
            if not parts:
                raise SceneError("empty section header", lineno, indent)
            kind = parts[0]
            if kind in ("domain", "options"):
                if len(parts) != 1:
                    raise SceneError(f"section [{kind}] takes no name", lineno, indent)
                name = None
            elif kind in ("material", "object"):
                if len(parts) != 2:
                    raise SceneError(f"section [{kind}] needs exactly one name", lineno, indent)
                name = parts[1]
                if not _NAME_RE.match(name):
                    raise SceneError(f"invalid {kind} name {name!r}", lineno, indent + len(kind) + 2)
            else:
                raise SceneError(f"unknown section [{kind}]", lineno, indent + 1)
            current = _Section(kind, name, lineno)
            sections.append(current)
            continue
        if "=" not in stripped:
            raise SceneError("expected 'key = value'", lineno, indent)
        if current is None:
            raise SceneError("key outside of any section", lineno, indent)
        key, value = stripped.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise SceneError("missing key", lineno, indent)
        if key in current.entries:
            raise SceneError(f"duplicate key {key!r}", lineno, indent)
        eq = line.index("=")
        rest = line[eq + 1:]
        current.entries[key] = _Entry(value, lineno, eq + 2 + len(rest) - len(rest.lstrip()), indent)
    return sections


def _floats(entry, count=None, what="value"):
    out = []
    for tok in entry.value.split():
        try:
            out.append(float(tok))
        except ValueError:
            raise SceneError(f"invalid number {tok!r} for {what}", entry.line, entry.column) from None
    if count is not None and len(out) != count:
        raise SceneError(f"{what} needs {count} numbers, got {len(out)}", entry.line, entry.column)
    if not all(math.isfinite(v) for v in out):
        raise SceneError(f"non-finite number in {what}", entry.line, entry.column)
    return out


def _int(entry, what):
    try:
        return int(entry.value)
    except ValueError:
        raise SceneError(f"invalid integer {entry.value!r} for {what}", entry.line, entry.column) from None


def _bool(entry, what):
    v = entry.value.lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise SceneError(f"invalid boolean {entry.value!r} for {what}", entry.line, entry.column)


def _check_keys(section, allowed, required):
    for key, entry in section.entries.items():
        if key not in allowed:
            label = section.kind if section.name is None else f"{section.kind} {section.name}"
            raise SceneError(f"unknown key {key!r} in [{label}]", entry.line, entry.key_column)
    for key in sorted(required):
        if key not in section.entries:
            label = section.kind if section.name is None else f"{section.kind} {section.name}"
            raise SceneError(f"missing key {key!r} in [{label}]", section.line, 1)


def _parse_shape(section):
    entries = section.entries
    if "shape" not in entries:
        raise SceneError(f"missing key 'shape' in [object {section.name}]", section.line, 1)
    kind_entry = entries["shape"]
    kind = kind_entry.value
    if kind not in SHAPE_KINDS:
        raise SceneError(f"unknown shape {kind!r}", kind_entry.line, kind_entry.column)
    family = kind.split("_")[0]
    allowed = {"shape", "material"} | _GEOMETRY_KEYS[family]
    if kind.endswith("_open"):
        allowed.add("wall")
    _check_keys(section, allowed, {"material"} | _GEOMETRY_KEYS[family])

    wall = _int(entries["wall"], "wall") if "wall" in entries else 1
    if family == "rect":
        x = _floats(entries["x_um"], 2, "x_um")
        y = _floats(entries["y_um"], 2, "y_um")
        return ShapeSpec(kind, x_um=tuple(x), y_um=tuple(y), wall=wall)
    if family == "triangle":
        v = _floats(entries["vertices_um"], 6, "vertices_um")
        return ShapeSpec(kind, vertices_um=((v[0], v[1]), (v[2], v[3]), (v[4], v[5])), wall=wall)
    center = _floats(entries["center_um"], 2, "center_um")
    (radius,) = _floats(entries["radius_um"], 1, "radius_um")
    return ShapeSpec(kind, center_um=tuple(center), radius_um=radius, wall=wall)


def parse_scene(text: str) -> Scene:
    """Parse scene-file text into a :class:`Scene` (strict: unknown keys are errors)."""
    sections = _split_sections(text)

    domains = [s for s in sections if s.kind == "domain"]
    if not domains:
        raise SceneError("missing required section [domain]")
    if len(domains) > 1:
        raise SceneError("duplicate section [domain]", domains[1].line, 1)
    dom = domains[0]
    _check_keys(dom, _DOMAIN_KEYS, _DOMAIN_KEYS)
    size = tuple(_floats(dom.entries["size_um"], 3, "size_um"))
    grid_entry = dom.entries["grid"]
    try:
        grid = tuple(int(tok) for tok in grid_entry.value.split())
    except ValueError:
        raise SceneError("grid needs three integers", grid_entry.line, grid_entry.column) from None
    if len(grid) != 3:
        raise SceneError(f"grid needs 3 integers, got {len(grid)}", grid_entry.line, grid_entry.column)

    materials = {}
    for sec in sections:
        if sec.kind != "material":
            continue
        if sec.name in materials:
            raise SceneError(f"duplicate material {sec.name!r}", sec.line, 1)
        _check_keys(sec, _MATERIAL_KEYS, {"alpha_e", "density"})
        e = sec.entries
        materials[sec.name] = Material(
            sec.name,
            alpha_e=_floats(e["alpha_e"], 1, "alpha_e")[0],
            density=_floats(e["density"], 1, "density")[0],
            alpha_m=_floats(e["alpha_m"], 1, "alpha_m")[0] if "alpha_m" in e else 0.0,
        )

    objects = []
    seen = set()
    for sec in sections:
        if sec.kind != "object":
            continue
        if sec.name in seen:
            raise SceneError(f"duplicate object {sec.name!r}", sec.line, 1)
        seen.add(sec.name)
        shape = _parse_shape(sec)
        mat_entry = sec.entries["material"]
        if mat_entry.value not in materials:
            raise SceneError(f"object {sec.name!r} references undefined material {mat_entry.value!r}",
                             mat_entry.line, mat_entry.column)
        objects.append(SceneObject(sec.name, shape, mat_entry.value))
    if not objects:
        raise SceneError("no objects defined")

    opts = SceneOptions()
    option_secs = [s for s in sections if s.kind == "options"]
    if len(option_secs) > 1:
        raise SceneError("duplicate section [options]", option_secs[1].line, 1)
    if option_secs:
        sec = option_secs[0]
        _check_keys(sec, _OPTION_KEYS, set())
        e = sec.entries
        plasma = None
        if "plasma_frequency" in e and e["plasma_frequency"].value.lower() not in ("none", ""):
            plasma = _floats(e["plasma_frequency"], 1, "plasma_frequency")[0]
        opts = SceneOptions(
            include_self_interaction=_bool(e["include_self_interaction"], "include_self_interaction")
            if "include_self_interaction" in e else False,
            normalize=_bool(e["normalize"], "normalize") if "normalize" in e else False,
            temperature_k=_floats(e["temperature_k"], 1, "temperature_k")[0] if "temperature_k" in e else 0.0,
            plasma_frequency=plasma,
        )

    return Scene(size, grid, materials, tuple(objects), opts)


def load_scene(path) -> Scene:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SceneError(f"cannot read scene file {str(path)!r}: {exc.strerror}") from exc
    return parse_scene(text)


def _fmt(values):
    return " ".join(repr(float(v)) for v in values)


def serialize_scene(scene: Scene) -> str:
    """Render a scene as scene-file text; inverse of :func:`parse_scene`."""
    lines = ["[domain]", f"size_um = {_fmt(scene.domain_size_um)}",
             "grid = " + " ".join(str(int(n)) for n in scene.grid_points), ""]
    for name, mat in scene.materials.items():
        lines += [f"[material {name}]", f"alpha_e = {mat.alpha_e!r}", f"alpha_m = {mat.alpha_m!r}",
                  f"density = {mat.density!r}", ""]
    for obj in scene.objects:
        s = obj.shape
        lines += [f"[object {obj.id}]", f"shape = {s.kind}", f"material = {obj.material}"]
        if s.family == "rect":
            lines += [f"x_um = {_fmt(s.x_um)}", f"y_um = {_fmt(s.y_um)}"]
        elif s.family == "triangle":
            lines.append(f"vertices_um = {_fmt(c for v in s.vertices_um for c in v)}")
        else:
            lines += [f"center_um = {_fmt(s.center_um)}", f"radius_um = {float(s.radius_um)!r}"]
        if s.is_open:
            lines.append(f"wall = {int(s.wall)}")
        lines.append("")
    o = scene.options
    lines += ["[options]",
              f"include_self_interaction = {str(o.include_self_interaction).lower()}",
              f"normalize = {str(o.normalize).lower()}",
              f"temperature_k = {float(o.temperature_k)!r}",
              "plasma_frequency = " + ("none" if o.plasma_frequency is None else repr(float(o.plasma_frequency))),
              ""]
    return "\n".join(lines)


# -- validation -------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    subject: str
    message: str

    def __str__(self):
        return f"{self.subject}: {self.message}"


def _shape_violations(shape: ShapeSpec, domain_um):
    out = []
    if shape.kind not in SHAPE_KINDS:
        return [f"unknown shape kind {shape.kind!r}"]
    if shape.is_open and (not isinstance(shape.wall, int) or shape.wall < 1):
        out.append("open shape wall must be a positive integer number of cells")
    if shape.family == "rect":
        (x0, x1), (y0, y1) = shape.x_um, shape.y_um
        if not (x1 > x0 and y1 > y0):
            out.append("empty rectangle range")
    elif shape.family == "triangle":
        v = shape.vertices_um
        scale = max(abs(c) for p in v for c in p) or 1.0
        if abs(triangle_signed_area(v)) <= 1e-12 * scale * scale:
            out.append("degenerate triangle")
    else:
        if not shape.radius_um > 0:
            out.append("circle radius must be positive")
    xmin, xmax, ymin, ymax = shape.bounds()
    if xmin < 0 or ymin < 0 or xmax > domain_um[0] or ymax > domain_um[1]:
        out.append("shape exceeds domain")
    return out


def validate_scene(scene: Scene) -> list[Violation]:
    """Return every invariant violation, domain first, then objects in declaration order."""
    out = []
    if len(scene.domain_size_um) != 3 or not all(s > 0 for s in scene.domain_size_um):
        out.append(Violation("domain", "domain extents must be positive"))
    if len(scene.grid_points) != 3 or not all(isinstance(n, int) and n > 0 for n in scene.grid_points):
        out.append(Violation("domain", "grid points must be positive integers"))
    for name, mat in scene.materials.items():
        if not mat.alpha_e >= 0:
            out.append(Violation(f"material {name}", "alpha_e must be non-negative"))
        if not mat.alpha_m >= 0:
            out.append(Violation(f"material {name}", "alpha_m must be non-negative"))
        if not mat.density > 0:
            out.append(Violation(f"material {name}", "density must be positive"))
    o = scene.options
    if not o.temperature_k >= 0:
        out.append(Violation("options", "temperature must be non-negative"))
    if o.plasma_frequency is not None and not o.plasma_frequency > 0:
        out.append(Violation("options", "plasma frequency must be positive"))
    if not scene.objects:
        out.append(Violation("scene", "no objects defined"))
    ids = set()
    for obj in scene.objects:
        subject = f"object {obj.id}"
        if obj.id in ids:
            out.append(Violation(subject, "duplicate object id"))
        ids.add(obj.id)
        if obj.material not in scene.materials:
            out.append(Violation(subject, f"undefined material {obj.material!r}"))
        for msg in _shape_violations(obj.shape, scene.domain_size_um):
            out.append(Violation(subject, msg))
    return out
