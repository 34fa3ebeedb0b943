import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from casim.scene import (
    Material, Scene, SceneError, SceneObject, SceneOptions, ShapeSpec, load_scene, parse_scene,
    serialize_scene, table1_scene, validate_scene,
)

TABLE1_TEXT = """\
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
"""


def test_parse_table1_file():
    scene = parse_scene(TABLE1_TEXT)
    assert scene.domain_size_um == (10.0, 10.0, 10.0)
    assert scene.grid_points == (100, 100, 100)
    gold = scene.materials["gold"]
    assert gold.alpha_e == 1.88e-30
    assert gold.density == 5.9e28
    assert gold.alpha_m == 0.0
    (obj,) = scene.objects
    assert obj.id == "plate_left"
    assert obj.shape == ShapeSpec.rect((3.0, 4.0), (0.5, 9.5))
    assert scene.options == SceneOptions()


def test_parse_zero_objects():
    text = TABLE1_TEXT.split("[object")[0]
    with pytest.raises(SceneError, match="no objects defined"):
        parse_scene(text)


def test_parse_undefined_material_is_named():
    text = TABLE1_TEXT.replace("material = gold", "material = silver")
    with pytest.raises(SceneError, match="silver"):
        parse_scene(text)


def test_unknown_key_reports_position():
    text = TABLE1_TEXT.replace("y_um     = 0.5 9.5", "y_um     = 0.5 9.5\ncolour = red")
    with pytest.raises(SceneError) as err:
        parse_scene(text)
    assert err.value.line == 14
    assert err.value.column == 1
    assert "colour" in str(err.value)


@pytest.mark.parametrize("bad, fragment", [
    ("[domain\n", "unterminated"),
    ("size_um = 1 2 3\n", "outside of any section"),
    ("[domain]\nsize_um = 1 2\ngrid = 1 1 1\n", "3 numbers"),
    ("[domain]\nsize_um = 1 2 x\ngrid = 1 1 1\n", "invalid number"),
    ("[material gold]\nalpha_e = 1\ndensity = 1\n", "missing required section"),
    ("[wat]\n", "unknown section"),
])
def test_syntax_errors(bad, fragment):
    with pytest.raises(SceneError, match=fragment):
        parse_scene(bad)


def test_syntax_error_column_points_at_value():
    text = "[domain]\nsize_um = 1 2 x\ngrid = 1 1 1\n"
    with pytest.raises(SceneError) as err:
        parse_scene(text)
    assert (err.value.line, err.value.column) == (2, 11)


def test_options_section_and_comments():
    text = TABLE1_TEXT + """
# options block
[options]
include_self_interaction = true
normalize = yes
temperature_k = 300   # room temperature
plasma_frequency = 1.37e16
"""
    o = parse_scene(text).options
    assert o == SceneOptions(True, True, 300.0, 1.37e16)


def test_load_scene_missing_file(tmp_path):
    missing = tmp_path / "nope.scene"
    with pytest.raises(SceneError, match="nope.scene"):
        load_scene(missing)


def test_validate_table1_is_clean():
    assert validate_scene(table1_scene(2.0)) == []


def test_validate_shape_exceeds_domain():
    scene = table1_scene().with_objects([SceneObject("p", ShapeSpec.rect((9.5, 12), (1, 2)), "gold")])
    violations = validate_scene(scene)
    assert [v.message for v in violations] == ["shape exceeds domain"]


def test_validate_degenerate_triangle():
    tri = ShapeSpec.triangle([(1, 1), (2, 2), (3, 3)])
    scene = table1_scene().with_objects([SceneObject("t", tri, "gold")])
    assert [v.message for v in validate_scene(scene)] == ["degenerate triangle"]


def test_validate_reports_all_in_declaration_order():
    bad_mat = Material("lead", alpha_e=1e-30, density=0.0)
    scene = Scene(
        (10, 10, 10), (10, 10, 10), {"lead": bad_mat},
        (SceneObject("a", ShapeSpec.circle((5, 5), 0.0), "lead"),
         SceneObject("b", ShapeSpec.rect((1, 1), (1, 2)), "lead"),
         SceneObject("c", ShapeSpec.rect((1, 2), (1, 2)), "tin")),
    )
    got = [str(v) for v in validate_scene(scene)]
    assert got == [
        "material lead: density must be positive",
        "object a: circle radius must be positive",
        "object b: empty rectangle range",
        "object c: undefined material 'tin'",
    ]


def test_boundary_touching_shape_is_valid():
    scene = table1_scene().with_objects([SceneObject("p", ShapeSpec.rect((0, 1), (0, 10)), "gold")])
    assert validate_scene(scene) == []


# -- round trip ---------------------------------------------------------------

_coord = st.floats(0.0, 10.0, allow_nan=False)
_name = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,8}", fullmatch=True)


@st.composite
def shapes(draw):
    kind = draw(st.sampled_from(["rect_filled", "rect_open", "triangle_filled", "circle_filled", "circle_open"]))
    wall = draw(st.integers(1, 4)) if kind.endswith("_open") else 1
    if kind.startswith("rect"):
        return ShapeSpec(kind, x_um=(draw(_coord), draw(_coord)), y_um=(draw(_coord), draw(_coord)), wall=wall)
    if kind.startswith("triangle"):
        return ShapeSpec(kind, vertices_um=tuple((draw(_coord), draw(_coord)) for _ in range(3)))
    return ShapeSpec(kind, center_um=(draw(_coord), draw(_coord)), radius_um=draw(st.floats(0.01, 5.0)), wall=wall)


@st.composite
def scenes(draw):
    mat_names = draw(st.lists(_name, min_size=1, max_size=3, unique=True))
    materials = {
        n: Material(n, alpha_e=draw(st.floats(0, 1e-28)), density=draw(st.floats(1e20, 1e30)),
                    alpha_m=draw(st.floats(0, 1e-30)))
        for n in mat_names
    }
    ids = draw(st.lists(_name, min_size=1, max_size=4, unique=True))
    objects = tuple(SceneObject(i, draw(shapes()), draw(st.sampled_from(mat_names))) for i in ids)
    options = SceneOptions(draw(st.booleans()), draw(st.booleans()), draw(st.floats(0, 1000)),
                           draw(st.none() | st.floats(1e10, 1e17)))
    size = tuple(draw(st.floats(0.1, 100.0)) for _ in range(3))
    grid = tuple(draw(st.integers(1, 300)) for _ in range(3))
    return Scene(size, grid, materials, objects, options)


@settings(max_examples=150, deadline=None)
@given(scenes())
def test_serialize_parse_round_trip(scene):
    assert parse_scene(serialize_scene(scene)) == scene
