import csv
import io
import subprocess
import sys

import pytest

from casim.cli import main
from casim.scene import GOLD, SceneObject, ShapeSpec, serialize_scene, table1_scene


@pytest.fixture
def plate_scene(tmp_path):
    path = tmp_path / "plates.scene"
    path.write_text(serialize_scene(table1_scene(2.0, (20, 20, 20))))
    return path


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_run_two_plates(plate_scene, capsys):
    assert main(["run", "--scene", str(plate_scene)]) == 0
    rows = _rows(capsys.readouterr().out)
    assert rows[0] == ["object_id", "fx_N_per_m", "fy_N_per_m"]
    assert len(rows) == 3
    assert float(rows[1][1]) > 0 > float(rows[2][1])


def test_run_single_object(tmp_path, capsys):
    scene = table1_scene(2.0, (20, 20, 20)).with_objects([SceneObject("p", ShapeSpec.rect((3, 4), (1, 9)), "gold")])
    path = tmp_path / "one.scene"
    path.write_text(serialize_scene(scene))
    out = tmp_path / "f.csv"
    assert main(["run", "--scene", str(path), "--out", str(out)]) == 0
    rows = _rows(out.read_text())
    assert rows[1] == ["p", "0", "0"]


def test_run_normalize_prints_factor(plate_scene, capsys):
    assert main(["run", "--scene", str(plate_scene), "--normalize", "--threads", "1"]) == 0
    captured = capsys.readouterr()
    assert "normalization factor" in captured.err
    assert float(_rows(captured.out)[1][1]) > 0


def test_run_missing_file(tmp_path, capsys):
    missing = tmp_path / "absent.scene"
    assert main(["run", "--scene", str(missing)]) == 1
    assert "absent.scene" in capsys.readouterr().err


def test_run_invalid_scene(tmp_path, capsys):
    scene = table1_scene().with_objects([SceneObject("p", ShapeSpec.rect((9, 12), (1, 2)), "gold")])
    path = tmp_path / "bad.scene"
    path.write_text(serialize_scene(scene))
    assert main(["run", "--scene", str(path)]) == 1
    assert "exceeds domain" in capsys.readouterr().err


def test_field_rows(plate_scene, tmp_path):
    out = tmp_path / "phi.csv"
    assert main(["field", "--scene", str(plate_scene), "--out", str(out)]) == 0
    rows = _rows(out.read_text())
    assert rows[0] == ["ix", "iy", "phi"]
    assert len(rows) == 1 + 20 * 20
    assert all(float(r[2]) >= 0 for r in rows[1:])


def test_field_stdout_matches_file(plate_scene, tmp_path, capsys):
    out = tmp_path / "phi.csv"
    main(["field", "--scene", str(plate_scene), "--out", str(out)])
    main(["field", "--scene", str(plate_scene)])
    assert capsys.readouterr().out == out.read_text()


def test_analytic_single_row(capsys):
    assert main(["analytic", "--r-min", "1e-6", "--steps", "1", "--temp", "0"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 2
    assert rows[1][1] == rows[1][4]


def test_analytic_sweep(tmp_path):
    out = tmp_path / "a.csv"
    assert main(["analytic", "--r-min", "1e-6", "--r-max", "6e-6", "--steps", "6", "--out", str(out)]) == 0
    rows = _rows(out.read_text())[1:]
    assert len(rows) == 6
    vals = [float(r[4]) for r in rows]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_analytic_negative_r(capsys):
    assert main(["analytic", "--r-min=-1e-6"]) == 1
    assert "r-min" in capsys.readouterr().err


def test_study_unknown_lists_names(capsys, tmp_path):
    assert main(["study", "bogus", "--out-dir", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "plates" in err and "groove" in err


def test_study_convergence_grids(tmp_path):
    assert main(["study", "convergence", "--grids", "20,30,40", "--out-dir", str(tmp_path)]) == 0
    rows = _rows((tmp_path / "convergence.csv").read_text())
    assert len(rows) == 1 + 3
    assert (tmp_path / "convergence.fit.csv").exists() and (tmp_path / "convergence.meta").exists()


def test_study_plates_default_separations(tmp_path):
    assert main(["study", "plates", "--grid", "30,30,30", "--out-dir", str(tmp_path)]) == 0
    rows = _rows((tmp_path / "plates.csv").read_text())
    assert [float(r[0]) for r in rows[1:]] == pytest.approx([k * 1e-6 for k in range(1, 7)])


def test_study_runtime_failure_exit_code(tmp_path):
    assert main(["study", "plates", "--grid", "30,30,30", "--separations", "9",
                 "--out-dir", str(tmp_path)]) == 2


def test_validate(plate_scene, tmp_path, capsys):
    assert main(["validate", "--scene", str(plate_scene)]) == 0
    assert capsys.readouterr().out.strip() == "ok"
    bad = tmp_path / "bad.scene"
    scene = table1_scene().with_objects([SceneObject("t", ShapeSpec.triangle([(1, 1), (2, 2), (3, 3)]), "gold")])
    bad.write_text(serialize_scene(scene))
    assert main(["validate", "--scene", str(bad)]) == 1
    assert "object t: degenerate triangle" in capsys.readouterr().out


def test_bad_flag_exit_one(capsys):
    assert main(["run", "--scene", "x", "--grid", "1,2"]) == 1
    assert "grid must be" in capsys.readouterr().err


def test_threads_env_validation(plate_scene, monkeypatch):
    monkeypatch.setenv("CASIM_THREADS", "lots")
    assert main(["run", "--scene", str(plate_scene)]) == 1


def test_module_entry_point(plate_scene):
    res = subprocess.run([sys.executable, "-m", "casim", "validate", "--scene", str(plate_scene)],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.strip() == "ok"
