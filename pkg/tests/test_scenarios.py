import csv
import io
import json

import numpy as np
import pytest

from rissim.cli import main
from rissim.errors import ConfigError
from rissim.scenarios import bundled_configs, load_config, parse_config, run_scenario

SMALL = """\
kind = "power_map"
name = "small"
max_reflections = 0
modes = ["actual", "ideal"]

[scene]
type = "free_space"

[panel]
rows = 4
cols = 5

[tx]
zenith_deg = 30.0
azimuth_deg = 180.0
distance_m = 5.0

[[configurations]]
name = "beam"
rule = "type1_reflect"
target = { zenith_deg = 20.0 }

[[receivers]]
name = "arc"
distance_m = 10.0
zenith_deg = { start = 0.0, stop = 80.0, step = 4.0 }
"""


def _write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _rows(path):
    return list(csv.reader(io.StringIO(path.read_text())))


def test_small_config_parses_to_dataclasses(tmp_path):
    cfg = load_config(_write(tmp_path, SMALL))
    assert cfg.kind == "power_map" and cfg.panel.rows == 4
    assert len(cfg.receivers[0].points) == 21
    assert cfg.tx_weights == "balanced"
    assert np.linalg.norm(cfg.tx) == pytest.approx(5.0)


@pytest.mark.parametrize(
    "edit, line, fragment",
    [
        (('rows = 4', 'rows = -4'), 10, "rows"),
        (('rule = "type1_reflect"', 'rule = "mirror"'), 20, "unknown rule"),
        (('type = "free_space"', 'type = "cave"'), 7, "scene type"),
        (('modes = ["actual", "ideal"]', 'modes = ["exact"]'), 4, "modes"),
        (('distance_m = 10.0', 'distance_m = 0.0'), 25, "distance_m"),
        (('max_reflections = 0', 'max_reflections = 3'), 3, "max_reflections"),
        (('name = "small"', 'name = "small"\nbogus = 1'), 3, "unknown key"),
    ],
)
def test_config_errors_name_file_and_line(tmp_path, edit, line, fragment):
    p = _write(tmp_path, SMALL.replace(*edit))
    with pytest.raises(ConfigError) as e:
        load_config(p)
    assert e.value.line == line
    assert f"{p}:{line}:" in str(e.value)
    assert fragment in str(e.value)


def test_toml_syntax_error_has_line(tmp_path):
    p = _write(tmp_path, SMALL.replace("rows = 4", "rows = = 4"))
    with pytest.raises(ConfigError) as e:
        load_config(p)
    assert e.value.line == 10


def test_receiver_outside_corridor_rejected():
    raw = {
        "kind": "power_map", "name": "x", "scene": {"type": "t_corridor"},
        "panel": {"origin": [0.0, 1.5, 1.5], "normal": [0.0, -1.0, 0.0], "up": [0.0, 0.0, 1.0]},
        "tx": {"position": [0.0, -5.0, 1.5]},
        "configurations": [{"name": "a", "rule": "type1_reflect", "target": {"direction": [-1.0, 0.0, 0.0]}}],
        "receivers": [{"name": "r", "points": [[10.0, -5.0, 1.5]]}],
    }
    with pytest.raises(ConfigError, match="outside the scene"):
        parse_config(raw)


def test_unit_power_weights_required(tmp_path):
    p = _write(tmp_path, SMALL.replace("distance_m = 5.0", "distance_m = 5.0\nweights = [1.0, 1.0]"))
    with pytest.raises(ConfigError, match="unit total power"):
        load_config(p)


def test_run_writes_csv_and_manifest(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(_write(tmp_path, SMALL)), "--out", str(out)]) == 0
    rows = _rows(out / "small_arc.csv")
    assert rows[0] == [
        "zenith_deg", "beam_actual_db", "beam_actual_with_direct_db", "beam_ideal_db", "beam_ideal_with_direct_db",
    ]
    assert len(rows) == 22
    assert all(np.isfinite(float(v)) for r in rows[1:] for v in r)
    man = json.loads((out / "small_manifest.json").read_text())
    assert man["tool"] == "rissim" and man["parameters"]["panel"]["rows"] == 4
    assert set(man["outputs"]) == {"small_arc.csv"}
    assert "wrote" in capsys.readouterr().out


def test_results_do_not_depend_on_threads(tmp_path):
    cfg = _write(tmp_path, SMALL)
    texts = []
    for n in (1, 3):
        out = tmp_path / f"t{n}"
        assert main(["run", str(cfg), "--threads", str(n), "--out", str(out)]) == 0
        texts.append((out / "small_arc.csv").read_bytes())
    assert texts[0] == texts[1]


def test_bad_config_exits_2(tmp_path, capsys):
    p = _write(tmp_path, SMALL.replace("rows = 4", "rows = 0"))
    assert main(["run", str(p), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert f"{p}:10" in err
    assert main(["run", str(tmp_path / "missing.toml")]) == 2
    assert main(["run", str(_write(tmp_path, SMALL, "ok.toml")), "--threads", "0"]) == 2


def test_pole_exits_3_with_diagnostics(tmp_path, capsys):
    # a lone element has zero steering phase, so R = 1 sits on a synthesis pole
    p = _write(tmp_path, SMALL.replace("rows = 4\ncols = 5", "rows = 1\ncols = 1"))
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 3
    err = capsys.readouterr().err
    assert "numeric singularity" in err
    assert "element 0" in err and "theta=30 deg" in err and "phi=180 deg" in err


def test_deviation_subcommand(tmp_path):
    text = 'kind = "deviation"\nname = "dev"\nangle_r_deg = [30.0]\ntheta_deg = [0.0, 20.0, 60.0]\n'
    p = _write(tmp_path, text)
    assert main(["deviation", str(p), "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "dev.csv")
    assert rows[0] == ["theta_in_deg", "angle_r_deg", "deviation_r_deg", "deviation_t_deg"]
    assert float(rows[1][2]) == 0.0 and float(rows[1][3]) == 0.0
    assert float(rows[2][2]) < float(rows[3][2])
    assert main(["deviation", str(_write(tmp_path, SMALL, "pm.toml"))]) == 2


def test_paths_export_and_import(tmp_path, capsys):
    bundled = {p.stem: p for p in bundled_configs()}
    f = tmp_path / "paths.csv"
    cfg = str(bundled["t_corridor_types"])
    assert main(["paths", "export", str(f), "--config", cfg, "--dst", "-8", "1", "1.5"]) == 0
    assert "paths to" in capsys.readouterr().out
    out = tmp_path / "norm"
    assert main(["paths", "import", str(f), "--out", str(out)]) == 0
    assert (out / "paths.csv").read_bytes() == f.read_bytes()
    f.write_text(f.read_text() + "1,2\n")
    assert main(["paths", "import", str(f)]) == 2
    assert "line" in capsys.readouterr().err


def test_bundled_configs_validate():
    names = {p.stem for p in bundled_configs()}
    assert names == {"alpha_sweep", "deviation", "free_space_far", "free_space_near", "t_corridor_types"}
    for p in bundled_configs():
        load_config(p)


def test_bundled_deviation_has_zero_at_normal():
    cfg = load_config(next(p for p in bundled_configs() if p.stem == "deviation"))
    res = run_scenario(cfg)
    c = res.columns["deviation"]
    at0 = c["theta_deg"] == 0
    assert np.all(c["deviation_r_deg"][at0] == 0) and np.all(c["deviation_t_deg"][at0] == 0)


def test_bundled_deviation_matches_golden():
    from pathlib import Path

    cfg = load_config(next(p for p in bundled_configs() if p.stem == "deviation"))
    golden = (Path(__file__).parent / "data" / "deviation_golden.csv").read_text()
    got = run_scenario(cfg).tables["deviation.csv"]
    a = np.array(list(csv.reader(io.StringIO(got)))[1:], float)
    b = np.array(list(csv.reader(io.StringIO(golden)))[1:], float)
    assert np.allclose(a, b, rtol=0, atol=1e-9)
