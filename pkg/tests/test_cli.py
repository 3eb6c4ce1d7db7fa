import csv
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from keplerbilliards import export
from keplerbilliards.cli import UsageError, main, parse_config, parse_table_spec, read_config_file

FIG11 = "string:a0=1,a3=0.3333333333,c=3,0,l=6"


def test_no_arguments_is_usage_error(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_table_csv(tmp_path, capsys):
    path = tmp_path / "t.csv"
    assert main(["table", "--ellipse", "2,1", "--csv", str(path)]) == 0
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["u", "x", "y", "kappa"] and len(rows) == 513
    x, y = float(rows[1][1]), float(rows[1][2])
    assert abs(x - 2) < 1e-14 and abs(y) < 1e-14 and abs(float(rows[1][3]) - 2) < 1e-12
    assert "table: ellipse" in capsys.readouterr().out


def test_config_file_and_override(tmp_path):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text("# portrait run\nmu = 2\nh = 50\nrng-seed = 7\n")
    cfg = parse_config(["portrait", "--config", str(cfg_path), "--h", "75"])
    assert cfg["mu"] == 2.0 and cfg["h"] == 75.0 and cfg["rng_seed"] == 7
    assert cfg.sources["h"] == "flag" and cfg.sources["mu"] == "config"


def test_unknown_config_key(tmp_path, capsys):
    cfg_path = tmp_path / "bad.cfg"
    cfg_path.write_text("energy = 3\n")
    with pytest.raises(UsageError) as exc:
        read_config_file(cfg_path)
    assert exc.value.key == "energy"
    assert main(["table", "--config", str(cfg_path)]) == 2
    assert "energy" in capsys.readouterr().err


def test_usage_validation(capsys):
    assert main(["arc", "--p0", "1,0"]) == 2                             # p1 missing
    assert main(["table", "--ellipse", "2,1", "--table", FIG11]) == 2    # conflicting tables
    assert main(["portrait", "--seeds", "0"]) == 2
    assert main(["portrait", "--h", "-1"]) == 2
    assert main(["arc", "--p0", "1,0", "--p1", "0,1", "--class", "sideways"]) == 2
    assert main(["shadow", "--word", "TX"]) == 2
    err = capsys.readouterr().err
    assert "p1" in err and "word" in err


def test_table_spec_forms():
    t, c = parse_table_spec("ellipse:a=3,b=2")
    assert abs(t.curvature(0.0) - 0.75) < 1e-14 and c == 0
    t, c = parse_table_spec(FIG11)
    assert c == 3.0 and t.curvature(np.linspace(0, 6, 50)).min() > 0
    t, _ = parse_table_spec("width:a0=1,a3=0.2")
    assert t.min_curvature > 0
    with pytest.raises(UsageError):
        parse_table_spec("square:a=1")


def test_arc_record(capsys):
    assert main(["arc", "--p0", "1,0", "--p1", "0,1", "--class", "indirect", "--h", "100"]) == 0
    rec = dict(line.split(": ", 1) for line in capsys.readouterr().out.splitlines())
    assert float(rec["r_min"]) < 0.2
    assert abs(float(rec["L"]) - float(rec["L_quad"])) < 1e-9
    assert float(rec["energy_residual"]) < 1e-8


def test_focal_report(capsys):
    assert main(["focal", "--table", FIG11]) == 0
    out = capsys.readouterr().out
    assert "focal: yes" in out and "kind: second" in out
    assert main(["focal", "--ellipse", "2,1", "--center", "1,0"]) == 0
    assert "focal: no" in capsys.readouterr().out


def test_shadow_pass(tmp_path, capsys):
    path = tmp_path / "orbit.csv"
    code = main(["shadow", "--ellipse", "2,1", "--center", "0.5,0.3", "--word", "TT'", "--csv", str(path)])
    out = capsys.readouterr().out
    assert code == 0 and "verification: PASS" in out
    assert len(path.read_text().splitlines()) == 5


def test_shadow_focal_guard(capsys):
    assert main(["shadow", "--table", FIG11, "--word", "TT'"]) == 1
    assert "no construction applies" in capsys.readouterr().err


def test_small_portrait(tmp_path, capsys):
    csv_path, svg_path = tmp_path / "p.csv", tmp_path / "p.svg"
    code = main(["portrait", "--table", FIG11, "--mu", "5", "--h", "10", "--seeds", "4", "--bounces", "10",
                 "--csv", str(csv_path), "--svg", str(svg_path)])
    assert code == 0 and "residuals: PASS" in capsys.readouterr().out
    data = np.genfromtxt(csv_path, delimiter=",", names=True)
    assert len(data) == 44 and set(data.dtype.names) >= {"seed_id", "step", "u", "alpha"}
    ET.parse(svg_path)


def test_empty_svg_is_valid(tmp_path):
    path = tmp_path / "e.svg"
    export.emit_svg(path, np.zeros((0, 2)), title="empty")
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg")


def test_svg_is_deterministic(tmp_path):
    pts = np.array([[0.1, 0.2], [3.0, 1.5], [6.0, 3.0]])
    a = export.emit_svg(tmp_path / "a.svg", pts, [0, 1, 2], title="x & y")
    b = export.emit_svg(tmp_path / "b.svg", pts, [0, 1, 2], title="x & y")
    assert a == b and (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    ET.parse(tmp_path / "a.svg")


def test_write_rows_roundtrip(tmp_path):
    export.write_rows(tmp_path / "r.csv", ("a", "b"), [(0.1, 1 / 3)])
    rows = list(csv.reader((tmp_path / "r.csv").open()))
    assert float(rows[1][1]) == 1 / 3


def test_console_script_module():
    proc = subprocess.run([sys.executable, "-m", "keplerbilliards.cli", "table"], capture_output=True, text=True)
    assert proc.returncode == 0 and "length:" in proc.stdout
