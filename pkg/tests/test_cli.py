import json

import numpy as np
import pytest

from tqrng.cli import main, parse_x_grid, replay_manifest
from tqrng.units import parse_count, parse_quantity
from tqrng import ConfigurationError, fileio


def run(*argv):
    return main([str(a) for a in argv])


# -- units ---------------------------------------------------------------------

def test_parse_quantity_suffixes():
    assert parse_quantity("25ns") == pytest.approx(25e-9)
    assert parse_quantity("1.5us") == pytest.approx(1.5e-6)
    assert parse_quantity("48MHz") == pytest.approx(48e6)
    assert parse_quantity("2e6") == 2e6
    assert parse_quantity("500 ns") == pytest.approx(500e-9)
    with pytest.raises(ConfigurationError, match="--rate"):
        parse_quantity("12parsecs", "--rate")
    assert parse_count("1e6") == 1_000_000
    with pytest.raises(ConfigurationError):
        parse_count("1.5")


def test_parse_x_grid_forms():
    assert parse_x_grid("0.05,0.2") == (0.05, 0.2)
    grid = parse_x_grid("0.02:20:log20")
    assert len(grid) == 20
    assert grid[0] == pytest.approx(0.02) and grid[-1] == pytest.approx(20.0)
    assert parse_x_grid("1:3:lin3") == (1.0, 2.0, 3.0)
    with pytest.raises(ConfigurationError):
        parse_x_grid("1:3:cubic4")


# -- simulate -------------------------------------------------------------------

def test_simulate_writes_expected_records(tmp_path):
    out = tmp_path / "s.ts"
    code = run("simulate", "--rate", "2e6", "--events", "1000",
               "--dead-time", "25ns", "--seed", "7", "--out", out)
    assert code == 0
    data = np.fromfile(out, dtype="<u8")
    assert data.size == 1000
    assert np.diff(data.astype(np.int64)).min() >= 24  # ns grid rounding of 25 ns
    manifest = json.loads((tmp_path / "s.ts.manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert manifest["config"]["tau"] == pytest.approx(500e-9)
    assert manifest["config"]["dead_time"] == pytest.approx(25e-9)


def test_simulate_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a.ts", tmp_path / "b.ts"
    for out in (a, b):
        assert run("simulate", "--rate", "2MHz", "--events", "2000",
                   "--seed", "3", "--out", out) == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_rejects_zero_rate(tmp_path, capsys):
    code = run("simulate", "--rate", "0", "--events", "10",
               "--out", tmp_path / "x.ts")
    assert code == 2
    assert "--rate" in capsys.readouterr().err


def test_simulate_with_afterpulsing(tmp_path):
    out = tmp_path / "ap.ts"
    assert run("simulate", "--tau", "500ns", "--events", "20000",
               "--seed", "2", "--dead-time", "25ns",
               "--afterpulse-prob", "0.3", "--afterpulse-tau", "1us",
               "--out", out) == 0
    assert np.fromfile(out, dtype="<u8").size == 20000


# -- extract --------------------------------------------------------------------

def _write_ns(path, values):
    np.array(values, dtype="<u8").tofile(path)


def test_extract_exact_hand_trace(tmp_path):
    src = tmp_path / "t.ts"
    _write_ns(src, [0, 1, 3, 4, 10])
    out = tmp_path / "t.bits"
    assert run("extract", src, "--method", "exact", "-o", out) == 0
    assert out.read_bytes() == bytes([0])
    side = json.loads((tmp_path / "t.bits.json").read_text())
    assert side["n_bits"] == 2
    assert side["method"] == "exact"
    assert side["stats"]["pairs_formed"] == 2
    assert side["stats"]["bits_emitted"] == 2


def test_extract_restart_efficiency(tmp_path):
    src = tmp_path / "s.ts"
    assert run("simulate", "--rate", "2e6", "--events", "200000",
               "--seed", "11", "--out", src) == 0
    out = tmp_path / "s.bits"
    assert run("extract", src, "--method", "restart", "--clock", "48e6",
               "-o", out) == 0
    side = json.loads((tmp_path / "s.bits.json").read_text())
    assert side["stats"]["efficiency"] == pytest.approx(0.4896, abs=0.005)
    assert side["clock"]["mode"] == "restartable"


def test_extract_continuous_records_phase(tmp_path):
    src = tmp_path / "t.ts"
    _write_ns(src, [0, 400, 900, 1700, 2600])
    out = tmp_path / "t.bits"
    assert run("extract", src, "--method", "clock", "--clock", "1MHz",
               "--clock-mode", "continuous", "--phase", "0.3", "-o", out) == 0
    manifest = json.loads((tmp_path / "t.bits.manifest.json").read_text())
    assert manifest["config"]["phase"] == pytest.approx(0.3e-6)
    assert manifest["config"]["mode"] == "continuous"


def test_extract_requires_clock(tmp_path, capsys):
    src = tmp_path / "t.ts"
    _write_ns(src, [0, 100, 200])
    code = run("extract", src, "--method", "restart", "-o", tmp_path / "o.bits")
    assert code == 2
    assert "--clock" in capsys.readouterr().err


def test_extract_reports_bad_record(tmp_path, capsys):
    src = tmp_path / "bad.ts"
    _write_ns(src, [100, 50])
    code = run("extract", src, "--method", "exact", "-o", tmp_path / "o.bits")
    assert code == 3
    assert "record 2" in capsys.readouterr().err


# -- analyze --------------------------------------------------------------------

def test_analyze_balanced_file(tmp_path):
    bits = np.tile([0, 1], 500).astype(np.uint8)
    buf_path = tmp_path / "b.bits"
    from tqrng import BitBuffer
    fileio.write_bits(buf_path, BitBuffer.from_bits(bits), None)
    assert run("analyze", buf_path, "--max-lag", "4") == 0
    rep = json.loads((tmp_path / "b.bits.report.json").read_text())
    assert rep["entropy"] == pytest.approx(1.0)
    assert rep["n_bits"] == 1000
    text = (tmp_path / "b.bits.report.txt").read_text()
    assert "Entropy = 1.000000" in text
    png = (tmp_path / "b.bits.report.png").read_bytes()
    assert png[:8] == b"\x89PNG\r\n\x1a\n"


def test_analyze_all_zero_file(tmp_path):
    from tqrng import BitBuffer
    path = tmp_path / "z.bits"
    fileio.write_bits(path, BitBuffer.from_bits(np.zeros(96, dtype=np.uint8)),
                      None)
    assert run("analyze", path, "--no-figure") == 0
    rep = json.loads((tmp_path / "z.bits.report.json").read_text())
    assert rep["pi_estimate"] == 4.0
    assert rep["autocorr"] is None
    assert "constant" in rep["autocorr_error"]


def test_analyze_too_few_bits(tmp_path):
    from tqrng import BitBuffer
    path = tmp_path / "tiny.bits"
    fileio.write_bits(path, BitBuffer.from_bits(np.zeros(8, dtype=np.uint8)),
                      None)
    assert run("analyze", path) == 3


# -- sweep ----------------------------------------------------------------------

def test_sweep_cli(tmp_path):
    out = tmp_path / "sweep.csv"
    assert run("sweep", "--method", "restartable", "--x", "0.1,1.0",
               "--events-per-point", "2e5", "--seed", "4", "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == fileio.SWEEP_CSV_HEADER
    assert len(lines) == 3
    assert (tmp_path / "sweep.csv.png").exists()
    assert (tmp_path / "sweep.csv.manifest.json").exists()


def test_sweep_cli_log_grid_row_count(tmp_path):
    out = tmp_path / "grid.csv"
    assert run("sweep", "--method", "continuous", "--x", "0.02:20:log20",
               "--events-per-point", "1e5", "--seed", "4", "--no-figure",
               "--out", out) == 0
    assert len(out.read_text().splitlines()) == 21


# -- validate ------------------------------------------------------------------

@pytest.mark.filterwarnings("ignore:skew")
def test_validate_bias_model_pass_and_fail(tmp_path, capsys):
    out = tmp_path / "v.json"
    code = run("validate", "--check", "bias-model", "--x", "0.1", "--dt",
               "0.1", "--bits", "4e6", "--seed", "6", "--out", out)
    assert code == 0
    report = json.loads(out.read_text())
    assert report["passed"] is True
    assert json.loads(capsys.readouterr().out)["passed"] is True
    # far outside the quadratic law's validity the model check fails honestly
    code = run("validate", "--check", "bias-model", "--x", "0.9", "--dt",
               "0.3", "--bits", "1e6", "--seed", "6")
    assert code == 1


def test_validate_dead_time_cli(tmp_path):
    out = tmp_path / "d.json"
    code = run("validate", "--check", "dead-time", "--x", "0.0416667",
               "--dead-times", "0,0.05", "--bits", "4e5", "--seed", "4",
               "--out", out)
    assert code == 0
    report = json.loads(out.read_text())
    assert report["check"] == "dead-time"
    assert report["passed"] is True
    # the validation run is itself replayable from its manifest
    pairs = replay_manifest(str(out) + ".manifest.json", tmp_path / "replay")
    for orig, new in pairs:
        assert open(orig, "rb").read() == open(new, "rb").read()


def test_validate_underpowered_is_config_error(capsys):
    code = run("validate", "--check", "bias-model", "--x", "0.1", "--dt",
               "0.02", "--bits", "1e6")
    assert code == 2
    assert "bits" in capsys.readouterr().err


# -- ingest / oracle -------------------------------------------------------------

def test_ingest_csv_to_binary(tmp_path):
    csv = tmp_path / "t.csv"
    csv.write_text("# seconds\n0.0\n1e-7\n2.5e-7\n")
    out = tmp_path / "t.ts"
    assert run("ingest", csv, "--out", out) == 0
    assert np.fromfile(out, dtype="<u8").tolist() == [0, 100, 250]


def test_ingest_rejects_non_monotone(tmp_path, capsys):
    csv = tmp_path / "bad.csv"
    csv.write_text("1e-7\n5e-8\n")
    assert run("ingest", csv, "--out", tmp_path / "o.ts") == 3
    assert "record 2" in capsys.readouterr().err


def test_oracle_cli(tmp_path, capsys):
    assert run("oracle", "--x", "0.0416666667") == 0
    out = json.loads(capsys.readouterr().out)
    assert out["eta_exact"] == pytest.approx(0.489585, abs=1e-6)
    assert out["p_tie"] == pytest.approx(0.020830, abs=1e-6)


# -- manifests -------------------------------------------------------------------

def test_manifest_replay_reproduces_outputs(tmp_path):
    src = tmp_path / "s.ts"
    assert run("simulate", "--rate", "2e6", "--events", "50000",
               "--dead-time", "25ns", "--seed", "21", "--out", src) == 0
    bits = tmp_path / "s.bits"
    assert run("extract", src, "--method", "restart", "--clock", "48MHz",
               "-o", bits) == 0
    replay_dir = tmp_path / "replay"
    for manifest in (str(src) + ".manifest.json", str(bits) + ".manifest.json"):
        for orig, new in replay_manifest(manifest, replay_dir):
            if new.endswith(".json"):
                continue
            assert open(orig, "rb").read() == open(new, "rb").read()
