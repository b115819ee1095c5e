import numpy as np
import pytest

from tqrng import (BitBuffer, DataFormatError, EventStream, SourceConfig,
                   gen_poisson_stream, interval_histogram)
from tqrng import fileio


def test_binary_round_trip(tmp_path):
    path = tmp_path / "t.ts"
    with open(path, "wb") as fh:
        np.array([0, 100, 250], dtype="<u8").tofile(fh)
    s = fileio.read_timestamps(path)
    assert np.array_equal(s.times, np.array([0, 100, 250]) * 1e-9)
    assert s.meta["format"] == "bin"


def test_binary_rejects_non_monotone(tmp_path):
    path = tmp_path / "bad.ts"
    np.array([100, 50], dtype="<u8").tofile(path)
    with pytest.raises(DataFormatError, match="record 2"):
        fileio.read_timestamps(path)


def test_empty_and_missing_files(tmp_path):
    path = tmp_path / "empty.ts"
    path.write_bytes(b"")
    with pytest.raises(DataFormatError):
        fileio.read_timestamps(path)
    with pytest.raises(DataFormatError):
        fileio.read_timestamps(tmp_path / "nope.ts")


def test_csv_round_trip_is_exact(tmp_path):
    s = gen_poisson_stream(SourceConfig(tau=500e-9, n_events=500, seed=42))
    path = tmp_path / "t.csv"
    fileio.write_timestamps_csv(path, s)
    back = fileio.read_timestamps(path)
    assert np.array_equal(back.times, s.times)


def test_csv_comments_and_errors(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("# header\n1e-9\n\n2e-9\nnot-a-number\n")
    with pytest.raises(DataFormatError, match="record 3"):
        fileio.read_timestamps(path)
    path.write_text("# only comments\n")
    with pytest.raises(DataFormatError):
        fileio.read_timestamps(path)


def test_quantize_bumps_collisions():
    times = np.array([0.0, 0.4e-9, 2e-9])
    ns = fileio.quantize_ns(times)
    assert ns.tolist() == [0, 1, 2]
    assert np.all(np.diff(ns.astype(np.int64)) > 0)


def test_binary_export_idempotent_after_ingest(tmp_path):
    s = gen_poisson_stream(SourceConfig(tau=2e-9, n_events=2000, seed=3))
    p1 = tmp_path / "a.ts"
    fileio.write_timestamps_bin(p1, s)
    back = fileio.read_timestamps(p1)
    p2 = tmp_path / "b.ts"
    fileio.write_timestamps_bin(p2, back)
    assert p1.read_bytes() == p2.read_bytes()


def test_bits_round_trip_with_sidecar(tmp_path):
    buf = BitBuffer.from_bits(np.array([1, 0, 1, 1, 0], dtype=np.uint8))
    path = tmp_path / "x.bits"
    fileio.write_bits(path, buf, {"method": "exact"})
    back = fileio.read_bits(path)
    assert back.data == buf.data and back.n_bits == 5
    # without a sidecar the length defaults to whole bytes
    raw = tmp_path / "raw.bits"
    raw.write_bytes(buf.data)
    assert fileio.read_bits(raw).n_bits == 8


def test_histogram_csv(tmp_path):
    s = gen_poisson_stream(SourceConfig(tau=500e-9, n_events=5000, seed=1))
    hist = interval_histogram(s)
    path = tmp_path / "h.csv"
    fileio.write_histogram_csv(path, hist)
    lines = path.read_text().splitlines()
    assert lines[0] == "bin_lo_s,bin_hi_s,count"
    assert len(lines) == 1 + len(hist.counts)
    assert sum(int(l.split(",")[2]) for l in lines[1:]) == s.n_events - 1


def test_histogram_figure(tmp_path):
    from tqrng.plotting import plot_interval_histogram
    s = gen_poisson_stream(SourceConfig(tau=500e-9, n_events=5000, seed=1))
    hist = interval_histogram(s)
    path = tmp_path / "h.png"
    plot_interval_histogram(hist, path)
    assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
