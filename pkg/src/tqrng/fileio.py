"""File interchange: timestamp files, packed bit files, CSV exports.

Timestamp binary format: little-endian unsigned 64-bit integers, nanoseconds
since capture start, strictly increasing, no header.  CSV alternative: one
decimal value per line, seconds, ``#`` comment lines allowed.

Bit files are raw packed bytes (first emitted bit in the least-significant
bit of the first byte) with a JSON sidecar ``<path>.json`` recording n_bits
and provenance, directly consumable by external statistical test suites.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .events import EventStream
from .extraction import BitBuffer
from .analysis import AnalysisReport

SCHEMA_VERSION = 1


# --------------------------------------------------------------------------
# timestamps

def quantize_ns(times_s: np.ndarray) -> np.ndarray:
    """Seconds to strictly increasing u64 nanoseconds.

    Rounding can collide neighbors closer than 1 ns; collisions are bumped
    up by 1 ns so the file format invariant holds.  Idempotent for input
    that is already on the ns grid.
    """
    ns = np.round(np.asarray(times_s, dtype=np.float64) * 1e9).astype(np.uint64)
    if ns.size > 1:
        # cumulative-max plus one per collision
        for i in np.nonzero(np.diff(ns.astype(np.int64)) <= 0)[0]:
            ns[i + 1] = ns[i] + 1
        while np.any(np.diff(ns.astype(np.int64)) <= 0):
            for i in np.nonzero(np.diff(ns.astype(np.int64)) <= 0)[0]:
                ns[i + 1] = ns[i] + 1
    return ns


def write_timestamps_bin(path, stream: EventStream) -> None:
    quantize_ns(stream.times).astype("<u8").tofile(path)


def write_timestamps_csv(path, stream: EventStream) -> None:
    with open(path, "w") as fh:
        fh.write("# timestamps in seconds, one per line\n")
        for t in stream.times:
            fh.write(f"{float(t)!r}\n")


def _read_bin(path) -> np.ndarray:
    raw = np.fromfile(path, dtype="<u8")
    if raw.size == 0:
        raise DataFormatError(f"empty timestamp file: {path}")
    if raw.size > 1:
        bad = np.nonzero(np.diff(raw.astype(np.int64)) <= 0)[0]
        if bad.size:
            raise DataFormatError("timestamps not strictly increasing",
                                  record=int(bad[0]) + 2)
    return raw.astype(np.float64) * 1e-9


def _read_csv(path) -> np.ndarray:
    values = []
    record = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            record += 1
            try:
                values.append(float(text))
            except ValueError:
                raise DataFormatError(
                    f"line {lineno}: cannot parse {text!r}", record=record) from None
    if not values:
        raise DataFormatError(f"no timestamps in file: {path}")
    times = np.array(values, dtype=np.float64)
    if times.size > 1:
        bad = np.nonzero(np.diff(times) <= 0)[0]
        if bad.size:
            raise DataFormatError("timestamps not strictly increasing",
                                  record=int(bad[0]) + 2)
    return times


def read_timestamps(path, fmt: str | None = None) -> EventStream:
    """Ingest a timestamp file; format 'bin' or 'csv' (default by extension)."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"no such file: {path}")
    if fmt is None:
        fmt = "csv" if path.suffix.lower() in (".csv", ".txt") else "bin"
    if fmt not in ("bin", "csv"):
        raise DataFormatError(f"unknown timestamp format {fmt!r}")
    times = _read_csv(path) if fmt == "csv" else _read_bin(path)
    return EventStream(times, {"source": "file", "path": str(path), "format": fmt})


# alias matching the operation name used elsewhere in the docs
ingest_timestamps = read_timestamps


# --------------------------------------------------------------------------
# bits

def write_bits(path, buf: BitBuffer, sidecar: dict | None = None) -> None:
    with open(path, "wb") as fh:
        fh.write(buf.data)
    meta = {"schema_version": SCHEMA_VERSION, "n_bits": buf.n_bits}
    if sidecar:
        meta.update(sidecar)
    with open(str(path) + ".json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_bits(path, n_bits: int | None = None) -> BitBuffer:
    with open(path, "rb") as fh:
        data = fh.read()
    if n_bits is None:
        sidecar = str(path) + ".json"
        if os.path.exists(sidecar):
            with open(sidecar) as fh:
                n_bits = json.load(fh).get("n_bits")
        if n_bits is None:
            n_bits = 8 * len(data)
    if len(data) != (n_bits + 7) // 8:
        raise DataFormatError(
            f"bit file {path} holds {len(data)} bytes, expected "
            f"{(n_bits + 7) // 8} for {n_bits} bits")
    return BitBuffer(data, int(n_bits))


# --------------------------------------------------------------------------
# CSV / JSON reports

def write_histogram_csv(path, hist) -> None:
    with open(path, "w") as fh:
        fh.write("bin_lo_s,bin_hi_s,count\n")
        for lo, hi, c in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.counts):
            fh.write(f"{lo!r},{hi!r},{int(c)}\n")


def write_report_json(path, report: AnalysisReport) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report_text(path, report: AnalysisReport) -> None:
    with open(path, "w") as fh:
        fh.write(report.render_text())


SWEEP_CSV_HEADER = "x,replicate,a1,a1_sigma,bias,bias_sigma,eta,ref_a,ref_eta,pass"


def write_sweep_csv(path, result) -> None:
    def fmt(v):
        if v is None:
            return ""
        return repr(float(v))

    with open(path, "w") as fh:
        fh.write(SWEEP_CSV_HEADER + "\n")
        for p in result.points:
            fh.write(",".join([
                fmt(p.x), str(p.replicate), fmt(p.a1), fmt(p.a1_sigma),
                fmt(p.bias), fmt(p.bias_sigma), fmt(p.eta),
                fmt(p.ref_a), fmt(p.ref_eta), str(int(p.passed)),
            ]) + "\n")


def write_json(path, payload: dict) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
