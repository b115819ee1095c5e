"""Bit extraction from event streams.

Three methods are implemented:

* exact comparison -- compare the raw lengths of two consecutive intervals,
  emit 1 if the first is longer, 0 if shorter, discard exact ties;
* clocked, restartable mode -- each interval is digitized independently by a
  clock restarted at the interval start (no edge fires at the restart
  instant, so an interval of length t yields ``floor(t / T)`` counts), and
  the two counts of a pair are compared;
* clocked, continuous mode -- a free-running edge train at ``phase + k T``
  digitizes the intervals; the clock phase carries over from one pair to the
  next, which couples consecutive bits.

Pairs are formed from consecutive intervals (1, 2), (3, 4), ... so adjacent
pairs share only their boundary event.  A trailing unpaired interval is
dropped.  Restartable output is invariant under a constant time shift of the
whole stream (only interval lengths matter); continuous output is not, since
it depends on the absolute clock phase.

Edges that coincide with an interval boundary are counted in the earlier
interval: windows are half-open ``(start, end]``.

The ``skew`` parameter models the asymmetry between switching the hardware
up/down counter into its two directions.  In restartable mode the first
clock edge of a down-counting (second) interval registers late by half the
skew, so an interval with length in ``[T, T + skew/2)`` misses that edge; the
resulting bias grows as ``(T / tau) * (skew / tau) / 2`` on Poisson input.
In continuous mode the boundary between the up and down windows shifts by
the full skew, lengthening the first window at the expense of the second.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, UnsupportedModeError
from .events import EventStream

CONTINUOUS = "continuous"
RESTARTABLE = "restartable"


@dataclass(frozen=True)
class ClockConfig:
    """Digitizing clock: period, mode, initial phase and up/down skew."""

    period: float
    mode: str = RESTARTABLE
    phase: float = 0.0
    skew: float = 0.0

    def __post_init__(self):
        if not self.period > 0:
            raise ConfigurationError(f"clock period must be > 0, got {self.period}")
        if self.mode not in (CONTINUOUS, RESTARTABLE):
            raise ConfigurationError(f"unknown clock mode {self.mode!r}")
        if self.mode == CONTINUOUS:
            if not 0 <= self.phase < self.period:
                raise ConfigurationError(
                    f"phase must be in [0, period), got {self.phase}")
        elif self.phase != 0.0:
            raise ConfigurationError("phase is only meaningful in continuous mode")
        if self.skew < 0:
            raise ConfigurationError(f"skew must be >= 0, got {self.skew}")
        if self.skew > self.period / 2:
            warnings.warn(
                f"skew {self.skew} exceeds half the clock period {self.period}; "
                "the skew model is meant for skew << period", stacklevel=2)

    @classmethod
    def from_frequency(cls, hz: float, **kwargs) -> "ClockConfig":
        if not hz > 0:
            raise ConfigurationError(f"clock frequency must be > 0, got {hz}")
        return cls(period=1.0 / hz, **kwargs)


@dataclass(frozen=True)
class BitBuffer:
    """Packed bit sequence; the first emitted bit is the LSB of the first byte."""

    data: bytes
    n_bits: int

    def __post_init__(self):
        if len(self.data) != (self.n_bits + 7) // 8:
            raise ConfigurationError(
                f"payload of {len(self.data)} bytes inconsistent with "
                f"{self.n_bits} bits")
        if self.n_bits % 8 and self.data:
            tail = self.data[-1] >> (self.n_bits % 8)
            if tail:
                raise ConfigurationError("trailing pad bits must be zero")

    @classmethod
    def from_bits(cls, bits: np.ndarray) -> "BitBuffer":
        bits = np.ascontiguousarray(bits, dtype=np.uint8)
        return cls(np.packbits(bits, bitorder="little").tobytes(), int(bits.size))

    def bits(self) -> np.ndarray:
        return np.unpackbits(np.frombuffer(self.data, dtype=np.uint8),
                             bitorder="little", count=self.n_bits)

    def __len__(self) -> int:
        return self.n_bits

    def __add__(self, other: "BitBuffer") -> "BitBuffer":
        return BitBuffer.from_bits(np.concatenate([self.bits(), other.bits()]))


@dataclass(frozen=True)
class ExtractionStats:
    """Bookkeeping counters of one extraction run."""

    events_consumed: int = 0
    intervals_formed: int = 0
    pairs_formed: int = 0
    ties_discarded: int = 0
    bits_emitted: int = 0

    @property
    def efficiency(self) -> float:
        """Bits per consumed event."""
        return self.bits_emitted / self.events_consumed if self.events_consumed else 0.0

    @property
    def bits_per_pair(self) -> float:
        return self.bits_emitted / self.pairs_formed if self.pairs_formed else 0.0

    def __add__(self, other: "ExtractionStats") -> "ExtractionStats":
        # recombination of shards split at pair boundaries: the boundary event
        # is shared, so events are reconstructed from the interval total
        if self.events_consumed == 0:
            return other
        if other.events_consumed == 0:
            return self
        intervals = self.intervals_formed + other.intervals_formed
        return ExtractionStats(
            events_consumed=intervals + 1,
            intervals_formed=intervals,
            pairs_formed=self.pairs_formed + other.pairs_formed,
            ties_discarded=self.ties_discarded + other.ties_discarded,
            bits_emitted=self.bits_emitted + other.bits_emitted,
        )

    def as_dict(self) -> dict:
        return {
            "events_consumed": self.events_consumed,
            "intervals_formed": self.intervals_formed,
            "pairs_formed": self.pairs_formed,
            "ties_discarded": self.ties_discarded,
            "bits_emitted": self.bits_emitted,
            "efficiency": self.efficiency,
            "bits_per_pair": self.bits_per_pair,
        }


def pair_intervals(stream: EventStream) -> np.ndarray:
    """Consecutive interval pairs as an (n_pairs, 2) array.

    Pair i holds intervals (2i-1, 2i) in 1-based interval numbering; a
    trailing unpaired interval is dropped.
    """
    iv = stream.intervals
    m = (iv.size // 2) * 2
    return iv[:m].reshape(-1, 2)


def _compare(n1: np.ndarray, n2: np.ndarray) -> tuple[np.ndarray, int]:
    """Bits and tie count for paired measurements."""
    emit = n1 != n2
    bits = (n1[emit] > n2[emit]).astype(np.uint8)
    return bits, int(n1.size - bits.size)


def extract_basic(stream: EventStream) -> tuple[BitBuffer, ExtractionStats]:
    """Exact interval comparison: 1 if t1 > t2, 0 if t1 < t2, ties discarded."""
    pairs = pair_intervals(stream)
    bits, ties = _compare(pairs[:, 0], pairs[:, 1])
    n = stream.n_events
    stats = ExtractionStats(
        events_consumed=n,
        intervals_formed=max(n - 1, 0),
        pairs_formed=pairs.shape[0],
        ties_discarded=ties,
        bits_emitted=int(bits.size),
    )
    return BitBuffer.from_bits(bits), stats


def _restartable_counts(intervals: np.ndarray, period: float, skew: float,
                        first_index: int) -> np.ndarray:
    """Counts of a per-interval restarted clock, with down-switch skew.

    ``first_index`` is the 1-based stream index of intervals[0]; even-indexed
    intervals are the down-counting halves and lose their first edge when
    shorter than period + skew/2.
    """
    counts = np.floor(intervals / period)
    if skew > 0:
        j = first_index + np.arange(intervals.size)
        lose = ((j % 2 == 0) & (intervals >= period)
                & (intervals < period + skew / 2))
        counts = counts - lose
    return counts


class ClockedBitStream:
    """Single-pass clocked extractor over timestamp chunks with O(1) state."""

    def __init__(self, clock: ClockConfig):
        self.clock = clock
        self._prev_time: float | None = None
        self._prev_edges: float = 0.0  # continuous mode: edge count at prev event
        self._events = 0
        self._intervals = 0
        self._pairs = 0
        self._ties = 0
        self._bits = 0
        self._pending: float | None = None  # count of an unpaired first interval

    def _edge_count(self, t: np.ndarray) -> np.ndarray:
        """Number of continuous-clock edges (phase + kT, k >= 1) up to time t."""
        f = np.floor((t - self.clock.phase) / self.clock.period)
        return np.maximum(f, 0.0)

    def _chunk_counts(self, times: np.ndarray) -> np.ndarray:
        c = self.clock
        if c.mode == CONTINUOUS:
            # pair midpoints (odd global event index) shift by the skew
            if c.skew > 0:
                idx = self._events + np.arange(times.size)
                adj = times + c.skew * (idx % 2 == 1)
            else:
                adj = times
            edges = self._edge_count(adj)
            if self._prev_time is None:
                counts = np.diff(edges)
            else:
                counts = np.diff(np.concatenate(([self._prev_edges], edges)))
            self._prev_edges = float(edges[-1])
            return counts
        if self._prev_time is None:
            intervals = np.diff(times)
        else:
            intervals = np.diff(np.concatenate(([self._prev_time], times)))
        return _restartable_counts(intervals, c.period, c.skew,
                                   first_index=self._intervals + 1)

    def feed(self, times: np.ndarray) -> np.ndarray:
        """Consume a timestamp chunk, return the newly emitted bits (uint8)."""
        times = np.asarray(times, dtype=np.float64)
        if times.size == 0:
            return np.empty(0, dtype=np.uint8)
        counts = self._chunk_counts(times)
        self._events += times.size
        self._intervals += counts.size
        self._prev_time = float(times[-1])
        if self._pending is not None:
            counts = np.concatenate(([self._pending], counts))
            self._pending = None
        m = (counts.size // 2) * 2
        if counts.size > m:
            self._pending = float(counts[-1])
        bits, ties = _compare(counts[0:m:2], counts[1:m:2])
        self._pairs += m // 2
        self._ties += ties
        self._bits += int(bits.size)
        return bits

    @property
    def stats(self) -> ExtractionStats:
        return ExtractionStats(
            events_consumed=self._events,
            intervals_formed=self._intervals,
            pairs_formed=self._pairs,
            ties_discarded=self._ties,
            bits_emitted=self._bits,
        )


def extract_clocked(stream: EventStream,
                    clock: ClockConfig) -> tuple[BitBuffer, ExtractionStats]:
    """Clocked extraction (continuous or restartable) over a whole stream."""
    engine = ClockedBitStream(clock)
    bits = engine.feed(stream.times)
    return BitBuffer.from_bits(bits), engine.stats


class BasicBitStream:
    """Single-pass exact-comparison extractor over timestamp chunks.

    Same streaming interface as :class:`ClockedBitStream`; the pair
    measurements are the raw interval lengths themselves.
    """

    def __init__(self):
        self._prev_time: float | None = None
        self._events = 0
        self._intervals = 0
        self._pairs = 0
        self._ties = 0
        self._bits = 0
        self._pending: float | None = None

    def feed(self, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=np.float64)
        if times.size == 0:
            return np.empty(0, dtype=np.uint8)
        if self._prev_time is None:
            intervals = np.diff(times)
        else:
            intervals = np.diff(np.concatenate(([self._prev_time], times)))
        self._events += times.size
        self._intervals += intervals.size
        self._prev_time = float(times[-1])
        if self._pending is not None:
            intervals = np.concatenate(([self._pending], intervals))
            self._pending = None
        m = (intervals.size // 2) * 2
        if intervals.size > m:
            self._pending = float(intervals[-1])
        bits, ties = _compare(intervals[0:m:2], intervals[1:m:2])
        self._pairs += m // 2
        self._ties += ties
        self._bits += int(bits.size)
        return bits

    @property
    def stats(self) -> ExtractionStats:
        return ExtractionStats(
            events_consumed=self._events,
            intervals_formed=self._intervals,
            pairs_formed=self._pairs,
            ties_discarded=self._ties,
            bits_emitted=self._bits,
        )


def extract_updown_counter(stream: EventStream,
                           clock: ClockConfig) -> tuple[BitBuffer, ExtractionStats]:
    """Hardware-style realization: one signed counter, up then down per pair.

    The counter increments on clock edges during the first interval of a pair
    and decrements during the second; the emitted bit is the sign of the final
    state (zero emits nothing).  Restartable mode only; bit-identical to
    :func:`extract_clocked` by the identity sign(n1 - n2) == compare(n1, n2).
    """
    if clock.mode != RESTARTABLE:
        raise UnsupportedModeError(
            "the up/down counter realization requires restartable mode")
    intervals = stream.intervals
    counts = _restartable_counts(intervals, clock.period, clock.skew, first_index=1)
    m = (counts.size // 2) * 2
    counter = np.zeros(m // 2)
    counter += counts[0:m:2]   # up-counting interval
    counter -= counts[1:m:2]   # down-counting interval
    emit = counter != 0
    bits = (counter[emit] > 0).astype(np.uint8)
    stats = ExtractionStats(
        events_consumed=stream.n_events,
        intervals_formed=intervals.size,
        pairs_formed=m // 2,
        ties_discarded=int(m // 2 - bits.size),
        bits_emitted=int(bits.size),
    )
    return BitBuffer.from_bits(bits), stats
