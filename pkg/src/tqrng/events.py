"""Simulated detection-pulse streams and detector effects.

Pulse trains are Poissonian: inter-arrival times are exponential with mean
``tau``, sampled by inverse CDF from a seeded PCG64 generator so that
identical (seed, config) reproduces identical streams bit for bit.  Detector
effects are modeled explicitly: a non-paralyzable dead time (an event is kept
only if it arrives at least ``dead_time`` after the previously kept event)
and afterpulsing (with some probability each detected pulse spawns one
spurious pulse at an exponentially distributed delay).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from scipy import stats as sps

from .errors import ConfigurationError, DataFormatError, InsufficientDataError

SPEED_OF_LIGHT = 299_792_458.0  # m/s

# substream purpose tags: every consumer of randomness derives its own
# generator from (seed, tag) so streams stay independent and reproducible
_TAG_GENERATOR = 0
_TAG_AFTERPULSE = 1


def substream(seed: int, purpose: int) -> np.random.Generator:
    """Independent generator for (seed, purpose)."""
    return np.random.default_rng(np.random.SeedSequence((int(seed), int(purpose))))


@dataclass(frozen=True)
class SourceConfig:
    """Parameters of a simulated pulse source."""

    tau: float
    n_events: int
    seed: int = 0
    dead_time: float = 0.0
    afterpulse_prob: float = 0.0
    afterpulse_tau: float = 0.0

    def validate(self) -> None:
        if not self.tau > 0:
            raise ConfigurationError(f"tau must be > 0, got {self.tau}")
        if self.n_events < 0:
            raise ConfigurationError(f"n_events must be >= 0, got {self.n_events}")
        if self.dead_time < 0:
            raise ConfigurationError(f"dead_time must be >= 0, got {self.dead_time}")
        if not 0 <= self.afterpulse_prob < 1:
            raise ConfigurationError(
                f"afterpulse_prob must be in [0, 1), got {self.afterpulse_prob}")
        if self.afterpulse_prob > 0 and not self.afterpulse_tau > 0:
            raise ConfigurationError(
                "afterpulse_tau must be > 0 when afterpulse_prob > 0")


@dataclass(frozen=True)
class EventStream:
    """Strictly increasing event timestamps in seconds plus source metadata."""

    times: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.ascontiguousarray(self.times, dtype=np.float64)
        object.__setattr__(self, "times", times)
        if times.ndim != 1:
            raise ConfigurationError("timestamps must be a 1-d array")
        if times.size and not np.isfinite(times).all():
            first = int(np.nonzero(~np.isfinite(times))[0][0])
            raise DataFormatError("non-finite timestamp", record=first + 1)
        if times.size > 1:
            bad = np.nonzero(np.diff(times) <= 0)[0]
            if bad.size:
                raise DataFormatError(
                    "timestamps not strictly increasing", record=int(bad[0]) + 2)

    @property
    def n_events(self) -> int:
        return int(self.times.size)

    @property
    def intervals(self) -> np.ndarray:
        return np.diff(self.times)

    def shifted(self, offset: float) -> "EventStream":
        return EventStream(self.times + offset, dict(self.meta))


def _exponential_intervals(rng: np.random.Generator, n: int, tau: float) -> np.ndarray:
    # inverse CDF; u in [0, 1) so log1p(-u) is finite
    return -tau * np.log1p(-rng.random(n))


def _strictly_increasing(times: np.ndarray) -> np.ndarray:
    """Bump any non-increasing entries by the minimal float increment."""
    if times.size < 2 or np.all(np.diff(times) > 0):
        return times
    times = times.copy()
    for i in np.nonzero(np.diff(times) <= 0)[0]:
        times[i + 1] = np.nextafter(times[i], np.inf)
    # a bump can cascade into the next entry
    while np.any(np.diff(times) <= 0):
        for i in np.nonzero(np.diff(times) <= 0)[0]:
            times[i + 1] = np.nextafter(times[i], np.inf)
    return times


def gen_poisson_stream(cfg: SourceConfig) -> EventStream:
    """Raw Poissonian stream of cfg.n_events pulses with mean interval cfg.tau.

    Dead time and afterpulsing are applied by composition, not here.
    """
    cfg.validate()
    rng = substream(cfg.seed, _TAG_GENERATOR)
    intervals = _exponential_intervals(rng, cfg.n_events, cfg.tau)
    times = _strictly_increasing(np.cumsum(intervals))
    meta = {"source": "poisson", "tau": cfg.tau, "seed": cfg.seed, "filters": []}
    return EventStream(times, meta)


def iter_poisson_times(tau: float, seed: int,
                       chunk: int = 2_000_000) -> Iterator[np.ndarray]:
    """Endless chunked timestamps of a Poisson stream (for long pipelines)."""
    if not tau > 0:
        raise ConfigurationError(f"tau must be > 0, got {tau}")
    rng = substream(seed, _TAG_GENERATOR)
    t0 = 0.0
    while True:
        times = t0 + np.cumsum(_exponential_intervals(rng, chunk, tau))
        t0 = float(times[-1])
        yield times


def dead_time_filter(times: np.ndarray, dead_time: float,
                     last_kept: float | None = None) -> np.ndarray:
    """Non-paralyzable dead time on a raw timestamp array.

    An event is kept iff it occurs >= dead_time after the previously kept
    event; the first event is always kept (unless closer than dead_time to
    ``last_kept``, the carry from a previous chunk).
    """
    if dead_time < 0:
        raise ConfigurationError(f"dead_time must be >= 0, got {dead_time}")
    if dead_time == 0 or times.size == 0:
        return times
    if last_kept is not None:
        times = times[times >= last_kept + dead_time]
    # Iteratively drop the first violator of each run of too-close events.
    # An unflagged event can only gain distance to its predecessor when
    # earlier events are removed, so unflagged events are final keepers and
    # each pass reproduces the sequential keep rule exactly.
    while times.size > 1:
        bad = np.diff(times) < dead_time
        if not bad.any():
            break
        pred_flagged = np.concatenate(([False], bad[:-1]))
        drop_next = bad & ~pred_flagged
        keep = np.ones(times.size, dtype=bool)
        keep[1:][drop_next] = False
        times = times[keep]
    return times


def apply_dead_time(stream: EventStream, dead_time: float) -> EventStream:
    """Apply a fixed non-paralyzable dead time to a stream."""
    kept = dead_time_filter(stream.times, dead_time)
    meta = dict(stream.meta)
    meta["filters"] = list(meta.get("filters", [])) + [
        {"op": "dead_time", "dead_time": dead_time}]
    return EventStream(kept, meta)


def apply_afterpulsing(stream: EventStream, prob: float, tau_ap: float,
                       seed: int) -> EventStream:
    """Insert at most one afterpulse per event, with probability ``prob``.

    Delays are exponential with mean ``tau_ap``; the merged stream is
    re-sorted and exact ties are perturbed by the minimal float increment.
    """
    if not 0 <= prob < 1:
        raise ConfigurationError(f"afterpulse prob must be in [0, 1), got {prob}")
    if prob > 0 and not tau_ap > 0:
        raise ConfigurationError(f"afterpulse tau must be > 0, got {tau_ap}")
    meta = dict(stream.meta)
    meta["filters"] = list(meta.get("filters", [])) + [
        {"op": "afterpulse", "prob": prob, "tau": tau_ap, "seed": seed}]
    if prob == 0 or stream.n_events == 0:
        return EventStream(stream.times, meta)
    rng = substream(seed, _TAG_AFTERPULSE)
    parents = rng.random(stream.n_events) < prob
    delays = -tau_ap * np.log1p(-rng.random(int(parents.sum())))
    merged = np.sort(np.concatenate([stream.times, stream.times[parents] + delays]))
    return EventStream(_strictly_increasing(merged), meta)


def simulate_pulses(cfg: SourceConfig) -> EventStream:
    """Full source chain: Poisson pulses, afterpulsing, dead time.

    Returns exactly ``cfg.n_events`` detected events: raw pulses are drawn
    until the post-filter stream is long enough, then trimmed.
    """
    cfg.validate()
    meta = {
        "source": "simulated",
        "tau": cfg.tau,
        "seed": cfg.seed,
        "dead_time": cfg.dead_time,
        "afterpulse_prob": cfg.afterpulse_prob,
        "afterpulse_tau": cfg.afterpulse_tau,
    }
    if cfg.afterpulse_prob > 0:
        # small-scale path: oversample, filter, trim; deterministic because
        # the raw draw is a prefix of the same substream on every attempt
        n_raw = max(16, int(cfg.n_events / (1 + cfg.afterpulse_prob) * 1.1) + 16)
        while True:
            raw = gen_poisson_stream(SourceConfig(cfg.tau, n_raw, cfg.seed))
            s = apply_afterpulsing(raw, cfg.afterpulse_prob, cfg.afterpulse_tau,
                                   cfg.seed)
            kept = dead_time_filter(s.times, cfg.dead_time)
            if kept.size >= cfg.n_events:
                return EventStream(kept[:cfg.n_events], meta)
            n_raw = int(n_raw * 1.5) + 16
    rng = substream(cfg.seed, _TAG_GENERATOR)
    chunks = []
    total = 0
    t0 = 0.0
    last_kept = None
    while total < cfg.n_events:
        raw = t0 + np.cumsum(_exponential_intervals(rng, 2_000_000, cfg.tau))
        t0 = float(raw[-1])
        kept = dead_time_filter(_strictly_increasing(raw), cfg.dead_time, last_kept)
        if kept.size:
            last_kept = float(kept[-1])
            chunks.append(kept)
            total += kept.size
    times = np.concatenate(chunks)[:cfg.n_events]
    return EventStream(times, meta)


def coherence_time(wavelength: float, spectral_width: float) -> tuple[float, float]:
    """Coherence time and frequency of a Gaussian emission spectrum.

    tau_cohr = wavelength^2 / (4 pi c sigma); f_cohr = 2 pi / tau_cohr.
    """
    if not wavelength > 0 or not spectral_width > 0:
        raise ConfigurationError("wavelength and spectral width must be > 0")
    tau_cohr = wavelength ** 2 / (4 * np.pi * SPEED_OF_LIGHT * spectral_width)
    f_cohr = 2 * np.pi / tau_cohr
    return tau_cohr, f_cohr


@dataclass(frozen=True)
class HistogramBinning:
    """Binning for interval histograms; defaults give log bins [1 ns, 100 tau]."""

    n_bins: int = 200
    lo: float | None = None
    hi: float | None = None
    log: bool = True


@dataclass(frozen=True)
class IntervalHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    fitted_tau: float
    cutoff_estimate: float
    goodness: float


def interval_histogram(stream: EventStream,
                       binning: HistogramBinning | None = None) -> IntervalHistogram:
    """Histogram of consecutive intervals with an exponential tail fit.

    The smallest observed interval estimates the dead-time edge; the
    maximum-likelihood tau fit uses only intervals beyond that edge plus one
    bin, where the distribution is a pure exponential tail.
    """
    if stream.n_events < 2:
        raise InsufficientDataError("need at least 2 events for an interval histogram")
    binning = binning or HistogramBinning()
    iv = stream.intervals
    cutoff = float(iv.min())
    mean_iv = float(iv.mean())
    lo = binning.lo if binning.lo is not None else min(1e-9, cutoff * 0.999)
    hi = binning.hi if binning.hi is not None else max(100 * mean_iv, iv.max())
    hi = hi * (1 + 1e-9)
    if binning.log:
        lo = max(lo, 1e-30)
        edges = np.geomspace(lo, hi, binning.n_bins + 1)
    else:
        edges = np.linspace(lo, hi, binning.n_bins + 1)
    counts, edges = np.histogram(iv, bins=edges)

    cut_bin = int(np.searchsorted(edges, cutoff, side="right") - 1)
    cut_bin = min(max(cut_bin, 0), binning.n_bins - 1)
    threshold = edges[cut_bin + 1]
    tail = iv[iv >= threshold]
    if tail.size >= 10:
        fitted_tau = float(tail.mean() - threshold)
        goodness = float(sps.kstest(tail - threshold, "expon",
                                    args=(0.0, fitted_tau)).statistic)
    else:
        fitted_tau = mean_iv - cutoff
        goodness = float("nan")
    if not fitted_tau > 0:
        fitted_tau = mean_iv
    return IntervalHistogram(edges, counts, fitted_tau, cutoff, goodness)


def ks_exponential(stream: EventStream, tau: float | None = None):
    """Kolmogorov-Smirnov test of the intervals against Exp(tau).

    With tau omitted, tests against the stream's own mean interval (then the
    test is approximate; pass an independently known tau for a strict test).
    """
    if stream.n_events < 2:
        raise InsufficientDataError("need at least 2 events for a KS test")
    iv = stream.intervals
    scale = float(tau) if tau is not None else float(iv.mean())
    res = sps.kstest(iv, "expon", args=(0.0, scale))
    return float(res.statistic), float(res.pvalue)
