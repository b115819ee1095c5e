"""Randomness statistics, closed-form laws, and the restartable-clock oracle.

Statistics are computed from mergeable sufficient statistics (bit and ones
counts, lagged-product tables, Monte-Carlo pi hit counts) so that analyzing
shards and merging gives bit-identical results to a single pass; see
:class:`BitStats`.

Conventions, fixed here so every number is reproducible:

* serial autocorrelation a_k sums products over i = 1..N-k in the numerator
  and squared deviations over i = 1..N in the denominator, with the global
  sample mean; its null standard error is 1/sqrt(N);
* bias b = p(1) - 1/2 with standard error 1/(2 sqrt(N));
* chi-square is the 1-degree-of-freedom bit-level statistic with tail
  probability from the regularized incomplete gamma function;
* the Monte-Carlo pi estimator consumes 48 bits per point: the first 24 bits
  form X (first-consumed bit most significant), the next 24 form Y,
  u = X / 2^24, v = Y / 2^24, and a point hits iff u^2 + v^2 < 1 (evaluated
  in exact integer arithmetic).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as spsp

from .errors import ConfigurationError, ConstantSequenceError, InsufficientDataError
from .extraction import BitBuffer, ExtractionStats

_PI_POINT_BITS = 48
_PI_COORD_BITS = 24
_W24 = (2 ** np.arange(_PI_COORD_BITS - 1, -1, -1)).astype(np.int64)


def _as_bits(bits) -> np.ndarray:
    if isinstance(bits, BitBuffer):
        return bits.bits()
    return np.ascontiguousarray(bits, dtype=np.uint8)


# --------------------------------------------------------------------------
# direct statistics

def bias(bits) -> tuple[float, float]:
    """Bias b = p(1) - 1/2 and its null standard error 1/(2 sqrt(N))."""
    y = _as_bits(bits)
    if y.size == 0:
        raise InsufficientDataError("bias of an empty bit sequence")
    n = y.size
    return float(y.sum()) / n - 0.5, 0.5 / math.sqrt(n)


def autocorr(bits, k_max: int = 8) -> list[tuple[float, float]]:
    """Serial autocorrelation coefficients a_1 .. a_k_max with std errors."""
    y = _as_bits(bits)
    n = y.size
    if n <= k_max:
        raise InsufficientDataError(f"need more than {k_max} bits, got {n}")
    s = int(y.sum())
    if s == 0 or s == n:
        raise ConstantSequenceError("autocorrelation of a constant sequence")
    yb = s / n
    centered = y.astype(np.float64) - yb
    den = float(np.dot(centered, centered))
    out = []
    stderr = 1.0 / math.sqrt(n)
    for k in range(1, k_max + 1):
        num = float(np.dot(centered[:-k], centered[k:]))
        out.append((num / den, stderr))
    return out


def pair_probs(bits) -> tuple[float, float, float, float]:
    """Frequencies (p00, p01, p10, p11) of the N-1 overlapping bit pairs."""
    y = _as_bits(bits)
    n = y.size
    if n < 2:
        raise InsufficientDataError("need at least 2 bits for pair probabilities")
    c11 = int(np.dot(y[:-1].astype(np.int64), y[1:].astype(np.int64)))
    s = int(y.sum())
    c10 = (s - int(y[-1])) - c11
    c01 = (s - int(y[0])) - c11
    c00 = (n - 1) - c11 - c10 - c01
    total = n - 1
    return c00 / total, c01 / total, c10 / total, c11 / total


# --------------------------------------------------------------------------
# mergeable accumulator

class BitStats:
    """Streaming, mergeable sufficient statistics of a bit sequence.

    ``update`` consumes bit chunks in stream order.  ``merge`` concatenates
    two accumulators; it is exact for any shard lengths as far as mean, bias,
    autocorrelation and pair counts are concerned, and requires the left
    accumulator to hold a multiple of 48 bits so that Monte-Carlo pi groups
    stay aligned (use :func:`aligned_shard_bounds` to split).
    """

    def __init__(self, k_max: int = 32):
        if k_max < 1:
            raise ConfigurationError("k_max must be >= 1")
        self.k_max = k_max
        self.n = 0
        self.ones = 0
        self.cross = [0] * (k_max + 1)  # cross[k] = sum y_i * y_{i+k}
        self.head = np.empty(0, dtype=np.uint8)
        self.tail = np.empty(0, dtype=np.uint8)
        self.pi_hits = 0
        self.pi_points = 0
        self.pi_pending = np.empty(0, dtype=np.uint8)

    def update(self, bits) -> "BitStats":
        chunk = _as_bits(bits)
        if chunk.size == 0:
            return self
        joined = np.concatenate([self.tail, chunk]) if self.tail.size else chunk
        off0 = joined.size - chunk.size
        c64 = chunk.astype(np.int64)
        for k in range(1, self.k_max + 1):
            off = off0 - k
            if off >= 0:
                x1 = joined[off:off + chunk.size]
                x2 = c64
            else:
                x1 = joined[:chunk.size + off]
                x2 = c64[-off:]
            if x1.size:
                self.cross[k] += int(np.dot(x1.astype(np.int64), x2[:x1.size]))
        self.n += int(chunk.size)
        self.ones += int(chunk.sum())
        if self.head.size < self.k_max:
            self.head = np.concatenate([self.head, chunk])[:self.k_max]
        self.tail = joined[-self.k_max:] if joined.size >= self.k_max else joined
        self._update_pi(chunk)
        return self

    def _update_pi(self, chunk: np.ndarray) -> None:
        pool = (np.concatenate([self.pi_pending, chunk])
                if self.pi_pending.size else chunk)
        groups = pool.size // _PI_POINT_BITS
        if groups:
            g = pool[:groups * _PI_POINT_BITS].reshape(-1, _PI_POINT_BITS)
            x = g[:, :_PI_COORD_BITS].astype(np.int64) @ _W24
            y = g[:, _PI_COORD_BITS:].astype(np.int64) @ _W24
            self.pi_hits += int(np.count_nonzero(x * x + y * y < (1 << 48)))
            self.pi_points += groups
        self.pi_pending = pool[groups * _PI_POINT_BITS:].copy()

    def merge(self, other: "BitStats") -> "BitStats":
        """Ordered merge: self followed by other."""
        if self.k_max != other.k_max:
            raise ConfigurationError("cannot merge accumulators with different k_max")
        if self.n == 0:
            return other
        if other.n == 0:
            return self
        if self.n % _PI_POINT_BITS != 0:
            raise ConfigurationError(
                "left shard must hold a multiple of 48 bits for an exact merge "
                "(pi point groups would misalign); split with aligned_shard_bounds")
        out = BitStats(self.k_max)
        out.n = self.n + other.n
        out.ones = self.ones + other.ones
        for k in range(1, self.k_max + 1):
            seam = 0
            for o in range(1, k + 1):
                if o <= self.tail.size and k - o < other.head.size:
                    seam += int(self.tail[-o]) * int(other.head[k - o])
            out.cross[k] = self.cross[k] + other.cross[k] + seam
        out.head = np.concatenate([self.head, other.head])[:self.k_max]
        out.tail = np.concatenate([self.tail, other.tail])[-self.k_max:]
        out.pi_hits = self.pi_hits + other.pi_hits
        out.pi_points = self.pi_points + other.pi_points
        out.pi_pending = other.pi_pending.copy()
        return out

    # -- finalization ------------------------------------------------------

    def autocorr(self, k_max: int | None = None) -> list[tuple[float, float]]:
        k_max = self.k_max if k_max is None else k_max
        if self.n <= k_max:
            raise InsufficientDataError(f"need more than {k_max} bits, got {self.n}")
        if self.ones in (0, self.n):
            raise ConstantSequenceError("autocorrelation of a constant sequence")
        n, s = self.n, self.ones
        ybar = s / n
        den = s * (1.0 - ybar)
        stderr = 1.0 / math.sqrt(n)
        out = []
        for k in range(1, k_max + 1):
            h_k = int(self.head[:k].sum())
            t_k = int(self.tail[-k:].sum())
            num = self.cross[k] - ybar * (2 * s - h_k - t_k) + (n - k) * ybar * ybar
            out.append((num / den, stderr))
        return out

    def pair_probs(self) -> tuple[float, float, float, float]:
        if self.n < 2:
            raise InsufficientDataError("need at least 2 bits for pair probabilities")
        c11 = self.cross[1]
        s = self.ones
        c10 = (s - int(self.tail[-1])) - c11
        c01 = (s - int(self.head[0])) - c11
        c00 = (self.n - 1) - c11 - c10 - c01
        total = self.n - 1
        return c00 / total, c01 / total, c10 / total, c11 / total

    def finalize(self, stats: ExtractionStats | None = None,
                 k_max: int | None = None) -> "AnalysisReport":
        if self.n < 1:
            raise InsufficientDataError("no bits accumulated")
        n = self.n
        mean = self.ones / n
        b = mean - 0.5
        autocorr_vals = None
        autocorr_error = None
        try:
            autocorr_vals = tuple(
                LagCorrelation(k + 1, a, se)
                for k, (a, se) in enumerate(self.autocorr(k_max)))
        except (ConstantSequenceError, InsufficientDataError) as exc:
            autocorr_error = str(exc)
        probs = self.pair_probs() if self.n >= 2 else None
        p1 = mean
        p0 = 1.0 - mean
        entropy = 0.0
        for p in (p0, p1):
            if p > 0:
                entropy -= p * math.log2(p)
        chi_square = (self.ones - n / 2) ** 2 / (n / 2) * 2
        chi_square_p = float(spsp.gammaincc(0.5, chi_square / 2))
        pi_estimate = pi_error = None
        if self.pi_points:
            pi_estimate = 4.0 * self.pi_hits / self.pi_points
            pi_error = abs(pi_estimate - math.pi) / math.pi
        return AnalysisReport(
            n_bits=n,
            mean=mean,
            bias=b,
            bias_stderr=0.5 / math.sqrt(n),
            autocorr=autocorr_vals,
            autocorr_error=autocorr_error,
            pair_probs=probs,
            entropy=entropy,
            chi_square=chi_square,
            chi_square_p=chi_square_p,
            pi_estimate=pi_estimate,
            pi_error=pi_error,
            efficiency=stats.efficiency if stats is not None else None,
            bits_per_pair=stats.bits_per_pair if stats is not None else None,
        )


def aligned_shard_bounds(n: int, n_shards: int) -> list[int]:
    """Split points for exact sharded analysis: multiples of 48 bits."""
    if n_shards < 1:
        raise ConfigurationError("need at least one shard")
    bounds = [0]
    for i in range(1, n_shards):
        b = (n * i // n_shards) // _PI_POINT_BITS * _PI_POINT_BITS
        bounds.append(max(b, bounds[-1]))
    bounds.append(n)
    return bounds


def analyze_sharded(bits, n_shards: int, k_max: int = 32,
                    stats: ExtractionStats | None = None) -> "AnalysisReport":
    """Shard, accumulate, merge, finalize; bit-identical to a single pass."""
    y = _as_bits(bits)
    bounds = aligned_shard_bounds(y.size, n_shards)
    shards = [BitStats(k_max).update(y[a:b]) for a, b in zip(bounds, bounds[1:])]
    acc = shards[0]
    for s in shards[1:]:
        acc = acc.merge(s)
    return acc.finalize(stats)


# --------------------------------------------------------------------------
# report

@dataclass(frozen=True)
class LagCorrelation:
    lag: int
    a: float
    stderr: float


@dataclass(frozen=True)
class AnalysisReport:
    n_bits: int
    mean: float
    bias: float
    bias_stderr: float
    autocorr: tuple[LagCorrelation, ...] | None
    autocorr_error: str | None
    pair_probs: tuple[float, float, float, float] | None
    entropy: float
    chi_square: float
    chi_square_p: float
    pi_estimate: float | None
    pi_error: float | None
    efficiency: float | None = None
    bits_per_pair: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "n_bits": self.n_bits,
            "mean": self.mean,
            "bias": self.bias,
            "bias_stderr": self.bias_stderr,
            "autocorr": None if self.autocorr is None else [
                {"lag": c.lag, "a": c.a, "stderr": c.stderr} for c in self.autocorr],
            "autocorr_error": self.autocorr_error,
            "pair_probs": None if self.pair_probs is None else {
                "p00": self.pair_probs[0], "p01": self.pair_probs[1],
                "p10": self.pair_probs[2], "p11": self.pair_probs[3]},
            "entropy": self.entropy,
            "chi_square": self.chi_square,
            "chi_square_p": self.chi_square_p,
            "pi_estimate": self.pi_estimate,
            "pi_error": self.pi_error,
            "efficiency": self.efficiency,
            "bits_per_pair": self.bits_per_pair,
        }

    def render_text(self) -> str:
        lines = [
            f"Bit-stream report for {self.n_bits} bits",
            "",
            f"Entropy = {self.entropy:.6f} bits per bit.",
            "",
            f"Chi square distribution for {self.n_bits} samples is "
            f"{self.chi_square:.2f}, and randomly",
            f"would exceed this value {100 * self.chi_square_p:.2f} percent "
            "of the times.",
            "",
            f"Arithmetic mean value of data bits is {self.mean:.6f} "
            f"(bias {self.bias:+.6f} +/- {self.bias_stderr:.6f}).",
        ]
        if self.pi_estimate is not None:
            lines.append(
                f"Monte Carlo value for Pi is {self.pi_estimate:.6f} "
                f"(error {100 * self.pi_error:.2f} percent).")
        if self.autocorr is not None:
            for c in self.autocorr:
                lines.append(
                    f"Serial correlation coef. a_{c.lag:02d} = "
                    f"{c.a:+.6f} +/- {c.stderr:.6f}")
        else:
            lines.append(f"Serial correlation undefined: {self.autocorr_error}")
        if self.efficiency is not None:
            lines.append("")
            lines.append(
                f"Efficiency: {self.efficiency:.6f} bits per event "
                f"({self.bits_per_pair:.6f} bits per pair).")
        return "\n".join(lines) + "\n"


def ent_battery(bits, stats: ExtractionStats | None = None,
                k_max: int = 32) -> AnalysisReport:
    """Basic statistics battery over a bit sequence.

    Requires at least 48 bits (one Monte-Carlo pi point).  A constant
    sequence yields a report with ``autocorr_error`` set and the remaining
    statistics intact.
    """
    y = _as_bits(bits)
    if y.size < _PI_POINT_BITS:
        raise InsufficientDataError(
            f"battery needs >= {_PI_POINT_BITS} bits, got {y.size}")
    return BitStats(k_max).update(y).finalize(stats)


# --------------------------------------------------------------------------
# closed-form laws and the restartable oracle

def a_asymptotic(x: float) -> float:
    """Quadratic fast-clock autocorrelation law a(x) = 0.8 x^2.

    Quoted validity is x <= 0.2.  Note: simulation of the continuous-clock
    extractor implemented here follows a(x) = x^2 / 12 in the same regime;
    this function returns the published coefficient unchanged.
    """
    if x < 0:
        raise ConfigurationError(f"x must be >= 0, got {x}")
    return 0.8 * x * x


def eta_asymptotic(x: float) -> float:
    """Three-term efficiency expansion 1/2 - x/4 + x^2/8."""
    if x < 0:
        raise ConfigurationError(f"x must be >= 0, got {x}")
    return 0.5 - x / 4 + x * x / 8


def bias_model(x: float, dt_over_tau: float) -> float:
    """Leading-order up/down skew bias b = (1/2) (T/tau) (dt/tau)."""
    if x < 0 or dt_over_tau < 0:
        raise ConfigurationError("x and dt/tau must be >= 0")
    return 0.5 * x * dt_over_tau


@dataclass(frozen=True)
class OracleResult:
    """Closed-form restartable-clock statistics at x = T/tau."""

    x: float
    q: float
    p_tie: float
    p_bit: float
    eta_exact: float
    eta_asymptotic: float

    def as_dict(self) -> dict:
        return {
            "x": self.x,
            "q": self.q,
            "p_tie": self.p_tie,
            "p_bit": self.p_bit,
            "eta_exact": self.eta_exact,
            "eta_asymptotic": self.eta_asymptotic,
        }


def oracle_restartable(x: float) -> OracleResult:
    """Exact restartable-clock law for Poisson input.

    Counts are geometric: P(n = k) = q^k (1 - q) with q = exp(-x), so
    p_tie = (1 - q) / (1 + q) and the bits-per-event efficiency is
    q / (1 + q) = 1 / (1 + e^x).
    """
    if not x > 0:
        raise ConfigurationError(f"x must be > 0, got {x}")
    q = math.exp(-x)
    p_tie = (1 - q) / (1 + q)
    return OracleResult(
        x=x,
        q=q,
        p_tie=p_tie,
        p_bit=1 - p_tie,
        eta_exact=1.0 / (1.0 + math.exp(x)),
        eta_asymptotic=eta_asymptotic(x),
    )
