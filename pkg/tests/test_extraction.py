import numpy as np
import pytest
from hypothesis import given, strategies as st

from tqrng import (CONTINUOUS, RESTARTABLE, BitBuffer, ClockConfig,
                   ConfigurationError, EventStream, UnsupportedModeError,
                   extract_basic, extract_clocked, extract_updown_counter,
                   gen_poisson_stream, pair_intervals, SourceConfig)
from tqrng.extraction import ClockedBitStream

from conftest import stream_from_intervals

# interval lists built from a coarse dyadic grid so that cumsum/diff and
# comparisons are exact in float arithmetic
grid_intervals = st.lists(
    st.integers(min_value=1, max_value=4096).map(lambda k: k / 1024.0),
    min_size=0, max_size=60)


# -- pairing -----------------------------------------------------------------

def test_pair_intervals_hand_trace():
    s = EventStream(np.array([0.0, 1.0, 3.0, 4.0, 10.0]))
    pairs = pair_intervals(s)
    assert pairs.tolist() == [[1.0, 2.0], [1.0, 6.0]]


def test_two_timestamps_give_no_pairs():
    s = EventStream(np.array([0.0, 1.0]))
    assert pair_intervals(s).shape == (0, 2)


@given(grid_intervals)
def test_pair_count_rule(intervals):
    s = stream_from_intervals(intervals)
    n = s.n_events
    assert pair_intervals(s).shape[0] == max(n - 1, 0) // 2


# -- exact comparison --------------------------------------------------------

def test_extract_basic_hand_trace():
    s = EventStream(np.array([0.0, 1.0, 3.0, 4.0, 10.0]))
    buf, stats = extract_basic(s)
    assert buf.bits().tolist() == [0, 0]
    assert stats.pairs_formed == 2
    assert stats.ties_discarded == 0


def test_extract_basic_tie_discarded():
    s = stream_from_intervals([2.0, 2.0])
    buf, stats = extract_basic(s)
    assert buf.n_bits == 0
    assert stats.ties_discarded == 1
    assert stats.pairs_formed == 1


@given(grid_intervals)
def test_extract_basic_counting_identity(intervals):
    s = stream_from_intervals(intervals)
    _, stats = extract_basic(s)
    n = s.n_events
    assert stats.intervals_formed == max(n - 1, 0)
    assert stats.pairs_formed == max(n - 1, 0) // 2
    assert stats.bits_emitted + stats.ties_discarded == stats.pairs_formed


@given(grid_intervals)
def test_extract_basic_swap_symmetry(intervals):
    # swapping the two intervals of every pair complements every emitted bit
    # and leaves tie positions unchanged
    m = (len(intervals) // 2) * 2
    swapped = []
    for i in range(0, m, 2):
        swapped.extend([intervals[i + 1], intervals[i]])
    swapped.extend(intervals[m:])
    buf1, st1 = extract_basic(stream_from_intervals(intervals))
    buf2, st2 = extract_basic(stream_from_intervals(swapped))
    assert st1.ties_discarded == st2.ties_discarded
    assert np.array_equal(buf1.bits() ^ 1, buf2.bits())


@given(grid_intervals, st.sampled_from([0.5, 2.0, 4.0, 3.0]))
def test_extract_basic_scale_invariance(intervals, c):
    s = stream_from_intervals(intervals)
    scaled = EventStream(s.times * c) if s.n_events else s
    buf1, _ = extract_basic(s)
    buf2, _ = extract_basic(scaled)
    assert buf1.bits().tolist() == buf2.bits().tolist()


def test_extract_basic_translation_invariance():
    s = stream_from_intervals([1.5, 0.25, 3.0, 0.5, 2.0, 2.0])
    buf1, st1 = extract_basic(s)
    buf2, st2 = extract_basic(s.shifted(1024.0))
    assert buf1.data == buf2.data
    assert st1 == st2


# -- clocked extraction ------------------------------------------------------

def test_restartable_hand_traces():
    buf, _ = extract_clocked(stream_from_intervals([2.5, 1.2]),
                             ClockConfig(period=1.0))
    assert buf.bits().tolist() == [1]

    buf, stats = extract_clocked(stream_from_intervals([0.4, 0.7]),
                                 ClockConfig(period=1.0))
    assert buf.n_bits == 0
    assert stats.ties_discarded == 1


def test_continuous_hand_trace_edges_on_integers():
    s = EventStream(np.array([0.5, 1.7, 2.1]))
    buf, stats = extract_clocked(s, ClockConfig(period=1.0, mode=CONTINUOUS))
    assert buf.n_bits == 0
    assert stats.ties_discarded == 1


def test_continuous_phase_carries_across_pairs():
    # intervals (0.2,0.9] 0 edges, (0.9,1.1] edge 1, (1.1,2.05] edge 2,
    # (2.05,3.9] edge 3 -> counts 0,1,1,1 -> bit 0 then tie
    s = EventStream(np.array([0.2, 0.9, 1.1, 2.05, 3.9]))
    buf, stats = extract_clocked(s, ClockConfig(period=1.0, mode=CONTINUOUS))
    assert buf.bits().tolist() == [0]
    assert stats.ties_discarded == 1


def test_restartable_translation_invariance():
    s = stream_from_intervals([2.5, 1.2, 0.4, 0.7, 3.25, 1.5])
    cfg = ClockConfig(period=1.0)
    buf1, st1 = extract_clocked(s, cfg)
    buf2, st2 = extract_clocked(s.shifted(512.0), cfg)
    assert buf1.data == buf2.data and buf1.n_bits == buf2.n_bits
    assert st1 == st2


def test_continuous_output_depends_on_phase():
    s = EventStream(np.array([0.5, 1.7, 2.1]))
    out0, _ = extract_clocked(s, ClockConfig(period=1.0, mode=CONTINUOUS))
    out6, _ = extract_clocked(s, ClockConfig(period=1.0, mode=CONTINUOUS,
                                             phase=0.6))
    # phase 0: tie; phase 0.6: edges at 1.6, 2.6 -> counts (1, 0) -> bit 1
    assert out0.n_bits == 0
    assert out6.bits().tolist() == [1]


def test_continuous_skew_moves_window_boundary():
    s = EventStream(np.array([0.0, 0.95, 1.9]))
    no_skew, _ = extract_clocked(s, ClockConfig(period=1.0, mode=CONTINUOUS))
    skewed, _ = extract_clocked(s, ClockConfig(period=1.0, mode=CONTINUOUS,
                                               skew=0.2))
    assert no_skew.bits().tolist() == [0]   # counts (0, 1)
    assert skewed.bits().tolist() == [1]    # edge at 1.0 captured by window 1


def test_restartable_skew_drops_marginal_down_edge():
    cfg = ClockConfig(period=1.0, skew=0.4)  # first down edge late by 0.2
    buf, _ = extract_clocked(stream_from_intervals([1.5, 1.1]), cfg)
    assert buf.bits().tolist() == [1]       # n2 loses its edge: (1, 0)
    buf, stats = extract_clocked(stream_from_intervals([1.5, 1.25]), cfg)
    assert buf.n_bits == 0                  # 1.25 >= 1.2: edge kept, tie
    assert stats.ties_discarded == 1
    buf, stats = extract_clocked(stream_from_intervals([1.5, 1.1]),
                                 ClockConfig(period=1.0))
    assert buf.n_bits == 0                  # without skew this pair ties


@given(grid_intervals, st.sampled_from([0.25, 1.0, 3.0]))
def test_clocked_counting_identity(intervals, period):
    s = stream_from_intervals(intervals)
    _, stats = extract_clocked(s, ClockConfig(period=period))
    n = s.n_events
    assert stats.intervals_formed == max(n - 1, 0)
    assert stats.bits_emitted + stats.ties_discarded == stats.pairs_formed
    assert stats.pairs_formed == max(n - 1, 0) // 2


# -- up/down counter equivalence ----------------------------------------------

def test_updown_counter_hand_traces():
    buf, _ = extract_updown_counter(stream_from_intervals([2.5, 1.2]),
                                    ClockConfig(period=1.0))
    assert buf.bits().tolist() == [1]
    buf, stats = extract_updown_counter(stream_from_intervals([0.4, 0.7]),
                                        ClockConfig(period=1.0))
    assert buf.n_bits == 0 and stats.ties_discarded == 1


def test_updown_counter_rejects_continuous_mode():
    s = stream_from_intervals([1.0, 2.0])
    with pytest.raises(UnsupportedModeError):
        extract_updown_counter(s, ClockConfig(period=1.0, mode=CONTINUOUS))


def test_updown_counter_equals_clocked_on_fuzz():
    rng = np.random.default_rng(1234)
    s = gen_poisson_stream(SourceConfig(tau=1.0, n_events=50_000, seed=99))
    for _ in range(20):
        period = float(rng.uniform(0.05, 5.0))
        skew = float(rng.uniform(0.0, period / 2))
        cfg = ClockConfig(period=period, skew=skew)
        b1, st1 = extract_clocked(s, cfg)
        b2, st2 = extract_updown_counter(s, cfg)
        assert b1.data == b2.data and b1.n_bits == b2.n_bits
        assert st1 == st2


# -- streaming ---------------------------------------------------------------

@pytest.mark.parametrize("mode,phase,skew", [
    (RESTARTABLE, 0.0, 0.0),
    (RESTARTABLE, 0.0, 0.3),
    (CONTINUOUS, 0.0, 0.0),
    (CONTINUOUS, 0.37, 0.0),
    (CONTINUOUS, 0.37, 0.2),
])
def test_chunked_feeding_equals_single_pass(mode, phase, skew):
    s = gen_poisson_stream(SourceConfig(tau=1.0, n_events=10_001, seed=5))
    cfg = ClockConfig(period=0.8, mode=mode, phase=phase, skew=skew)
    whole, whole_stats = extract_clocked(s, cfg)
    engine = ClockedBitStream(cfg)
    rng = np.random.default_rng(0)
    cuts = np.sort(rng.choice(np.arange(1, s.n_events), size=7, replace=False))
    pieces = np.split(s.times, cuts)
    bits = np.concatenate([engine.feed(p) for p in pieces])
    assert np.array_equal(bits, whole.bits())
    assert engine.stats == whole_stats


def test_shard_recombination_at_pair_boundary():
    s = gen_poisson_stream(SourceConfig(tau=1.0, n_events=10_001, seed=8))
    cfg = ClockConfig(period=1.3)
    whole, whole_stats = extract_clocked(s, cfg)
    cut = 5_000  # even event index: a pair boundary, shared by both shards
    left = EventStream(s.times[:cut + 1])
    right = EventStream(s.times[cut:])
    b1, st1 = extract_clocked(left, cfg)
    b2, st2 = extract_clocked(right, cfg)
    assert (b1 + b2).data == whole.data
    assert st1 + st2 == whole_stats


# -- BitBuffer ---------------------------------------------------------------

def test_bitbuffer_packing_convention():
    buf = BitBuffer.from_bits(np.array([1, 0, 1, 1, 0, 0, 0, 0, 1, 1],
                                       dtype=np.uint8))
    assert buf.data == bytes([0b00001101, 0b00000011])
    assert buf.n_bits == 10


@given(st.lists(st.integers(0, 1), max_size=200))
def test_bitbuffer_round_trip(bits):
    buf = BitBuffer.from_bits(np.array(bits, dtype=np.uint8))
    assert buf.bits().tolist() == bits


def test_bitbuffer_rejects_nonzero_padding():
    with pytest.raises(ConfigurationError):
        BitBuffer(bytes([0xFF]), 4)
    with pytest.raises(ConfigurationError):
        BitBuffer(bytes([0x01, 0x02]), 4)


def test_bitbuffer_concat():
    a = BitBuffer.from_bits(np.array([1, 0, 1], dtype=np.uint8))
    b = BitBuffer.from_bits(np.array([1, 1], dtype=np.uint8))
    assert (a + b).bits().tolist() == [1, 0, 1, 1, 1]


# -- ClockConfig -------------------------------------------------------------

def test_clock_config_validation():
    with pytest.raises(ConfigurationError):
        ClockConfig(period=0.0)
    with pytest.raises(ConfigurationError):
        ClockConfig(period=1.0, mode="bogus")
    with pytest.raises(ConfigurationError):
        ClockConfig(period=1.0, mode=CONTINUOUS, phase=1.0)
    with pytest.raises(ConfigurationError):
        ClockConfig(period=1.0, phase=0.5)  # restartable ignores phase
    with pytest.raises(ConfigurationError):
        ClockConfig(period=1.0, skew=-0.1)
    with pytest.warns(UserWarning):
        ClockConfig(period=1.0, skew=0.9)
    assert ClockConfig.from_frequency(48e6).period == pytest.approx(1 / 48e6)
