import numpy as np
import pytest
from hypothesis import settings

from tqrng import EventStream

settings.register_profile("default", deadline=None)
settings.load_profile("default")


def stream_from_intervals(intervals, t0=0.0) -> EventStream:
    """Stream whose consecutive intervals are exactly the given values."""
    times = t0 + np.concatenate(([0.0], np.cumsum(np.asarray(intervals, float))))
    return EventStream(times)


@pytest.fixture
def make_stream():
    return stream_from_intervals
