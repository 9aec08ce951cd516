import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from canrev.ingest import partition_traces
from canrev.model import IdTrace

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def corpus():
    from canrev.synth import synthesize

    return synthesize(seed=0)


@pytest.fixture(scope="session")
def corpus_traces(corpus):
    return partition_traces(corpus.log)


def trace_from_columns(columns: dict[int, list[int]], n: int | None = None, ident: int = 0x100) -> IdTrace:
    """IdTrace with the given bit columns set and every other bit zero."""
    n = n or len(next(iter(columns.values())))
    bits = np.zeros((n, 64), dtype=np.uint8)
    for i, col in columns.items():
        bits[:, i] = col
    return IdTrace(ident, np.arange(n, dtype=float), bits)


def counter_trace(width: int, n: int, msb: int = 0, ident: int = 0x100, step: int = 1) -> IdTrace:
    """Unit-increment big endian counter occupying bits msb..msb+width-1."""
    v = (np.arange(n) * step) % (1 << width)
    cols = {msb + k: ((v >> (width - 1 - k)) & 1).tolist() for k in range(width)}
    return trace_from_columns(cols, n, ident)
