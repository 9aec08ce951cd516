import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from canrev.boundary import BoundaryProbabilities
from canrev.endian import (
    Join,
    Tokenization,
    assemble,
    config_key,
    enumerate_valid_configs,
    forced_endianness,
    is_valid_config,
    optimize,
    optimize_for_config,
    signal_cost,
    tie_break,
    tokenization_cost,
)
from canrev.model import N_BITS, Endianness, SignalSpec, walk

from oracles import brute_force_min, random_f

B, L = Endianness.BIG, Endianness.LITTLE
C, JB, JL = Join.C, Join.JB, Join.JL


def count_valid_by_recurrence() -> int:
    # automaton over the last two entries: a JB forbids JL in the next two slots
    states = {(None, None): 1}
    for pos in range(8):
        nxt = {}
        for (a, b), n in states.items():
            for x in (C, JB, JL):
                if pos == 0 and x is JL or pos == 7 and x is JB:
                    continue
                if x is JL and JB in (a, b):
                    continue
                key = (b, x)
                nxt[key] = nxt.get(key, 0) + n
        states = nxt
    return sum(states.values())


def test_577_configs():
    V = enumerate_valid_configs()
    assert len(V) == 577 == len(set(V)) == count_valid_by_recurrence()
    assert (C,) * 8 in V
    assert (JB, JL) + (C,) * 6 not in V
    assert (JB, C, JL) + (C,) * 5 not in V
    assert (JB, C, C, JL) + (C,) * 4 in V
    raw = [v for v in itertools.product(Join, repeat=8) if v[0] is not JL and v[7] is not JB]
    assert len(raw) == 4 * 3**6
    assert sum(map(is_valid_config, raw)) == 577


def test_forced_endianness():
    assert forced_endianness((C,) * 8) == [None] * 8
    assert forced_endianness((JB,) + (C,) * 7)[:3] == [B, B, None]
    assert forced_endianness((C, JL) + (C,) * 6)[:3] == [L, L, None]
    with pytest.raises(ValueError):
        forced_endianness((JL,) + (C,) * 7)


def flat(big, little=None):
    little = big if little is None else little
    return BoundaryProbabilities.from_arrays(big, little)


def test_signal_cost_examples():
    # byte 4 decision: an 11-bit BIG candidate against an 11-bit LITTLE one
    beta = 0.6
    fb = np.zeros(64)
    fb[[29, 30, 31]] = [0.02, 0.01, 0.98]
    fl = np.zeros(64)
    fl[39] = 0.01
    f = flat(fb, fl)
    i0 = SignalSpec(tuple(range(29, 40)), B)
    i1 = SignalSpec(walk(32, 11, L), L)
    assert i1.bit_indices == tuple(range(32, 40)) + (24, 25, 26)
    assert signal_cost(i0, B, f, beta) == math.fsum([0.02, 0.01, 0.98, beta])
    assert signal_cost(i0, B, f, beta) == pytest.approx(1.01 + beta)
    assert signal_cost(i1, L, f, beta) == 0.01 + beta
    assert signal_cost(SignalSpec((9,), B), B, f, beta) == beta


def test_all_constant():
    tok = optimize(flat(np.full(64, np.inf)))
    assert len(tok.signals) == 64 and tok.config == (C,) * 8
    assert all(len(s) == 1 for s in tok.signals)
    assert tok.cost == math.fsum([0.6] * 64)


def fig_f(signals, join=0.01, split=0.98):
    """Likelihoods that make `signals` the cheapest tokenization."""
    f = {B: np.full(64, split), L: np.full(64, split)}
    owned = set()
    for s in signals:
        owned |= set(s.bit_indices)
        for i in s.bit_indices[:-1]:
            f[s.endianness][i] = join
    for e in (B, L):
        for i in set(range(64)) - owned:
            f[e][i] = np.inf
    return flat(f[B], f[L])


def test_figure_style_example():
    truth = [
        SignalSpec(walk(8, 16, L), L),
        SignalSpec(walk(24, 16, L), L),
        SignalSpec(walk(44, 12, L), L),
        SignalSpec(walk(48, 12, B), B),
        SignalSpec((60, 61, 62, 63), B),
    ]
    tok = optimize(fig_f(truth))
    live = [s for s in tok.signals if len(s) > 1]
    assert set(live) == set(truth)
    multi = [s for s in live if len(s.bytes_spanned) > 1]
    assert sorted(s.endianness.name for s in multi) == ["BIG", "LITTLE", "LITTLE", "LITTLE"]
    assert sum(len(s) == 4 for s in live) == 1


def test_strict_threshold_and_ties():
    f = np.full(64, np.inf)
    f[0] = 0.6  # exactly beta: join at the per-bit stage
    tok = optimize(flat(f))
    assert SignalSpec((0, 1), B) in tok.signals
    cost, cuts = optimize_for_config(flat(f), (C,) * 8, 0.6)
    assert not cuts[0]
    f[0] = 0.6000001
    assert SignalSpec((0,), B) in optimize(flat(f)).signals


def _tok(n_signals, n_little, key_cfg):
    sigs = tuple(SignalSpec((i,), B) for i in range(n_signals))
    if n_little:
        sigs += (SignalSpec((15, 0), L),)
    return Tokenization(sigs, (B,) * 8, 1.0, key_cfg)


def test_tie_break_examples():
    a, b = _tok(5, 0, (C,) * 8), _tok(6, 0, (C,) * 8)
    assert tie_break([a, b]) is b
    a, b = _tok(5, 1, (C,) * 8), _tok(6, 0, (C,) * 8)
    assert tie_break([a, b]).n_little_multibyte == 0
    a, b = _tok(5, 0, (JB,) + (C,) * 7), _tok(5, 0, (C,) * 8)
    assert tie_break([a, b]) is b and config_key(b.config) == 0
    with pytest.raises(ValueError):
        tie_break([])


def test_little_preferred_only_when_cheaper():
    # a tie between a byte-0/1 LITTLE join and a cut resolves towards the cut
    f_b = np.full(64, np.inf)
    f_l = np.full(64, np.inf)
    f_l[15] = 0.6
    tok = optimize(flat(f_b, f_l), 0.6)
    assert len(tok.signals) == 64


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.3, 0.6, 0.9]))
def test_optimum_properties(seed, beta):
    rng = np.random.default_rng(seed)
    const = rng.random(64) < 0.3
    f = random_f(rng, const)
    tok = optimize(f, beta)
    tok.validate()
    assert tok.cost == tokenization_cost(tok, f, beta)
    by_signal = math.fsum(signal_cost(s, tok.byte_endianness, f, beta) for s in tok.signals)
    assert math.isclose(tok.cost, by_signal, rel_tol=1e-12)
    for i in np.nonzero(const)[0]:
        assert SignalSpec((int(i),), tok.byte_endianness[i // 8]) in tok.signals


def test_brute_force_two_bytes():
    rng = np.random.default_rng(11)
    const = np.ones(64, dtype=bool)
    const[:16] = False
    for beta in (0.3, 0.6, 0.9):
        for _ in range(5):
            f = random_f(rng, const)
            assert optimize(f, beta).cost == brute_force_min(f, beta, [0, 1])


def test_assemble_little_chain():
    v = (C, JL, JL) + (C,) * 5
    cuts = [False] * 64
    tok = assemble(v, cuts)
    tok.validate()
    assert SignalSpec(walk(16, 24, L), L) in tok.signals
