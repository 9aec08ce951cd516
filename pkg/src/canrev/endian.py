"""Joint choice of signal boundaries and per-byte endianness.

A byte-boundary configuration ``v`` fixes, for every byte ``j``, what happens
after its last bit ``8j+7``: a big endian join into byte ``j+1`` (JB), a
little endian join into byte ``j-1`` (JL), or a cut (C).  For a fixed ``v``
the cheapest cut pattern on the 56 remaining gaps is found bit by bit (cut
iff ``f > beta``), so the global optimum is a scan over the valid ``v``.

Costs are sums of per-bit contributions taken with ``math.fsum`` so that
totals do not depend on summation order.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .boundary import BoundaryProbabilities
from .model import N_BITS, N_BYTES, Endianness, SignalSpec

B, L = Endianness.BIG, Endianness.LITTLE
BOUNDARY_BITS = tuple(8 * j + 7 for j in range(N_BYTES))


class Join(enum.IntEnum):
    # values double as base-3 digits of the config key
    C = 0
    JB = 1
    JL = 2


def is_valid_config(v) -> bool:
    if len(v) != N_BYTES:
        return False
    if v[0] is Join.JL or v[-1] is Join.JB:
        return False
    for j, x in enumerate(v):
        if x is Join.JB:
            for d in (1, 2):
                if j + d < N_BYTES and v[j + d] is Join.JL:
                    return False
    return True


@lru_cache(maxsize=None)
def _valid_configs() -> tuple[tuple[Join, ...], ...]:
    return tuple(v for v in itertools.product(Join, repeat=N_BYTES) if is_valid_config(v))


def enumerate_valid_configs() -> list[tuple[Join, ...]]:
    return list(_valid_configs())


def config_key(v) -> int:
    key = 0
    for x in v:
        key = 3 * key + int(x)
    return key


def forced_endianness(v) -> list[Endianness | None]:
    """Byte orders implied by the joins in `v`; None marks a free byte."""
    if not is_valid_config(v):
        raise ValueError(f"invalid byte boundary configuration {v}")
    out: list[Endianness | None] = [None] * N_BYTES
    for j, x in enumerate(v):
        if x is Join.JB:
            out[j] = out[j + 1] = B
        elif x is Join.JL:
            out[j - 1] = out[j] = L
    return out


def byte_orders(v) -> list[Endianness]:
    # free bytes default to big endian
    return [e or B for e in forced_endianness(v)]


@dataclass(frozen=True)
class Tokenization:
    signals: tuple[SignalSpec, ...]
    byte_endianness: tuple[Endianness, ...]
    cost: float
    config: tuple[Join, ...]

    @property
    def n_cuts(self) -> int:
        return len(self.signals)

    @property
    def n_little_multibyte(self) -> int:
        return sum(1 for s in self.signals if s.endianness is L and len(s.bytes_spanned) > 1)

    def tie_key(self):
        return (-self.n_cuts, self.n_little_multibyte, config_key(self.config))

    def lsb_mask(self) -> np.ndarray:
        chi = np.zeros(N_BITS, dtype=bool)
        for s in self.signals:
            chi[s.lsb] = True
        return chi

    def validate(self) -> None:
        seen = set()
        for s in self.signals:
            if seen & set(s.bit_indices):
                raise AssertionError("signals overlap")
            seen |= set(s.bit_indices)
            if len(s.bytes_spanned) > 1:
                for j in s.bytes_spanned:
                    if self.byte_endianness[j] is not s.endianness:
                        raise AssertionError(f"byte {j} order disagrees with a signal crossing it")
        if seen != set(range(N_BITS)):
            raise AssertionError("signals do not cover the payload")


def signal_cost(spec: SignalSpec, E, f: BoundaryProbabilities, beta: float) -> float:
    """Join penalty over every non-LSB bit plus one cut penalty.

    `E` is the per-byte order (sequence of 8) or a single order for all bytes.
    """
    if isinstance(E, Endianness):
        E = [E] * N_BYTES
    terms = [f[E[i // 8]][i] for i in spec.bit_indices[:-1]]
    if any(math.isinf(t) for t in terms):
        return math.inf
    return math.fsum(terms + [beta])


def _next_bit(i: int, v, cuts) -> int | None:
    if cuts[i]:
        return None
    if i % 8 != 7:
        return i + 1
    j = i // 8
    return 8 * (j + 1) if v[j] is Join.JB else 8 * (j - 1)


def assemble(v, cuts, cost: float = math.nan) -> Tokenization:
    """Build the signals implied by boundary config `v` and per-bit `cuts`."""
    cuts = [bool(c) for c in cuts]
    for j, x in enumerate(v):
        cuts[8 * j + 7] = x is Join.C
    E = byte_orders(v)
    nxt = [_next_bit(i, v, cuts) for i in range(N_BITS)]
    has_pred = [False] * N_BITS
    for n in nxt:
        if n is not None:
            has_pred[n] = True
    signals = []
    for start in range(N_BITS):
        if has_pred[start]:
            continue
        chain = [start]
        while nxt[chain[-1]] is not None:
            chain.append(nxt[chain[-1]])
        signals.append(SignalSpec(tuple(chain), E[start // 8]))
    signals.sort(key=lambda s: s.msb)
    return Tokenization(tuple(signals), tuple(E), cost, tuple(v))


def tokenization_cost(tok: Tokenization, f: BoundaryProbabilities, beta: float) -> float:
    chi = tok.lsb_mask()
    terms = []
    for i in range(N_BITS):
        if chi[i]:
            terms.append(beta)
        else:
            t = f[tok.byte_endianness[i // 8]][i]
            if math.isinf(t):
                return math.inf
            terms.append(t)
    return math.fsum(terms)


class ConfigCosts:
    """Per-bit optimal choices under each order, shared by all 577 configs."""

    def __init__(self, f: BoundaryProbabilities, beta: float):
        self.f = f
        self.beta = beta
        self.cut = {}
        self.term = {}
        for e in Endianness:
            fe = f[e]
            inf = np.isinf(fe)
            # strict inequality: f == beta joins
            cut = inf | (fe > beta)
            self.cut[e] = cut
            self.term[e] = [beta if cut[i] else float(fe[i]) for i in range(N_BITS)]

    def config(self, v):
        """Cost and cut pattern of the best tokenization with boundaries `v`, or None."""
        E = byte_orders(v)
        terms = []
        cuts = [False] * N_BITS
        for j in range(N_BYTES):
            e = E[j]
            base = 8 * j
            term_e = self.term[e]
            cut_e = self.cut[e]
            for i in range(base, base + 7):
                terms.append(term_e[i])
                cuts[i] = bool(cut_e[i])
            i = base + 7
            x = v[j]
            if x is Join.C:
                terms.append(self.beta)
                cuts[i] = True
            else:
                val = self.f[B if x is Join.JB else L][i]
                if math.isinf(val):
                    return None
                terms.append(float(val))
        return math.fsum(terms), cuts


def optimize_for_config(f: BoundaryProbabilities, v, beta: float = 0.6):
    """Thresholded tokenization for a fixed configuration: (cost, cuts) or None if infeasible."""
    return ConfigCosts(f, beta).config(tuple(v))


def tie_break(candidates: list[Tokenization]) -> Tokenization:
    """Most signals, then fewest multi-byte little endian signals, then lowest config key."""
    if not candidates:
        raise ValueError("no candidate tokenizations")
    return min(candidates, key=Tokenization.tie_key)


def optimize(f: BoundaryProbabilities, beta: float = 0.6) -> Tokenization:
    prep = ConfigCosts(f, beta)
    best_cost = math.inf
    tied: list[tuple] = []
    for v in _valid_configs():
        res = prep.config(v)
        if res is None:
            continue
        cost, cuts = res
        if cost < best_cost:
            best_cost = cost
            tied = [(v, cuts)]
        elif cost == best_cost:
            tied.append((v, cuts))
    tok = tie_break([assemble(v, cuts, best_cost) for v, cuts in tied])
    tok.validate()
    return tok
