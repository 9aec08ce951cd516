import numpy as np
import pytest

from canrev.dbcio import MessageDefinition, SignalDefinition, write_dbc
from canrev.ingest import partition_traces, serialize_candump
from canrev.interpret import fit_linear, translate_bits
from canrev.model import Endianness
from canrev.synth import (
    DidSpec,
    GeneratorRangeError,
    RecipeError,
    SignalGenerator,
    generate_did_traces,
    generate_log,
    generate_tracks,
    parse_recipe,
    synthesize,
)

B, L = Endianness.BIG, Endianness.LITTLE


def one(sig, kind, rate=10.0, duration=1.0, seed=0, **params):
    m = MessageDefinition(0x10, "M", 8, (sig,))
    gens = {("M", sig.name): SignalGenerator(kind, params, 1)}
    return m, generate_log([m], gens, duration, {"M": rate}, seed)


def test_counter_bytes():
    _, log = one(SignalDefinition("C", 0, 8), "counter")
    assert len(log) == 10
    assert [f.data[0] for f in log.frames] == list(range(10))


def test_signed_sine_round_trip():
    sig = SignalDefinition("S", 4, 12, signed=True)
    m = MessageDefinition(0x10, "M", 8, (sig,))
    gens = {("M", "S"): SignalGenerator("sine", {"amplitude": 1800, "period": 3.0}, 1)}
    tracks = generate_tracks([m], gens, 20.0, {"M": 50}, 0)
    from canrev.synth import tracks_to_log

    tr = partition_traces(tracks_to_log(tracks))[0x10]
    got = translate_bits(tr.bits, sig.bit_indices, True)
    assert np.array_equal(got, tracks[0].raw["S"])
    assert got.min() < 0 < got.max()


def test_little_endian_bytes_swapped():
    fields = {}
    for e in (B, L):
        start = 0 if e is B else 8
        _, log = one(SignalDefinition("R", start, 16, e), "counter", rate=50, duration=10, step=257)
        fields[e] = [f.data[:2] for f in log.frames]
    assert all(b == l[::-1] for b, l in zip(fields[B], fields[L]))


def test_determinism_and_seed(corpus):
    again = synthesize(seed=0)
    assert serialize_candump(again.log) == serialize_candump(corpus.log)
    other = synthesize(seed=1)
    assert serialize_candump(other.log) != serialize_candump(corpus.log)
    assert write_dbc(other.messages) == write_dbc(corpus.messages)


def test_corpus_shape(corpus, corpus_traces):
    assert len(corpus_traces) == 8
    assert all(len(t) == 2000 for t in corpus_traces.values())
    assert {s.endianness for m in corpus.messages for s in m.signals} == {B, L}
    assert any(s.signed for m in corpus.messages for s in m.signals)


def test_pack_translate_exact(corpus, corpus_traces):
    for tr in corpus.tracks:
        bits = corpus_traces[tr.message.arbitration_id].bits
        for s in tr.message.signals:
            assert np.array_equal(translate_bits(bits, s.bit_indices, s.signed), tr.raw[s.name])


def test_range_error_names_signal():
    with pytest.raises(GeneratorRangeError, match="M.C"):
        one(SignalDefinition("C", 0, 4), "constant", value=99)


def recipe(extra: str) -> str:
    m = MessageDefinition(0x10, "M", 8, (SignalDefinition("A", 0, 8), SignalDefinition("B", 8, 16)))
    return write_dbc([m]) + extra


def test_recipe_errors_carry_line_numbers():
    text = recipe("DURATION_ 5\nRATE_ M 10\nGEN_ M A counter 1\nGEN_ M Q counter 2\n")
    lineno = text.splitlines().index("GEN_ M Q counter 2") + 1
    with pytest.raises(RecipeError) as ei:
        parse_recipe(text)
    assert ei.value.lineno == lineno and f"line {lineno}" in str(ei.value)
    with pytest.raises(RecipeError, match="no GEN_"):
        parse_recipe(recipe("DURATION_ 5\nRATE_ M 10\nGEN_ M A counter 1\n"))
    with pytest.raises(RecipeError, match="DURATION_"):
        parse_recipe(recipe("RATE_ M 10\nGEN_ M A counter 1\nGEN_ M B counter 1\n"))
    with pytest.raises(RecipeError, match="not key=value"):
        parse_recipe(recipe("DURATION_ 5\nRATE_ M 10\nGEN_ M A counter step 1\nGEN_ M B counter 1\n"))


def test_unknown_kind():
    with pytest.raises(ValueError, match="unknown generator kind"):
        SignalGenerator("zigzag")


def _did_fit(sigma, a=2.0, b=3.0):
    text = recipe(
        "DURATION_ 60\nRATE_ M 20\nGEN_ M A counter 1\n"
        "GEN_ M B sine center=30000 amplitude=20000 period=13 2\n"
        f"DID_ M B X - {a} {b} 5 {sigma}\n"
    )
    c = synthesize(text, seed=0)
    d = c.dids[0]
    tr = c.tracks[0]
    x = np.interp(d.timestamps, tr.timestamps, tr.physical["B"])
    return fit_linear(x, d.values), d


def test_did_affine_exact():
    (a, b, r2), d = _did_fit(0.0)
    assert d.unit == "" and len(d) >= 200
    assert a == pytest.approx(2.0, rel=1e-9) and b == pytest.approx(3.0, rel=1e-6)
    assert r2 == pytest.approx(1.0, abs=1e-12)
    (a, b, r2), _ = _did_fit(0.0, 1.0, 0.0)
    assert (round(a, 9), round(b, 6)) == (1.0, 0.0)


def test_did_noise_snr():
    # signal std ~ 2 * 20000 / sqrt(2) = 28284; 20 dB SNR -> sigma 2828
    (a, b, r2), _ = _did_fit(2828.0)
    assert 0.5 < r2 < 1.0


def test_did_unknown_signal():
    c = synthesize(recipe("DURATION_ 5\nRATE_ M 10\nGEN_ M A counter 1\nGEN_ M B counter 1\n"))
    with pytest.raises(ValueError, match="unknown signal"):
        generate_did_traces(c.tracks, [DidSpec("M", "Z", "X", "")])
