import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from canrev.ingest import (
    CandumpError,
    CanLog,
    DidDecodeRule,
    DidFormatError,
    default_did_rules,
    extract_did_traces,
    load_did_csv,
    load_did_rules,
    parse_candump,
    partition_traces,
    serialize_candump,
    strip_diagnostics,
    write_did_csv,
)
from canrev.model import CanFrame


def test_parse_example_line():
    log = parse_candump("(1600000000.000100) can0 123#DEADBEEF\n")
    (f,) = log.frames
    assert f.arbitration_id == 0x123 and f.original_length == 4
    assert np.packbits(f.payload_bits[:32]).tobytes() == bytes.fromhex("DEADBEEF")
    assert f.timestamp == pytest.approx(1600000000.0001)


def test_parse_empty_payload():
    (f,) = parse_candump("(1.0) can0 7E8#").frames
    assert f.original_length == 0 and not f.payload_bits.any()


def test_malformed_lenient_and_strict():
    text = "# header\n\n(1.0) can0 100#01\ngarbage\n(2.0) can0 100#02\n"
    log = parse_candump(text)
    assert len(log) == 2 and len(log.malformed) == 1
    with pytest.raises(CandumpError) as exc:
        parse_candump(text, strict=True)
    assert exc.value.lineno == 4


def test_extended_id():
    (f,) = parse_candump("(1.0) can1 18FEF100#0102").frames
    assert f.extended and f.arbitration_id == 0x18FEF100 and f.interface == "can1"


def test_unsorted_input_is_sorted_stably():
    log = parse_candump("(2.0) can0 100#01\n(1.0) can0 100#02\n(1.0) can0 100#03\n")
    assert [f.data for f in log.frames] == [b"\x02", b"\x03", b"\x01"]


def test_partition_examples():
    log = parse_candump("(1.0) can0 00A#01\n(1.5) can0 00B#01\n(2.0) can0 00A#02\n")
    tr = partition_traces(log)
    assert sorted(tr) == [0xA, 0xB]
    assert len(tr[0xA]) == 2 and len(tr[0xB]) == 1
    assert np.all(np.diff(tr[0xA].timestamps) >= 0)
    assert partition_traces(CanLog([])) == {}


frames = st.builds(
    CanFrame,
    timestamp=st.integers(0, 10**9).map(lambda u: u / 1e6),
    arbitration_id=st.integers(0, 0x7FF),
    data=st.binary(max_size=8),
)


@given(st.lists(frames, max_size=30))
def test_candump_round_trip(fs):
    log = CanLog(fs)
    text = serialize_candump(log, header="h")
    again = parse_candump(text)
    assert serialize_candump(again, header="h") == text
    assert [(f.arbitration_id, f.data) for f in again.frames] == [(f.arbitration_id, f.data) for f in log.frames]


def test_line_accounting():
    text = "(1.0) can0 100#01\n(1.1) can0 7E8#03410D3C\nbad line\n(1.2) can0 101#\n"
    log = parse_candump(text)
    stripped, n = strip_diagnostics(log, default_did_rules())
    total = sum(len(t) for t in partition_traces(stripped).values())
    assert total + len(log.malformed) + n == log.data_lines == 4


def test_j1979_speed():
    rules = [r for r in default_did_rules() if r.pid == 0x0D and r.response_id == 0x7E8]
    assert rules[0].decode(bytes([0x03, 0x41, 0x0D, 0x3C, 0, 0, 0, 0])) == 60


def test_j1979_rpm():
    rules = [r for r in default_did_rules() if r.pid == 0x0C and r.response_id == 0x7E8]
    assert rules[0].decode(bytes([0x04, 0x41, 0x0C, 0x1A, 0xF8, 0, 0, 0])) == (256 * 26 + 248) / 4 == 1726


def _did_log():
    rows = [
        "(1.0) can0 7E8#03410D3C",
        "(1.5) can0 7E8#03410D3D",
        "(2.0) can0 7E8#04410C1AF8",
        "(2.5) can0 123#00",
        "(3.0) can0 7E8#04410C1AF9",
    ]
    return parse_candump("\n".join(rows))


def test_extract_did_traces():
    traces = {t.did_label: t for t in extract_did_traces(_did_log(), default_did_rules())}
    assert traces["VEHICLE_SPEED"].values.tolist() == [60, 61]
    assert traces["ENGINE_RPM"].values.tolist() == [1726, 1726.25]
    assert traces["ENGINE_RPM"].unit == "rpm"


def test_extract_no_matches():
    assert extract_did_traces(parse_candump("(1.0) can0 123#00"), default_did_rules()) == []


def test_extract_invariant_to_interleaving():
    log = _did_log()
    shuffled = CanLog(list(reversed(log.frames)))
    a = extract_did_traces(log, default_did_rules())
    b = extract_did_traces(shuffled, default_did_rules())
    assert [(t.did_label, t.values.tolist()) for t in a] == [(t.did_label, t.values.tolist()) for t in b]


def test_short_response_records_error():
    rule = DidDecodeRule(0x7E8, 0x41, 0x0C, "ENGINE_RPM", "rpm", 1, 4, 0, n_bytes=2)
    errors = []
    extract_did_traces(parse_candump("(1.0) can0 7E8#04410C1A"), [rule], errors)
    assert len(errors) == 1


def test_load_did_rules_and_errors():
    rules = load_did_rules("# c\n0x7E8 0x41 0x0D VEHICLE_SPEED km/h 1 1 0\n")
    assert rules[0].label == "VEHICLE_SPEED" and rules[0].a_den == 1
    with pytest.raises(DidFormatError):
        load_did_rules("0x7E8 0x41 0x0D X u 1 0 0\n")


def test_did_csv_examples():
    text = "timestamp,label,unit,value\n2.0,SPEED,km/h,3\n1.0,SPEED,km/h,2\n"
    (tr,) = load_did_csv(text)
    assert tr.timestamps.tolist() == [1.0, 2.0] and tr.values.tolist() == [2.0, 3.0]
    assert load_did_csv("timestamp,label,unit,value\n") == []
    with pytest.raises(DidFormatError, match="row 2"):
        load_did_csv("timestamp,label,unit,value\nx,SPEED,km/h,3\n")
    assert load_did_csv(write_did_csv([tr], header="h"))[0].values.tolist() == [2.0, 3.0]
