import numpy as np
import pytest

from canrev.cli import main
from canrev.dbcio import read_dbc
from canrev.forest import ForestModel


@pytest.fixture(scope="module")
def synth_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--out", str(d / "corpus"), "--seed", "0"]) == 0
    return d


def test_synth_outputs(synth_files, tmp_path):
    for ext in ("log", "dbc", "did.csv"):
        assert (synth_files / f"corpus.{ext}").exists()
    assert (synth_files / "corpus.log").read_text().startswith("# canrev")
    assert main(["synth", "--out", str(tmp_path / "s1"), "--seed", "1"]) == 0
    assert (tmp_path / "s1.log").read_text() != (synth_files / "corpus.log").read_text()
    assert (tmp_path / "s1.dbc").read_text() == (synth_files / "corpus.dbc").read_text()


def test_synth_range_error(tmp_path, capsys):
    r = tmp_path / "bad.txt"
    r.write_text(
        'BO_ 16 M: 8 Vector__XXX\n SG_ A : 7|4@0+ (1,0) [0|15] "" Vector__XXX\n'
        "DURATION_ 1\nRATE_ M 10\nGEN_ M A constant value=40 1\n"
    )
    assert main(["synth", str(r), "--out", str(tmp_path / "x")]) == 2
    assert "M.A" in capsys.readouterr().err


def test_decode_with_dids_and_determinism(synth_files, tmp_path):
    log = str(synth_files / "corpus.log")
    did = str(synth_files / "corpus.did.csv")
    outs = []
    for k in range(2):
        out = tmp_path / f"d{k}.dbc"
        assert main(["decode", log, "--out", str(out), "--did-csv", did, "--jobs", str(1 + k)]) == 0
        outs.append((out.read_bytes(), (tmp_path / f"d{k}.dbc.report.txt").read_bytes()))
    assert outs[0] == outs[1]
    msgs = read_dbc(outs[0][0].decode())
    assert len(msgs) == 8
    names = {s.name for m in msgs for s in m.signals}
    assert {"ENGINE_RPM", "VEHICLE_SPEED", "THROTTLE_POSITION"} <= names
    rpm = next(s for m in msgs for s in m.signals if s.name == "ENGINE_RPM")
    assert rpm.scale == pytest.approx(0.25) and rpm.unit == "rpm"
    report = outs[0][1].decode()
    assert report.startswith("# canrev") and "did matches:" in report and "beta=0.6" in report


def test_decode_all_constant(tmp_path):
    log = tmp_path / "c.log"
    log.write_text("".join(f"({k}.000000) can0 123#0000000000000000\n" for k in range(5)))
    out = tmp_path / "c.dbc"
    assert main(["decode", str(log), "--out", str(out)]) == 0
    assert "SG_" not in out.read_text()
    assert "0x123: 0-63" in (tmp_path / "c.dbc.report.txt").read_text()


def test_missing_file(tmp_path, capsys):
    assert main(["decode", str(tmp_path / "nope.log"), "--out", str(tmp_path / "o.dbc")]) == 2
    assert "nope.log" in capsys.readouterr().err


def test_bad_threshold(synth_files, tmp_path):
    assert main(["decode", str(synth_files / "corpus.log"), "--out", str(tmp_path / "o"), "--beta", "1.5"]) == 2


def test_eval_loop(synth_files, tmp_path, capsys):
    log, dbc = str(synth_files / "corpus.log"), str(synth_files / "corpus.dbc")
    assert main(["eval", log, dbc, "--sets", "c,f-,f+", "--out", str(tmp_path / "ev")]) == 0
    text = capsys.readouterr().out
    assert text.split("\n")[0].split()[1:4] == ["c", "P", "c"]
    rows = {}
    for line in (tmp_path / "ev.boundary.csv").read_text().splitlines()[2:]:
        alg, reg, p, r, f = line.split(",")[:5]
        rows[alg, reg] = float(f)
    assert rows["can-d", "f-"] > rows["constant", "f-"] == 0.0
    assert (tmp_path / "ev.l1.csv").read_text().splitlines()[1] == "algorithm,l1_raw,l1_mean,pairs"


def test_eval_unknown_algorithm(synth_files, capsys):
    log, dbc = str(synth_files / "corpus.log"), str(synth_files / "corpus.dbc")
    assert main(["eval", log, dbc, "--algorithms", "can-d,magic"]) == 2
    err = capsys.readouterr().err
    assert "magic" in err and "tang" in err


def test_train_single_and_loocv(synth_files, tmp_path, capsys):
    pairs = []
    for seed in (3, 4):
        p = tmp_path / f"s{seed}"
        assert main(["synth", "--out", str(p), "--seed", str(seed)]) == 0
        pairs += ["--pair", f"{p}.log", f"{p}.dbc"]
    m1 = tmp_path / "m1.forest"
    assert main(["train", *pairs[:3], "--out", str(m1), "--trees", "10"]) == 0
    assert "LOOCV skipped" in capsys.readouterr().out
    m2 = tmp_path / "m2.forest"
    assert main(["train", *pairs[:3], "--out", str(m2), "--trees", "10"]) == 0
    assert ForestModel.loads(m1.read_text()).digest() == ForestModel.loads(m2.read_text()).digest()
    m3 = tmp_path / "m3.forest"
    assert main(["train", *pairs, "--out", str(m3), "--trees", "10"]) == 0
    loocv = (tmp_path / "m3.forest.loocv.csv").read_text().splitlines()
    assert loocv[1] == "fold,regime,precision,recall,f_score"
    assert len(loocv) == 2 + 2 * 3
    out = tmp_path / "f.dbc"
    assert main(["decode", f"{tmp_path / 's3'}.log", "--out", str(out), "--classifier", f"forest:{m3}"]) == 0
    assert read_dbc(out.read_text())


def test_train_mismatch(synth_files, tmp_path):
    other = tmp_path / "o.dbc"
    other.write_text('BO_ 2047 X: 8 Vector__XXX\n SG_ A : 7|4@0+ (1,0) [0|15] "" Vector__XXX\n')
    assert main(["train", "--pair", str(synth_files / "corpus.log"), str(other), "--out", str(tmp_path / "m")]) == 2


def test_did_rules_on_log(tmp_path):
    # engine speed responses (PID 0x0C) interleaved with a counter id
    lines = []
    for k in range(200):
        t = k * 0.01
        lines.append(f"({t:.6f}) can0 100#{k % 256:02X}00000000000000")
        if k % 10 == 5:
            rpm = 4 * (k * 5)
            lines.append(f"({t + 0.001:.6f}) can0 7E8#04410C{rpm >> 8:02X}{rpm & 255:02X}000000")
    log = tmp_path / "d.log"
    log.write_text("\n".join(lines) + "\n")
    out = tmp_path / "d.dbc"
    assert main(["decode", str(log), "--out", str(out), "--did-rules", "default", "--strip-diagnostics"]) == 0
    msgs = read_dbc(out.read_text())
    assert [m.arbitration_id for m in msgs] == [0x100]
