import csv
import io
import json

import numpy as np
import pytest

from capdetect import io as qio
from capdetect.channels import apply, complement, identity_channel
from capdetect.cli import load_manifest, main, rank_scan, reproduce_table
from capdetect.detector import detect
from capdetect.numerics import DEFAULT_TOL, ValidationError, random_density_matrix
from capdetect.zoo import FamilySpec, MadParams, family_pair, make_werner_holevo

from conftest import random_channel


def test_fmt_real():
    assert qio.fmt_real(0.25) == "2.50000000000e-01"
    assert qio.fmt_real(-0.0) == "0.00000000000e+00"
    assert len(qio.fmt_real(np.pi).split("e")[0].replace(".", "").lstrip("-")) == 12


def test_channel_round_trip(tmp_path, rng):
    ch = random_channel(2, 3, 2, rng)
    path = tmp_path / "ch.json"
    qio.save_channel(ch, path)
    back = qio.load_channel(path)
    assert np.allclose(back.kraus, ch.kraus)
    rho = random_density_matrix(2, rng)
    assert np.allclose(apply(back, rho), apply(ch, rho))


def test_channel_json_errors(tmp_path):
    with pytest.raises(ValidationError, match="missing"):
        qio.channel_from_dict({"d_in": 2, "d_out": 2})
    with pytest.raises(ValidationError, match="shape"):
        qio.channel_from_dict({"d_in": 2, "d_out": 2, "kraus": [[[1, 0, 0], [0, 1, 0]]]})
    with pytest.raises(ValidationError, match="trace preserving"):
        qio.channel_from_dict({"d_in": 2, "d_out": 2, "kraus": [[[1, 0], [0, 0.5]]]})
    with pytest.raises(ValidationError):
        qio.channel_from_dict({"d_in": 2, "d_out": 2, "kraus": [[[1, "x"], [0, 1]]]})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ValidationError, match="invalid JSON"):
        qio.load_channel(bad)
    with pytest.raises(ValidationError, match="not found"):
        qio.load_channel(tmp_path / "missing.json")


def test_complex_entries_accepted():
    ch = qio.channel_from_dict({"d_in": 1, "d_out": 1, "kraus": [[[[0.0, 1.0]]]]})
    assert ch.kraus[0, 0, 0] == 1j


def test_family_round_trip():
    specs = [
        FamilySpec("depolarizing", 3, {"p": 0.25}),
        FamilySpec("mad", 3, {"gamma": MadParams(3, {(1, 0): 0.4, (2, 1): 0.2})}),
        FamilySpec("pauli", 2, {"P": np.array([[0.5, 0.0], [0.25, 0.25]])}),
        FamilySpec("dephasing", 2, {"B": np.array([[1.0, 0.3j], [-0.3j, 1.0]])}),
    ]
    for spec in specs:
        back = qio.family_from_dict(json.loads(json.dumps(qio.family_to_dict(spec))))
        assert back.family == spec.family and back.d == spec.d
        x = random_density_matrix(spec.d, np.random.default_rng(0))
        a, b = family_pair(spec).channel, family_pair(back).channel
        assert np.allclose(apply(a, x), apply(b, x))
    with pytest.raises(ValidationError):
        qio.family_from_dict({"family": "depolarizing"})


def test_report_csv_columns():
    spec = FamilySpec("werner_holevo", 4)
    rep = detect(family_pair(spec), family=spec)
    rows = list(csv.DictReader(io.StringIO(qio.report_to_csv(rep))))
    assert tuple(rows[0]) == qio.CSV_COLUMNS
    assert rows[0]["verdict"] == "POSITIVE_Q_COMPLEMENT"
    assert rows[0]["rule_fired"] == "trace_test"
    mant = rows[0]["best_gap_rev"].split("e")[0].replace(".", "").lstrip("-")
    assert len(mant) == 12
    d = qio.report_to_dict(rep)
    assert json.loads(json.dumps(d))["verdict"] == "POSITIVE_Q_COMPLEMENT"


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def test_detect_command(tmp_path, capsys):
    code, out = run(["detect", "--family", "werner-holevo", "--d", "4", "--haar-samples", "5",
                     "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    summary = json.loads(out.out)
    assert summary["verdict"] == "POSITIVE_Q_COMPLEMENT"
    assert (tmp_path / "report.json").exists() and (tmp_path / "report.csv").exists()
    code, out = run(["detect", "--family", "werner-holevo", "--d", "4", "--haar-samples", "5",
                     "--format", "csv", "--out-dir", str(tmp_path)], capsys)
    assert out.out.splitlines()[0] == ",".join(qio.CSV_COLUMNS)


def test_detect_channel_file(tmp_path, capsys):
    path = tmp_path / "ch.json"
    qio.save_channel(make_werner_holevo(4), path)
    code, out = run(["detect", "--channel-file", str(path), "--haar-samples", "3",
                     "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    assert json.loads(out.out)["verdict"] == "POSITIVE_Q_COMPLEMENT"


def test_custom_probes(tmp_path, capsys):
    probes = tmp_path / "probes.json"
    probes.write_text(json.dumps([[0, 1], [[0.6, 0], [0, 0.8]]]))
    code, out = run(["detect", "--family", "dephasing", "--d", "2", "--b", "identity",
                     "--probes", str(probes), "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert [p["label"] for p in report["probes"]] == ["probes[0]", "probes[1]"]
    probes.write_text(json.dumps([[1, 0, 0]]))
    code, _ = run(["detect", "--family", "dephasing", "--d", "2", "--b", "identity",
                   "--probes", str(probes), "--out-dir", str(tmp_path)], capsys)
    assert code == 2


def test_input_errors(tmp_path, capsys):
    code, out = run(["detect", "--family", "depolarizing", "--d", "2", "--p", "2.0",
                     "--out-dir", str(tmp_path)], capsys)
    assert code == 2 and "qcap: error" in out.err
    code, _ = run(["detect", "--out-dir", str(tmp_path)], capsys)
    assert code == 2
    code, _ = run(["detect", "--family", "pauli", "--d", "2", "--out-dir", str(tmp_path)], capsys)
    assert code == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"d_in": 2, "d_out": 2, "kraus": [[[1, 0], [0, 0.5]]]}))
    code, out = run(["detect", "--channel-file", str(bad), "--out-dir", str(tmp_path)], capsys)
    assert code == 2 and "trace preserving" in out.err
    with pytest.raises(SystemExit) as exc:
        main(["reproduce", "nonsense"])
    assert exc.value.code == 2


def test_sweep_command(tmp_path, capsys):
    code, out = run(["sweep", "--family", "werner-holevo", "--d", "4", "--haar-samples", "3",
                     "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    payload = json.loads(out.out)
    assert payload["direction"] == "complement"
    assert min(payload["ic_values"]) > 0
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert rows[0] == "eps,ic_bits" and len(rows) == 1 + len(DEFAULT_TOL.eps_grid)


def test_verify_command(tmp_path, capsys):
    code, out = run(["verify", "--family", "unitary-dilation", "--d", "2", "--haar-samples", "3",
                     "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    payload = json.loads(out.out)
    assert payload["report"]["verdict"] == "BOTH_POSITIVE"
    assert {c["direction"] for c in payload["checks"]} == {"channel", "complement"}
    assert payload["all_passed"]


def test_rank_scan(tmp_path, capsys):
    code, out = run(["rank-scan", "--family", "werner-holevo", "--d", "5", "--haar-samples", "5",
                     "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    assert json.loads(out.out)["max_rank_found"] == 4
    res = rank_scan(complement(identity_channel(3)), DEFAULT_TOL.with_(haar_samples=5))
    assert res["max_rank_found"] == 1


def test_seed_env_override(tmp_path, capsys, monkeypatch):
    args = ["detect", "--family", "depolarizing", "--d", "2", "--p", "0.3", "--haar-samples", "2"]
    run(args + ["--seed", "5", "--out-dir", str(tmp_path / "a")], capsys)
    monkeypatch.setenv("QCAP_SEED", "5")
    run(args + ["--seed", "99", "--out-dir", str(tmp_path / "b")], capsys)
    ra = json.loads((tmp_path / "a" / "report.json").read_text())
    rb = json.loads((tmp_path / "b" / "report.json").read_text())
    assert ra == rb
    monkeypatch.setenv("QCAP_SEED", "abc")
    code, _ = run(args + ["--out-dir", str(tmp_path / "c")], capsys)
    assert code == 2


def test_reproduce_deterministic(tmp_path, capsys):
    for sub in ("a", "b"):
        code, _ = run(["reproduce", "werner-holevo", "--workers", "1", "--out-dir", str(tmp_path / sub)], capsys)
        assert code == 0
    a = (tmp_path / "a" / "reproduce_werner-holevo.csv").read_bytes()
    b = (tmp_path / "b" / "reproduce_werner-holevo.csv").read_bytes()
    assert a == b
    rows = list(csv.DictReader(io.StringIO(a.decode())))
    assert all(r["match"] == "true" for r in rows)


def test_manifest_tables():
    manifest = load_manifest()
    assert manifest["version"] == 1
    assert set(manifest["tables"]) == {
        "depolarizing", "transpose-depolarizing", "werner-holevo", "pauli",
        "mad", "dephasing", "cduc", "unitary-dilation",
    }
    with pytest.raises(ValidationError):
        reproduce_table("nonsense", DEFAULT_TOL)
