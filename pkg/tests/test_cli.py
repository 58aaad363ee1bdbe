import csv
import io
import json
import subprocess
import sys

import pytest

from scrambling import cli


def _run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_scramble_rows_and_summary(tmp_path, capsys):
    out = tmp_path / "r.csv"
    argv = ["scramble", "--model", "matching", "--n", "64", "--depth", "10", "--trials", "12", "--seed", "7", "--out", str(out)]
    assert _run(argv, capsys)[0] == 0
    rows = _rows(out)
    assert [r["record"] for r in rows] == ["trial"] * 12 + ["summary"]
    assert all(r["seed"] == "7" and len(r["config_hash"]) == 16 for r in rows)
    assert [int(r["trial"]) for r in rows[:-1]] == list(range(12))
    assert all(int(r["depth"]) == 10 and int(r["gates"]) == 320 for r in rows[:-1])
    assert not (tmp_path / "r.csv.partial").exists()


def test_determinism_across_workers(tmp_path, capsys):
    base = ["scramble", "--model", "sequential", "--n", "24", "--t", "200", "--trials", "6", "--seed", "3"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert _run(base + ["--out", str(a)], capsys)[0] == 0
    assert _run(base + ["--out", str(b), "--workers", "2"], capsys)[0] == 0
    data = lambda p: [ln for ln in p.read_text().splitlines() if not ln.startswith("summary")]
    assert data(a) == data(b)


def test_weightchain_single_json(capsys):
    code, out, _ = _run(["weightchain", "--n", "64", "--from", "1", "--t", "20000", "--f", "0.1"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 1
    rec = json.loads(lines[0])
    assert 0 <= rec["tail"] < 1e-20
    assert rec["first_term"] > 0 and rec["valid_regime"] is True


def test_config_round_trip(tmp_path, capsys):
    argv = ["subset", "--n", "32", "--depth", "6", "--f", "0.25", "--trials", "40", "--seed", "11", "--exact"]
    code, text, _ = _run(argv + ["--dump-config"], capsys)
    assert code == 0
    cfg = tmp_path / "c.cfg"
    cfg.write_text(text)
    code, text2, _ = _run(["subset", "--config", str(cfg), "--dump-config"], capsys)
    assert text2 == text
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    _run(argv + ["--out", str(a)], capsys)
    _run(["subset", "--config", str(cfg), "--out", str(b)], capsys)
    strip = lambda rows: [{k: v for k, v in r.items() if k != "wall_time"} for r in rows]
    assert strip(_rows(a)) == strip(_rows(b))


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n = 32\nt = 100\ntrials = 3\n")
    code, text, _ = _run(["parallelize", "--config", str(cfg), "--t", "50", "--dump-config"], capsys)
    assert code == 0 and "t = 50" in text and "n = 32" in text


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n = 32\nbogus = 1\n")
    with pytest.raises(SystemExit):
        cli.main(["parallelize", "--config", str(cfg), "--t", "5"])


def test_output_dir_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path / "res"))
    assert _run(["parallelize", "--n", "16", "--t", "30", "--trials", "4", "--out", "p.csv"], capsys)[0] == 0
    assert len(_rows(tmp_path / "res" / "p.csv")) == 5


@pytest.mark.parametrize("fmt,marker", [("csv", "# incomplete"), ("json", '{"record": "incomplete"}')])
def test_incomplete_marker(tmp_path, monkeypatch, capsys, fmt, marker):
    func, fields = cli.TRIAL_FUNCS["parallelize"]

    def flaky(cfg, trial):
        if trial == 3:
            raise RuntimeError("boom")
        return func(cfg, trial)

    monkeypatch.setitem(cli.TRIAL_FUNCS, "parallelize", (flaky, fields))
    out = tmp_path / "p.out"
    code, _, err = _run(["parallelize", "--n", "16", "--t", "30", "--trials", "6", "--format", fmt, "--out", str(out)], capsys)
    assert code == 1 and "boom" in err
    assert not out.exists()
    lines = (tmp_path / "p.out.partial").read_text().splitlines()
    assert lines[-1] == marker
    assert sum(1 for ln in lines if "trial" in ln and "parallelize" in ln) == 3


@pytest.mark.parametrize("argv,msg", [
    (["scramble", "--n", "1", "--depth", "3"], "n must be >= 2"),
    (["subset", "--n", "8", "--depth", "3", "--f", "1.5"], "f must lie in (0, 1)"),
    (["weightchain", "--n", "8", "--t", "3", "--f", "0.6"], "0 < f < 1/2"),
    (["code-distance", "--n", "20", "--t", "3"], "n must be <= 16"),
    (["gap", "--n", "9"], "n must lie in 2..8"),
    (["decouple", "--n", "4", "--m", "2", "--depth", "1", "--subset-size", "5"], "subset-size"),
])
def test_invalid_config(argv, msg, capsys):
    code, _, err = _run(argv, capsys)
    assert code == 2
    assert msg in err


def test_gap_hitting_decouple_code_distance(capsys):
    code, out, _ = _run(["gap", "--n", "3,4", "--graph", "line", "--format", "json"], capsys)
    recs = [json.loads(ln) for ln in out.splitlines()]
    assert code == 0 and [r["n"] for r in recs[:-1]] == [3, 4]
    code, out, _ = _run(["hitting", "--a", "4", "--p", "0.5", "--format", "json"], capsys)
    assert code == 0 and json.loads(out)["exact"] == pytest.approx(0.8)
    code, out, _ = _run(["decouple", "--n", "8", "--m", "1", "--depth", "0", "--subset-size", "1",
                         "--trials", "3", "--format", "json"], capsys)
    recs = [json.loads(ln) for ln in out.splitlines()]
    assert code == 0 and all(r["trace_distance"] in (1.0, 1.5) for r in recs[:-1])
    code, out, _ = _run(["code-distance", "--n", "6", "--m", "1", "--t", "60", "--trials", "2", "--format", "json"], capsys)
    assert code == 0 and all(r["distance"] >= 1 for r in map(json.loads, out.splitlines()))


def test_verify_fast_and_mutation(capsys):
    code, out, _ = _run(["verify"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[-1]["ok"] == "1"
    code, out, err = _run(["verify", "--mutate"], capsys)
    assert code == 1
    assert "stationarity" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "scrambling", "hitting", "--a", "3", "--p", "0.5", "--format", "json"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["exact"] == pytest.approx(0.75)
