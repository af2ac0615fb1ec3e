import csv
import io
import json
import math
import subprocess
import sys

import pytest

from cocyclelab import __version__, catalog
from cocyclelab.cli import ENV_OUTPUT, main

GOLDEN_LOG = math.log((3 + math.sqrt(5)) / 2)


def _read_csv(path):
    lines = path.read_text().splitlines()
    meta = dict(line[2:].split("=", 1) for line in lines if line.startswith("# "))
    rows = list(csv.DictReader(io.StringIO("\n".join(l for l in lines if not l.startswith("#")))))
    return meta, rows


def test_spectrum_anosov_csv(tmp_path):
    code = main(["spectrum", "--example", "anosov_derivative", "--points", "3", "--n", "1024", "--output-dir", str(tmp_path)])
    assert code == 0
    meta, rows = _read_csv(tmp_path / "spectrum_anosov_derivative.csv")
    assert list(rows[0]) == ["n", "chi1", "chi2", "point"]
    assert meta["version"] == __version__
    assert len(meta["config_hash"]) == 16
    last = [r for r in rows if r["n"] == "1024"]
    assert len(last) == 3
    for r in last:
        assert float(r["chi1"]) == pytest.approx(GOLDEN_LOG, abs=1e-3)
        assert float(r["chi2"]) == pytest.approx(-GOLDEN_LOG, abs=1e-3)
    first = [r for r in rows if r["n"] == "16"]
    # convergence: the error at n = 1024 is no larger than at n = 16
    assert max(abs(float(r["chi1"]) - GOLDEN_LOG) for r in last) <= max(abs(float(r["chi1"]) - GOLDEN_LOG) for r in first) + 1e-12
    doc = json.loads((tmp_path / "spectrum_anosov_derivative.json").read_text())
    assert doc["_meta"]["config"]["example"] == "anosov_derivative"


def test_reruns_are_byte_identical(tmp_path):
    args = ["gap", "--example", "walters", "--points", "4", "--n", "1024"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--output-dir", str(a)]) == 0
    assert main(args + ["--output-dir", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir()) and names
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_config_hash_tracks_configuration(tmp_path):
    main(["spectrum", "--example", "identity", "--n", "64", "--output-dir", str(tmp_path / "a")])
    main(["spectrum", "--example", "identity", "--n", "128", "--output-dir", str(tmp_path / "b")])
    ha = _read_csv(tmp_path / "a" / "spectrum_identity.csv")[0]["config_hash"]
    hb = _read_csv(tmp_path / "b" / "spectrum_identity.csv")[0]["config_hash"]
    assert ha != hb


def test_gap_walters(tmp_path):
    assert main(["gap", "--example", "walters", "--points", "4", "--n", "2048", "--output-dir", str(tmp_path)]) == 0
    files = list(tmp_path.iterdir())
    assert any(p.suffix == ".csv" for p in files)


def test_regularity_twist_sample_y(tmp_path, capsys):
    code = main(["regularity", "--example", "twist_diagonal", "--sample-y", "0,1/4,1/2", "--n", "256",
                 "--output-dir", str(tmp_path)])
    assert code == 0
    payloads = [json.loads(p.read_text()) for p in tmp_path.glob("*.json")]
    assert payloads
    text = json.dumps(payloads)
    assert "y=1/4" in text or '"1/4"' in text


@pytest.mark.parametrize(
    "command, extra",
    [
        ("dominate", ["--example", "block_regular", "--n", "512", "--points", "4"]),
        ("oseledets", ["--example", "anosov_derivative", "--n", "100", "--points", "2"]),
        ("sacker-sell", ["--example", "identity", "--n", "256", "--points", "2"]),
        ("complete", ["--example", "periodic_pair", "--n", "256"]),
        ("witness", ["--example", "walters", "--n", "1024", "--points", "16"]),
    ],
)
def test_every_command_runs(tmp_path, command, extra):
    assert main([command] + extra + ["--output-dir", str(tmp_path)]) == 0
    assert list(tmp_path.iterdir())


def test_unknown_example_is_config_error(tmp_path, capsys):
    assert main(["spectrum", "--example", "nope", "--output-dir", str(tmp_path)]) == 2
    assert "unknown example" in capsys.readouterr().err


def test_bad_yaml_is_config_error(tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("example: [unclosed\n")
    assert main(["spectrum", "--config", str(cfg)]) == 2
    cfg.write_text("example: identity\ncolour: blue\n")
    assert main(["spectrum", "--config", str(cfg)]) == 2
    assert main(["spectrum", "--example", "identity", "--n", "1"]) == 2


def test_window_exhausted_is_runtime_error(tmp_path, capsys):
    code = main(["spectrum", "--example", "walters", "--level", "2", "--points", "2", "--n", "100", "--margin", "0",
                 "--output-dir", str(tmp_path)])
    assert code == 3
    assert "runtime error" in capsys.readouterr().err


def test_assert_expected_passes(tmp_path, capsys):
    code = main(["spectrum", "--example", "anosov_derivative", "--n", "256", "--assert-expected", "--output-dir", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "PASS anosov_derivative" in out and "FAIL" not in out


def test_assert_expected_fails_on_mismatch(tmp_path, capsys):
    code = main(["spectrum", "--example", "walters", "--level", "3", "--points", "4", "--n", "64",
                 "--assert-expected", "--output-dir", str(tmp_path)])
    assert code == 1
    assert "FAIL walters.dominated" in capsys.readouterr().out


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_OUTPUT, str(tmp_path / "env"))
    assert main(["spectrum", "--example", "identity", "--n", "32"]) == 0
    assert (tmp_path / "env" / "spectrum_identity.csv").exists()


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("example: rotation\nn: 64\npoints: 2\n")
    assert main(["spectrum", "--config", str(cfg), "--output-dir", str(tmp_path / "a")]) == 0
    rows = _read_csv(tmp_path / "a" / "spectrum_rotation.csv")[1]
    assert max(int(r["n"]) for r in rows) == 64
    assert main(["spectrum", "--config", str(cfg), "--n", "128", "--output-dir", str(tmp_path / "b")]) == 0
    rows = _read_csv(tmp_path / "b" / "spectrum_rotation.csv")[1]
    assert max(int(r["n"]) for r in rows) == 128
    assert {r["point"] for r in rows} == {"0", "1"}


def test_catalog_subcommands(tmp_path, capsys):
    assert main(["catalog", "list"]) == 0
    listed = capsys.readouterr().out.split("\n")
    assert [l.split()[0] for l in listed if l.strip()] == catalog.names()
    assert main(["catalog", "describe", "walters"]) == 0
    assert capsys.readouterr().out.startswith("walters:")
    assert main(["catalog", "describe"]) == 2
    assert main(["catalog", "export", "identity", "--output-dir", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "catalog.json").read_text())
    assert list(doc["examples"]) == ["identity"]


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "cocyclelab", "catalog", "list"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "walters" in res.stdout
