import json
import os
import subprocess

import pytest

CLI = os.environ.get("GRASSKETCH_CLI", "grassketch")


def run(*args, cwd=None):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, cwd=cwd)


def test_help_and_bad_flags():
    assert run("--help").returncode == 0
    assert run("--no-such-flag").returncode == 2
    assert run("mc-validate", "--threads", "0").returncode == 2


def test_gen_ingest_sketch(tmp_path):
    data = tmp_path / "data"
    r = run("--seed", 3, "--out", data, "gen", "--classes", 2, "--per-class-train", 2, "--per-class-test", 1,
            "--n", 12, "--k", 2)
    assert r.returncode == 0, r.stderr
    index = (data / "index.csv").read_text().splitlines()
    assert index[0] == "id,label,split,file"
    assert len(index) == 1 + 6

    sketches = tmp_path / "sketches"
    r = run("--seed", 5, "--features", 128, "--out", sketches, "sketch", data, "--kind", "both")
    assert r.returncode == 0, r.stderr
    real = sorted(sketches.glob("*.real.gskt"))
    bits = sorted(sketches.glob("*.bits.gskt"))
    assert len(real) == 6 and len(bits) == 6
    assert real[0].stat().st_size - bits[0].stat().st_size == 128 * 8 - 2 * 8

    images = tmp_path / "images"
    r = run("--seed", 1, "--out", images, "gen", "--images", "--classes", 2, "--side", 8, "--rank", 2,
            "--images-per-set", 6)
    assert r.returncode == 0, r.stderr
    manifest = json.loads((images / "manifest.json").read_text())
    assert manifest["n"] == 64 and manifest["k"] == 3

    ingested = tmp_path / "ingested"
    r = run("--out", ingested, "ingest", images / "manifest.json")
    assert r.returncode == 0, r.stderr
    assert len((ingested / "index.csv").read_text().splitlines()) == 1 + len(manifest["entries"])


def test_mc_validate_exit_codes(tmp_path):
    out = tmp_path / "mc.csv"
    r = run("--seed", 1, "--trials", 10, "--out", out, "mc-validate", "--n", 8, "--m", 1000, "--no-probes")
    assert r.returncode == 0, r.stderr
    lines = out.read_text().splitlines()
    assert lines[0].startswith("schema_version,k,point,theta_1,estimator")
    assert len(lines) == 1 + 5 * 4
    report = json.loads(out.with_suffix(".json").read_text())
    assert report["config"]["seeds"] == list(range(1, 11))

    # An SE band of zero cannot be met: validation failure.
    strict = tmp_path / "strict.json"
    strict.write_text(json.dumps({"kind": "mc-validate", "mc": {"z": 0.0, "z_wide": 0.0, "theta_grid": [0.7]}}))
    r = run("--config", strict, "--trials", 3, "--out", tmp_path / "strict.csv", "mc-validate", "--n", 8, "--m", 500,
            "--no-probes")
    assert r.returncode == 1


def test_config_and_data_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ nope")
    assert run("--config", bad, "mc-validate").returncode == 2
    bad.write_text(json.dumps({"kind": "mc-validate", "m_grid": [100, 10]}))
    assert run("--config", bad, "mc-validate").returncode == 2
    bad.write_text(json.dumps({"kind": "bench"}))
    assert run("--config", bad, "mc-validate").returncode == 2
    r = run("classify-images", "--manifest", tmp_path / "eth80" / "manifest.json")
    assert r.returncode == 2
    assert "dataset not supplied" in r.stderr
    assert run("ingest", tmp_path / "missing.json").returncode == 2


def test_classify_and_bench_reports(tmp_path):
    cfg = tmp_path / "synth.json"
    cfg.write_text(json.dumps({"kind": "classify-synth",
                               "synth": {"classes": 2, "per_class_train": 3, "per_class_test": 3, "n": 12, "k": 2}}))
    out = tmp_path / "synth_report.json"
    r = run("--config", cfg, "--seed", 4, "--trials", 2, "--features", 64, "--out", out, "classify-synth")
    assert r.returncode == 0, r.stderr
    report = json.loads(out.read_text())
    assert report["config"]["seeds"] == [4, 5]
    assert report["config"]["m_grid"] == [64]

    out = tmp_path / "bench.json"
    r = run("--features", 640, "--out", out, "bench", "--timing-m", 128)
    assert r.returncode == 0, r.stderr
    report = json.loads(out.read_text())
    assert report["gram_vs_sketch"][0]["m"] == 640
    assert all(s["header_bytes"] <= 32 for s in report["storage"])
