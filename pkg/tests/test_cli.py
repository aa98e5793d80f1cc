import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

CLI = [sys.executable, "-m", "almanac"]


def run_cli(*args, cwd=None):
    return subprocess.run(CLI + list(args), capture_output=True, text=True,
                          cwd=cwd)


def _tree_bytes(root: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(Path(root).iterdir())}


def test_synth_deterministic_trees(tmp_path):
    args = ["synth", "--districts", "30", "--years", "4", "--seed", "42"]
    first = run_cli(*args, "--out", str(tmp_path / "a"))
    second = run_cli(*args, "--out", str(tmp_path / "b"))
    assert first.returncode == 0, first.stderr
    assert second.returncode == 0
    assert _tree_bytes(tmp_path / "a") == _tree_bytes(tmp_path / "b")


def test_full_small_pipeline(tmp_path, small_corpus_dir):
    store = tmp_path / "store"
    bundles = tmp_path / "bundles"
    steps = [
        ["ingest", "--in", str(small_corpus_dir), "--store", str(store)],
        ["resolve", "--store", str(store)],
        ["qa", "--store", str(store)],
        ["build", "--store", str(store), "--all", "--out", str(bundles)],
    ]
    for step in steps:
        result = run_cli(*step)
        assert result.returncode == 0, (step, result.stderr)
    report = json.loads((bundles / "build_report.json").read_text())
    bundle_files = list(bundles.glob("*.bundle.json"))
    assert len(bundle_files) == report["bundle_count"] == len(report["built"])
    assert len(report["built"]) + len(report["ineligible"]) == 60
    assert (store / "corrections.json").is_file()
    assert (store / "qa_report.json").is_file()
    manifest = json.loads((store / "manifest.json").read_text())
    assert manifest["stage"] == "screened"


def test_ingest_corrupted_corpus_exit_1(tmp_path, small_corpus_dir):
    broken = tmp_path / "broken"
    shutil.copytree(small_corpus_dir, broken)
    with open(broken / "enrollment.csv", "a", encoding="utf-8") as fh:
        fh.write("D0001,2015,all,not-a-number\n")
    result = run_cli("ingest", "--in", str(broken),
                     "--store", str(tmp_path / "store"))
    assert result.returncode == 1
    assert "enrollment.csv:" in result.stderr
    assert "bad_type" in result.stderr


def test_missing_corpus_exit_2(tmp_path):
    result = run_cli("ingest", "--in", str(tmp_path / "nope"),
                     "--store", str(tmp_path / "store"))
    assert result.returncode == 2


def test_usage_errors_exit_3(tmp_path):
    assert run_cli("frobnicate").returncode == 3
    assert run_cli("synth").returncode == 3          # missing --out
    assert run_cli("build", "--store", "s").returncode == 3  # no target
    assert run_cli().returncode == 3


def test_peers_subcommand_prints_json(tmp_path, small_corpus_dir):
    store = tmp_path / "store"
    assert run_cli("ingest", "--in", str(small_corpus_dir), "--store",
                   str(store)).returncode == 0
    assert run_cli("resolve", "--store", str(store)).returncode == 0
    report = json.loads((store / "corrections.json").read_text())
    assert report["moves"]
    result = run_cli("peers", "--store", str(store), "--district", "D0001",
                     "--k", "5")
    assert result.returncode == 0, result.stderr
    payload = json.loads(result.stdout)
    assert payload["client"] == "D0001"
    assert len(payload["members"]) == 5


def test_peers_unknown_district_exit_1(tmp_path, small_corpus_dir):
    store = tmp_path / "store"
    run_cli("ingest", "--in", str(small_corpus_dir), "--store", str(store))
    result = run_cli("peers", "--store", str(store), "--district", "D9999")
    assert result.returncode == 1


def test_build_single_district(tmp_path, small_corpus_dir):
    store = tmp_path / "store"
    bundles = tmp_path / "bundles"
    run_cli("ingest", "--in", str(small_corpus_dir), "--store", str(store))
    run_cli("resolve", "--store", str(store))
    run_cli("qa", "--store", str(store))
    result = run_cli("build", "--store", str(store), "--district", "D0002",
                     "--out", str(bundles))
    assert result.returncode == 0, result.stderr
    assert (bundles / "D0002.bundle.json").is_file()


def test_config_file_overrides(tmp_path, small_corpus_dir):
    store = tmp_path / "store"
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({"k_peers": 3}))
    run_cli("ingest", "--in", str(small_corpus_dir), "--store", str(store),
            "--config", str(cfg_path))
    run_cli("resolve", "--store", str(store))
    result = run_cli("peers", "--store", str(store), "--district", "D0001",
                     "--config", str(cfg_path))
    assert result.returncode == 0, result.stderr
    assert len(json.loads(result.stdout)["members"]) == 3


def test_qa_threshold_flags(tmp_path, small_corpus_dir):
    store_a = tmp_path / "a"
    store_b = tmp_path / "b"
    for store in (store_a, store_b):
        run_cli("ingest", "--in", str(small_corpus_dir), "--store", str(store))
        run_cli("resolve", "--store", str(store))
    assert run_cli("qa", "--store", str(store_a)).returncode == 0
    assert run_cli("qa", "--store", str(store_b), "--threshold", "4.5",
                   "--single-rule-threshold", "6.5").returncode == 0
    loose = json.loads((store_a / "qa_report.json").read_text())
    tight = json.loads((store_b / "qa_report.json").read_text())
    loose_keys = {s["key"] for s in loose["suppressed"]}
    tight_keys = {s["key"] for s in tight["suppressed"]}
    assert tight_keys <= loose_keys


def test_quiet_suppresses_summary(tmp_path):
    result = run_cli("synth", "--out", str(tmp_path / "c"), "--districts",
                     "20", "--years", "3", "--quiet")
    assert result.returncode == 0
    assert "almanac synth" not in result.stderr


def test_build_single_ineligible_district_exit_1(tmp_path, small_corpus_dir):
    store = tmp_path / "store"
    run_cli("ingest", "--in", str(small_corpus_dir), "--store", str(store))
    run_cli("resolve", "--store", str(store))
    run_cli("qa", "--store", str(store))
    all_out = tmp_path / "all"
    run_cli("build", "--store", str(store), "--all", "--out", str(all_out))
    report = json.loads((all_out / "build_report.json").read_text())
    if not report["ineligible"]:
        pytest.skip("no ineligible district in this corpus")
    district = report["ineligible"][0]["district_id"]
    result = run_cli("build", "--store", str(store), "--district", district,
                     "--out", str(tmp_path / "one"))
    assert result.returncode == 1
    assert district in result.stderr


def test_serve_busy_port_exit_2(tmp_path, small_corpus_dir):
    import socket

    store = tmp_path / "store"
    run_cli("ingest", "--in", str(small_corpus_dir), "--store", str(store))
    blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    blocker.bind(("127.0.0.1", 0))
    blocker.listen(1)
    port = blocker.getsockname()[1]
    try:
        result = run_cli("serve", "--store", str(store), "--port", str(port))
        assert result.returncode == 2
    finally:
        blocker.close()
