"""Adapter acceptance: the end-to-end fixture and masking determinism.

The curriculum toolkit is exercised strictly through its public surfaces: the
corpus manifest and gradient-dump file formats plus the `currkit` CLI run as a
subprocess. Nothing here imports the toolkit.
"""

import json
import subprocess
import sys
import time

from gradtap.cli import main as gradtap_main
from gradtap.extract import extract_checkpoint
from gradtap.trainer import ToyTrainConfig, toy_train

from conftest import write_toy_corpus


def currkit(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "currkit.cli", *map(str, args)],
        capture_output=True,
        text=True,
    )
    return proc


def test_end_to_end_fixture(tmp_path):
    """toy_trainer -> extract x3 -> influence + build --all + analyze, exit 0, clean."""
    start = time.monotonic()
    corpus = write_toy_corpus(tmp_path / "corpus.jsonl", n_docs=40, seed=1)
    run_dir = tmp_path / "run"
    ckpts = toy_train(corpus, run_dir, ToyTrainConfig(epochs=3, seed=7))
    assert len(ckpts) == 3

    dumps = tmp_path / "dumps"
    dumps.mkdir()
    for i, ckpt in enumerate(ckpts, start=1):
        extract_checkpoint(ckpt, corpus, dumps / f"g_{i:02d}.gdmp")

    work = tmp_path / "work"
    proc = currkit("influence", "--dumps", dumps, "--out", work, "--filter", "lognorm")
    assert proc.returncode == 0, proc.stderr
    proc = currkit("scores", "--corpus", corpus, "--out", work)
    assert proc.returncode == 0, proc.stderr
    manifests = tmp_path / "manifests"
    proc = currkit(
        "build", "--corpus", corpus, "--all", "--seed", 5, "--epochs", 3,
        "--segments", 5, "--block-size", 8,
        "--phi", work / "influence.imx",
        "--phi-conv", work / "influence_conv.imx",
        "--scores", work / "scores.tsv",
        "--out", manifests,
    )
    assert proc.returncode == 0, proc.stderr
    report = (manifests / "build_report.txt").read_text()
    assert "FAIL" not in report and "violation" not in report
    assert len(list(manifests.glob("*.cman"))) == 14

    analysis = tmp_path / "analysis"
    proc = currkit(
        "analyze", "--corpus", corpus,
        "--manifest", manifests / "random.cman",
        "--manifest", manifests / "sorted_desc.cman",
        "--loss-log", run_dir / "loss.log",
        "--out", analysis,
    )
    assert proc.returncode == 0, proc.stderr
    payload = json.loads((analysis / "report.json").read_text())
    assert "jsd" in payload and "tau" in payload and "loss_ratio" in payload
    elapsed = time.monotonic() - start
    assert elapsed < 300.0, f"fixture took {elapsed:.0f}s"
    print(f"[PASS] end-to-end fixture: train->extract->influence->build-all->analyze ({elapsed:.0f}s)")


def test_masking_determinism_bit_identical_dumps(tmp_path):
    """Two independent extraction runs over one checkpoint agree byte for byte."""
    corpus = write_toy_corpus(tmp_path / "corpus.jsonl", n_docs=25, seed=2)
    ckpts = toy_train(corpus, tmp_path / "run", ToyTrainConfig(epochs=1, seed=11))
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    out_a.mkdir(), out_b.mkdir()
    for out in (out_a, out_b):
        code = gradtap_main(
            ["extract", "--checkpoint", str(ckpts[0]), "--corpus", str(corpus),
             "--out", str(out / "g.gdmp")]
        )
        assert code == 0
    assert (out_a / "g.gdmp").read_bytes() == (out_b / "g.gdmp").read_bytes()
    assert (out_a / "g.gdmp.rows").read_text() == (out_b / "g.gdmp.rows").read_text()
    print("[PASS] masking determinism: independent extraction runs bit-identical")
