import json
import os
import subprocess
import sys

import pytest
from click.testing import CliRunner

from canser.harness.cli import holdout_split, main

SMALL = ["--embed-dim", "8", "--hidden-size", "8", "--heads", "4", "--batch-size", "8",
         "--max-epochs", "2", "--patience", "2"]


def invoke(*args):
    result = CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result.output


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    invoke("synth", "--out", root / "data", "--n-classes", 3, "--per-class", 4, "--seed", 2)
    return root


def test_synth_report(workdir):
    assert os.path.exists(workdir / "data" / "manifest.tsv")
    out = invoke("synth", "--out", workdir / "again", "--n-classes", 3, "--per-class", 4,
                 "--seed", 2)
    assert out.splitlines()[0].split() == ["class", "utterances"]
    assert len(out.splitlines()) == 4


def test_synth_config_file(workdir):
    cfg = workdir / "gen.cfg"
    cfg.write_text("n_classes=2\nper_class=3\nwords_per_utterance=2,3\n")
    invoke("synth", "--out", workdir / "gen", "--config", cfg)
    with open(workdir / "gen" / "manifest.tsv") as fh:
        assert len(fh.read().splitlines()) == 6


def test_preprocess_train_eval(workdir):
    manifest = workdir / "data" / "manifest.tsv"
    invoke("preprocess", "--manifest", manifest, "--cache", workdir / "cache", *SMALL)
    out = invoke("train", "--manifest", manifest, "--cache", workdir / "cache",
                 "--out", workdir / "m.ckpt", "--log", workdir / "log.jsonl", *SMALL)
    assert out.splitlines()[0].split()[:2] == ["epochs", "steps"]
    with open(workdir / "log.jsonl") as fh:
        kinds = {json.loads(line)["kind"] for line in fh}
    assert kinds == {"step", "epoch"}
    out = invoke("eval", "--checkpoint", workdir / "m.ckpt", "--manifest", manifest,
                 "--records", workdir / "eval.jsonl", "--dump-attention", workdir / "att")
    assert out.splitlines()[1].startswith("WA")
    with open(workdir / "eval.jsonl") as fh:
        records = [json.loads(line) for line in fh]
    assert records[0]["kind"] == "metrics" and len(records) == 13
    dumps = os.listdir(workdir / "att")
    assert len(dumps) == 12
    with open(workdir / "att" / sorted(dumps)[0]) as fh:
        assert fh.readline().startswith("step\tword\ttext_h0")


def test_config_file_equals_flags(workdir):
    manifest = workdir / "data" / "manifest.tsv"
    cfg = workdir / "small.cfg"
    pairs = dict(zip(SMALL[::2], SMALL[1::2]))
    cfg.write_text("".join(f"{k[2:]}={v}\n" for k, v in pairs.items()))
    invoke("train", "--manifest", manifest, "--out", workdir / "a.ckpt", *SMALL)
    invoke("train", "--manifest", manifest, "--out", workdir / "b.ckpt", "--config", cfg)
    assert (workdir / "a.ckpt").read_bytes() == (workdir / "b.ckpt").read_bytes()


def test_flags_override_config_file(workdir):
    manifest = workdir / "data" / "manifest.tsv"
    cfg = workdir / "over.cfg"
    cfg.write_text("hidden_size=6\nheads=3\n")
    invoke("train", "--manifest", manifest, "--out", workdir / "c.ckpt", "--config", cfg,
           *SMALL)
    assert (workdir / "c.ckpt").read_bytes() == (workdir / "a.ckpt").read_bytes()


def test_kfold_and_ablate_commands(workdir):
    manifest = workdir / "data" / "manifest.tsv"
    out = invoke("kfold", "--manifest", manifest, "--k", 3, "--records", workdir / "kf.jsonl",
                 *SMALL)
    assert out.splitlines()[-1].startswith("mean")
    out = invoke("ablate", "--manifest", manifest, "--k", 2, "--variant", "full",
                 "--variant", "no_cross_attention", *SMALL)
    assert [line.split()[0] for line in out.splitlines()] == [
        "variant", "full", "no_cross_attention"]


def test_gradcheck_command(tmp_path):
    out = invoke("gradcheck", "--records", tmp_path / "gc.jsonl")
    assert out.splitlines()[-1] == "PASS"


def test_library_errors_become_messages(tmp_path):
    manifest = tmp_path / "m.tsv"
    manifest.write_text("")
    proc = subprocess.run(
        [sys.executable, "-c", "from canser.harness.cli import run; run()", "train",
         "--manifest", str(manifest), "--out", str(tmp_path / "x"), "--heads", "5"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    assert proc.stderr.startswith("error: heads=5")


def test_holdout_split():
    train, val = holdout_split(18, seed=0)
    assert len(val) == 2 and sorted(train + val) == list(range(18))
    assert holdout_split(18, seed=0) == (train, val)
