"""Acceptance criteria 1-9, each at its stated tolerance.

Every test records one ``AC<n> PASS|FAIL`` line, printed in the terminal
summary of the pytest run.
"""

import contextlib
import io
import json
import os
import time
from dataclasses import replace

import numpy as np
from click.testing import CliRunner

import conftest
from canser.autodiff import Tensor
from canser.features import AlignmentTable, Span, absorb_special_tokens, apply_overlap, parse_alignment
from canser.harness.ablate import VARIANTS, run_ablation
from canser.harness.cli import main
from canser.harness.data import Encoded, load_corpus
from canser.harness.gradcheck import MINI_CONFIG, gradcheck, probe_batch, stop_gradient_probe
from canser.harness.kfold import fold_splits, run_kfold
from canser.harness.train import evaluate, seeds_for, train
from canser.model import CrossAttentionNetwork, EncoderOutputs, GlobalQueries, cross_aggregate, final_prediction
from conftest import desk_experiment
from oracles import WORKED_TABLE, WORKED_ABSORBED, overlap_oracle

N_RANDOM = 1000


@contextlib.contextmanager
def criterion(number, title):
    notes = []
    try:
        yield notes
    except BaseException as exc:
        detail = f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        conftest.ACCEPTANCE_LINES.append(f"AC{number} FAIL  {title}  [{detail}]")
        raise
    extra = f"  [{'; '.join(notes)}]" if notes else ""
    conftest.ACCEPTANCE_LINES.append(f"AC{number} PASS  {title}{extra}")


def test_ac1_protocol_capability(corpus):
    with criterion(1, "10-fold 8:1:1 protocol with mean±std reporting (structural)") as notes:
        for split in fold_splits(200, 10, seed=0):
            assert (len(split.train), len(split.val), len(split.test)) == (160, 20, 20)
        report = run_kfold(corpus, desk_experiment(max_epochs=1), k=10, seed=0)
        assert len(report.folds) == 10
        summary = report.table().splitlines()[-1]
        assert summary.startswith("mean") and summary.count("±") == 2
        notes.append("no accuracy target asserted for the original corpus")


def test_ac2_gradient_suite():
    with criterion(2, "gradcheck worst relative error < 1e-3 in < 60 s") as notes:
        cfg = MINI_CONFIG
        assert (cfg.hidden_size, cfg.heads, cfg.n_classes) == (4, 2, 3)
        assert int(probe_batch(cfg, 6).lengths.max()) <= 3
        t0 = time.perf_counter()
        report = gradcheck(cfg, seed=0)
        elapsed = time.perf_counter() - t0
        notes.append(f"worst {report.worst_relative_error:.2e} over {report.n_elements} "
                     f"elements in {elapsed:.1f} s")
        assert report.worst_relative_error < 1e-3
        assert elapsed < 60


def test_ac3_stop_gradient_cut():
    with criterion(3, "stop-gradient cut on both queries; no-sg variant fails it") as notes:
        batch = probe_batch(MINI_CONFIG, 6, seed=11)
        model = CrossAttentionNetwork(MINI_CONFIG, 6, seed=3)
        text, audio = stop_gradient_probe(model, batch)
        assert text < 1e-10 and audio < 1e-10
        loose = CrossAttentionNetwork(replace(MINI_CONFIG, use_stop_gradient=False), 6, seed=3)
        text_ns, audio_ns = stop_gradient_probe(loose, batch)
        notes.append(f"sg diff {max(text, audio):.1e}, no-sg diff {min(text_ns, audio_ns):.1e}")
        assert text_ns > 0 and audio_ns > 0


def test_ac4_attention_invariants():
    with criterion(4, f"attention invariants over {N_RANDOM} randomized cases"):
        rng = np.random.default_rng(4)
        for _ in range(N_RANDOM):
            heads = int(rng.choice([1, 2, 4]))
            width = heads * int(rng.integers(1, 4))
            lengths = rng.integers(1, 7, int(rng.integers(1, 4)))
            steps = int(lengths.max())
            mask = np.arange(steps)[None, :] < lengths[:, None]
            scale = float(rng.choice([0.1, 1.0, 10.0]))
            hidden = [rng.normal(size=(len(lengths), steps, width)) * scale * mask[:, :, None]
                      for _ in range(2)]
            text, audio = (EncoderOutputs(Tensor(h), mask) for h in hidden)
            queries = GlobalQueries(heads, width // heads, rng)
            queries.text.data *= scale
            b = cross_aggregate(text, audio, queries)
            for w in (b.alpha_text.data, b.alpha_audio.data):
                assert np.abs(w.sum(-1) - 1.0).max() < 1e-9
                assert (w[np.broadcast_to(~mask[:, None, :], w.shape)] == 0.0).all()
            assert np.abs(b.cross_weights_text.data - b.alpha_text.data).max() == 0.0
            assert np.abs(b.cross_weights_audio.data - b.alpha_audio.data).max() == 0.0
            for ctx, src in ((b.c_tt, hidden[0]), (b.c_ta, hidden[1]),
                             (b.c_aa, hidden[1]), (b.c_at, hidden[0])):
                for i, n in enumerate(lengths):
                    rows = src[i, :n]
                    assert (ctx.data[i] >= rows.min(0) - 1e-9).all()
                    assert (ctx.data[i] <= rows.max(0) + 1e-9).all()


def _random_table(rng):
    kinds = list(rng.choice(["w", "w", "<sil>"], int(rng.integers(1, 12))))
    if "w" not in kinds:
        kinds[int(rng.integers(len(kinds)))] = "w"
    if rng.random() < 0.7:
        kinds = ["<s>"] + kinds
    if rng.random() < 0.7:
        kinds = kinds + ["</s>"]
    spans, t = [], int(rng.integers(0, 50))
    for i, kind in enumerate(kinds):
        length = int(rng.integers(1, 120))
        spans.append(Span(t, t + length - 1, f"w{i}" if kind == "w" else kind))
        t += length
    return AlignmentTable(spans)


def test_ac5_segmentation_oracle():
    with criterion(5, f"worked alignment absorption and {N_RANDOM} randomized tiling/overlap tables"):
        text = "".join(f"{s}\t{e}\t{w}\n" for s, e, w in WORKED_TABLE)
        absorbed = absorb_special_tokens(parse_alignment(text))
        assert [tuple(s) for s in absorbed] == WORKED_ABSORBED
        rng = np.random.default_rng(5)
        for _ in range(N_RANDOM):
            table = _random_table(rng)
            words = absorb_special_tokens(table)
            assert words.start == table.start and words.end == table.end
            assert all(b.start == a.end + 1 for a, b in zip(words, words[1:]))
            widened = apply_overlap(words, 0.1)
            expected = overlap_oracle([(s.start, s.end) for s in words], 0.1)
            assert widened.start == words.start and widened.end == words.end
            for a, b, k in zip(widened, widened[1:], expected):
                assert a.end - b.start + 1 == k


def test_ac6_loss_identity(corpus):
    with criterion(6, "logged total = CE + alpha*L_align within 1e-9; alpha=0 zeroes aux grads") as notes:
        log = io.StringIO()
        train(corpus[:16], corpus[16:20], desk_experiment(max_epochs=3), 1, log)
        steps = [json.loads(line) for line in log.getvalue().splitlines()]
        steps = [r for r in steps if r["kind"] == "step"]
        worst = max(abs(r["total"] - (r["main"] + r["alpha"] * r["align"])) for r in steps)
        notes.append(f"{len(steps)} steps, worst gap {worst:.1e}")
        assert worst < 1e-9

        exp = desk_experiment(max_epochs=2, alpha=0.0)
        result = train(corpus[:16], corpus[16:20], exp, 1)
        model = result.model
        model.zero_grad()
        total, _ = model.loss(Encoded(corpus[:16], result.vocab, exp.model.classes).batch(range(16)))
        total.backward()
        fresh = CrossAttentionNetwork(result.experiment.model, len(result.vocab),
                                      seed=seeds_for(1)[0])
        for name in ("w_text", "b_text", "w_audio", "b_audio"):
            part = getattr(model.heads, name)
            assert part.grad is None or not part.grad.any()
            assert np.array_equal(getattr(fresh.heads, name).data, part.data)


def _overfit(corpus, segmentation):
    exp = desk_experiment(max_epochs=200, patience=30, segmentation=segmentation)
    log = io.StringIO()
    t0 = time.perf_counter()
    result = train(corpus, corpus, exp, 0, log)
    elapsed = time.perf_counter() - t0
    epochs = [json.loads(line) for line in log.getvalue().splitlines()]
    reached = [r["epoch"] for r in epochs if r["kind"] == "epoch" and r["val_wa"] >= 0.95]
    final, _ = evaluate(result.model, result.vocab, corpus)
    return reached[0] if reached else None, final.wa, elapsed


def test_ac7_overfit_oracle(corpus_entries):
    with criterion(7, "32-utterance overfit WA >= 0.95 in <= 200 epochs, aligned and equal; "
                      "ablation table") as notes:
        assert len(corpus_entries) == 32
        total = 0.0
        for mode in ("aligned", "equal"):
            utts = load_corpus(corpus_entries, desk_experiment(segmentation=mode).model)
            epoch, wa, elapsed = _overfit(utts, mode)
            total += elapsed
            notes.append(f"{mode}: epoch {epoch}, WA {wa:.3f}, {elapsed:.0f} s")
            assert epoch is not None and epoch <= 200 and wa >= 0.95
            assert elapsed < 600
        report = run_ablation(lambda cfg: load_corpus(corpus_entries, cfg),
                              desk_experiment(max_epochs=2), k=3, seed=0)
        lines = report.table().splitlines()
        assert len(lines) == 1 + len(VARIANTS)
        assert all(line.count("±") == 2 for line in lines[1:])


def test_ac8_fusion_path_equivalence():
    with criterion(8, f"log fused score identity over {N_RANDOM} random triples"):
        rng = np.random.default_rng(8)
        for _ in range(N_RANDOM):
            c = int(rng.integers(2, 8))
            fused, text, audio = (rng.dirichlet(np.ones(c) * rng.uniform(0.1, 3)) for _ in range(3))
            fused, text, audio = (np.maximum(p, 1e-12) for p in (fused, text, audio))
            alpha = float(rng.uniform(0, 1))
            classes, scores, normalized = final_prediction(fused, text, audio, alpha)
            expected = np.log(fused) + alpha * np.log(text) + alpha * np.log(audio)
            assert np.abs(np.log(scores) - expected).max() < 1e-9
            assert classes == np.argmax(normalized) == np.argmax(scores)


SMALL = ["--embed-dim", "8", "--hidden-size", "8", "--heads", "4", "--batch-size", "8",
         "--max-epochs", "2", "--patience", "2", "--seed", "4"]


def _run_all(root):
    """Run every CLI command once under ``root``; return stdout per command and all files."""
    runner = CliRunner()
    data, manifest = root / "data", str(root / "data" / "manifest.tsv")
    commands = {
        "synth": ["synth", "--out", str(data), "--n-classes", "3", "--per-class", "3",
                  "--seed", "4"],
        "preprocess": ["preprocess", "--manifest", manifest, "--cache", str(root / "cache"),
                       *SMALL],
        "train": ["train", "--manifest", manifest, "--cache", str(root / "cache"),
                  "--out", str(root / "model.ckpt"), "--log", str(root / "train.jsonl"), *SMALL],
        "eval": ["eval", "--checkpoint", str(root / "model.ckpt"), "--manifest", manifest,
                 "--records", str(root / "eval.jsonl"), "--dump-attention", str(root / "att")],
        "kfold": ["kfold", "--manifest", manifest, "--k", "3",
                  "--records", str(root / "kfold.jsonl"), *SMALL],
        "ablate": ["ablate", "--manifest", manifest, "--k", "2",
                   "--records", str(root / "ablate.jsonl"), *SMALL],
        "gradcheck": ["gradcheck", "--records", str(root / "gc.jsonl"), "--seed", "4"],
    }
    outputs = {}
    for name, args in commands.items():
        result = runner.invoke(main, args, catch_exceptions=False)
        assert result.exit_code == 0, (name, result.output)
        outputs[name] = result.output.replace(str(root), "<root>")
    files = {}
    for dirpath, _, names in os.walk(root):
        for n in names:
            path = os.path.join(dirpath, n)
            with open(path, "rb") as fh:
                files[os.path.relpath(path, root)] = fh.read()
    return outputs, files


def test_ac9_cli_determinism(tmp_path):
    with criterion(9, "every CLI command twice gives byte-identical reports and checkpoints") as notes:
        out_a, files_a = _run_all(tmp_path / "a")
        out_b, files_b = _run_all(tmp_path / "b")
        assert out_a == out_b
        assert sorted(files_a) == sorted(files_b)
        for name in files_a:
            assert files_a[name] == files_b[name], name
        notes.append(f"{len(out_a)} commands, {len(files_a)} files compared")
