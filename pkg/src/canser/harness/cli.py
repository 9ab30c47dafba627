"""Command line entry point: ``canser <command> [options]``."""

import json
import logging
import os
import sys
from dataclasses import fields

import click
import numpy as np

from ..config import (
    Experiment,
    ModelConfig,
    TrainConfig,
    apply_overrides,
    load_config_file,
    read_key_values,
)
from ..errors import CanError, ConfigError
from ..features import SynthConfig, Vocabulary, read_manifest, synthesize_dataset
from ..model import attention_table
from .ablate import VARIANTS, run_ablation
from .checkpoint import load_checkpoint, save_checkpoint
from .data import Encoded, load_corpus, write_cache
from .gradcheck import MINI_CONFIG, gradcheck as run_gradcheck
from .kfold import format_table, run_kfold
from .train import evaluate, train as run_train


def _flag(name):
    return "--" + name.replace("_", "-")


def config_options(func):
    """One option per model and training field, plus ``--config``."""
    for section in (TrainConfig, ModelConfig):
        for f in reversed(fields(section)):
            default = f.default
            if isinstance(default, bool):
                opt = click.option(
                    f"{_flag(f.name)}/--no-{f.name.replace('_', '-')}", f.name, default=None
                )
            elif isinstance(default, tuple):
                opt = click.option(_flag(f.name), f.name, type=str, default=None,
                                   help="comma separated")
            else:
                opt = click.option(_flag(f.name), f.name, type=type(default), default=None)
            func = opt(func)
    return click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
                        help="key=value file with the same keys as the flags")(func)


def _experiment(config_file, values):
    """Defaults, then the ``--config`` file, then explicit flags."""
    experiment = load_config_file(config_file) if config_file else Experiment()
    pairs = {}
    for key, value in values.items():
        if value is None:
            continue
        if isinstance(value, bool):
            value = "true" if value else "false"
        pairs[key] = str(value)
    return apply_overrides(experiment, pairs)


def _write_records(path, records):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _load(manifest, model_config, cache):
    return load_corpus(read_manifest(manifest), model_config, cache)


def holdout_split(n_items, seed, fraction=1 / 9):
    """Seeded (train, validation) index lists; validation gets ``fraction``."""
    if n_items < 2:
        raise ConfigError("need at least two utterances to hold out a validation split")
    order = np.random.default_rng(seed).permutation(n_items)
    n_val = min(n_items - 1, max(1, round(n_items * fraction)))
    return sorted(order[n_val:].tolist()), sorted(order[:n_val].tolist())


def _metric_table(report, classes):
    rows = [("metric", "value"), ("WA", f"{report.wa:.4f}"), ("UA", f"{report.ua:.4f}")]
    out = format_table(rows) + "\n"
    rows = [("true\\pred",) + tuple(classes)]
    for name, row in zip(classes, report.confusion):
        rows.append((name,) + tuple(str(int(v)) for v in row))
    return out + format_table(rows)


@click.group()
@click.option("-v", "--verbose", count=True, help="more logging on stderr")
def main(verbose):
    """Cross attention network for speech emotion recognition."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
              help="key=value generator settings")
@click.option("--n-classes", type=int, default=None)
@click.option("--per-class", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
def synth(out_dir, config_file, n_classes, per_class, seed):
    """Generate a synthetic corpus (audio, alignments, manifest)."""
    pairs = {}
    if config_file:
        with open(config_file, encoding="utf-8") as fh:
            pairs = read_key_values(fh.read())
    if n_classes is not None:
        pairs["n_classes"] = n_classes
    if per_class is not None:
        pairs["per_class"] = per_class
    entries = synthesize_dataset(out_dir, SynthConfig.from_mapping(pairs), seed)
    counts = {}
    for e in entries:
        counts[e.label] = counts.get(e.label, 0) + 1
    rows = [("class", "utterances")] + [(k, str(v)) for k, v in counts.items()]
    click.echo(format_table(rows), nl=False)


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--cache", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=0, show_default=True, help="unused; accepted for symmetry")
@config_options
def preprocess(manifest, cache, seed, config_file, **values):
    """Extract segment MFCCs for every manifest entry into a cache directory."""
    experiment = _experiment(config_file, values)
    utts = load_corpus(read_manifest(manifest), experiment.model)
    write_cache(cache, utts, experiment.model)
    segs = sum(u.features.n_segments for u in utts)
    click.echo(format_table([("utterances", "segments"), (str(len(utts)), str(segs))]), nl=False)


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--val-manifest", type=click.Path(exists=True, dir_okay=False),
              help="validation data; default holds out a ninth of --manifest")
@click.option("--cache", type=click.Path(file_okay=False))
@click.option("--out", "checkpoint", required=True, type=click.Path(dir_okay=False))
@click.option("--log", "log_path", type=click.Path(dir_okay=False), help="JSON lines training log")
@click.option("--seed", type=int, default=0, show_default=True)
@config_options
def train(manifest, val_manifest, cache, checkpoint, log_path, seed, config_file, **values):
    """Train one model and save the best-validation checkpoint."""
    experiment = _experiment(config_file, values)
    utts = _load(manifest, experiment.model, cache)
    if val_manifest:
        train_utts, val_utts = utts, _load(val_manifest, experiment.model, cache)
    else:
        tr, va = holdout_split(len(utts), seed)
        train_utts, val_utts = [utts[i] for i in tr], [utts[i] for i in va]
    log_fh = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        result = run_train(train_utts, val_utts, experiment, seed, log_fh)
    finally:
        if log_fh:
            log_fh.close()
    save_checkpoint(checkpoint, result.experiment, result.model, result.state, result.optimizer)
    s = result.state
    rows = [("epochs", "steps", "best_epoch", "best_val_wa", "stopped_early"),
            (str(s.epoch), str(s.step), str(s.best_epoch), f"{s.best_val_wa:.4f}",
             str(s.stopped_early).lower())]
    click.echo(format_table(rows), nl=False)


@main.command(name="eval")
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--cache", type=click.Path(file_okay=False))
@click.option("--records", type=click.Path(dir_okay=False), help="JSON lines output")
@click.option("--dump-attention", type=click.Path(file_okay=False),
              help="write per-utterance attention weights here")
@click.option("--seed", type=int, default=0, show_default=True, help="unused; accepted for symmetry")
def evaluate_cmd(checkpoint, manifest, cache, records, dump_attention, seed):
    """Score a checkpoint on a manifest."""
    experiment, model, _, _ = load_checkpoint(checkpoint)
    cfg = model.config
    vocab = Vocabulary(cfg.vocabulary)
    utts = _load(manifest, cfg, cache)
    report, predicted = evaluate(model, vocab, utts)
    out = [dict(kind="metrics", **report.to_record())]
    out += [{"kind": "prediction", "utt_id": u.utt_id, "label": u.label,
             "predicted": cfg.classes[int(p)]} for u, p in zip(utts, predicted)]
    _write_records(records, out)
    if dump_attention:
        os.makedirs(dump_attention, exist_ok=True)
        data = Encoded(utts, vocab, cfg.classes)
        for i, u in enumerate(utts):
            _, _, bundle = model.classify(data.batch([i]))
            with open(os.path.join(dump_attention, u.utt_id + ".tsv"), "w", encoding="utf-8") as fh:
                fh.write(attention_table(u.words, bundle.alpha_text.data[0],
                                         bundle.alpha_audio.data[0]))
    click.echo(_metric_table(report, cfg.classes), nl=False)


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--cache", type=click.Path(file_okay=False))
@click.option("--k", type=int, default=None, help="folds (default: the folds setting)")
@click.option("--records", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@config_options
def kfold(manifest, cache, k, records, seed, config_file, **values):
    """k-fold cross validation with 8:1:1 train/validation/test folds."""
    experiment = _experiment(config_file, values)
    utts = _load(manifest, experiment.model, cache)
    report = run_kfold(utts, experiment, k, seed)
    _write_records(records, report.records())
    click.echo(report.table(), nl=False)


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--k", type=int, default=None, help="folds (default: the folds setting)")
@click.option("--variant", "variants", multiple=True,
              type=click.Choice([name for name, _ in VARIANTS]), help="repeatable; default all")
@click.option("--records", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@config_options
def ablate(manifest, k, variants, records, seed, config_file, **values):
    """Run the ablation variants through the k-fold protocol."""
    experiment = _experiment(config_file, values)
    entries = read_manifest(manifest)
    report = run_ablation(lambda cfg: load_corpus(entries, cfg), experiment, k, seed,
                          list(variants) or None)
    _write_records(records, report.records())
    click.echo(report.table(), nl=False)


@main.command()
@click.option("--records", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
def gradcheck(records, seed):
    """Compare analytic and finite-difference gradients on a miniature model."""
    report = run_gradcheck(MINI_CONFIG, seed)
    _write_records(records, report.records())
    rows = [("parameter", "rel_error", "abs_error")]
    rows += [(r["name"], f"{r['rel_error']:.2e}", f"{r['abs_error']:.2e}")
             for r in report.records() if r["kind"] == "param"]
    click.echo(format_table(rows))
    click.echo(f"elements checked: {report.n_elements}")
    click.echo(f"worst relative error: {report.worst_relative_error:.3e}")
    click.echo(f"stop-gradient query difference: text {report.sg_text:.1e} audio {report.sg_audio:.1e}")
    click.echo("PASS" if report.passed else "FAIL")
    if not report.passed:
        sys.exit(1)


def run():
    """Console entry point: library errors become one-line messages."""
    try:
        main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(1)
    except CanError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
