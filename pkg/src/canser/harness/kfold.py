"""Seeded k-fold protocol with train/validation/test splits in 8:1:1 proportion."""

import functools
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..model import MetricReport
from .train import evaluate, seeds_for, train


@dataclass(frozen=True)
class FoldSplit:
    train: tuple
    val: tuple
    test: tuple


def fold_splits(n_items, k, seed=0):
    """Deterministic folds over ``range(n_items)``.

    Items are shuffled once with ``seed`` and cut into ``k`` near-equal
    folds. Fold ``i`` is the test set, fold ``i+1`` (cyclically) the
    validation set and the rest is training data. With ``k=2`` there is
    no spare fold, so a ninth of the non-test items becomes validation.
    """
    if k < 2:
        raise ConfigError(f"need k >= 2, got {k}")
    if k > n_items:
        raise ConfigError(f"k={k} folds exceed {n_items} items")
    order = np.random.default_rng(seed).permutation(n_items)
    folds = [tuple(int(i) for i in f) for f in np.array_split(order, k)]
    out = []
    for i in range(k):
        test = folds[i]
        if k >= 3:
            val = folds[(i + 1) % k]
            rest = tuple(x for j, f in enumerate(folds) if j not in (i, (i + 1) % k) for x in f)
        else:
            other = folds[1 - i]
            n_val = max(1, round(len(other) / 9))
            val, rest = other[:n_val], other[n_val:]
        if not rest:
            raise ConfigError(f"{n_items} items are too few for {k} folds")
        out.append(FoldSplit(rest, val, test))
    return out


def mean_std(values):
    """Mean and population standard deviation, summed in fold order."""
    values = [float(v) for v in values]
    mean = sum(values) / len(values)
    return mean, math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))


@dataclass(eq=False)
class KFoldReport:
    folds: list
    pooled: MetricReport

    @property
    def wa(self):
        return mean_std(f.wa for f in self.folds)

    @property
    def ua(self):
        return mean_std(f.ua for f in self.folds)

    def records(self):
        out = [dict(kind="fold", fold=i, **f.to_record()) for i, f in enumerate(self.folds)]
        (wa, wa_sd), (ua, ua_sd) = self.wa, self.ua
        out.append({"kind": "summary", "wa_mean": wa, "wa_std": wa_sd,
                    "ua_mean": ua, "ua_std": ua_sd, "folds": len(self.folds)})
        return out

    def table(self):
        rows = [("fold", "WA", "UA")]
        rows += [(str(i), f"{f.wa:.3f}", f"{f.ua:.3f}") for i, f in enumerate(self.folds)]
        (wa, wa_sd), (ua, ua_sd) = self.wa, self.ua
        rows.append(("mean", f"{wa:.3f} ± {wa_sd:.3f}", f"{ua:.3f} ± {ua_sd:.3f}"))
        return format_table(rows)


def format_table(rows):
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    return "\n".join(lines) + "\n"


def run_kfold(utterances, experiment, k=None, seed=0, log_stream=None):
    """Train and test one model per fold; returns a :class:`KFoldReport`."""
    k = k or experiment.train.folds
    splits = fold_splits(len(utterances), k, seed)
    fold_seeds = seeds_for(seed, k)
    reports = []
    for split, fold_seed in zip(splits, fold_seeds):
        pick = lambda idx: [utterances[i] for i in idx]
        result = train(pick(split.train), pick(split.val), experiment, fold_seed, log_stream)
        report, _ = evaluate(
            result.model, result.vocab, pick(split.test), require_known_words=False
        )
        reports.append(report)
    return KFoldReport(reports, functools.reduce(MetricReport.merge, reports))
