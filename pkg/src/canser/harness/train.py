"""Mini-batch training with Adam, global-norm clipping and early stopping."""

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigError
from ..features import Vocabulary
from ..model import CrossAttentionNetwork, MetricReport
from .data import Encoded, build_vocabulary, check_compatible

log = logging.getLogger(__name__)


class Adam:
    def __init__(self, named_params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(named_params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.step_count = 0
        self.m = {n: np.zeros_like(p.data) for n, p in self.params}
        self.v = {n: np.zeros_like(p.data) for n, p in self.params}

    def step(self):
        self.step_count += 1
        t = self.step_count
        bias1 = 1.0 - self.beta1**t
        bias2 = 1.0 - self.beta2**t
        for name, p in self.params:
            if p.grad is None:
                continue
            m = self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * p.grad
            v = self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * p.grad**2
            p.data -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def global_grad_norm(params):
    return float(np.sqrt(sum(float((p.grad**2).sum()) for p in params if p.grad is not None)))


def clip_grad_norm(params, max_norm):
    """Scale all gradients so their joint L2 norm is at most ``max_norm``.

    Returns the norms before and after clipping.
    """
    params = list(params)
    norm = global_grad_norm(params)
    if norm > max_norm:
        factor = max_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad = p.grad * factor
        return norm, global_grad_norm(params)
    return norm, norm


@dataclass
class TrainState:
    epoch: int = 0
    step: int = 0
    best_val_wa: float = -1.0
    best_epoch: int = 0
    patience_counter: int = 0
    seed: int = 0
    stopped_early: bool = False

    def to_pairs(self):
        return {k: repr(v) if isinstance(v, float) else str(v) for k, v in self.__dict__.items()}

    @classmethod
    def from_pairs(cls, pairs):
        kwargs = {}
        for k, v in pairs.items():
            default = getattr(cls, k)
            if isinstance(default, bool):
                kwargs[k] = v == "True"
            else:
                kwargs[k] = type(default)(v)
        return cls(**kwargs)


@dataclass(eq=False)
class TrainResult:
    experiment: object
    model: CrossAttentionNetwork
    vocab: Vocabulary
    state: TrainState
    optimizer: Adam
    log: list = field(default_factory=list)


def seeds_for(seed, n=3):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def evaluate(model, vocab, utterances, require_known_words=True):
    """Score one utterance at a time so results do not depend on ordering.

    With ``require_known_words`` a split sharing no word with ``vocab`` is
    treated as a vocabulary mismatch and rejected.

    Returns ``(MetricReport, predicted class indices)`` in input order.
    """
    cfg = model.config
    if not utterances:
        raise ConfigError("evaluation split is empty")
    check_compatible(utterances, cfg, vocab, require_known_words)
    data = Encoded(utterances, vocab, cfg.classes)
    predicted = np.empty(len(data), dtype=np.int64)
    for i in range(len(data)):
        classes, _, _ = model.classify(data.batch([i]))
        predicted[i] = classes[0]
    confusion = np.zeros((cfg.n_classes, cfg.n_classes), dtype=np.int64)
    np.add.at(confusion, (data.labels, predicted), 1)
    return MetricReport.from_confusion(confusion), predicted


def train(train_utts, val_utts, experiment, seed=0, log_stream=None):
    """Train until ``max_epochs`` or until validation WA stalls for ``patience`` epochs.

    The returned model holds the parameters of the best validation epoch.
    Every optimizer step and epoch emits a JSON-ready record into the log.
    """
    if not train_utts:
        raise ConfigError("training split is empty")
    if not val_utts:
        raise ConfigError("validation split is empty")
    cfg, tcfg = experiment.model, experiment.train
    vocab = Vocabulary(cfg.vocabulary) if cfg.vocabulary else build_vocabulary(train_utts)
    cfg = replace(cfg, vocabulary=tuple(vocab.tokens))
    experiment = replace(experiment, model=cfg)
    check_compatible(train_utts, cfg, vocab)

    init_seed, shuffle_seed, dropout_seed = seeds_for(seed)
    model = CrossAttentionNetwork(cfg, len(vocab), seed=init_seed)
    params = model.named_parameters()
    optimizer = Adam(params, tcfg.lr, tcfg.beta1, tcfg.beta2, tcfg.adam_eps)
    shuffle_rng = np.random.default_rng(shuffle_seed)
    dropout_rng = np.random.default_rng(dropout_seed)
    data = Encoded(train_utts, vocab, cfg.classes)
    state = TrainState(seed=seed)
    records = []
    best = {n: p.data.copy() for n, p in params}

    def emit(record):
        records.append(record)
        if log_stream is not None:
            log_stream.write(json.dumps(record, sort_keys=True) + "\n")

    for epoch in range(1, tcfg.max_epochs + 1):
        state.epoch = epoch
        order = shuffle_rng.permutation(len(data))
        losses = []
        for lo in range(0, len(order), tcfg.batch_size):
            batch = data.batch(order[lo : lo + tcfg.batch_size])
            model.zero_grad()
            total, report = model.loss(batch, training=True, rng=dropout_rng)
            total.backward()
            norm, clipped = clip_grad_norm((p for _, p in params), tcfg.clip_norm)
            optimizer.step()
            state.step += 1
            losses.append(report.total)
            emit({
                "kind": "step", "epoch": epoch, "step": state.step, "batch": len(batch),
                "total": report.total, "main": report.main, "align": report.align,
                "alpha": report.alpha, "grad_norm": norm, "clipped_norm": clipped,
            })
        val, _ = evaluate(model, vocab, val_utts, require_known_words=False)
        improved = val.wa > state.best_val_wa
        if improved:
            state.best_val_wa, state.best_epoch, state.patience_counter = val.wa, epoch, 0
            best = {n: p.data.copy() for n, p in params}
        else:
            state.patience_counter += 1
        emit({
            "kind": "epoch", "epoch": epoch, "train_loss": float(np.mean(losses)),
            "val_wa": val.wa, "val_ua": val.ua, "best_val_wa": state.best_val_wa,
            "patience": state.patience_counter,
        })
        log.debug("epoch %d loss %.4f val WA %.3f", epoch, np.mean(losses), val.wa)
        if state.patience_counter >= tcfg.patience:
            state.stopped_early = True
            break

    for name, p in params:
        p.data[...] = best[name]
    return TrainResult(experiment, model, vocab, state, optimizer, records)
