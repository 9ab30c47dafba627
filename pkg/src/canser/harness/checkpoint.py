"""Binary checkpoints.

Layout (all integers little-endian)::

    magic     8 bytes  b"CANCKPT\\0"
    version   uint32
    config    uint32 byte length + UTF-8 ``key=value`` lines (model, training)
    state     uint32 byte length + UTF-8 ``key=value`` lines (TrainState)
    count     uint32 number of tensors
    tensors   per tensor: uint32 name length, UTF-8 name, uint32 ndim,
              ndim x uint64 extents, row-major float64 values

Model parameters are stored as ``model.<name>``; Adam moments as
``adam.m.<name>`` and ``adam.v.<name>``, with the step count in the state.
"""

import os
import struct

import numpy as np

from ..config import apply_overrides, read_key_values, to_key_values, Experiment
from ..errors import ValidationError
from ..model import CrossAttentionNetwork
from .train import Adam, TrainState

MAGIC = b"CANCKPT\0"
VERSION = 1


def _pack_text(text):
    raw = text.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def _pairs_text(pairs):
    return "".join(f"{k}={v}\n" for k, v in pairs.items())


def checkpoint_bytes(experiment, model, state, optimizer=None):
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    chunks.append(_pack_text(to_key_values(experiment)))
    state_pairs = state.to_pairs()
    state_pairs["adam_steps"] = str(optimizer.step_count if optimizer else 0)
    chunks.append(_pack_text(_pairs_text(state_pairs)))
    tensors = [("model." + n, p.data) for n, p in model.named_parameters()]
    if optimizer is not None:
        tensors += [("adam.m." + n, optimizer.m[n]) for n, _ in optimizer.params]
        tensors += [("adam.v." + n, optimizer.v[n]) for n, _ in optimizer.params]
    chunks.append(struct.pack("<I", len(tensors)))
    for name, array in tensors:
        array = np.ascontiguousarray(array, dtype="<f8")
        chunks.append(_pack_text(name))
        chunks.append(struct.pack("<I", array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}Q", *array.shape))
        chunks.append(array.tobytes())
    return b"".join(chunks)


def save_checkpoint(path, experiment, model, state, optimizer=None):
    blob = checkpoint_bytes(experiment, model, state, optimizer)
    with open(os.fspath(path), "wb") as fh:
        fh.write(blob)


class _Reader:
    def __init__(self, blob):
        self.blob, self.pos = blob, 0

    def take(self, fmt):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.blob):
            raise ValidationError("truncated checkpoint")
        values = struct.unpack_from(fmt, self.blob, self.pos)
        self.pos += size
        return values

    def text(self):
        (n,) = self.take("<I")
        if self.pos + n > len(self.blob):
            raise ValidationError("truncated checkpoint")
        raw = self.blob[self.pos : self.pos + n]
        self.pos += n
        return raw.decode("utf-8")

    def array(self, shape):
        count = int(np.prod(shape)) if shape else 1
        end = self.pos + 8 * count
        if end > len(self.blob):
            raise ValidationError("truncated checkpoint")
        out = np.frombuffer(self.blob, dtype="<f8", count=count, offset=self.pos)
        self.pos = end
        return out.reshape(shape).astype(np.float64)


def load_checkpoint(path):
    """Return ``(experiment, model, state, tensors)``.

    ``tensors`` maps every stored name to its array (including Adam moments).
    """
    with open(os.fspath(path), "rb") as fh:
        blob = fh.read()
    reader = _Reader(blob)
    if reader.take("8s")[0] != MAGIC:
        raise ValidationError(f"{path}: not a checkpoint")
    (version,) = reader.take("<I")
    if version != VERSION:
        raise ValidationError(f"{path}: unsupported checkpoint version {version}")
    experiment = apply_overrides(Experiment(), read_key_values(reader.text()))
    state_pairs = read_key_values(reader.text())
    adam_steps = int(state_pairs.pop("adam_steps", "0"))
    state = TrainState.from_pairs(state_pairs)
    (count,) = reader.take("<I")
    tensors = {}
    for _ in range(count):
        name = reader.text()
        (ndim,) = reader.take("<I")
        shape = reader.take(f"<{ndim}Q") if ndim else ()
        tensors[name] = reader.array(tuple(shape))
    if reader.pos != len(blob):
        raise ValidationError(f"{path}: trailing bytes after tensors")

    cfg = experiment.model
    model = CrossAttentionNetwork(cfg, len(cfg.vocabulary), seed=0)
    for name, p in model.named_parameters():
        key = "model." + name
        if key not in tensors or tensors[key].shape != p.shape:
            raise ValidationError(f"{path}: missing or misshapen tensor {key}")
        p.data[...] = tensors[key]
    tensors["adam.steps"] = np.array(float(adam_steps))
    return experiment, model, state, tensors


def restore_optimizer(model, tensors, train_config):
    """Rebuild an :class:`Adam` whose moments come from a loaded checkpoint."""
    opt = Adam(model.named_parameters(), train_config.lr, train_config.beta1,
               train_config.beta2, train_config.adam_eps)
    for name, _ in opt.params:
        if "adam.m." + name in tensors:
            opt.m[name] = tensors["adam.m." + name].copy()
            opt.v[name] = tensors["adam.v." + name].copy()
    opt.step_count = int(tensors.get("adam.steps", 0))
    return opt
