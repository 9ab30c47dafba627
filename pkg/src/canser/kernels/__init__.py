"""Hot loops: the masked LSTM recurrence, forward and backward.

Two interchangeable backends implement ``lstm_forward`` and
``lstm_backward``: a compiled Cython extension and a numpy fallback. The
compiled one is used when importable. Set ``CANSER_KERNEL=python`` to force
the fallback or ``CANSER_KERNEL=cython`` to fail loudly when the extension
is missing.
"""

import importlib
import os

from . import _lstm_np

_MODULES = {"python": "canser.kernels._lstm_np", "cython": "canser.kernels._lstm_cy"}


def load_backend(name):
    """Return the kernel module for ``name`` ("python" or "cython")."""
    if name not in _MODULES:
        raise ValueError(f"unknown kernel backend {name!r}")
    return importlib.import_module(_MODULES[name])


def available_backends():
    names = ["python"]
    try:
        load_backend("cython")
    except ImportError:
        pass
    else:
        names.append("cython")
    return names


def _select():
    choice = os.environ.get("CANSER_KERNEL", "auto").lower()
    if choice == "python":
        return "python", _lstm_np
    try:
        return "cython", load_backend("cython")
    except ImportError:
        if choice == "cython":
            raise
        return "python", _lstm_np


BACKEND, _impl = _select()
lstm_forward = _impl.lstm_forward
lstm_backward = _impl.lstm_backward

__all__ = ["BACKEND", "available_backends", "load_backend", "lstm_backward", "lstm_forward"]
