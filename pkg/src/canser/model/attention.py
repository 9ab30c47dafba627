"""Per-modality global attention and crossed context aggregation.

Each modality has its own learned query per head. Its attention weights
pool its own hidden states and, through a stop-gradient, the other
modality's hidden states at the same steps.
"""

from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor, masked_softmax, mul, stop_gradient
from ..errors import DimensionError, InvalidInputError


class GlobalQueries:
    def __init__(self, heads, head_dim, rng):
        self.heads = heads
        self.head_dim = head_dim
        self.text = Tensor(rng.normal(0.0, 0.1, (heads, head_dim)), True)
        self.audio = Tensor(rng.normal(0.0, 0.1, (heads, head_dim)), True)

    def named_parameters(self):
        return [("text", self.text), ("audio", self.audio)]


@dataclass(eq=False)
class ContextBundle:
    """Context vectors ``(B, 2*D_h)`` named query-modality then value-modality.

    ``c_ta``/``c_at`` are ``None`` when cross attention is disabled.
    ``cross_weights_*`` are the exact weight tensors fed into the crossed sums.
    """

    c_tt: Tensor
    c_ta: Tensor
    c_aa: Tensor
    c_at: Tensor
    alpha_text: Tensor
    alpha_audio: Tensor
    cross_weights_text: Tensor = None
    cross_weights_audio: Tensor = None


def attend(hidden, mask, query):
    """Attention weights ``(B, heads, L)``.

    Head ``h`` scores step ``i`` by the plain dot product of ``query[h]`` with
    slice ``h`` of the hidden row, then normalizes over valid steps.
    """
    batch, steps, width = hidden.shape
    heads, head_dim = query.shape
    if heads * head_dim != width:
        raise DimensionError(f"query {query.shape} does not tile hidden width {width}")
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (batch, steps):
        raise DimensionError(f"mask shape {mask.shape} vs hidden {hidden.shape}")
    if not mask.any(axis=1).all():
        raise InvalidInputError("attention needs at least one valid step per item")
    split = hidden.reshape(batch, steps, heads, head_dim)
    logits = mul(split, query).sum(axis=-1).transpose(0, 2, 1)
    return masked_softmax(logits, mask[:, None, :], axis=-1)


def aggregate(weights, hidden):
    """Per-head weighted sums of ``hidden`` rows, heads concatenated: ``(B, 2*D_h)``."""
    batch, heads, steps = weights.shape
    width = hidden.shape[2]
    if hidden.shape[:2] != (batch, steps):
        raise DimensionError(f"weights {weights.shape} vs hidden {hidden.shape}")
    split = hidden.reshape(batch, steps, heads, width // heads)
    w = weights.transpose(0, 2, 1).reshape(batch, steps, heads, 1)
    return mul(w, split).sum(axis=1).reshape(batch, width)


def cross_aggregate(
    text, audio, queries, stop_grad=True, cross=True, freeze_cross=False, cross_override=None
):
    """Build the four context vectors from aligned encoder outputs.

    ``stop_grad=False`` lets the crossed sums train the queries (ablation).
    ``freeze_cross=True`` feeds the crossed sums a constant copy of the
    weights instead, the reference used to verify the stop-gradient cut.
    ``cross_override=(w_text, w_audio)`` feeds given constant arrays, which
    lets finite differences hold the stopped weights at a base point.
    """
    if text.hidden.shape[:2] != audio.hidden.shape[:2] or not np.array_equal(
        text.mask, audio.mask
    ):
        raise DimensionError(
            f"text steps {text.hidden.shape[:2]} and audio steps "
            f"{audio.hidden.shape[:2]} are not aligned"
        )
    alpha_t = attend(text.hidden, text.mask, queries.text)
    alpha_a = attend(audio.hidden, audio.mask, queries.audio)
    c_tt = aggregate(alpha_t, text.hidden)
    c_aa = aggregate(alpha_a, audio.hidden)
    if not cross:
        return ContextBundle(c_tt, None, c_aa, None, alpha_t, alpha_a)
    if cross_override is not None:
        w_t, w_a = (Tensor(np.array(w, dtype=np.float64)) for w in cross_override)
        if w_t.shape != alpha_t.shape or w_a.shape != alpha_a.shape:
            raise DimensionError("override weights do not match attention shapes")
    elif freeze_cross:
        w_t, w_a = Tensor(alpha_t.data.copy()), Tensor(alpha_a.data.copy())
    elif stop_grad:
        w_t, w_a = stop_gradient(alpha_t), stop_gradient(alpha_a)
    else:
        w_t, w_a = alpha_t, alpha_a
    c_ta = aggregate(w_t, audio.hidden)
    c_at = aggregate(w_a, text.hidden)
    return ContextBundle(c_tt, c_ta, c_aa, c_at, alpha_t, alpha_a, w_t, w_a)


def attention_table(words, alpha_text, alpha_audio):
    """Text dump of one utterance's weights: step, word, then per-head columns."""
    heads = alpha_text.shape[0]
    header = ["step", "word"] + [f"text_h{h}" for h in range(heads)] + [
        f"audio_h{h}" for h in range(heads)
    ]
    rows = [header]
    for i, word in enumerate(words):
        rows.append(
            [str(i), word]
            + [f"{alpha_text[h, i]:.6f}" for h in range(heads)]
            + [f"{alpha_audio[h, i]:.6f}" for h in range(heads)]
        )
    return "\n".join("\t".join(r) for r in rows) + "\n"
