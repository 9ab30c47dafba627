"""Time the LSTM kernels: compiled extension versus numpy fallback.

    python benchmarks/bench_lstm.py --repeat 5

Shapes cover the lower audio encoder (many short segments, MFCC input)
and the text/upper encoders (few long sequences, wide input).
"""

import time

import click
import numpy as np

from canser.kernels import available_backends, load_backend

SHAPES = (
    # name, batch, steps, input, hidden
    ("segments", 64, 40, 40, 128),
    ("words", 16, 12, 300, 128),
    ("desk", 32, 30, 40, 16),
)


def make_case(batch, steps, n_in, hidden, rng):
    x = rng.normal(size=(batch, steps, n_in))
    lengths = rng.integers(1, steps + 1, batch).astype(np.int64)
    lengths[0] = steps
    w_x = rng.normal(0, 0.1, (n_in, 4 * hidden))
    w_h = rng.normal(0, 0.1, (hidden, 4 * hidden))
    b = np.zeros(4 * hidden)
    return x, lengths, w_x, w_h, b


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


@click.command()
@click.option("--repeat", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
def main(repeat, seed):
    rng = np.random.default_rng(seed)
    backends = {name: load_backend(name) for name in available_backends()}
    header = f"{'shape':<10} {'backend':<8} {'forward ms':>11} {'backward ms':>12} {'speedup':>8}"
    print(header)
    for name, batch, steps, n_in, hidden in SHAPES:
        x, lengths, w_x, w_h, b = make_case(batch, steps, n_in, hidden, rng)
        dh = rng.normal(size=(batch, steps, hidden))
        base = None
        for backend, mod in backends.items():
            h, c, gates = mod.lstm_forward(x, lengths, w_x, w_h, b)
            fwd = best_time(lambda: mod.lstm_forward(x, lengths, w_x, w_h, b), repeat)
            bwd = best_time(
                lambda: mod.lstm_backward(dh, x, lengths, w_x, w_h, h, c, gates), repeat
            )
            total = fwd + bwd
            base = base or total
            print(f"{name:<10} {backend:<8} {fwd * 1e3:11.2f} {bwd * 1e3:12.2f} "
                  f"{base / total:7.2f}x")


if __name__ == "__main__":
    main()
