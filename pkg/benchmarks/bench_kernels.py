"""Compare the compiled and pure network kernels on identical workloads.

Times the three kernel entry points (forward pass, Q-value regression
gradient, cross-entropy gradient) at training-realistic shapes and prints
per-call medians with the compiled-over-pure speedup.  Also checks that
the two backends agree numerically on every timed workload.

Usage: python3 benchmarks/bench_kernels.py [--repeats N] [--batches 1,32,256]
"""
import argparse
import statistics
import time

import numpy as np

from trajsynth.kernels import backend_name, get_backend
from trajsynth.qpolicy import DEFAULT_SIZES, QNetwork


def time_call(fn, repeats):
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def workloads(batch, rng):
    net = QNetwork.create(rng)
    X = rng.normal(size=(batch, DEFAULT_SIZES[0]))
    actions = rng.integers(0, DEFAULT_SIZES[-1], size=batch)
    targets = rng.normal(size=batch)
    labels = rng.integers(0, DEFAULT_SIZES[-1], size=batch)
    return [
        ("forward", lambda be: be.forward(net.Ws, net.bs, X)),
        ("qsel_grad", lambda be: be.qsel_loss_grad(net.Ws, net.bs, X,
                                                   actions, targets)),
        ("ce_grad", lambda be: be.ce_loss_grad(net.Ws, net.bs, X, labels)),
    ]


def check_agreement(call, pure, compiled):
    a, b = call(pure), call(compiled)
    flat_a = a if isinstance(a, np.ndarray) else \
        np.concatenate([np.ravel(a[0])] + [np.ravel(g) for gs in a[1:] for g in gs])
    flat_b = b if isinstance(b, np.ndarray) else \
        np.concatenate([np.ravel(b[0])] + [np.ravel(g) for gs in b[1:] for g in gs])
    worst = float(np.max(np.abs(flat_a - flat_b)))
    if worst > 1e-9:
        raise SystemExit(f"backends disagree by {worst:.3e}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=200,
                        help="timed calls per measurement (median reported)")
    parser.add_argument("--batches", default="1,32,256",
                        help="comma-separated batch sizes")
    args = parser.parse_args()

    pure = get_backend("pure")
    try:
        compiled = get_backend("compiled")
    except ImportError:
        raise SystemExit("compiled backend not built; reinstall with a C "
                         "compiler to benchmark it")

    print(f"default backend this install selects: {backend_name()}")
    print(f"{'kernel':<10} {'batch':>6} {'pure':>12} {'compiled':>12} {'speedup':>8}")
    rng = np.random.default_rng(0)
    for batch in [int(b) for b in args.batches.split(",")]:
        for name, call in workloads(batch, rng):
            check_agreement(call, pure, compiled)
            call(compiled)  # warm both paths before timing
            call(pure)
            t_pure = time_call(lambda: call(pure), args.repeats)
            t_comp = time_call(lambda: call(compiled), args.repeats)
            print(f"{name:<10} {batch:>6} {t_pure * 1e6:>10.1f}us "
                  f"{t_comp * 1e6:>10.1f}us {t_pure / t_comp:>7.2f}x")


if __name__ == "__main__":
    main()
