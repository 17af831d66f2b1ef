"""Time the compiled kernels against their numpy fallbacks.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one line per (kernel, size, backend) with the best wall time and
the speedup of the compiled kernel. Without the extension only the
fallback rows are printed.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from unifactor import _backend


def _random_psd(rng: np.random.Generator, p: int) -> np.ndarray:
    b = rng.standard_normal((p, p))
    return b @ b.T / p + np.eye(p)


def _cases(rng: np.random.Generator):
    for p in (5, 20, 60):
        s = _random_psd(rng, p)
        yield "jacobi_eigh", p, lambda k, s=s: k.jacobi_eigh(s)
    for p, q in ((5, 1), (10, 2), (30, 3)):
        s = _random_psd(rng, p)
        a = rng.standard_normal((p, q))
        yield "loading_candidates", p, lambda k, s=s, a=a: k.loading_candidates(s, a, 0.01, 0.5, 0.5)
    for n in (7, 20, 60):
        m = rng.standard_normal((n, n))
        h = m @ m.T
        b = rng.standard_normal(n)
        lead = float(np.linalg.eigvalsh(h)[-1])
        yield "nnqp_projected_gradient", n, (
            lambda k, h=h, b=b, lead=lead: k.nnqp_projected_gradient(
                h, b, np.zeros(b.size), lead, 1e-9, 2000))
    for p, q in ((4, 2), (10, 2), (20, 3)):
        s = _random_psd(rng, p)
        yield "coordinate_descent", p, (
            lambda k, s=s, q=q: k.coordinate_descent(s, q, 1e-3, 1e-10, 200, np.zeros(s.shape[0])))


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    backends = {name: _backend.load(name) for name in _backend.available()}
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<26}{'size':>6}{'backend':>9}{'best [ms]':>12}{'speedup':>9}")
    for name, size, call in _cases(rng):
        times = {}
        for bname, mod in backends.items():
            number = 1 if bname == "python" and size >= 30 else 5
            best = min(timeit.repeat(lambda: call(mod), number=number, repeat=args.repeat)) / number
            times[bname] = best
        for bname, best in times.items():
            speed = ""
            if bname == "cython":
                speed = f"{times['python'] / best:8.1f}x"
            print(f"{name:<26}{size:>6}{bname:>9}{best * 1e3:>12.3f}{speed:>9}")


if __name__ == "__main__":
    main()
