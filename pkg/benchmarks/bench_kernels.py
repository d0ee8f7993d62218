"""Compare the compiled likelihood kernel against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [repeats]
"""

import sys
import time

import numpy as np

from dtameta import load_cd64
from dtameta._kernels import BACKEND, loglik_terms, loglik_terms_numpy
from dtameta.data import counts_arrays
from dtameta.links import LOGISTIC
from dtameta.quadrature import gauss_hermite


def run(repeats=200):
    studies = load_cd64()
    n11, n10, n01, n00 = counts_arrays(studies)
    rule = gauss_hermite(21)
    args = (
        n11, n01, n10, n00,
        -0.237, 3.629, 0.087, 0.603, 1.372,
        rule.nodes, rule.normalized_weights(), LOGISTIC,
    )

    ref = loglik_terms_numpy(*args)
    active = loglik_terms(*args)
    max_diff = float(np.max(np.abs(ref - active)))
    print(f"active backend: {BACKEND}")
    print(f"max |active - numpy| over {len(studies)} studies: {max_diff:.3e}")

    timings = {}
    for name, fn in (("numpy", loglik_terms_numpy), (BACKEND, loglik_terms)):
        fn(*args)  # warm up
        start = time.perf_counter()
        for _ in range(repeats):
            fn(*args)
        timings[name] = (time.perf_counter() - start) / repeats
    for name, per_call in timings.items():
        print(f"{name:>8}: {per_call * 1e3:8.3f} ms/call")
    if BACKEND != "numpy":
        print(f"speedup: {timings['numpy'] / timings[BACKEND]:.2f}x")


if __name__ == "__main__":
    run(int(sys.argv[1]) if len(sys.argv) > 1 else 200)
