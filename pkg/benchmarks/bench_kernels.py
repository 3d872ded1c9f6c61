"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--sizes 50 100 200 400] [--prime 3] [--precision 4]

Both backends run on the same matrices; results are checked for equality
before timings are reported.  Numba compilation happens in a warm-up call
that is not timed.
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

from robbakit import _kernels
from robbakit.corpus import rank1_corpus
from robbakit.koszul import build_phi_gamma_complex, cohomology_dims


def timed(backend: str, fn, repeat: int):
    os.environ["ROBBAKIT_BACKEND"] = backend
    result = fn()  # warm-up, also compiles under numba
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200, 400])
    ap.add_argument("--prime", type=int, default=3)
    ap.add_argument("--precision", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    p, N = args.prime, args.precision
    rng = np.random.default_rng(0)

    print(f"{'task':<28}{'numba (s)':>12}{'numpy (s)':>12}{'speedup':>10}")
    for n in args.sizes:
        A = rng.integers(0, p**N, size=(n, n)) * p ** rng.integers(0, 2, size=(n, n)) % p**N
        # differentials of the Koszul complexes are a few percent dense
        S = A * (rng.random((n, n)) < 0.03)
        tasks = {
            f"pivot_valuations {n}x{n}": lambda: _kernels.pivot_valuations(A, p, N),
            f"kernel_basis {n}x{n}": lambda: _kernels.span_length(_kernels.kernel_basis(A, p, N), p, N),
            f"matmul_mod {n}x{n}": lambda: _kernels.matmul_mod(A, A, p**N).tolist(),
            f"matmul_mod sparse {n}x{n}": lambda: _kernels.matmul_mod(S, S, p**N).tolist(),
        }
        for name, fn in tasks.items():
            t_nb, r_nb = timed("numba", fn, args.repeat)
            t_np, r_np = timed("numpy", fn, args.repeat)
            assert r_nb == r_np, name
            print(f"{name:<28}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>9.1f}x")

    M = rank1_corpus(p)[0]
    fn = lambda: cohomology_dims(build_phi_gamma_complex(M)).dims  # noqa: E731
    t_nb, r_nb = timed("numba", fn, 1)
    t_np, r_np = timed("numpy", fn, 1)
    assert r_nb == r_np
    print(f"{'trivial module cohomology':<28}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
