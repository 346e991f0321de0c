"""Compare the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints per-call timings (best of ``--repeat`` runs) and the speed-up.
"""

import argparse
import timeit

import numpy as np

from rprsd import _backend
from rprsd.ensembles import generate_matrix, generate_signal, measure
from rprsd.seeding import make_rng


def cases():
    A = generate_matrix("rpr", 83, 200, 1).entries
    y = np.ascontiguousarray(measure(generate_matrix("rpr", 83, 200, 1), generate_signal(200, 2, seed=2)).vector)
    A32 = generate_matrix("rpr", 32, 64, 3).entries
    y4 = np.ascontiguousarray(measure(generate_matrix("rpr", 32, 64, 3), generate_signal(64, 4, seed=4)).vector)
    stack = np.stack([generate_matrix("rpr", 64, 8, s).entries for s in range(2048)])
    u = make_rng(5).random((200, 83))
    scale = 1 / np.sqrt(83)
    return {
        "omp M=83 N=200 K=2": (lambda k: k.omp(A, y, 2, 1e-10), 2000),
        "omp M=32 N=64 K=4": (lambda k: k.omp(A32, y4, 4, 1e-10), 2000),
        "coherence M=83 N=200": (lambda k: k.max_offdiag_gram(A), 200),
        "batch coherence 2048x64x8": (lambda k: k.batch_coherence(stack), 5),
        "phasors 200x83": (lambda k: k.rpr_phasors(u, scale), 2000),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    compiled = _backend.compiled_kernels()
    if compiled is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    py = _backend.python_kernels
    print(f"{'kernel':<28}{'python us':>12}{'cython us':>12}{'speedup':>10}")
    for name, (fn, number) in cases().items():
        t = {}
        for label, mod in (("python", py), ("cython", compiled)):
            best = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat))
            t[label] = best / number * 1e6
        print(f"{name:<28}{t['python']:>12.2f}{t['cython']:>12.2f}{t['python'] / t['cython']:>9.1f}x")


if __name__ == "__main__":
    main()
