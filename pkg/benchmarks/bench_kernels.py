"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Inputs are sized like the synthetic experiments: 20 years of hourly returns
lifted with (h1, h2) = (35, 28).
"""
import argparse
import timeit

import numpy as np

from regime_lab._kernels import _fallback

try:
    from regime_lab._kernels import _core
except ImportError:
    _core = None


def cases(rng):
    X = np.sort(rng.normal(0, 0.005, size=(5036, 35)), axis=1)
    C = X[rng.choice(len(X), 2, replace=False)]
    T = 35_280
    B = rng.uniform(0.1, 1.0, size=(T, 2))
    pi = np.array([0.5, 0.5])
    A = np.array([[0.99, 0.01], [0.02, 0.98]])
    P = rng.normal(0, 0.005, size=(2000, 1, 35))
    Q = rng.normal(0, 0.005, size=(2000, 1, 35))
    Pa = rng.normal(0, 0.005, size=(300, 35, 1))
    Qa = rng.normal(0, 0.005, size=(300, 35, 1))
    return {
        "pairwise_pow_dist (5036x35 vs 200, p=1)": lambda m: m.pairwise_pow_dist(X, X[:200], 1.0),
        "assign_nearest (5036x35, k=2, p=1)": lambda m: m.assign_nearest(X, C, 1.0),
        "forward_backward (T=35280, k=2)": lambda m: m.forward_backward(B, pi, A),
        "viterbi (T=35280, k=2)": lambda m: m.viterbi(np.log(B), np.log(pi), np.log(A)),
        "mmd2_pairs vectors (2000 pairs)": lambda m: m.mmd2_pairs(P, Q, 0.1),
        "mmd2_pairs atoms (300 pairs, 35x35)": lambda m: m.mmd2_pairs(Pa, Qa, 0.1),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    backends = [("python", _fallback)] + ([("cython", _core)] if _core is not None else [])
    if _core is None:
        print("compiled core not built; timing the fallback only")
    print(f"{'kernel':42s}" + "".join(f"{name:>12s}" for name, _ in backends) + ("     speedup" if _core else ""))
    for label, fn in cases(rng).items():
        times = [min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) for _, mod in backends]
        line = f"{label:42s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if _core is not None:
            line += f"{times[0] / times[1]:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
