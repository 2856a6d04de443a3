"""Time the numba kernels against their numpy fallbacks.

Usage: python benchmarks/bench_kernels.py [--repeat N]
Shapes match one replicate at desk scale (m=250 samples, k=500 features) and
one test batch (m_test=2500).
"""
import argparse
import math
import timeit

import numpy as np

from rfm_lab import activations, kernels


def _best(fn, repeat):
    fn()  # warm-up, also triggers JIT compilation
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    poly = activations.equivalent_polynomial("relu", 4)
    # the kernels take mu_j / j!
    coeffs = np.array([c / math.factorial(j) for j, c in enumerate(poly.series_coefficients())])
    G = rng.standard_normal((500, 500))
    cases = []
    for shape in ((250, 500), (2500, 500)):
        x = rng.standard_normal(shape)
        z = rng.standard_normal(shape)
        tag = f"{shape[0]}x{shape[1]}"
        cases.append((f"hermite_series l=4 {tag}",
                      lambda x=x, z=z: kernels.hermite_series_numpy(x, coeffs, poly.noise, z),
                      lambda x=x, z=z: kernels.hermite_series_numba(x, coeffs, poly.noise, z)))
        for name in ("relu", "softplus", "tanh"):
            cases.append((f"{name} {tag}", lambda x=x, f=getattr(kernels, f"{name}_numpy"): f(x),
                          lambda x=x, f=getattr(kernels, f"{name}_numba"): f(x)))
    cases.append(("max_abs_offdiag 500x500", lambda: kernels.max_abs_offdiag_numpy(G),
                  lambda: kernels.max_abs_offdiag_numba(G)))
    print(f"{'kernel':32s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for label, f_np, f_nb in cases:
        t_np, t_nb = _best(f_np, args.repeat), _best(f_nb, args.repeat)
        print(f"{label:32s} {1e3 * t_np:10.3f} {1e3 * t_nb:10.3f} {t_np / t_nb:8.2f}")


if __name__ == "__main__":
    main()
