"""Compiled kernel vs numpy fallback on the two hot paths.

    python3 benchmarks/bench_kernel.py [--steps 2000] [--repeat 5]

Times ``propagate`` (RK4 steps of the harmonic Lindblad form) for the
three-level and five-level models and ``herm_eigvals`` on random
Hermitian matrices, and checks the two backends agree.
"""
import argparse
import math
import time

import numpy as np

from steerlab import _kernel_py
from steerlab.squeeze import Frame, SqueezeParams, build_five_level_model, build_three_level_model

try:
    from steerlab import _kernel
except ImportError:
    _kernel = None


def best_of(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_propagate(label, model, steps, repeat):
    hf = model.harmonic
    dim = model.dim
    rho = np.eye(dim, dtype=np.complex128) / dim
    h = 0.01

    def run(k):
        return lambda: k.propagate(rho, 0.0, h, steps, hf.rates, hf.static, hf.modulated,
                                   hf.phi0, hf.phi_rate, hf.generator)

    t_py, ref = best_of(run(_kernel_py), repeat)
    row = f"{label:<28} python {1e6 * t_py / steps:9.2f} us/step"
    if _kernel is not None:
        t_c, got = best_of(run(_kernel), repeat)
        row += (f"   compiled {1e6 * t_c / steps:7.2f} us/step   speedup {t_py / t_c:6.1f}x"
                f"   max|diff| {np.max(np.abs(got - ref)):.1e}")
    print(row)


def bench_eigvals(dim, count, repeat):
    rng = np.random.default_rng(1)
    mats = []
    for _ in range(count):
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        mats.append(0.5 * (a + a.conj().T))

    def run(k):
        return lambda: [k.herm_eigvals(m) for m in mats]

    t_py, ref = best_of(run(_kernel_py), repeat)
    row = f"{f'herm_eigvals {dim}x{dim}':<28} python {1e6 * t_py / count:9.2f} us/call"
    if _kernel is not None:
        t_c, got = best_of(run(_kernel), repeat)
        diff = max(np.max(np.abs(g - r)) for g, r in zip(got, ref))
        row += (f"   compiled {1e6 * t_c / count:7.2f} us/call   speedup {t_py / t_c:6.1f}x"
                f"   max|diff| {diff:.1e}")
    print(row)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernel is None:
        print("compiled kernel not built; timing the fallback only")
    p = SqueezeParams(0.5)
    bench_propagate("propagate 4-level lab", build_three_level_model(p, 0.01), args.steps,
                    args.repeat)
    bench_propagate("propagate 4-level rotating",
                    build_three_level_model(p, 0.01, frame=Frame.ROTATING), args.steps,
                    args.repeat)
    bench_propagate("propagate 5-level lab",
                    build_five_level_model(p, SqueezeParams(1.0), 0.01), args.steps, args.repeat)
    for dim in (4, 5):
        bench_eigvals(dim, 500, args.repeat)


if __name__ == "__main__":
    main()
