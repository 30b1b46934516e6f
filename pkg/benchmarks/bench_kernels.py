"""Compare the compiled and numpy kernel backends.

Times the element loop alone on square meshes of growing size, then a full
perturbed solve with each backend swapped in.

    python3 benchmarks/bench_kernels.py [--sizes 16 64 256] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from wentzell import kernels
from wentzell.domain import build_rectangle
from wentzell.forms import Mode, ProblemSpec
from wentzell.orlicz import arctan, power
from wentzell.solver import solve_perturbed


def time_kernel(backend, dom, p, repeat, number):
    u = np.random.default_rng(0).normal(size=dom.n_nodes)
    grad, diag = np.zeros(dom.n_nodes), np.zeros(dom.n_nodes)
    args = (dom.elements, dom.element_shape_grads, dom.element_measures, u, p, 0.0, grad, diag)
    best = min(timeit.repeat(lambda: backend.gradient_power_term(*args), repeat=repeat, number=number))
    return best / number


def time_solve(backend, dom, repeat):
    rng = np.random.default_rng(1)
    spec = ProblemSpec(dom, p=3, q=2.5, mode=Mode.PERTURBED, alpha1=power(1, 3), alpha2=arctan(),
                       f=rng.uniform(-1, 1, dom.n_nodes), g=rng.uniform(-1, 1, dom.n_boundary))
    saved = kernels.gradient_power_term
    kernels.gradient_power_term = backend.gradient_power_term
    try:
        times = timeit.repeat(lambda: solve_perturbed(spec), repeat=repeat, number=1)
        iters = solve_perturbed(spec).iterations
    finally:
        kernels.gradient_power_term = saved
    return min(times), iters


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[16, 64, 256])
    ap.add_argument("--solve-sizes", type=int, nargs="+", default=[16, 32])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    names = sorted(backends)
    print(f"backends: {', '.join(names)} (default {kernels.BACKEND})")
    print("\nelement kernel, p = 3 (seconds per call)")
    print(f"{'mesh':>10} {'elements':>9} " + " ".join(f"{n:>12}" for n in names) + "   speedup")
    for n in args.sizes:
        dom = build_rectangle(n, n)
        number = max(1, 20000 // n ** 2)
        t = {name: time_kernel(backends[name], dom, 3.0, args.repeat, number) for name in names}
        speed = f"{t['python'] / t['cython']:8.2f}x" if "cython" in t else "       -"
        print(f"{n:>5}x{n:<4} {dom.elements.shape[0]:>9} " + " ".join(f"{t[k]:12.3e}" for k in names)
              + f"  {speed}")

    print("\nperturbed solve, p = 3, q = 2.5 (seconds)")
    for n in args.solve_sizes:
        dom = build_rectangle(n, n)
        row = []
        for name in names:
            secs, iters = time_solve(backends[name], dom, max(1, args.repeat // 2))
            row.append(f"{name} {secs:.3f} ({iters} it)")
        print(f"{n:>5}x{n:<4} " + "   ".join(row))


if __name__ == "__main__":
    main()
