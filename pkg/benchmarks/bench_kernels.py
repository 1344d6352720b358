"""Compare the compiled and pure-Python kernel backends.

Kernel timings import both modules directly.  The end-to-end timing runs
one converse-rate solve per backend in a subprocess, since the backend is
fixed at import time.

    python3 benchmarks/bench_kernels.py [--repeat 20]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ppvconverse import _kernels_py

try:
    from ppvconverse import _kernels
except ImportError:
    _kernels = None

END_TO_END = (
    "import time, ppvconverse as p;"
    "t = time.perf_counter();"
    "[p.converse_rate(p.BoundQuery(n, 1.0, pe=1e-5), certify=False) for n in (100, 1000, 10000, 100000)];"
    "print(p.BACKEND, time.perf_counter() - t)"
)


def bench(fn, repeat):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_cases():
    phi = np.linspace(1e-6, 3.0, 4096)
    inner = np.zeros(43)
    inner[1:] = (-1.0) ** np.arange(2, 44) / np.arange(1, 43)
    return {
        "path_eval[4096]": lambda m: m.path_eval(phi, 0.3, 0.1),
        "path_integrand[4096]": lambda m: m.path_integrand(phi, 0.3, 0.1, 500.0),
        "power_table[N=42]": lambda m: m.power_table(inner, 42),
    }


def end_to_end(pure):
    env = dict(os.environ, PPVCONVERSE_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
    backend, secs = out.stdout.split()
    return backend, float(secs)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    print(f"{'kernel':<24}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, case in kernel_cases().items():
        tp = bench(lambda: case(_kernels_py), args.repeat) * 1e3
        if _kernels is None:
            print(f"{name:<24}{tp:12.3f}{'n/a':>12}{'':>10}")
            continue
        tc = bench(lambda: case(_kernels), args.repeat) * 1e3
        print(f"{name:<24}{tp:12.3f}{tc:12.3f}{tp / tc:10.1f}")

    print("\nconverse_rate at n = 1e2..1e5 (subprocess per backend)")
    for pure in (True, False):
        backend, secs = end_to_end(pure)
        print(f"  {backend:<8}{secs:8.3f} s")


if __name__ == "__main__":
    main()
