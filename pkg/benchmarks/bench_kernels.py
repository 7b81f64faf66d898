"""Compare the compiled and pure-Python kernel backends.

Run with ``python3 benchmarks/bench_kernels.py``. Both backends are
imported directly, so the comparison does not depend on
``SGMODES_PURE_PYTHON``.
"""
import argparse
import timeit

import numpy as np

from sgmodes import _kernels_py as py

try:
    from sgmodes import _kernels as cy
except ImportError:
    cy = None


def cases(size):
    nu, eta = 1000, 1.479
    xs = np.linspace(nu / eta * 1.0001, nu * 0.9999, size)
    zs = (eta * xs + 1e-6j).astype(np.complex128)
    return {
        "j_logderiv (scalar)": lambda m: m.j_logderiv(nu, complex(zs[size // 2])),
        "j_logderiv_array": lambda m: m.j_logderiv_array(nu, zs, np.empty_like(zs)),
        "branch_function": lambda m: m.branch_function(nu, eta, xs, np.empty_like(xs)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=2000, help="points per array call")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"python": py} if cy is None else {"cython": cy, "python": py}
    if cy is None:
        print("compiled extension not built; timing the Python backend only")
    print(f"{'kernel':24s} " + " ".join(f"{b:>12s}" for b in backends) + "     speed-up")
    for name, fn in cases(args.size).items():
        times = {}
        for b, mod in backends.items():
            fn(mod)  # warm-up
            loops = 200 if "scalar" in name else 3
            times[b] = min(timeit.repeat(lambda: fn(mod), number=loops, repeat=args.repeat)) / loops
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:24s} " + " ".join(f"{times[b] * 1e3:10.3f}ms" for b in backends) + f" {speed:11.1f}x")


if __name__ == "__main__":
    main()
