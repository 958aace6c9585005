"""Compare the numpy and cython kernel backends on the pointwise hot loops.

Run from the repo root after an editable install:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from ktcy import _kernels


def _time(fn, *args, repeats=7):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(7)
    print(f"available backends: {_kernels.available_backends()}")
    header = f"{'kernel':<18}{'n':>6}" + "".join(
        f"{name + ' (ms)':>16}" for name in _kernels.available_backends()
    )
    print(header)
    print("-" * len(header))

    for n in (64, 128, 256, 512):
        phi = np.ascontiguousarray(rng.standard_normal((n, n)) * 0.01)
        fxx = np.ascontiguousarray(rng.standard_normal((n, n)) * 0.1)
        fyy = np.ascontiguousarray(rng.standard_normal((n, n)) * 0.1)
        fxy = np.ascontiguousarray(rng.standard_normal((n, n)) * 0.1)
        target = np.ascontiguousarray(1.0 + 0.1 * rng.standard_normal((n, n)))
        v = (fxx, fyy, fxy)

        cases = {
            "residual_values": lambda mod: mod.residual_values(fxx, fyy, fxy, target),
            "linear_apply": lambda mod: mod.linear_apply(
                1.0 + fxx, 1.0 + fyy, fxy, *v
            ),
            "trial_mins": lambda mod: mod.trial_mins(fxx, fyy, fxy, *v, 0.5),
            "trial_residual_sup": lambda mod: mod.trial_residual_sup(
                fxx, fyy, fxy, *v, target, 0.5
            ),
            "sup_abs": lambda mod: mod.sup_abs(phi),
        }
        for name, case in cases.items():
            row = f"{name:<18}{n:>6}"
            for backend in _kernels.available_backends():
                mod = _kernels._BACKENDS[backend]
                row += f"{1e3 * _time(case, mod):>16.4f}"
            print(row)
        print()


if __name__ == "__main__":
    main()
