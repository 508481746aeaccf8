"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from seqbalance import kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases(rng):
    for T, n_cells in ((10_000, 100), (1_000_000, 1000)):
        cells = rng.integers(0, n_cells, size=T).astype(np.int64)
        coins = rng.integers(0, 2, size=T, dtype=np.uint8)
        yield f"pigeonhole_run T={T} cells={n_cells}", "pigeonhole_run", (cells, coins, n_cells)
    for n in (100, 400):
        yield f"assignment n={n}", "assignment", (rng.random((n, n)),)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the python backend is available")
    mods = {name: kernels.load_backend(name) for name in backends}
    print(f"{'case':<40}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(mods) == 2 else ""))
    for label, fn_name, fn_args in cases(np.random.default_rng(args.seed)):
        t = {b: best_of(lambda m=m: getattr(m, fn_name)(*fn_args), args.repeat) for b, m in mods.items()}
        row = f"{label:<40}" + "".join(f"{t[b]:>11.4f}s" for b in backends)
        if len(mods) == 2:
            row += f"{t['python'] / t['compiled']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
