"""Compare the compiled and pure-Python kernel backends.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times each hot kernel on V3-M sized inputs (740 x 740 image, 29 x 29
modules, 44 data + 26 EC codewords) and prints a table of best-of-N
timings with the speedup of every backend over the Python one.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from qrsr.kernels import backends
from qrsr.qr_core import CodeConfig, central_window, encode
from qrsr.qr_core.rs import generator_poly
from qrsr.srl import gaussian_kernel


def workloads(cfg: CodeConfig):
    rng = np.random.default_rng(0)
    gray = np.ascontiguousarray(rng.random((cfg.image_px, cfg.image_px)))
    cells = encode("Thanks reviewer!", cfg).cells
    weights = np.ascontiguousarray(gaussian_kernel(cfg.module_px))
    phi = (rng.random((cfg.side, cfg.side)) < 0.3).astype(np.uint8)
    c0, c = central_window(cfg.module_px)
    data = bytes(rng.integers(0, 256, 44, dtype=np.uint8))
    gen = bytes(generator_poly(26))
    block = data + bytes(26)
    return {
        "rs_remainder": lambda k: k.rs_remainder(data, gen),
        "rs_syndromes": lambda k: k.rs_syndromes(block, 26),
        "module_stats": lambda k: k.module_stats(gray, cells, weights, cfg.quiet_px, c0, c),
        "gray_gradient": lambda k: k.gray_gradient(gray, cells, weights, phi, cfg.quiet_px, 1.0 / cfg.n_modules),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--number", type=int, default=20)
    args = parser.parse_args(argv)

    impls = backends()
    if "cython" not in impls:
        print("compiled backend not built; only the Python backend is timed")
    rows = []
    for name, fn in workloads(CodeConfig()).items():
        times = {}
        for backend, mod in impls.items():
            t = min(timeit.repeat(lambda: fn(mod), number=args.number, repeat=args.repeat))
            times[backend] = t / args.number
        rows.append((name, times))

    names = list(impls)
    print(f"{'kernel':<15}" + "".join(f"{b + ' (us)':>16}" for b in names) + f"{'speedup':>10}")
    for name, times in rows:
        speed = times["python"] / times["cython"] if "cython" in times else 1.0
        print(f"{name:<15}" + "".join(f"{times[b] * 1e6:>16.1f}" for b in names) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
