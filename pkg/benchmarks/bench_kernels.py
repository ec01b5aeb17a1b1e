"""Compare the compiled warp kernel against the NumPy fallback.

Times the raw kernel and the full transform chain per backend, and checks
that both backends produce byte-identical results.

    python3 benchmarks/bench_kernels.py --sizes 64,227 --repeats 30
"""

import argparse
import time

import numpy as np

from gestaug import _backend
from gestaug.sampler import params_for
from gestaug.synthetic import smooth_image
from gestaug.transforms import apply_chain


def time_call(fn, repeats):
    fn()  # warm-up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def rotation_args(size, theta=0.2):
    c, s = np.cos(theta), np.sin(theta)
    cx = (size - 1) / 2
    return (size, size, c, -s, cx - c * cx + s * cx, s, c, cx - s * cx - c * cx, 0, 0)


def bench_size(size, repeats, kernels):
    img = smooth_image(np.random.default_rng(size), size, size)
    params = params_for(0, f"bench/{size}", 1)
    rows, outputs = [], {}
    for name, kernel in kernels.items():
        _backend.warp_affine = kernel
        warp = time_call(lambda: kernel(img.pixels, *rotation_args(size)), repeats)
        chain = time_call(lambda: apply_chain(img, params), repeats)
        outputs[name] = (kernel(img.pixels, *rotation_args(size)).tobytes(), apply_chain(img, params).data)
        rows.append((name, warp, chain))
    identical = len({v for v in outputs.values()}) == 1
    return rows, identical


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="64,227", help="comma-separated square image sizes")
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args(argv)

    kernels = _backend.available_backends()
    original = _backend.warp_affine
    if "cython" not in kernels:
        print("compiled kernel not built; only the NumPy fallback is available")
    try:
        print(f"{'size':>5} {'backend':>8} {'warp ms':>9} {'chain ms':>9}")
        for size in (int(s) for s in args.sizes.split(",")):
            rows, identical = bench_size(size, args.repeats, kernels)
            for name, warp, chain in rows:
                print(f"{size:5d} {name:>8} {warp * 1e3:9.3f} {chain * 1e3:9.3f}")
            if len(rows) == 2:
                (_, pw, pc), (_, cw, cc) = sorted(rows, key=lambda r: r[0] != "python")
                print(f"{size:5d} {'speedup':>8} {pw / cw:8.1f}x {pc / cc:8.1f}x  identical={identical}")
    finally:
        _backend.warp_affine = original


if __name__ == "__main__":
    main()
