"""Time the compiled and numpy kernels on an equirectangular convolution workload.

    python benchmarks/bench_backends.py --width 256 --channels 16 --repeat 5
"""

import argparse
import time

import numpy as np

from panolayout import _backend, conv, offsets
from panolayout.sphere import ImageGeometry


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--width", type=int, default=256)
    parser.add_argument("--channels", type=int, default=16)
    parser.add_argument("-r", type=int, default=3)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    geom = ImageGeometry(args.width, args.width // 2)
    spec = offsets.KernelSpec.matching(geom, args.r)
    plan = conv.sampling_plan(offsets.offset_field(geom, spec))
    rng = np.random.default_rng(0)
    x = rng.normal(size=(args.channels,) + geom.shape)
    u = rng.uniform(0, geom.width, size=geom.width * geom.height)
    v = rng.uniform(0, geom.height - 1, size=u.size)

    names = ["python"]
    try:
        _backend.get("cython")
        names.append("cython")
    except ImportError:
        print("compiled backend not built; timing the numpy fallback only")

    rows = []
    for name in names:
        k = _backend.get(name)
        cols = k.equi_gather(x, plan.base_u, plan.row0, plan.row1, plan.weights, 1, geom.width)
        rows.append((name,
                     best_time(lambda: k.equi_gather(x, plan.base_u, plan.row0, plan.row1, plan.weights, 1, geom.width), args.repeat),
                     best_time(lambda: k.equi_scatter(cols, plan.base_u, plan.row0, plan.row1, plan.weights, 1, *geom.shape), args.repeat),
                     best_time(lambda: k.warp_bilinear(x, u, v), args.repeat)))
    print(f"{args.channels} channels, {geom.width}x{geom.height}, r={args.r}; best of {args.repeat} (ms)")
    print(f"{'backend':<8}{'gather':>10}{'scatter':>10}{'warp':>10}")
    for name, *t in rows:
        print(f"{name:<8}" + "".join(f"{1e3 * s:>10.2f}" for s in t))
    if len(rows) == 2:
        print("speedup " + "".join(f"{a / b:>10.1f}" for a, b in zip(rows[0][1:], rows[1][1:])))


if __name__ == "__main__":
    main()
