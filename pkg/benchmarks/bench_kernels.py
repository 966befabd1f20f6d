"""Time the compiled kernels against the numpy fallback on patch-sized inputs.

    python benchmarks/bench_kernels.py [--repeat 5]

Also times one full patch through ``process_cloud`` with each backend.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from terrapsd import kernels


def inputs(seed=0):
    rng = np.random.default_rng(seed)
    n = 112 * 56  # one 0.9 m x 0.45 m patch at 8 mm
    x, y = rng.uniform(0, 0.9, n), rng.uniform(0, 0.45, n)
    z = rng.normal(0, 1e-3, n)
    rows, cols = rng.integers(0, 56, n), rng.integers(0, 112, n)
    grid = rng.normal(size=(56, 112))
    valid = rng.uniform(size=grid.shape) > 0.2
    return dict(x=x, y=y, z=z, rows=rows, cols=cols, grid=grid, valid=valid)


def bench_kernels(repeat):
    d = inputs()
    cases = {
        "window_moments": lambda k: k.window_moments(d["x"], d["y"], d["z"], 0.025),
        "bin_accumulate": lambda k: k.bin_accumulate(d["rows"], d["cols"], d["z"], 56, 112),
        "fill_gaps": lambda k: k.fill_gaps(d["grid"], d["valid"], 3),
    }
    impls = kernels.backends()
    print(f"{'kernel':<16}" + "".join(f"{name:>12}" for name in impls) + f"{'speed-up':>10}")
    for label, fn in cases.items():
        times = {}
        for name, mod in impls.items():
            number = 1 if name == "python" and label == "window_moments" else 5
            times[name] = min(timeit.repeat(lambda: fn(mod), number=number, repeat=repeat)) / number
        line = f"{label:<16}" + "".join(f"{times[n] * 1e3:>10.2f}ms" for n in impls)
        if "cython" in times:
            line += f"{times['python'] / times['cython']:>9.1f}x"
        print(line)


PATCH_SNIPPET = """
import timeit
from terrapsd import kernels, pipeline, synth
script = synth.TraverseScript([synth.Segment(synth.SurfaceModel(256e-6), 1)], seed=1, max_roll_deg=4)
p = synth.generate_traverse(script)[0]
t = min(timeit.repeat(lambda: pipeline.process_cloud(p.cloud, p.attitude), number=1, repeat={repeat}))
print(kernels.BACKEND, t)
"""


def bench_patch(repeat):
    print("\nfull patch (process_cloud):")
    for pure in ("0", "1"):
        env = dict(os.environ, TERRAPSD_PURE_PYTHON=pure)
        out = subprocess.run(
            [sys.executable, "-c", PATCH_SNIPPET.format(repeat=repeat)],
            env=env, capture_output=True, text=True, check=True,
        ).stdout.split()
        print(f"  {out[0]:<8}{float(out[1]) * 1e3:8.1f} ms")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"active backend: {kernels.BACKEND}")
    bench_kernels(args.repeat)
    bench_patch(args.repeat)


if __name__ == "__main__":
    main()
