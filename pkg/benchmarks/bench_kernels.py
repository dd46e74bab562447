"""Compare the compiled and pure-Python geometry kernels.

Usage::

    python benchmarks/bench_kernels.py            # micro-benchmarks + end-to-end run
    python benchmarks/bench_kernels.py --quick    # fewer repetitions

The end-to-end timing runs ``anytime-tamp plan`` in a subprocess once per
backend; ``ANYTIME_TAMP_PURE=1`` forces the fallback.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import tempfile
import time
import timeit
from pathlib import Path

import numpy as np

from anytime_tamp.geom import kernels, load_workspace

DATA = Path(__file__).resolve().parents[1] / "src" / "anytime_tamp" / "data"


def _cases(mod, polys, rng):
    obs = mod.Obstacles(polys)
    pts = (rng.random((2000, 2)) * [60, 40]).tolist()
    segs = (rng.random((2000, 4)) * [60, 40, 60, 40]).tolist()
    lines = [((rng.random(5) * 60).tolist(), (rng.random(5) * 40).tolist()) for _ in range(200)]
    samples = rng.random((5000, 3))

    def points():
        for x, y in pts:
            mod.point_in_obstacles(obs, x, y)

    def segments():
        for ax, ay, bx, by in segs:
            mod.segment_hits_obstacles(obs, ax, ay, bx, by)

    def polylines():
        for xs, ys in lines:
            mod.polyline_sampled_free(obs, xs, ys, 0.36)

    def rrt():
        mod.rrt_grow(obs, 0.0, 0.0, 60.0, 40.0, 4.0, 4.0, 38.0, 28.0, 1.44, 0.1, samples)

    return {"2000 point queries": points, "2000 segment queries": segments, "200 polylines": polylines, "rrt_grow": rrt}


def micro(repeat: int) -> None:
    polys = list(load_workspace(DATA / "hangar.wspc").obstacles.values())
    backends = kernels.available_backends()
    results = {}
    for name, mod in backends.items():
        for case, fn in _cases(mod, polys, np.random.default_rng(0)).items():
            results[(case, name)] = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(f"{'case':<24}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for case in _cases(backends["python"], polys, np.random.default_rng(0)):
        row = [results[(case, b)] for b in backends]
        line = f"{case:<24}" + "".join(f"{t * 1e3:>10.2f}ms" for t in row)
        if len(row) > 1:
            line += f"{row[0] / row[1]:>11.1f}x"
        print(line)


def end_to_end(threshold: float) -> None:
    print(f"\nend-to-end: plan --threshold {threshold} on the shipped hangar scenario")
    for label, pure in (("cython", "0"), ("python", "1")):
        if label == "cython" and "cython" not in kernels.available_backends():
            print("cython      not built")
            continue
        with tempfile.TemporaryDirectory() as d:
            cmd = [
                sys.executable, "-m", "anytime_tamp", "plan", "--threshold", str(threshold),
                "--profile-out", os.path.join(d, "p.csv"), "--tree-out", os.path.join(d, "t.txt"),
            ]
            start = time.perf_counter()
            subprocess.run(cmd, check=False, env={**os.environ, "ANYTIME_TAMP_PURE": pure}, capture_output=True)
            print(f"{label:<12}{time.perf_counter() - start:>8.2f}s")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--threshold", type=float, default=0.99)
    args = ap.parse_args()
    print(f"active backend: {kernels.BACKEND}")
    micro(repeat=3 if args.quick else 7)
    end_to_end(args.threshold)


if __name__ == "__main__":
    main()
