"""Benchmark the compiled elementwise kernel against the pure-Python one.

Run as ``python3 -m specprune.bench``. Times the fused shrink/dual update in
isolation and a full pruning pass under each backend, and verifies that both
backends produce bitwise-identical iterates before reporting speedups.
"""

from __future__ import annotations

import argparse
import time
from typing import Callable

import numpy as np

from .core import HsiCube
from .kernels import available_backends, get_step
from .pruning import prune_nnd
from .solver import SolverConfig
from .synth import SceneSpec, generate_scene, generate_smooth_library


def _time_call(fn: Callable[[], object], repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _bench_step(n: int, k: int, repeats: int) -> dict[str, float]:
    rng = np.random.default_rng(7)
    a = rng.normal(size=(n, k))
    timings: dict[str, float] = {}
    for name in available_backends():
        step = get_step(name)
        u = rng.normal(size=(n, k)).copy()
        z = np.zeros((n, k))

        def call() -> None:
            step(a, u.copy(), z.copy(), 0.01, True)

        timings[name] = _time_call(call, repeats)
    return timings


def _check_identical(n: int, k: int) -> bool:
    rng = np.random.default_rng(11)
    a = rng.normal(size=(n, k))
    u0 = rng.normal(size=(n, k))
    outputs = []
    for name in available_backends():
        step = get_step(name)
        u = u0.copy()
        z = np.zeros((n, k))
        stats = step(a, u, z, 0.05, False)
        outputs.append((z, u, stats))
    if len(outputs) < 2:
        return True
    z0, uu0, s0 = outputs[0]
    z1, uu1, s1 = outputs[1]
    same = (
        np.array_equal(z0, z1)
        and np.array_equal(uu0, uu1)
        and np.allclose(s0, s1, rtol=1e-12, atol=0.0)
    )
    return bool(same)


def _bench_prune(repeats: int) -> dict[str, float]:
    library = generate_smooth_library(40, 120, seed=3)
    scene = generate_scene(
        library, SceneSpec(n_pixels=400, n_endmembers=5, snr_db=30.0, seed=5)
    )
    cube = HsiCube(scene.noisy_cube.data)
    config = SolverConfig(rho=1.0, max_iter=200)
    timings: dict[str, float] = {}
    from . import kernels

    for name in available_backends():
        kernels.use_backend(name)
        try:
            timings[name] = _time_call(
                lambda: prune_nnd(cube, library, 5, config), repeats
            )
        finally:
            kernels.use_backend(kernels.DEFAULT_BACKEND)
    return timings


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="python3 -m specprune.bench",
        description="Compare compiled and pure-Python kernel backends.",
    )
    parser.add_argument("--pixels", type=int, default=4000)
    parser.add_argument("--atoms", type=int, default=60)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args(argv)

    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    if len(backends) < 2:
        print("compiled kernel not built; timing pure python only")

    identical = _check_identical(args.pixels, args.atoms)
    print(f"bitwise-identical iterates: {'yes' if identical else 'NO'}")

    step_times = _bench_step(args.pixels, args.atoms, args.repeats)
    for name, t in sorted(step_times.items()):
        print(f"step [{name:8s}] {args.pixels}x{args.atoms}: {t * 1e3:8.3f} ms")
    if len(step_times) == 2:
        ratio = step_times["python"] / step_times["compiled"]
        print(f"step speedup (python/compiled): {ratio:.2f}x")

    prune_times = _bench_prune(max(1, args.repeats // 2))
    for name, t in sorted(prune_times.items()):
        print(f"prune [{name:8s}] full pass: {t:8.3f} s")
    if len(prune_times) == 2:
        ratio = prune_times["python"] / prune_times["compiled"]
        print(f"prune speedup (python/compiled): {ratio:.2f}x")
    return 0 if identical else 1


if __name__ == "__main__":
    raise SystemExit(main())
