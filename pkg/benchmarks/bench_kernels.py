"""Compare the numba kernels against the pure-numpy fallback.

Usage::

    python benchmarks/bench_kernels.py            # both paths, side by side
    python benchmarks/bench_kernels.py --worker   # current path only, JSON on stdout

Each path runs in its own interpreter because ``DTPH_DISABLE_NUMBA`` is read at
import time. Timings are the best of ``--repeat`` runs after one warm-up call,
so numba compilation is excluded.
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _cases():
    from dtph import DescriptorSystem
    from dtph.classify import classify
    from dtph.kyp import is_feasible
    from dtph.matcore import eigvals_general
    from dtph.sim import simulate

    rng = np.random.default_rng(0)
    M = rng.standard_normal((40, 40))
    Mc = M + 1j * rng.standard_normal((40, 40))
    A = 0.9 * M[:8, :8] / np.max(np.abs(np.linalg.eigvals(M[:8, :8])))
    s = DescriptorSystem.standard(A, rng.standard_normal((8, 2)), rng.standard_normal((2, 8)),
                                  0.1 * rng.standard_normal((2, 2)))
    small = DescriptorSystem(np.eye(2), [[0.5, 0.1], [0.0, 0.3]], np.eye(2), 0.5 * np.eye(2), 0.2 * np.eye(2))
    u = rng.standard_normal((2000, 2))
    return {
        "eigvals real 40x40": lambda: eigvals_general(M),
        "eigvals complex 40x40": lambda: eigvals_general(Mc),
        "KYP feasibility n=8 m=2": lambda: is_feasible(s, "d-sKYP"),
        "simulate 2000 steps n=8": lambda: simulate(s, u, np.zeros(8)),
        "classify n=2": lambda: classify(small, audit_trajectories=0, n_angles=16),
    }


def worker(repeat):
    from dtph import _accel

    out = {name: _best(fn, repeat) for name, fn in _cases().items()}
    print(json.dumps({"numba": _accel.USE_NUMBA, "times": out}))


def _spawn(disable, repeat):
    env = dict(os.environ)
    env.pop("DTPH_DISABLE_NUMBA", None)
    if disable:
        env["DTPH_DISABLE_NUMBA"] = "1"
    r = subprocess.run([sys.executable, __file__, "--worker", "--repeat", str(repeat)],
                       capture_output=True, text=True, env=env, check=True)
    return json.loads(r.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--worker", action="store_true", help="time the current path and print JSON")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if args.worker:
        worker(args.repeat)
        return
    fast, slow = _spawn(False, args.repeat), _spawn(True, args.repeat)
    if not fast["numba"]:
        print("numba unavailable; both columns use the numpy path")
    print(f"{'case':28s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speed-up':>9s}")
    for name, tf in fast["times"].items():
        ts = slow["times"][name]
        print(f"{name:28s} {1e3 * tf:11.2f} {1e3 * ts:11.2f} {ts / tf:8.1f}x")


if __name__ == "__main__":
    main()
