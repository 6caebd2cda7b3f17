"""Time the numba and numpy propagation kernels on identical inputs.

    python3 benchmarks/bench_kernels.py --repeat 5 --batch 64 --json out.json
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import statistics
import time

os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

import numpy as np  # noqa: E402

from robustchirp import kernels  # noqa: E402
from robustchirp.dynamics import pack, plan_steps  # noqa: E402
from robustchirp.pulse import PulseSpec, to_time_domain  # noqa: E402


def _row(theta, c2p, dp):
    spec = PulseSpec.from_dimensionless(theta, c2p, dp)
    plan = plan_steps(spec)
    return pack(spec, plan, 0.0, to_time_domain(spec)), plan.nsteps


def _time(fn, repeat):
    fn()  # warm-up, includes numba compilation or cache load
    runs = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--batch", type=int, default=64, help="configurations per batch call")
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)
    if kernels.numba_impl is None:
        ap.error("numba is not installed; nothing to compare")

    p, n = _row(1.78 * math.pi, 2.52, 0.637)
    rng = np.random.default_rng(0)
    rows = [_row(t * math.pi, c, d) for t, c, d in
            zip(rng.uniform(0.5, 3, args.batch), rng.uniform(0, 4, args.batch),
                rng.uniform(0.15, 1.1, args.batch))]
    params = np.array([r[0] for r in rows])
    steps = np.array([r[1] for r in rows], dtype=np.int64)

    cases = {
        "propagate_final": lambda m: m.propagate_final(p, n, 0),
        "perturbative": lambda m: m.perturbative(p, n, 0),
        "propagate_record": lambda m: m.propagate_record(p, n, 0),
        f"batch_final[{args.batch}]": lambda m: m.batch_final(params, steps, 0),
        f"batch_perturbative[{args.batch}]": lambda m: m.batch_perturbative(params, steps, 0),
    }
    results = []
    print(f"steps per propagation (point B): {n}")
    print(f"{'kernel':<26}{'numba (ms)':>12}{'numpy (ms)':>12}{'speedup':>10}")
    for name, call in cases.items():
        t_nb = _time(lambda: call(kernels.numba_impl), args.repeat)
        t_np = _time(lambda: call(kernels.numpy_impl), args.repeat)
        results.append({"kernel": name, "numba_s": t_nb, "numpy_s": t_np,
                        "speedup": t_np / t_nb})
        print(f"{name:<26}{1e3 * t_nb:>12.3f}{1e3 * t_np:>12.3f}{t_np / t_nb:>9.1f}x")
    if args.json:
        meta = {"python": platform.python_version(), "numpy": np.__version__,
                "machine": platform.machine(), "nsteps": int(n), "repeat": args.repeat}
        with open(args.json, "w") as fh:
            json.dump({"meta": meta, "results": results}, fh, indent=2)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
