"""Compare the compiled and pure-Python rollout kernels.

Run with ``python3 benchmarks/bench_kernels.py [--ics 80] [--repeats 5]``.
Both backends must return identical step counts; the script exits 1 otherwise.
"""

import argparse
import sys
import timeit

import numpy as np

from qsgd_car import kernels
from qsgd_car.energy import Theta
from qsgd_car.experiment import ExperimentConfig, training_ics
from qsgd_car.objective import episode_lengths
from qsgd_car.partition import PartitionedTheta


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ics", type=int, default=80)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    cfg = ExperimentConfig(master_seed=args.seed, n_train_ics=args.ics)
    ics = training_ics(cfg).states
    rng = np.random.default_rng(args.seed)
    params = {
        "uniform, learned-like": Theta(1.0, -0.3),
        "uniform, slow": Theta(0.2, 0.5),
        "partitioned": PartitionedTheta(rng.uniform(-1, 1, (4, 2))),
    }
    if "cython" not in kernels.BACKENDS:
        print("compiled kernel not available; build with `pip install -e . --no-build-isolation`")
        return 1
    print(f"{'case':24s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}  steps")
    for name, p in params.items():
        ref = episode_lengths(p, ics, backend="python")
        fast = episode_lengths(p, ics, backend="cython")
        if not np.array_equal(ref, fast):
            print(f"{name}: backends disagree", file=sys.stderr)
            return 1
        t = {}
        for b in ("python", "cython"):
            t[b] = min(timeit.repeat(lambda: episode_lengths(p, ics, backend=b),
                                     number=1, repeat=args.repeats)) * 1e3
        print(f"{name:24s} {t['python']:10.2f} {t['cython']:10.3f} "
              f"{t['python'] / t['cython']:8.0f}x  {int(ref.sum())}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
