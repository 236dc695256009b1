"""Wall-clock comparison of the numba and numpy kernel backends.

    python3 benchmarks/bench_backends.py            # default sizes
    python3 benchmarks/bench_backends.py --quick    # a few seconds

Each workload runs once per backend to warm up (numba compiles on first call),
then ``--repeat`` times; the best time is reported. Outputs are compared so a
speedup never hides a disagreement.
"""

import argparse
import time

import numpy as np

from percolab import experiments as ex
from percolab._accel import HAVE_NUMBA, use_backend
from percolab.cluster import label_clusters
from percolab.lattice import BoxSpec, sample_config


def workloads(scale: int):
    cfgs = [sample_config(BoxSpec(64), 0.5, s) for s in range(20 * scale)]
    return {
        "label n=64": lambda: [label_clusters(c).sizes.max() for c in cfgs],
        "one-arm n=64": lambda: ex.estimate_pi(64, 2000 * scale, 1).estimate,
        "summary n=32": lambda: ex.summarize_box(32, 500 * scale, 1, "bench").top_sizes,
        "crossing n=32": lambda: ex.crossing_experiment(32, 1000 * scale, 1).estimate,
        "good boxes n=48": lambda: ex.goodbox_experiment(
            ex.ExperimentPlan(n_values=(48,), eta=1 / 16, p=0.7, replicates=100 * scale,
                              check_fraction=0.0), 2).table("goodboxes").rows,
        "circuit chain t=12": lambda: ex.sample_good_box(12, 3, sweeps=20 * scale).circuit,
    }


def best_of(fn, repeat):
    out = fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    try:
        return bool(np.array_equal(np.asarray(a), np.asarray(b)))
    except Exception:
        return a == b


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    scale = 1 if args.quick else 5
    print(f"{'workload':<22}{'numba s':>10}{'numpy s':>10}{'speedup':>10}  agree")
    for name, fn in workloads(scale).items():
        with use_backend("numba"):
            tn, a = best_of(fn, args.repeat)
        with use_backend("numpy"):
            tp, b = best_of(fn, 1 if args.quick else args.repeat)
        print(f"{name:<22}{tn:>10.3f}{tp:>10.3f}{tp / tn:>10.1f}  {same(a, b)}")


if __name__ == "__main__":
    main()
