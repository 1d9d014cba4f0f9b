"""Benchmark the compiled sparse kernels against the pure-numpy fallback.

Times the two hot operations (kernel-times-dense spmm and the pattern
dot used for the phi gradient) at several graph sizes and prints the
median per-call latency for each backend plus the speedup.

Usage:
    python3 benchmarks/bench_kernels.py --nodes 2000 20000 --hidden 64
"""

import argparse
import statistics
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

import akgnn._numpy_kernels as np_kernels  # noqa: E402
from akgnn import build_graph, build_kernel  # noqa: E402
from synthgen import ring_edges  # noqa: E402

try:
    import akgnn._numba_kernels as nb_kernels
except ImportError:
    nb_kernels = None


def median_time(fn, reps):
    fn()  # warmup; also triggers jit compilation on the compiled path
    samples = []
    for _ in range(reps):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def bench_size(num_nodes, hidden, reps, rng):
    graph = build_graph(num_nodes, ring_edges(num_nodes, chords=2 * num_nodes, seed=0))
    kernel = build_kernel(graph, 1.0)
    pattern = graph.kernel_pattern
    dense = rng.standard_normal((num_nodes, hidden))
    upstream = rng.standard_normal((num_nodes, hidden))

    rows = []
    for label, mod in (("numpy", np_kernels),
                       ("numba", nb_kernels)):
        if mod is None:
            continue
        t_spmm = median_time(
            lambda m=mod: m.spmm(pattern.offsets, pattern.cols, kernel.values, dense),
            reps)
        t_dot = median_time(
            lambda m=mod: m.pattern_dot_rows(pattern.offsets, pattern.cols,
                                             pattern.row_ids, kernel.dvalues,
                                             upstream, dense),
            reps)
        rows.append((label, t_spmm, t_dot))
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nodes", type=int, nargs="+", default=[2_000, 20_000])
    parser.add_argument("--hidden", type=int, default=64)
    parser.add_argument("--reps", type=int, default=9)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(0)
    if nb_kernels is None:
        print("compiled backend unavailable; timing the numpy path only")
    print(f"{'nodes':>8} {'backend':>8} {'spmm ms':>10} {'phi-dot ms':>12}")
    for num_nodes in args.nodes:
        rows = bench_size(num_nodes, args.hidden, args.reps, rng)
        for label, t_spmm, t_dot in rows:
            print(f"{num_nodes:>8} {label:>8} {t_spmm * 1e3:>10.3f} {t_dot * 1e3:>12.3f}")
        if len(rows) == 2:
            (_, base_spmm, base_dot), (_, fast_spmm, fast_dot) = rows
            print(f"{'':>8} {'speedup':>8} {base_spmm / fast_spmm:>9.1f}x "
                  f"{base_dot / fast_dot:>11.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
