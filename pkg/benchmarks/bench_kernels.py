"""Compare the compiled and pure-python kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--n 3000] [--density 0.002]
       [--cols 64] [--walks 200] [--steps 3] [--repeats 5]

Times spmm (CSR x dense), csr_matmul (CSR x CSR), and walk_end_counts on a
random symmetric graph, printing one row per (kernel, backend) with the best
wall time over the repeats and the compiled speedup.
"""

import argparse
import time

import numpy as np

from gcnkit.graph import _cumulative_rows, build_operators, one_step_transition
from gcnkit.kernels import available_backends, get_backend
from gcnkit.tensor import CSRMatrix


def random_graph(n, density, seed):
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < density, 1)
    dense = (upper | upper.T).astype(np.float64)
    return CSRMatrix.from_dense(dense)


def best_time(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=3000)
    parser.add_argument("--density", type=float, default=0.002)
    parser.add_argument("--cols", type=int, default=64)
    parser.add_argument("--walks", type=int, default=200)
    parser.add_argument("--steps", type=int, default=3)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = available_backends()
    adj = random_graph(args.n, args.density, args.seed)
    ops = build_operators(adj)
    s = ops.norm_adjacency
    p1 = one_step_transition(ops)
    aug = _cumulative_rows(p1)
    dense = np.random.default_rng(args.seed + 1).standard_normal((args.n, args.cols))

    cases = {
        "spmm": lambda b: b.spmm(s.indptr, s.indices, s.data, dense),
        "csr_matmul": lambda b: b.csr_matmul(s.indptr, s.indices, s.data,
                                             s.indptr, s.indices, s.data, args.n),
        "walk_end_counts": lambda b: b.walk_end_counts(
            p1.indptr, p1.indices, aug, args.steps, args.walks, args.seed),
    }

    print(f"n={args.n} nnz={s.nnz} cols={args.cols} "
          f"walks={args.walks} steps={args.steps} repeats={args.repeats}")
    print(f"{'kernel':<16}{'backend':<10}{'best (s)':>12}{'speedup':>10}")
    for name, run in cases.items():
        timings = {}
        for backend_name in backends:
            backend = get_backend(backend_name)
            timings[backend_name] = best_time(lambda: run(backend), args.repeats)
        for backend_name, t in timings.items():
            speedup = ""
            if backend_name == "compiled" and "python" in timings:
                speedup = f"{timings['python'] / t:8.1f}x"
            print(f"{name:<16}{backend_name:<10}{t:>12.6f}{speedup:>10}")


if __name__ == "__main__":
    main()
