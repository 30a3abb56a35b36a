"""Compare the numpy and numba execution backends on the hot kernels.

Builds a mod-16 addition algebra so the point spaces are big enough to
matter (16^5 = 1,048,576 points), then times term evaluation, the
coordinatewise permutation action, column packing, and one quantified
end-to-end evaluation on each backend.

Run:  python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

import logicgeo as lg
from logicgeo import kernels

N = 16
K = 5
REPS = 5


def synthetic_algebra() -> lg.FiniteAlgebra:
    rows = " ".join(str((a + b) % N) for a in range(N) for b in range(N))
    text = f"name m{N}\nsize {N}\nop add 2 {rows}\n"
    return lg.loads_algebra(text)


def deep_term(ctx: lg.VarContext, depth: int) -> lg.Term:
    leaves = [lg.Var(x) for x in ctx.names]
    layer = [leaves[i % len(leaves)] for i in range(2 ** depth)]
    while len(layer) > 1:
        layer = [lg.App("add", (layer[i], layer[i + 1]))
                 for i in range(0, len(layer), 2)]
    return layer[0]


def best_of(fn, reps=REPS):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    alg = synthetic_algebra()
    ctx = lg.VarContext.of(",".join(f"x{i + 1}" for i in range(K)))
    space = lg.PointSpace(ctx, alg.size)
    term = deep_term(ctx, 5)
    perm = np.array([(v + 3) % N for v in range(N)], dtype=np.int64)
    cols = np.stack([
        (np.arange(space.size, dtype=np.int64) // (N ** j) % N).astype(np.uint8)
        for j in range(K - 1, -1, -1)
    ])
    formula = lg.parse_formula(
        f"E x{K} . add(x1, x{K}) == add(x2, x3)", ctx, alg.sig)

    def run_term():
        lg.term_column.cache_clear()
        return lg.term_column(term, ctx, alg)

    def run_perm():
        return kernels.permute_digits(perm, N, K, space.size)

    def run_pack():
        return kernels.pack_columns(cols, N, space.size)

    def run_val():
        lg.clear_val_cache()
        lg.term_column.cache_clear()
        return lg.val(formula, alg, max_space=space.size)

    workloads = [
        (f"term_column, {2 ** 5} leaves over {N}^{K}", run_term),
        ("permute_digits", run_perm),
        ("pack_columns", run_pack),
        ("val, quantified formula", run_val),
    ]

    backends = ["numpy"]
    try:
        import numba  # noqa: F401
        backends.append("numba")
    except ImportError:
        print("numba is not installed; timing the numpy backend only\n")

    results = {}
    reference = {}
    for backend in backends:
        with lg.use_backend(backend):
            for name, fn in workloads:
                out = fn()  # warm-up; compiles under numba
                if name not in reference:
                    reference[name] = out
                else:
                    assert np.array_equal(
                        np.asarray(out.bits if hasattr(out, "bits") else out),
                        np.asarray(reference[name].bits
                                   if hasattr(reference[name], "bits")
                                   else reference[name])
                    ), f"backends disagree on {name}"
                results[(backend, name)] = best_of(fn)

    width = max(len(name) for name, _ in workloads)
    header = f"{'workload'.ljust(width)}  " + "".join(
        f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, _ in workloads:
        row = name.ljust(width) + "  "
        for b in backends:
            row += f"{results[(b, name)] * 1e3:>10.2f}ms"
        if len(backends) == 2:
            ratio = results[("numpy", name)] / results[("numba", name)]
            row += f"{ratio:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
