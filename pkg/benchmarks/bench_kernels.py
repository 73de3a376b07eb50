"""Compiled versus numpy cone kernels.

Times each kernel on a cone layout shaped like an SCA subproblem, then a full
SCA run with the solver bound to each implementation in turn.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit
from types import SimpleNamespace

import numpy as np

from rsma_rm.conic import _kernels as py
from rsma_rm.conic import ipm

try:
    from rsma_rm.conic import _ckernels as cy
except ImportError:
    cy = None


def layout(n_lin=30, cones=(13,) * 4 + (42,) * 10 + (3,) * 10):
    qsizes = np.array(cones, dtype=np.intp)
    qstarts = (n_lin + np.concatenate([[0], np.cumsum(qsizes)[:-1]])).astype(np.intp)
    return n_lin, qstarts, qsizes


def interior_point(rng, l, qstarts, qsizes):
    x = np.empty(l + int(qsizes.sum()))
    x[:l] = rng.uniform(0.5, 2.0, l)
    for st, sz in zip(qstarts, qsizes):
        tail = rng.standard_normal(sz - 1)
        x[st] = np.linalg.norm(tail) + rng.uniform(0.1, 1.0)
        x[st + 1:st + sz] = tail
    return x


def kernel_cases(mod, rng, n_cols):
    l, qstarts, qsizes = layout()
    s = interior_point(rng, l, qstarts, qsizes)
    z = interior_point(rng, l, qstarts, qsizes)
    ds = rng.standard_normal(s.shape)
    G = rng.standard_normal((s.shape[0], n_cols))
    d, beta, wbar, lam = mod.nt_scaling(s, z, l, qstarts, qsizes)
    return {
        "nt_scaling": lambda: mod.nt_scaling(s, z, l, qstarts, qsizes),
        "apply_scaling (matrix)": lambda: mod.apply_scaling(d, beta, wbar, G, l, qstarts, qsizes, inverse=True),
        "apply_scaling (vector)": lambda: mod.apply_scaling(d, beta, wbar, ds, l, qstarts, qsizes),
        "max_step": lambda: mod.max_step(s, ds, l, qstarts, qsizes),
        "jordan_prod": lambda: mod.jordan_prod(lam, ds, l, qstarts, qsizes),
        "jordan_div": lambda: mod.jordan_div(lam, ds, l, qstarts, qsizes),
    }


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def sca_run():
    from rsma_rm.harness import trial_input
    from rsma_rm.optimizer import run_sca
    from rsma_rm.scenario import default_scenario

    inp = trial_input(default_scenario(), 0)
    return lambda: run_sca(inp.channels, inp.stats, inp.scenario)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=200)
    args = ap.parse_args(argv)
    mods = {"numpy": py}
    if cy is not None:
        mods["cython"] = cy
    else:
        print("compiled kernels not built; timing the numpy fallback only")

    rows = {}
    for name, mod in mods.items():
        cases = kernel_cases(mod, np.random.default_rng(0), n_cols=73)
        for kname, fn in cases.items():
            rows.setdefault(kname, {})[name] = best_of(fn, args.repeat, args.number)

    print(f"{'kernel':26s}" + "".join(f"{m:>12s}" for m in mods) + ("     speedup" if cy else ""))
    for kname, t in rows.items():
        line = f"{kname:26s}" + "".join(f"{t[m] * 1e6:10.1f}us" for m in mods)
        if cy is not None:
            line += f"{t['numpy'] / t['cython']:11.2f}x"
        print(line)

    run = sca_run()
    saved = ipm.K
    try:
        for name, mod in mods.items():
            ipm.K = SimpleNamespace(**{k: getattr(mod, k) for k in (
                "identity", "shift_distance", "max_step", "nt_scaling", "apply_scaling",
                "jordan_prod", "jordan_div")})
            t = best_of(run, max(1, args.repeat // 2), 1)
            print(f"full SCA run ({name}): {t * 1e3:.1f} ms")
    finally:
        ipm.K = saved


if __name__ == "__main__":
    main()
