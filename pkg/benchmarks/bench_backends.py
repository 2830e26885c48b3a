"""Compare the numba and numpy evaluation backends on realistic workloads.

Builds one singular-corner network and one product gadget, then times
batched values and value+jacobian passes under both backends.  The numba
path is warmed up first so JIT compilation never lands inside a timed
region.  Run as a script:

    python3 benchmarks/bench_backends.py [--points N] [--repeats R]
"""

import argparse
import time

import numpy as np

from hprelu.assembly import NetConfig, build_phi_eps_f
from hprelu.backends import HAS_NUMBA
from hprelu.catalog import corner_singular
from hprelu.emulation import plan_budget, product_net
from hprelu.network import grad_realize_batch, realize_batch, stats


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _bench_case(label, net, pts, repeats):
    backends = ["numpy"] + (["numba"] if HAS_NUMBA else [])
    st = stats(net)
    print(f"\n{label}: size={st.size} depth={st.depth} "
          f"max_width={max(st.widths)}, {len(pts)} points")
    results = {}
    for be in backends:
        realize_batch(net, pts[:8], backend=be)
        grad_realize_batch(net, pts[:8], backend=be)
        tv = _time(lambda: realize_batch(net, pts, backend=be), repeats)
        tg = _time(lambda: grad_realize_batch(net, pts, backend=be), repeats)
        results[be] = (tv, tg)
        print(f"  {be:>5}: value {tv * 1e3:9.2f} ms   value+grad {tg * 1e3:9.2f} ms")
    if len(results) == 2:
        a = results["numpy"]
        b = results["numba"]
        print(f"  numba speedup: value {a[0] / b[0]:.2f}x, grad {a[1] / b[1]:.2f}x")
        va = realize_batch(net, pts, backend="numpy")
        vb = realize_batch(net, pts, backend="numba")
        gap = np.max(np.abs(va - vb))
        print(f"  backend agreement: max |diff| = {gap:.3e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=5000)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    if not HAS_NUMBA:
        print("numba not importable; timing the numpy path only")

    net, rep = build_phi_eps_f(corner_singular(2, 0.5), 2, 1e-1,
                               NetConfig(sigma=0.17))
    pts = rng.uniform(0.0, 1.0, size=(args.points, 2))
    _bench_case(f"singular corner build (eps=1e-1, ell={rep.ell})",
                net, pts, args.repeats)

    mnet = product_net(3, plan_budget(3, 1e-4, 2.0))
    mpts = rng.uniform(-2.0, 2.0, size=(args.points, 3))
    _bench_case("three-factor product gadget (eps=1e-4, M=2)",
                mnet, mpts, args.repeats)


if __name__ == "__main__":
    main()
