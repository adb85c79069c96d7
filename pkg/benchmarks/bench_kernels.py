"""Time the compiled kernels against the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--n 64 128] [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from tracerbec.dynamics import Propagator, SimState
from tracerbec.kernels import backends
from tracerbec.model import FourierGrid, ModelParams, PotentialSpec
from tracerbec.spectral import ComplexField
from tracerbec.statics import static_profile
from tracerbec.twave import FrictionEvaluator


def bench(n: int, repeat: int):
    g = FourierGrid(n, n / 2.0)
    p = ModelParams(kappa=4.0, model_tag="E")
    W = PotentialSpec()
    beta = static_profile(p, W, W, (0.3, 0.0, 0.0), g)
    prop = Propagator(SimState(0.0, (0, 0, 0), (0.1, 0, 0), ComplexField(g, 0.5 * beta.values), p, W, W))
    coeffs = prop.coefficients(0.01)
    px, py, pz = g.phases_half(prop.X)
    ev = FrictionEvaluator(p, W, W, g)
    rows = []
    for name, mod in backends().items():
        a, b = prop.a.copy(), prop.b.copy()
        t_flow = min(timeit.repeat(lambda: mod.field_flow(a, b, *coeffs, px, py, pz), number=1, repeat=repeat))
        t_force = min(timeit.repeat(lambda: mod.particle_force(prop.a, prop.wk, g.k, g.k, g.k_half, px, py, pz),
                                    number=1, repeat=repeat))
        t_fric = min(timeit.repeat(lambda: mod.friction_sum(ev.wk2, g.k, g.k, g.k_half, ev.eps_k, ev.g_k,
                                                            1.5, 0.0, 0.0, 0.05), number=1, repeat=repeat))
        rows.append((name, t_flow, t_force, t_fric))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[64, 128])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    print(f"{'n':>4} {'backend':<8} {'field_flow':>12} {'particle_force':>15} {'friction_sum':>13}  (ms, best of {args.repeat})")
    for n in args.n:
        rows = bench(n, args.repeat)
        base = {r[0]: r for r in rows}["python"]
        for name, *ts in rows:
            cells = "".join(f"{1e3 * t:>12.2f}" + (f" ({b / t:4.1f}x)" if name != "python" else "        ")
                            for t, b in zip(ts, base[1:]))
            print(f"{n:>4} {name:<8} {cells}")


if __name__ == "__main__":
    np.seterr(all="ignore")
    main()
