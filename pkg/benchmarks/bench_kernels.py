"""Compare the numba loop kernels with the pure-numpy kernels.

Times one training episode (simulate, readout, exact learning signal,
eligibility sweep) on the spike-timing network shape.

    python benchmarks/bench_kernels.py [--hidden 16] [--steps 400] [--repeats 20]
"""
import argparse
import time

import numpy as np

from eprop_stdp import neurons as nm
from eprop_stdp.engine import Network
from eprop_stdp.kernels import HAVE_NUMBA, _loops, _vectorized, pack_params


def episode(mod, code, prm, net, x, tgt):
    v0, u0 = net.initial_state()
    v, u, z, h, _ = mod.simulate(code, prm, x, net.w_in, net.w_rec, v0, u0)
    y = mod.readout(z, net.w_out, net.kappa)
    L, _ = mod.learning_signal(code, prm, net.w_rec, net.w_out, net.kappa, v, u, z, h, y - tgt, True)
    g, *_ = mod.eligibility(code, prm, np.concatenate([x, z], axis=1), v, z, h, L, False)
    return g


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--hidden", type=int, default=16)
    ap.add_argument("--steps", type=int, default=400)
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"numba available: {HAVE_NUMBA}; hidden={args.hidden} steps={args.steps}")
    print(f"{'model':<12}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}  rel diff")
    for model in nm.MODELS:
        net = Network.random(model, 1, args.hidden, 1, rng)
        x = (rng.random((args.steps, 1)) < 0.025).astype(float)
        tgt = rng.normal(size=(args.steps, 1))
        code, prm = pack_params(model, net.params)
        ref = episode(_vectorized, code, prm, net, x, tgt)
        t_np = best_of(lambda: episode(_vectorized, code, prm, net, x, tgt), args.repeats)
        if HAVE_NUMBA:
            out = episode(_loops, code, prm, net, x, tgt)  # compile outside the timing
            t_nb = best_of(lambda: episode(_loops, code, prm, net, x, tgt), args.repeats)
            diff = float(np.max(np.abs(out - ref)) / max(np.max(np.abs(ref)), 1e-300))
            print(f"{model:<12}{t_nb * 1e3:>10.3f}{t_np * 1e3:>10.3f}{t_np / t_nb:>8.1f}x  {diff:.1e}")
        else:
            print(f"{model:<12}{'n/a':>10}{t_np * 1e3:>10.3f}{'':>9}")


if __name__ == "__main__":
    main()
