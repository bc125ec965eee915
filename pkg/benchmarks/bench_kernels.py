"""Compare the numba and numpy kernel backends.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times the Dykstra projection loop on an ns decision problem, the star
contraction and the simulation contraction.  Each numba timing excludes the
first (compiling) call.
"""
import argparse
import time

import numpy as np

from qhyper import _kernels
from qhyper.correlations import map_entries
from qhyper.feasibility import FeasibilityProblem
from qhyper.homomorphisms import HomInstance, ns_constraints
from qhyper.hypergraphs import QuantumHypergraph
from qhyper.randgen import random_channel, random_ns_correlation


def dykstra_case(rng):
    U = QuantumHypergraph.span(2, 2, rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4)))
    inst = HomInstance(U.bar(), U, "hom")
    K = inst.arrow().shuffled
    L, b = ns_constraints(inst.quad)
    prob = FeasibilityProblem(K.basis.T, L, b)
    z0 = _kernels.hermitian_pack(np.eye(prob.k) / 4)
    return lambda: _kernels.dykstra(z0, prob.Q, prob.zp, prob.k, 2000, 1e-12, 100, 1.0)


def star_case(rng):
    P1 = random_ns_correlation((3, 3, 3, 3), rng, 2).entries()
    P2 = random_ns_correlation((3, 3, 3, 3), rng, 2).entries()
    return lambda: _kernels.star_contract(P1, P2)


def simulate_case(rng):
    P = random_ns_correlation((3, 3, 3, 3), rng, 2).entries()
    E = map_entries(random_channel(3, 3, rng=rng))
    return lambda: _kernels.simulate_contract(P, E)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(args.seed)
    cases = {"dykstra": dykstra_case(rng), "star": star_case(rng), "simulate": simulate_case(rng)}
    print(f"{'kernel':<10} {'numpy [s]':>12} {'numba [s]':>12} {'speedup':>9}")
    for name, fn in cases.items():
        _kernels.set_backend("numpy")
        ref = fn()
        t_np = best_of(fn, args.repeat)
        _kernels.set_backend("numba")
        out = fn()  # compile
        t_nb = best_of(fn, args.repeat)
        a = ref[0] if isinstance(ref, tuple) else ref
        b = out[0] if isinstance(out, tuple) else out
        agree = np.allclose(a, b, atol=1e-9)
        print(f"{name:<10} {t_np:12.5f} {t_nb:12.5f} {t_np / t_nb:8.1f}x{'' if agree else '  (outputs differ!)'}")


if __name__ == "__main__":
    main()
