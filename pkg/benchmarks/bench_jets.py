"""Benchmark the compiled jet kernel against the pure-Python fallback.

Times the two workloads that dominate wall time: raw truncated Cauchy
products, and a full covariant-derivative evaluation on the round sphere
(which bottoms out in jet products).  Run from the repository root:

    python benchmarks/bench_jets.py
    ATOMCUR_JET_BACKEND=pure python benchmarks/bench_jets.py

or let this script spawn both variants itself (the backend is chosen at
import time, so comparing in-process is not possible):

    python benchmarks/bench_jets.py --both
"""

import argparse
import os
import subprocess
import sys
import time


def bench():
    sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))
    import atomcur
    from atomcur.jets import Jet, JetSpace, FLOAT
    from atomcur.connection import ChartConnection
    from atomcur import covderiv as cd

    label = "compiled" if atomcur.BACKEND_COMPILED else "pure"

    # raw products
    space = JetSpace(3, 6)
    a = Jet.variable(space, FLOAT, 0, 0.3)
    b = Jet.variable(space, FLOAT, 1, -0.2)
    for _ in range(4):
        a = a * a + b
        b = b * a
    reps = 20000
    t0 = time.perf_counter()
    for _ in range(reps):
        c = a * b
    dt = time.perf_counter() - t0
    print(f"[{label}] cauchy products (n=3, order=6): "
          f"{reps / dt:,.0f} products/s ({dt * 1e6 / reps:.1f} us each)")

    # covariant derivatives on the sphere
    s2 = ChartConnection.from_metric(["theta", "phi"],
                                     [["1", "0"], ["0", "sin(theta)^2"]],
                                     [(0.6, 2.5), (0.2, 6.0)])
    om = cd.form_field(s2, 1, {(0,): "theta^2*phi", (1,): "theta*phi^2"})
    t0 = time.perf_counter()
    count = 0
    for rep in range(40):
        om._nabla_cache.clear()
        s2._cache.clear()
        p = (1.0 + 0.01 * rep, 0.8)
        for I in [(0, 1, 0, 1), (1, 1, 0, 0), (0, 0, 1, 1)]:
            cd.nabla_value(om, I, p)
            count += 1
    dt = time.perf_counter() - t0
    print(f"[{label}] order-4 covariant derivatives on the sphere: "
          f"{count / dt:,.1f} evals/s ({dt * 1e3 / count:.2f} ms each)")
    return dt


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--both", action="store_true",
                        help="run the compiled and pure backends in subprocesses")
    args = parser.parse_args()
    if not args.both:
        bench()
        return
    here = os.path.abspath(__file__)
    for backend in ("", "pure"):
        env = dict(os.environ)
        if backend:
            env["ATOMCUR_JET_BACKEND"] = backend
        else:
            env.pop("ATOMCUR_JET_BACKEND", None)
        subprocess.run([sys.executable, here], env=env, check=True)


if __name__ == "__main__":
    main()
