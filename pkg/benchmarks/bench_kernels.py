"""Compare the compiled and pure-Python coefficient kernels.

Each workload runs in a fresh interpreter so the kernel choice made at import
is honoured; ``STARJET_PURE=1`` forces the fallback.  Usage::

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
from starjet.coeffring import Chart, BaseFunction, KERNEL_IMPLEMENTATION, Q

def trig(chart, n):
    f = BaseFunction.zero(chart)
    for a in range(n):
        for b in range(n):
            f = f + BaseFunction.cos(chart, (a, b), Q(1, a + b + 1), tpow=(a + b) % (chart.t_cap + 1))
            f = f + BaseFunction.sin(chart, (a + 1, -b), Q(a - b, 3), tpow=a % (chart.t_cap + 1))
    return f

def poly(chart, n):
    f = BaseFunction.zero(chart)
    for a in range(n):
        for b in range(n):
            f = f + BaseFunction.monomial(chart, (a, b), Q(a + 1, b + 2), tpow=(a * b) % (chart.t_cap + 1))
    return f

def workload(name, repeat):
    best = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        if name == "torus_products":
            ch = Chart("torus", 2, 3)
            f, g = trig(ch, 6), trig(ch, 5)
            for _ in range(20):
                h = f * g
        elif name == "affine_products":
            ch = Chart("affine", 2, 3)
            f, g = poly(ch, 9), poly(ch, 8)
            for _ in range(20):
                h = f * g
        elif name == "fedosov_curved_N2":
            from starjet.suites import curved_example
            from starjet.fedosov import fedosov_pipeline
            omega, gamma0 = curved_example(2)
            fedosov_pipeline(omega, gamma0, 2, verify=False)
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    return best

name, repeat = sys.argv[1], int(sys.argv[2])
print(json.dumps({"impl": KERNEL_IMPLEMENTATION, "seconds": workload(name, repeat)}))
"""

WORKLOADS = ("torus_products", "affine_products", "fedosov_curved_N2")


def run(name, repeat, pure):
    env = dict(os.environ)
    env.pop("STARJET_PURE", None)
    if pure:
        env["STARJET_PURE"] = "1"
    out = subprocess.run([sys.executable, "-c", WORKER, name, str(repeat)], env=env, check=True, capture_output=True, text=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    print("%-20s %12s %12s %8s" % ("workload", "compiled[s]", "python[s]", "speedup"))
    for name in WORKLOADS:
        fast = run(name, args.repeat, pure=False)
        slow = run(name, args.repeat, pure=True)
        if fast["impl"] != "cython":
            print("%-20s %12s %12.4f %8s" % (name, "n/a", slow["seconds"], "-"))
            continue
        print("%-20s %12.4f %12.4f %7.2fx" % (name, fast["seconds"], slow["seconds"], slow["seconds"] / fast["seconds"]))


if __name__ == "__main__":
    main()
