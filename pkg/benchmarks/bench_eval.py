"""Compare the compiled tape executor against the numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_eval.py [--points 200000] [--repeats 5]

Times representative workloads (polynomial Hamiltonians, trigonometric
coefficients, a deep rational expression) over a batch of sample points and
prints per-backend timings with the agreement error.  Exits with a note
instead of failing when the extension is unavailable.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cosymred import engine
from cosymred import expr as ex
from cosymred.charts import chart, seeded_rng


def workloads(n: int):
    coords = [f"q{i}" for i in range(1, n + 1)] + [f"p{i}" for i in range(1, n + 1)]
    c = chart("bench", coords + ["theta"], periodic=["theta"])
    ham = " + ".join(f"q{i}*p{i}" for i in range(1, n + 1))
    trig = " + ".join(f"sin(q{i}) * cos(p{i})" for i in range(1, n + 1))
    deep = "1 / (1 + q1^2) + exp(-(p1^2)) * sin(theta) - log(2 + q1^2 + p1^2)^2"
    return c, {
        f"hamiltonian[{n}]": ham,
        f"trig_sum[{n}]": trig,
        "deep_rational": deep,
    }


def best_of(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--size", type=int, default=6,
                    help="coordinate pairs in the generated workloads")
    args = ap.parse_args()

    c, cases = workloads(args.size)
    rng = seeded_rng(42, "bench")
    pts = c.sample(args.points, rng)

    have_ext = engine._ext is not None
    if not have_ext:
        print("compiled extension not importable; timing the numpy backend only")

    header = f"{'workload':22s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s} {'max|diff|':>10s}"
    print(f"points={args.points}  repeats={args.repeats} (best-of)")
    print(header)
    print("-" * len(header))
    for name, text in cases.items():
        e = ex.parse(text, c.coords)
        tape = engine.compile_tape(e, c.coords)
        t_np = best_of(lambda: engine._numpy_eval(tape, pts), args.repeats)
        if have_ext:
            t_ext = best_of(
                lambda: engine._ext.eval_tape(tape.ops, tape.args, tape.consts,
                                              pts, tape.slots),
                args.repeats)
            a = engine._numpy_eval(tape, pts)
            b = engine._ext.eval_tape(tape.ops, tape.args, tape.consts, pts, tape.slots)
            diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
            print(f"{name:22s} {t_np * 1e3:9.2f}ms {t_ext * 1e3:9.2f}ms "
                  f"{t_np / t_ext:7.2f}x {diff:10.2e}")
        else:
            print(f"{name:22s} {t_np * 1e3:9.2f}ms {'-':>10s} {'-':>8s} {'-':>10s}")


if __name__ == "__main__":
    main()
