"""Benchmark the compiled kernels against the pure-Python fallback.

Times the fused key-length evaluations (the optimiser's inner loop) and one
full inner optimisation per protocol with each backend. Run from the
repository root:

    python3 benchmarks/bench_backends.py
"""

import time

from finitekey import SystemParams, SpsSource, optimize_sps, optimize_wcp
from finitekey import _kernels_py

try:
    from finitekey import _ckernels
except ImportError:
    _ckernels = None

SPS_ARGS = (9.642e9, 0.92, 0.8, 0.0142, 0.036, 0.06525, 3.67e-8, 0.003,
            1e-10, 1e-15, 0.11, 0)
WCP_ARGS = (1.607e8, 0.85, 0.7, 0.15, 0.0, 0.8, 0.12, 0.06525, 3.67e-8, 0.003,
            1e-10, 1e-15, 0.11)


def time_loop(fn, args, repeats):
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - start) / repeats


def time_optimize(kernels):
    system = SystemParams()
    source = SpsSource(mean=0.0142, g2=0.036)
    start = time.perf_counter()
    optimize_sps(system, source, 10.0, 9.642e9, kernels=kernels)
    t_sps = time.perf_counter() - start
    start = time.perf_counter()
    optimize_wcp(system, 10.0, 1.607e8, kernels=kernels)
    t_wcp = time.perf_counter() - start
    return t_sps, t_wcp


def main():
    backends = [("python", _kernels_py)]
    if _ckernels is not None:
        backends.append(("cython", _ckernels))
    else:
        print("compiled kernels not available; timing the fallback only")

    rows = {}
    for name, mod in backends:
        repeats = 20000 if name == "cython" else 2000
        sps_us = time_loop(mod.sps_key_length, SPS_ARGS, repeats) * 1e6
        wcp_us = time_loop(mod.wcp_key_length, WCP_ARGS, repeats) * 1e6
        opt_sps, opt_wcp = time_optimize(mod)
        rows[name] = (sps_us, wcp_us, opt_sps, opt_wcp)
        print(f"{name:>7}: sps eval {sps_us:8.2f} us | wcp eval {wcp_us:8.2f} us"
              f" | optimize sps {opt_sps * 1e3:8.1f} ms | optimize wcp "
              f"{opt_wcp * 1e3:8.1f} ms")

    if len(rows) == 2:
        py, cy = rows["python"], rows["cython"]
        print(f"speedup: sps eval x{py[0] / cy[0]:.1f} | wcp eval "
              f"x{py[1] / cy[1]:.1f} | optimize sps x{py[2] / cy[2]:.1f} | "
              f"optimize wcp x{py[3] / cy[3]:.1f}")


if __name__ == "__main__":
    main()
