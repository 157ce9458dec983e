"""Time the compiled Monte Carlo kernel against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py [--shots N] [--repeat R]``.
Both backends consume the same uniforms, so their histograms must agree.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from symclone import kernels
from symclone.algebra import PureQubit
from symclone.detection import DetectorTree, _outcome_table
from symclone.experiment import Setup
from symclone.fock import CoherenceModel


def workload(scenario: str, mu: float, eps: float):
    s = Setup(scenario, PureQubit.named("H"), CoherenceModel(), mu=mu, eps=eps)
    return _outcome_table(s.analyzed_state(0.0, 0.0), DetectorTree())


def best_of(fn, args, repeat: int) -> tuple[float, np.ndarray]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--shots", type=int, default=1 << 20)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    impls = kernels.backends()
    print(f"default backend: {kernels.BACKEND}; available: {', '.join(impls)}")
    cases = [("clone13", 0.0, 0.0), ("clone23", 0.2, 0.05)]
    print(f"{'workload':<24}{'backend':>10}{'seconds':>10}{'Mshots/s':>10}{'speedup':>9}")
    for sc, mu, eps in cases:
        cdf, n_phi, n_perp, phi_cdf, perp_cdf, width = workload(sc, mu, eps)
        u = np.random.default_rng(0).random((args.shots, width))
        call = (cdf, n_phi, n_perp, phi_cdf, perp_cdf, u)
        times, hists = {}, {}
        for name, fn in impls.items():
            times[name], hists[name] = best_of(fn, call, args.repeat)
        label = f"{sc} mu={mu:g} eps={eps:g}"
        for name, t in times.items():
            speed = times["python"] / t
            print(f"{label:<24}{name:>10}{t:>10.3f}{args.shots / t / 1e6:>10.2f}{speed:>8.1f}x")
        if len(hists) > 1:
            same = all(np.array_equal(hists["python"], h) for h in hists.values())
            print(f"{'':<24}histograms identical: {same}")


if __name__ == "__main__":
    main()
