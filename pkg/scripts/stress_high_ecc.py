"""Long run at eccentricity 1e3 to check that per-step renormalization never overflows."""

import argparse
import math
import time

import numpy as np

from lyaplab.cocycle import CocycleRunConfig, estimate_bottom_exponent, estimate_top_exponent
from lyaplab.measures import FiniteMatrixMeasure


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=10_000_000)
    ap.add_argument("--trajectories", type=int, default=2)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    s = math.sqrt(1e3)
    c, t = math.cos(1.0), math.sin(1.0)
    nu = FiniteMatrixMeasure([np.diag([s, 1 / s]), np.array([[c, -t], [t, c]])], [0.5, 0.5])
    cfg = CocycleRunConfig(args.steps, args.trajectories, seed=0, threads=args.threads)
    t0 = time.perf_counter()
    top, bottom = estimate_top_exponent(nu, cfg), estimate_bottom_exponent(nu, cfg)
    ok = np.isfinite(top.value) and np.isfinite(bottom.value)
    print(f"ecc={nu.eccentricity():.1f} top={top.value:.6f}+-{top.std_error:.1e} "
          f"bottom={bottom.value:.6f}+-{bottom.std_error:.1e} finite={ok} "
          f"wall={time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
