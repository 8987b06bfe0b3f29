"""Print the two-matrix family report as an aligned table."""

import argparse

from lyaplab.example9 import Example9Config, run_example9


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=100_000)
    ap.add_argument("--trajectories", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    cfg = Example9Config(steps=args.steps, trajectories=args.trajectories, seed=args.seed, threads=args.threads)
    header, rows = run_example9(cfg).table()
    print(f"{header[0]:<24}{header[1]:>22}{header[2]:>14}{header[3]:>14}")
    for q, v, s, t in rows:
        fmt = lambda x, w: f"{x:>{w}.6g}" if isinstance(x, float) else f"{x!s:>{w}}"
        print(f"{q:<24}{fmt(v, 22)}{fmt(s, 14)}{fmt(t, 14)}")


if __name__ == "__main__":
    main()
