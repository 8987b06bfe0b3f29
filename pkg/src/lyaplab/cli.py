"""Command-line entry point: ``lyaplab <subcommand> ...``.

Exit codes: 0 success, 2 input error, 3 numerical failure. Data outputs
embed a run manifest (command, flags, seed, version, outputs); wall time and
thread count go to a ``.run.json`` sidecar so that data files are
byte-identical across reruns and thread counts.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, rng
from .cocycle import (
    CocycleRunConfig,
    estimate_asymptotic_variance,
    estimate_bottom_exponent,
    estimate_partial_sum,
    estimate_top_exponent,
    individual_exponent,
)
from .constants import (
    Regime,
    SpectralInputs,
    holder_package_gl2,
    log_holder_package,
    markov_package,
    method_optimality_curve,
    subtop_package,
)
from .errors import DegenerateGap, InputError, LyapLabError, NumericalError, ParseError
from .example9 import Example9Config, run_example9
from .ldp import central_slope, symmetric_grid, concentration_check, estimate_pressure, legendre_transform
from .markov import MarkovCocycle, estimate_markov_exponents
from .measures import (
    finite_support_upper_bound,
    hausdorff_distance,
    load_measure,
    support_topology_distance,
    wasserstein_theta,
)
from .schrodinger import (
    DisorderDistribution,
    free_box_eigenvalues,
    ids_curve,
    lyapunov_energy_curve,
    smoothed_ids,
    thouless_check,
)

EXCLUDED_FLAGS = {"threads", "func"}


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            raise NumericalError(f"non-finite value {x} in output")
        return x
    return x


class Output:
    """Collects records and tables, then writes them with the run manifest."""

    def __init__(self, args):
        self.args = args
        self.records: list[dict] = []
        self.tables: list[tuple[str, list[str], list[list]]] = []
        self.started = time.perf_counter()

    def manifest(self, paths) -> dict:
        flags = {k: v for k, v in sorted(vars(self.args).items()) if k not in EXCLUDED_FLAGS and k != "command"}
        return {"command": self.args.command, "flags": flags, "seed": self.args.seed,
                "version": __version__, "outputs": [str(p) for p in paths]}

    def record(self, **fields):
        self.records.append({k: _num(v) for k, v in fields.items()})

    def table(self, name: str, header: list[str], rows):
        self.tables.append((name, header, [[_num(v) for v in r] for r in rows]))

    def _records_text(self, manifest) -> str:
        lines = [json.dumps({"manifest": manifest}, sort_keys=True)]
        lines += [json.dumps(r, sort_keys=True) for r in self.records]
        return "\n".join(lines) + "\n"

    @staticmethod
    def _table_text(manifest, header, rows) -> str:
        buf = io.StringIO()
        buf.write("# manifest: " + json.dumps(manifest, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
        return buf.getvalue()

    def emit(self):
        out = getattr(self.args, "out", None)
        if out is None:
            manifest = self.manifest([])
            if self.records:
                sys.stdout.write(self._records_text(manifest))
            for name, header, rows in self.tables:
                sys.stdout.write(self._table_text(manifest, header, rows))
            return
        base = Path(out)
        paths = []
        if self.records:
            paths.append(base.with_suffix(".jsonl") if base.suffix == "" else base)
        for name, _, _ in self.tables:
            paths.append(base.parent / f"{base.stem}_{name}.csv")
        manifest = self.manifest(paths)
        i = 0
        if self.records:
            paths[0].write_text(self._records_text(manifest))
            i = 1
        for (name, header, rows), p in zip(self.tables, paths[i:]):
            p.write_text(self._table_text(manifest, header, rows))
        side = {"wall_time_s": time.perf_counter() - self.started, "threads": self.args.threads,
                "outputs": [str(p) for p in paths]}
        (base.parent / f"{base.stem}.run.json").write_text(json.dumps(side, sort_keys=True) + "\n")
        for p in paths:
            print(p)


def _run_config(args) -> CocycleRunConfig:
    return CocycleRunConfig(args.steps, args.trajectories, args.burn_in, args.seed, None, args.threads)


def _estimate_records(out: Output, nu, args):
    cfg = _run_config(args)
    top = estimate_top_exponent(nu, cfg)
    bottom = estimate_bottom_exponent(nu, cfg)
    out.record(**top.record())
    out.record(**bottom.record())
    out.record(quantity="gap", value=top.value - bottom.value, std_error=math.hypot(top.std_error, bottom.std_error),
               n=cfg.steps, T=cfg.trajectories, seed=cfg.seed)
    out.record(quantity="ecc", value=nu.eccentricity(), std_error=0.0, n=cfg.steps, T=cfg.trajectories, seed=cfg.seed)
    if args.variance and cfg.trajectories >= 2:
        out.record(**estimate_asymptotic_variance(nu, cfg).record())
    if args.k is not None:
        out.record(**estimate_partial_sum(nu, args.k, cfg).record())
        out.record(**individual_exponent(nu, args.k, cfg).record())


def cmd_estimate(args, out: Output):
    _estimate_records(out, load_measure(args.measure, renormalize=args.renormalize), args)


def _read_estimate(path) -> dict:
    vals = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    for i, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}:{i}: {e.msg}") from e
        if "quantity" in rec:
            vals[rec["quantity"]] = rec["value"]
    if "gap" not in vals:
        raise ParseError(f"{path}: no 'gap' record found")
    return vals


def cmd_constants(args, out: Output):
    ecc, gap, diam = args.ecc, args.gap, 0.0
    if args.from_estimate:
        est = _read_estimate(args.from_estimate)
        gap = est["gap"] if gap is None else gap
        ecc = est.get("ecc", ecc) if ecc is None else ecc
    if args.measure:
        mu = load_measure(args.measure)
        ecc = mu.eccentricity() if ecc is None else ecc
        diam = mu.diam_theta(args.theta)
    if args.normalized_diam:
        diam = 1.0
    if args.diam_theta is not None:
        diam = args.diam_theta
    if args.regime is not None:
        lh = log_holder_package(args.theta, args.regime)
        out.record(quantity="kappa_star", value=lh.kappa_star, regime=lh.regime.value, theta=lh.theta)
        if gap is None or gap == 0:
            return
    if gap is None:
        raise InputError("--gap (or --from-estimate) is required unless only --regime is requested")
    if gap == 0:
        raise DegenerateGap("zero Lyapunov gap: Hoelder constants do not apply; pass --regime MH|perpetuity "
                            "for the log-Hoelder exponent")
    if ecc is None:
        raise InputError("--ecc (or --measure / --from-estimate) is required")
    if args.k is not None:
        if args.d is None:
            raise InputError("--k needs --d")
        sub = subtop_package(ecc, gap, args.theta, args.d, args.k, args.tau_k)
        out.record(quantity="subtop", k=sub.k, d=sub.d, E_k=sub.E_k, beta_k=sub.beta_k, C_k=sub.C_k,
                   tau_k=sub.tau_k, note=sub.tau_note)
        return
    inputs = SpectralInputs(ecc, gap, args.theta, diam)
    if args.rho_p is not None:
        out.record(quantity="markov_package", **markov_package(args.rho_p, inputs).record())
        return
    rep = holder_package_gl2(inputs)
    out.record(quantity="holder_package", **rep.record())
    curve = method_optimality_curve(inputs)
    out.record(quantity="method_optimality", gamma=curve.gamma, alpha_star=curve.alpha_star, beta_max=curve.beta_max)


def cmd_ldp(args, out: Output):
    nu = load_measure(args.measure, renormalize=args.renormalize)
    s_max = args.s_max
    if s_max is None:
        s_max = 5.0 / math.log(max(nu.eccentricity(), 1.0 + 1e-12))
    grid = symmetric_grid(s_max, args.s_steps)
    curve = estimate_pressure(nu, grid, args.n, args.trials, args.seed, threads=args.threads)
    order = [int(np.flatnonzero(curve.s_grid == 0.0)[0])]
    order += [i for i in range(len(curve.s_grid)) if i != order[0]]
    out.table("pressure", ["s", "Lambda", "Lambda_raw", "std_error"],
              [[curve.s_grid[i], curve.values[i], curve.raw_values[i], curve.std_errors[i]] for i in order])
    slope, se = central_slope(curve)
    out.record(quantity="pressure_slope_at_0", value=slope, std_error=se, n=args.n, T=args.trials, seed=args.seed)
    # the rate function is finite between the extreme slopes of the convexified pressure
    slopes = np.diff(curve.values) / np.diff(curve.s_grid)
    lo = slopes.min() if args.eps_min is None else args.eps_min
    hi = slopes.max() if args.eps_max is None else args.eps_max
    if not hi > lo:
        hi = lo + 1.0
    rate = legendre_transform(curve, np.linspace(lo, hi, args.eps_steps))
    out.table("rate", ["eps", "I", "maximizer_s", "at_grid_boundary"],
              [[e, v, m, int(c)] for e, v, m, c in zip(rate.eps_grid, rate.values, rate.maximizers, rate.clipped)])


def cmd_concentration(args, out: Output):
    nu = load_measure(args.measure, renormalize=args.renormalize)
    v = [1.0] + [0.0] * (nu.dim - 1) if args.v is None else [float(x) for x in args.v.split(",")]
    res = concentration_check(nu, v, args.eps, args.n, args.trials, args.seed, args.sigma2, args.tau,
                              args.lambda_ref, threads=args.threads)
    out.record(quantity="concentration", empirical_tail=res.empirical_tail, bound=res.bound,
               azuma_bound=res.azuma_bound, passed=res.passed, exceedances=res.exceedances, trials=res.trials,
               lambda_ref=res.lambda_ref, n=args.n, eps=args.eps, seed=args.seed)


def _load_chain(path) -> MarkovCocycle:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{e.lineno}: {e.msg}") from e
    if not isinstance(data, dict) or "transition" not in data or "fibers" not in data:
        raise ParseError(f"{path}:1: expected keys 'transition' and 'fibers'")
    return MarkovCocycle(np.asarray(data["transition"], float), np.asarray(data["fibers"], float))


def cmd_markov(args, out: Output):
    mc = _load_chain(args.chain)
    top, bottom = estimate_markov_exponents(mc, _run_config(args))
    out.record(**top.record())
    out.record(**bottom.record())
    out.record(quantity="rho_P", value=mc.spectral_gap(), std_error=0.0, n=top.n, T=top.T, seed=top.seed)


def _parse_disorder(kind: str, params: str) -> DisorderDistribution:
    try:
        if kind == "atoms":
            vals, ws = [], []
            for item in params.split(","):
                v, _, w = item.partition(":")
                vals.append(float(v))
                ws.append(float(w) if w else math.nan)
            if any(math.isnan(w) for w in ws):
                ws = [1.0 / len(vals)] * len(vals)
            return DisorderDistribution.atoms(vals, ws)
        nums = [float(x) for x in params.split(",")]
    except ValueError as e:
        raise InputError(f"cannot parse --params {params!r}: {e}") from e
    if kind == "uniform":
        if len(nums) != 2:
            raise InputError("uniform needs --params a,b")
        return DisorderDistribution.uniform(*nums)
    if len(nums) != 4:
        raise InputError("gauss needs --params mean,sd,a,b")
    return DisorderDistribution.truncated_gaussian(*nums)


def cmd_ids(args, out: Output):
    mu = _parse_disorder(args.dist, args.params)
    E = np.linspace(args.emin, args.emax, args.esteps)
    curve = ids_curve(mu, E, args.box_size, args.realizations, args.seed, args.threads)
    if args.gamma_steps > 0:
        cfg = CocycleRunConfig(args.gamma_steps, args.gamma_trajectories, None, args.seed, None, args.threads)
        gam = lyapunov_energy_curve(mu, E, cfg, args.samples)
    else:
        gam = [None] * len(E)
    rows = []
    for i, e in enumerate(E):
        g = gam[i]
        rows.append([e, curve.values[i], curve.std_errors[i], "" if g is None else g.gamma, "" if g is None else g.std_error])
    out.table("ids", ["E", "N", "N_se", "gamma", "gamma_se"], rows)
    if mu.kind == "atoms" and len(mu.params) == 1:
        ev = mu.params[0] + free_box_eigenvalues(args.box_size)
        oracle = np.array([(ev <= e + 1e-9).sum() for e in E]) / (2 * args.box_size + 1)
        out.record(quantity="box_oracle_max_dev", value=float(np.max(np.abs(curve.values - oracle))))
    if args.eta is not None:
        lo, hi = E[0] + 10 * args.eta, E[-1] - 10 * args.eta
        for e in E[(E >= lo) & (E <= hi)]:
            out.record(quantity="smoothed_ids", E=e, eta=args.eta, value=smoothed_ids(curve, args.eta, e))
    for e in args.thouless or []:
        cfg = CocycleRunConfig(max(args.gamma_steps, 20_000), args.gamma_trajectories, None, args.seed, None,
                               args.threads)
        t = thouless_check(mu, e, cfg, curve, args.samples)
        out.record(quantity="thouless", E=e, gamma_direct=t.gamma_direct, gamma_thouless=t.gamma_thouless,
                   residual=t.residual, std_error=t.std_error, discretization=t.discretization)


def cmd_example9(args, out: Output):
    cfg = Example9Config(steps=args.steps, trajectories=args.trajectories, seed=args.seed, threads=args.threads,
                         conc_trials=args.conc_trials)
    header, rows = run_example9(cfg).table()
    out.table("example9", header, rows)


def cmd_wasserstein(args, out: Output):
    mu, nu = load_measure(args.measure_a), load_measure(args.measure_b)
    rec = {"quantity": "distances", "theta": args.theta,
           "wasserstein": wasserstein_theta(mu, nu, args.theta),
           "hausdorff": hausdorff_distance(mu, nu),
           "support_topology": support_topology_distance(mu, nu, args.theta)}
    if len(mu.support) == len(nu.support):
        rec["paired_upper_bound"] = finite_support_upper_bound(mu, nu, args.theta)
    out.record(**rec)


def _add_run_flags(p, steps=100_000, trajectories=64):
    p.add_argument("--steps", type=int, default=steps, help="steps per trajectory including burn-in")
    p.add_argument("--trajectories", type=int, default=trajectories)
    p.add_argument("--burn-in", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lyaplab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"master seed (fallback ${rng.SEED_ENV}, then 0)")
    common.add_argument("--threads", type=int, default=rng.default_threads())
    common.add_argument("--out", default=None, help="output base path (default: stdout)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", parents=[common], help="Lyapunov exponents of a measure file")
    p.add_argument("measure")
    _add_run_flags(p)
    p.add_argument("--k", type=int, default=None, help="also report partial sum and k-th exponent")
    p.add_argument("--variance", action="store_true", help="also estimate the asymptotic variance")
    p.add_argument("--renormalize", action="store_true", help="rescale weights that do not sum to 1")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("constants", parents=[common], help="closed-form regularity constants")
    p.add_argument("--ecc", type=float, default=None)
    p.add_argument("--gap", type=float, default=None)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--regime", type=Regime.parse, default=None, help="MH or perpetuity")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--tau-k", type=float, default=None)
    p.add_argument("--rho-p", type=float, default=None)
    p.add_argument("--normalized-diam", action="store_true", help="take diam_theta = 1")
    p.add_argument("--diam-theta", type=float, default=None)
    p.add_argument("--measure", default=None, help="measure file for ecc and diam_theta")
    p.add_argument("--from-estimate", default=None, help="records file written by `estimate`")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("ldp", parents=[common], help="pressure curve and rate function")
    p.add_argument("measure")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--s-max", type=float, default=None)
    p.add_argument("--s-steps", type=int, default=40, help="grid points on each side of s = 0")
    p.add_argument("--eps-min", type=float, default=None)
    p.add_argument("--eps-max", type=float, default=None)
    p.add_argument("--eps-steps", type=int, default=201)
    p.add_argument("--renormalize", action="store_true")
    p.set_defaults(func=cmd_ldp)

    p = sub.add_parser("concentration", parents=[common], help="empirical tail vs concentration bounds")
    p.add_argument("measure")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--sigma2", type=float, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--lambda-ref", type=float, default=None)
    p.add_argument("--v", default=None, help="start vector, comma separated")
    p.add_argument("--renormalize", action="store_true")
    p.set_defaults(func=cmd_concentration)

    p = sub.add_parser("markov", parents=[common], help="exponents of a Markov-driven cocycle")
    p.add_argument("chain", help="JSON file with 'transition' and 'fibers'")
    _add_run_flags(p)
    p.set_defaults(func=cmd_markov)

    p = sub.add_parser("ids", parents=[common], help="integrated density of states")
    p.add_argument("--dist", choices=["atoms", "uniform", "gauss"], required=True)
    p.add_argument("--params", required=True, help="atoms: v:w,...; uniform: a,b; gauss: mean,sd,a,b")
    p.add_argument("--emin", type=float, default=-3.0)
    p.add_argument("--emax", type=float, default=3.0)
    p.add_argument("--esteps", type=int, default=61)
    p.add_argument("--box-size", type=int, default=2000, help="half-width L of the box [-L, L]")
    p.add_argument("--realizations", type=int, default=20)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--gamma-steps", type=int, default=0, help="Monte-Carlo steps for gamma(E); 0 skips it")
    p.add_argument("--gamma-trajectories", type=int, default=8)
    p.add_argument("--samples", type=int, default=10_000, help="disorder samples for continuous laws")
    p.add_argument("--thouless", type=float, nargs="*", default=None, help="energies for the Thouless check")
    p.set_defaults(func=cmd_ids)

    p = sub.add_parser("example9", parents=[common], help="two-matrix family end-to-end report")
    _add_run_flags(p)
    p.add_argument("--conc-trials", type=int, default=1000)
    p.set_defaults(func=cmd_example9)

    p = sub.add_parser("wasserstein", parents=[common], help="distances between two measure files")
    p.add_argument("measure_a")
    p.add_argument("measure_b")
    p.add_argument("--theta", type=float, default=1.0)
    p.set_defaults(func=cmd_wasserstein)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed = rng.resolve_seed(args.seed)
    out = Output(args)
    try:
        args.func(args, out)
        out.emit()
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (NumericalError, LyapLabError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
