"""Empirical pressure, its Legendre transform, and a concentration harness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from . import rng
from .cocycle import CocycleRunConfig, estimate_top_exponent, simulate_iid
from .constants import concentration_constants
from .errors import BadGrid, InputError
from .measures import FiniteMatrixMeasure

DEFAULT_S_SPAN = 5.0
TIE_TOL = 1e-12


@dataclass(frozen=True)
class PressureCurve:
    s_grid: np.ndarray
    values: np.ndarray
    raw_values: np.ndarray
    std_errors: np.ndarray
    n: int
    trials: int
    seed: int
    log_norms: np.ndarray = field(default=None, repr=False, compare=False)

    def at(self, s: float) -> float:
        i = np.flatnonzero(self.s_grid == s)
        if len(i) == 0:
            raise BadGrid(f"s = {s} is not a grid point")
        return float(self.values[i[0]])


@dataclass(frozen=True)
class RateFunction:
    eps_grid: np.ndarray
    values: np.ndarray
    maximizers: np.ndarray
    clipped: np.ndarray

    @property
    def argmin(self) -> float:
        return float(self.eps_grid[np.argmin(self.values)])


def _check_grid(grid, name: str) -> np.ndarray:
    g = np.asarray(grid, dtype=float).ravel()
    if g.size < 2 or not np.all(np.isfinite(g)):
        raise BadGrid(f"{name} needs at least two finite points")
    if np.any(np.diff(g) <= 0):
        raise BadGrid(f"{name} must be strictly increasing")
    return g


def symmetric_grid(s_max: float, per_side: int) -> np.ndarray:
    """Grid on [-s_max, s_max] with ``per_side`` points each side, exactly symmetric about 0."""
    if not s_max > 0 or per_side < 1:
        raise BadGrid("symmetric grid needs s_max > 0 and per_side >= 1")
    pos = s_max * np.arange(1, per_side + 1) / per_side
    return np.concatenate([-pos[::-1], [0.0], pos])


def lower_convex_envelope(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Greatest convex minorant of the points (x, y), evaluated back on x."""
    hull = []
    for i in range(len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it lies on or above the chord from a to i
            if (y[b] - y[a]) * (x[i] - x[a]) >= (y[i] - y[a]) * (x[b] - x[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return np.interp(x, x[hull], y[hull])


def _log_mean_exp(z: np.ndarray) -> float:
    return float(logsumexp(np.sort(z)) - math.log(len(z)))


def pressure_from_samples(log_norms: np.ndarray, s_grid, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(1/n) log mean exp(s S) per grid point, with delta-method std errors."""
    S = np.asarray(log_norms, dtype=float)
    vals, ses = [], []
    for s in s_grid:
        if s == 0.0:
            vals.append(0.0)
            ses.append(0.0)
            continue
        z = s * S
        vals.append(_log_mean_exp(z) / n)
        w = np.exp(z - z.max())
        ratio = w / w.mean()
        ses.append(float(np.std(ratio, ddof=1) / math.sqrt(len(S)) / n) if len(S) > 1 else 0.0)
    return np.array(vals), np.array(ses)


def sample_log_norms(nu: FiniteMatrixMeasure, n: int, trials: int, seed: int, v=None, burn_in: int | None = None,
                     threads: int = 1, stream: int = rng.PRESSURE) -> np.ndarray:
    """log |A^n v| over ``trials`` trajectories.

    With ``v=None`` each trajectory starts from a random direction pushed
    through ``burn_in`` (default 200) unrecorded steps, so the start is close
    to stationary and the finite-n mean is nearly unbiased.
    """
    if n < 1 or trials < 1:
        raise InputError("n and trials must be >= 1")
    if v is None:
        b = 200 if burn_in is None else burn_in
        sums, _ = simulate_iid(nu, n + b, trials, seed, stream, b, None, threads=threads)
    else:
        sums, _ = simulate_iid(nu, n, trials, seed, stream, 0, np.asarray(v, float), threads=threads)
    return sums


def estimate_pressure(nu: FiniteMatrixMeasure, s_grid, n: int, trials: int, seed: int, v=None,
                      s_max: float | None = None, burn_in: int | None = None, threads: int = 1) -> PressureCurve:
    """Common-random-number pressure estimate on ``s_grid`` (0 is always included).

    Grid points with |s| > s_max (default 5 / log ecc) are dropped.
    """
    grid = _check_grid(s_grid, "s grid")
    if s_max is None:
        le = math.log(max(nu.eccentricity(), 1.0))
        s_max = DEFAULT_S_SPAN / le if le > 0 else math.inf
    grid = grid[np.abs(grid) <= s_max]
    grid = np.union1d(grid, [0.0])
    if grid.size < 2:
        raise BadGrid("fewer than two grid points remain inside |s| <= s_max")
    S = sample_log_norms(nu, n, trials, seed, v, burn_in, threads)
    raw, ses = pressure_from_samples(S, grid, n)
    return PressureCurve(grid, lower_convex_envelope(grid, raw), raw, ses, n, trials, seed, log_norms=S)


def central_slope(curve: PressureCurve, h: float | None = None) -> tuple[float, float]:
    """(Lambda(h) - Lambda(-h)) / 2h on the raw curve, with a common-random-number std error.

    ``h`` defaults to the smallest symmetric grid offset around zero.
    """
    g = curve.s_grid
    if h is None:
        pos = g[g > 0]
        sym = [x for x in pos if np.any(np.isclose(g, -x, rtol=1e-12, atol=0))]
        if not sym:
            raise BadGrid("grid has no symmetric pair around zero")
        h = float(min(sym))
    lo = np.flatnonzero(np.isclose(g, -h, rtol=1e-12, atol=0))
    hi = np.flatnonzero(np.isclose(g, h, rtol=1e-12, atol=0))
    if len(lo) == 0 or len(hi) == 0:
        raise BadGrid(f"+-{h} are not both grid points")
    slope = (curve.raw_values[hi[0]] - curve.raw_values[lo[0]]) / (2 * h)
    S = curve.log_norms
    if S is None or len(S) < 2:
        return float(slope), 0.0
    zp, zm = h * S, -h * S
    wp, wm = np.exp(zp - zp.max()), np.exp(zm - zm.max())
    infl = wp / wp.mean() - wm / wm.mean()
    se = float(np.std(infl, ddof=1) / math.sqrt(len(S)) / curve.n / (2 * h))
    return float(slope), se


def legendre_conjugate(x, fx, y):
    """max over grid x of (x * y - f(x)), with maximizers and boundary flags.

    Ties prefer the maximizer of smallest |x|; a maximizer at a grid endpoint
    flags the supremum as possibly larger (infinite) than reported.
    """
    x = np.asarray(x, dtype=float)
    fx = np.asarray(fx, dtype=float)
    y = np.asarray(y, dtype=float)
    M = np.outer(y, x) - fx[None, :]
    best = M.max(axis=1)
    scale = TIE_TOL * (1.0 + np.abs(best))
    ties = M >= (best - scale)[:, None]
    pref = np.where(ties, np.abs(x)[None, :], np.inf)
    arg = np.argmin(pref, axis=1)
    clipped = ((arg == 0) | (arg == len(x) - 1)) & (x[arg] != 0.0)
    return best, x[arg], clipped


def legendre_transform(curve: PressureCurve, eps_grid) -> RateFunction:
    eps = _check_grid(eps_grid, "eps grid")
    vals, arg, clipped = legendre_conjugate(curve.s_grid, curve.values, eps)
    return RateFunction(eps, np.maximum(vals, 0.0), arg, clipped)


def rate_from_pressure(s_grid, values, eps_grid) -> RateFunction:
    """Legendre transform of an arbitrary tabulated pressure (convexified first)."""
    s = _check_grid(s_grid, "s grid")
    v = lower_convex_envelope(s, np.asarray(values, dtype=float))
    eps = _check_grid(eps_grid, "eps grid")
    vals, arg, clipped = legendre_conjugate(s, v, eps)
    return RateFunction(eps, vals, arg, clipped)


@dataclass(frozen=True)
class ConcentrationResult:
    empirical_tail: float
    bound: float
    azuma_bound: float
    passed: bool
    exceedances: int
    trials: int
    lambda_ref: float
    sigma2_bound: float | None


def binomial_ceiling(trials: int, p: float, level: float = 0.99) -> int:
    """Largest exceedance count compatible with tail probability ``p`` at the given one-sided level."""
    if p >= 1.0:
        return trials
    if p <= 0.0:
        return 0
    return int(stats.binom.ppf(level, trials, p))


def concentration_check(nu: FiniteMatrixMeasure, v, eps: float, n: int, trials: int, seed: int,
                        sigma2_bound: float | None = None, tau: float | None = None,
                        lambda_ref: float | None = None, ref_steps: int = 100_000, threads: int = 1) -> ConcentrationResult:
    """Empirical P(|lambda_n(v) - lambda_ref| > eps) against the variance and Azuma tail bounds.

    The variance bound 2 exp(-n eps^2 / (4 sigma2)) uses ``sigma2_bound`` if
    given, else the geometric bound from ``tau``; with neither, only the
    Azuma bound is checked. ``lambda_ref`` defaults to an independent
    top-exponent estimate.
    """
    if not eps > 0:
        raise InputError("eps must be positive")
    samples = simulate_iid(nu, n, trials, seed, rng.CONCENTRATION, 0, np.asarray(v, float), threads=threads)[0] / n
    if lambda_ref is None:
        lambda_ref = estimate_top_exponent(nu, CocycleRunConfig(ref_steps, 16, seed=seed, threads=threads)).value
    k = int(np.sum(np.abs(samples - lambda_ref) > eps))
    ecc = nu.eccentricity()
    if ecc <= 1.0 + 1e-12:
        # isometries: |lambda_n| = 0 identically
        azuma = 0.0
        if sigma2_bound is None:
            sigma2_bound = 0.0
    else:
        azuma = concentration_constants(ecc, tau if tau is not None else 0.5).azuma_bound(n, eps)
        if sigma2_bound is None and tau is not None:
            sigma2_bound = concentration_constants(ecc, tau).sigma2_bound_geometric
    if sigma2_bound is None:
        bound = azuma
    elif sigma2_bound == 0.0:
        bound = 0.0
    else:
        bound = 2.0 * math.exp(-n * eps**2 / (4.0 * sigma2_bound))
    passed = k <= binomial_ceiling(trials, min(bound, 1.0)) and k <= binomial_ceiling(trials, min(azuma, 1.0))
    return ConcentrationResult(k / trials, bound, azuma, bool(passed), k, trials, float(lambda_ref), sigma2_bound)
