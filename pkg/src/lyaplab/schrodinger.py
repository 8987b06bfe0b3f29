"""One-dimensional random Schroedinger operators (H u)(n) = u(n+1) + u(n-1) + V(n) u(n).

Transfer matrices feed the Monte-Carlo Lyapunov estimators; the integrated
density of states comes from Sturm-sequence eigenvalue counting on
Dirichlet boxes, so no diagonalization is ever needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import rng
from .cocycle import CocycleRunConfig, estimate_top_exponent
from .constants import Regime, check_theta
from .errors import BadOrder, BadWindow, InputError
from .measures import FiniteMatrixMeasure

MIN_BOX = 10
ZERO_PIVOT = 1e-300
COUNT_NUDGE = 1e-12


@dataclass(frozen=True)
class DisorderDistribution:
    """Compactly supported single-site law: finite atoms, uniform, or truncated Gaussian."""

    kind: str
    params: tuple
    weights: tuple | None = None

    def __post_init__(self):
        if self.kind == "atoms":
            vals = np.asarray(self.params, dtype=float)
            w = np.full(len(vals), 1.0 / len(vals)) if self.weights is None else np.asarray(self.weights, float)
            if vals.size == 0 or vals.shape != w.shape or not np.all(np.isfinite(vals)):
                raise InputError("atoms need matching finite values and weights")
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
                raise InputError("atom weights must be non-negative and sum to 1")
            object.__setattr__(self, "params", tuple(vals))
            object.__setattr__(self, "weights", tuple(w / w.sum()))
        elif self.kind == "uniform":
            a, b = map(float, self.params)
            if not a < b:
                raise InputError("uniform disorder needs a < b")
            object.__setattr__(self, "params", (a, b))
        elif self.kind == "gauss":
            mean, sd, a, b = map(float, self.params)
            if not (sd > 0 and a < b):
                raise InputError("truncated Gaussian needs sd > 0 and a < b")
            object.__setattr__(self, "params", (mean, sd, a, b))
        else:
            raise InputError(f"unknown disorder kind {self.kind!r}")

    @classmethod
    def atoms(cls, values, weights=None) -> "DisorderDistribution":
        return cls("atoms", tuple(np.atleast_1d(values)), None if weights is None else tuple(weights))

    @classmethod
    def uniform(cls, a: float, b: float) -> "DisorderDistribution":
        return cls("uniform", (a, b))

    @classmethod
    def truncated_gaussian(cls, mean: float, sd: float, a: float, b: float) -> "DisorderDistribution":
        return cls("gauss", (mean, sd, a, b))

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == "atoms":
            return min(self.params), max(self.params)
        return self.params[-2], self.params[-1]

    @property
    def max_abs(self) -> float:
        lo, hi = self.support
        return max(abs(lo), abs(hi))

    def sample(self, gen: np.random.Generator, size) -> np.ndarray:
        if self.kind == "atoms":
            idx = np.searchsorted(np.cumsum(self.weights), gen.random(size), side="right")
            return np.asarray(self.params)[np.minimum(idx, len(self.params) - 1)]
        if self.kind == "uniform":
            a, b = self.params
            return a + (b - a) * gen.random(size)
        mean, sd, a, b = self.params
        return stats.truncnorm.ppf(gen.random(size), (a - mean) / sd, (b - mean) / sd, loc=mean, scale=sd)


def transfer_matrix(E: float, v: float) -> np.ndarray:
    return np.array([[E - v, -1.0], [1.0, 0.0]])


def transfer_cocycle_measure(mu: DisorderDistribution, E: float, samples: int = 10_000, seed: int = 0) -> FiniteMatrixMeasure:
    """Law of the transfer matrix at energy E: exact for atoms, empirical otherwise."""
    if mu.kind == "atoms":
        vals, w = np.asarray(mu.params), np.asarray(mu.weights)
    else:
        if samples < 1:
            raise InputError("samples must be >= 1")
        vals = mu.sample(rng.generator(seed, 0, rng.DISORDER), samples)
        w = np.full(samples, 1.0 / samples)
    atoms = np.zeros((len(vals), 2, 2))
    atoms[:, 0, 0] = E - vals
    atoms[:, 0, 1] = -1.0
    atoms[:, 1, 0] = 1.0
    return FiniteMatrixMeasure(atoms, w)


@dataclass(frozen=True)
class EnergyPoint:
    E: float
    gamma: float
    std_error: float
    clamped: bool


def lyapunov_energy_curve(mu: DisorderDistribution, E_grid, cfg: CocycleRunConfig, samples: int = 10_000) -> list[EnergyPoint]:
    """gamma(E) at each energy; estimates below zero are clamped to 0 and flagged."""
    out = []
    for E in np.asarray(E_grid, dtype=float).ravel():
        est = estimate_top_exponent(transfer_cocycle_measure(mu, E, samples, cfg.seed), cfg)
        out.append(EnergyPoint(float(E), max(est.value, 0.0), est.std_error, est.value < 0))
    return out


def sturm_count(potential: np.ndarray, energies) -> np.ndarray:
    """#{eigenvalues <= E} of the Dirichlet box with diagonal ``potential`` and unit off-diagonals.

    Rows of a 2-D ``potential`` are independent realizations; the result has
    shape (realizations, len(energies)).
    """
    V = np.atleast_2d(np.asarray(potential, dtype=float))
    E = np.asarray(energies, dtype=float).ravel()
    x = E + COUNT_NUDGE * (1.0 + np.abs(E))
    count = np.zeros((V.shape[0], E.size), dtype=np.int64)
    pivot = None
    for i in range(V.shape[1]):
        diag = V[:, i : i + 1] - x[None, :]
        pivot = diag if pivot is None else diag - 1.0 / pivot
        pivot = np.where(pivot == 0.0, -ZERO_PIVOT, pivot)
        count += pivot < 0
    return count


@dataclass(frozen=True)
class IDSCurve:
    energies: np.ndarray
    values: np.ndarray
    L: int
    realizations: int
    seed: int
    std_errors: np.ndarray = field(default=None, compare=False)


def free_box_eigenvalues(L: int) -> np.ndarray:
    k = np.arange(1, 2 * L + 2)
    return 2.0 * np.cos(np.pi * k / (2 * L + 2))


def ids_curve(mu: DisorderDistribution, E_grid, L: int = 2000, realizations: int = 20, seed: int = 0,
              threads: int = 1) -> IDSCurve:
    """Realization-averaged eigenvalue counting function on the box [-L, L]."""
    if L < MIN_BOX:
        raise BadOrder(f"box half-width must be >= {MIN_BOX}, got {L}")
    if realizations < 1:
        raise InputError("realizations must be >= 1")
    E = np.asarray(E_grid, dtype=float).ravel()
    if E.size == 0 or np.any(np.diff(E) < 0):
        raise InputError("energy grid must be nonempty and sorted")
    size = 2 * L + 1

    def block(lo, hi):
        pots = np.stack([mu.sample(rng.generator(seed, r, rng.IDS), size) for r in range(lo, hi)])
        return sturm_count(pots, E)

    counts = np.concatenate(rng.block_map(block, realizations, threads, block=32)) / size
    se = counts.std(axis=0, ddof=1) / math.sqrt(realizations) if realizations > 1 else np.zeros(E.size)
    return IDSCurve(E, counts.mean(axis=0), L, realizations, seed, se)


def _cauchy_segment(a, b, na, nb, E, eta):
    """Integral over [a, b] of the linear interpolant of (na, nb) against the Cauchy kernel at E."""
    slope = (nb - na) / (b - a)
    base = na + slope * (E - a)  # value of the interpolant extended to x = E
    ua, ub = a - E, b - E
    return (base / np.pi * (np.arctan(ub / eta) - np.arctan(ua / eta))
            + slope * eta / (2 * np.pi) * (np.log(ub**2 + eta**2) - np.log(ua**2 + eta**2)))


def smoothed_ids(curve: IDSCurve, eta: float, E: float) -> float:
    """Cauchy-smoothed IDS, integrating the piecewise-linear curve exactly with constant tails."""
    if not eta > 0:
        raise InputError("eta must be positive")
    x, N = curve.energies, curve.values
    if E - x[0] < 10 * eta or x[-1] - E < 10 * eta:
        raise BadWindow(f"E = {E} lies within 10*eta of the grid edge")
    body = float(np.sum(_cauchy_segment(x[:-1], x[1:], N[:-1], N[1:], E, eta)))
    left = N[0] * (np.arctan((x[0] - E) / eta) / np.pi + 0.5)
    right = N[-1] * (0.5 - np.arctan((x[-1] - E) / eta) / np.pi)
    return float(body + left + right)


def _log_antiderivative(x, E):
    u = np.asarray(x, dtype=float) - E
    au = np.abs(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        ulog = np.where(au > 0, u * np.log(au), 0.0)
    return ulog - u


def thouless_integral(curve: IDSCurve, E: float) -> float:
    """Integral of log|E - x| dN(x) for the piecewise-linear N, computed cell by cell in closed form."""
    x, N = curve.energies, curve.values
    if N[0] > 1e-12 or N[-1] < 1 - 1e-12:
        raise BadWindow("IDS grid must cover the whole spectrum (N = 0 at the left end, 1 at the right)")
    slopes = np.diff(N) / np.diff(x)
    F = _log_antiderivative(x, E)
    return float(np.sum(slopes * np.diff(F)))


@dataclass(frozen=True)
class ThoulessResult:
    gamma_direct: float
    gamma_thouless: float
    residual: float
    std_error: float
    discretization: float


def thouless_check(mu: DisorderDistribution, E: float, cfg: CocycleRunConfig, ids: IDSCurve,
                   samples: int = 10_000) -> ThoulessResult:
    """Monte-Carlo gamma(E) against the log-potential of the IDS.

    ``discretization`` is the change in the Thouless integral when every other
    grid point is dropped, a crude estimate of the grid error.
    """
    est = estimate_top_exponent(transfer_cocycle_measure(mu, E, samples, cfg.seed), cfg)
    g_direct = max(est.value, 0.0)
    g_th = thouless_integral(ids, E)
    idx = np.unique(np.r_[np.arange(0, len(ids.energies), 2), len(ids.energies) - 1])
    coarse = IDSCurve(ids.energies[idx], ids.values[idx], ids.L, ids.realizations, ids.seed)
    disc = abs(thouless_integral(coarse, E) - g_th)
    return ThoulessResult(g_direct, g_th, abs(g_direct - g_th), est.std_error, disc)


def ids_exponent(theta: float, regime: Regime | str) -> float:
    """Hoelder exponent of the IDS in the disorder: theta/(3(2+theta)) or theta/(24(1+theta))."""
    theta = check_theta(theta)
    regime = regime if isinstance(regime, Regime) else Regime.parse(regime)
    if regime is Regime.MH:
        return theta / (3.0 * (2.0 + theta))
    return theta / (24.0 * (1.0 + theta))
