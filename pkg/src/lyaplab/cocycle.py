"""Monte-Carlo Lyapunov exponents for i.i.d. random matrix products.

Every trajectory carries a unit direction that is renormalized after each
step, with the log of the norm growth accumulated separately, so products
never overflow. Trajectories are vectorized in fixed-size blocks; see
:mod:`lyaplab.rng` for the reproducibility contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import glcore, rng
from .errors import BadOrder, DimMismatch, InputError
from .measures import FiniteMatrixMeasure

DEFAULT_BURN_IN = 1000
_CHUNK_ELEMS = 1 << 21


@dataclass(frozen=True)
class CocycleRunConfig:
    """Monte-Carlo budget.

    ``steps`` counts every step including ``burn_in``; the estimate averages
    over the last ``steps - burn_in``. ``burn_in=None`` means 1000 steps, or
    ``steps // 2`` when the run is shorter than 2000 steps.
    """

    steps: int = 100_000
    trajectories: int = 64
    burn_in: int | None = None
    seed: int = 0
    initial_direction: tuple | None = None
    threads: int = 1

    def __post_init__(self):
        if self.steps < 1 or self.trajectories < 1:
            raise InputError("steps and trajectories must be >= 1")
        b = self.burn_in
        if b is None:
            b = DEFAULT_BURN_IN if self.steps >= 2 * DEFAULT_BURN_IN else self.steps // 2
            object.__setattr__(self, "burn_in", b)
        if not 0 <= b < self.steps:
            raise InputError(f"burn_in must satisfy 0 <= burn_in < steps, got {b}")
        if self.initial_direction is not None:
            object.__setattr__(self, "initial_direction", tuple(np.asarray(self.initial_direction, float).ravel()))

    @property
    def averaged_steps(self) -> int:
        return self.steps - self.burn_in


@dataclass(frozen=True)
class CocycleEstimate:
    quantity: str
    value: float
    std_error: float
    n: int
    T: int
    seed: int
    samples: np.ndarray = field(default=None, repr=False, compare=False)

    def record(self) -> dict:
        return {
            "quantity": self.quantity,
            "value": float(self.value),
            "std_error": float(self.std_error),
            "n": int(self.n),
            "T": int(self.T),
            "seed": int(self.seed),
        }


@dataclass(frozen=True)
class EmpiricalProjectiveMeasure:
    """Equal-weight point cloud of unit vectors standing in for a stationary measure."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or len(s) == 0:
            raise InputError("empirical projective measure needs a nonempty (M, d) array")
        object.__setattr__(self, "samples", s)

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


def standard_error(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / np.sqrt(len(x))) if len(x) > 1 else 0.0


# each step adds a rounding error of order one ulp to log|w|, and stored
# atoms such as rotations are only orthogonal up to rounding, so a time
# average cannot resolve an exponent more finely than this
ROUNDING_FLOOR = float(np.finfo(float).eps)


def exponent_error(x: np.ndarray) -> float:
    """Statistical standard error of a time average combined with the rounding floor."""
    return math.hypot(standard_error(x), ROUNDING_FLOOR)


def _apply(M: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise w = M v, returned normalized together with |w|.

    Written as explicit column sums so every row is computed independently of
    the batch it sits in.
    """
    d = v.shape[1]
    w = M[:, :, 0] * v[:, :1]
    for j in range(1, d):
        w = w + M[:, :, j] * v[:, j : j + 1]
    sq = w[:, 0] * w[:, 0]
    for j in range(1, d):
        sq = sq + w[:, j] * w[:, j]
    nrm = np.sqrt(sq)
    return w / nrm[:, None], nrm


def _initial(gens, d: int, v0) -> np.ndarray:
    if v0 is None:
        v = np.stack([g.standard_normal(d) for g in gens])
    else:
        v0 = np.asarray(v0, dtype=float)
        if v0.size != d:
            raise DimMismatch(f"initial direction of dim {v0.size} for GL({d})")
        v = np.tile(v0, (len(gens), 1))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _iid_block(atoms, cumw, seed, stream, lo, hi, steps, burn_in, v0, keep_every):
    gens = [rng.generator(seed, t, stream) for t in range(lo, hi)]
    B, d, N = hi - lo, atoms.shape[1], len(atoms)
    v = _initial(gens, d, v0)
    acc = np.zeros(B)
    kept = []
    chunk = max(1, min(512, _CHUNK_ELEMS // (B * d * d)))
    for start in range(0, steps, chunk):
        m = min(chunk, steps - start)
        if N == 1:
            Ms = np.broadcast_to(atoms[0], (B, m, d, d))
        else:
            u = np.stack([g.random(m) for g in gens])
            Ms = atoms[np.minimum(np.searchsorted(cumw, u, side="right"), N - 1)]
        for s in range(m):
            k = start + s
            v, nrm = _apply(Ms[:, s], v)
            if k >= burn_in:
                acc = acc + np.log(nrm)
                if keep_every and (k - burn_in) % keep_every == 0:
                    kept.append(v)
    return acc, v, kept


def simulate_iid(nu: FiniteMatrixMeasure, steps: int, trajectories: int, seed: int, stream: int,
                 burn_in: int = 0, v0=None, keep_every: int = 0, threads: int = 1):
    """Run ``trajectories`` independent products; returns (log-growth sums, kept directions).

    The sums cover steps ``burn_in .. steps-1``. ``kept`` is an (M, d) array of
    post-burn-in directions sampled every ``keep_every`` steps (empty if 0).
    """
    atoms = np.ascontiguousarray(nu.atoms)
    cumw = np.cumsum(nu.weights)
    parts = rng.block_map(
        lambda lo, hi: _iid_block(atoms, cumw, seed, stream, lo, hi, steps, burn_in, v0, keep_every),
        trajectories,
        threads,
    )
    sums = np.concatenate([p[0] for p in parts])
    kept = [v for p in parts for v in p[2]]
    # order kept points trajectory-major so the cloud does not depend on blocking
    if kept:
        per_block = [np.stack(p[2], axis=1).reshape(-1, nu.dim) for p in parts if p[2]]
        kept = np.concatenate(per_block)
    else:
        kept = np.empty((0, nu.dim))
    return sums, kept


def _estimate(nu, cfg: CocycleRunConfig, stream: int, quantity: str, v0="config") -> CocycleEstimate:
    v0 = cfg.initial_direction if v0 == "config" else v0
    sums, _ = simulate_iid(nu, cfg.steps, cfg.trajectories, cfg.seed, stream, cfg.burn_in, v0,
                           threads=cfg.threads)
    x = sums / cfg.averaged_steps
    return CocycleEstimate(quantity, float(np.mean(x)), exponent_error(x), cfg.steps, cfg.trajectories,
                           cfg.seed, samples=x)


def estimate_top_exponent(nu: FiniteMatrixMeasure, cfg: CocycleRunConfig) -> CocycleEstimate:
    return _estimate(nu, cfg, rng.TOP, "lambda_plus")


def estimate_bottom_exponent(nu: FiniteMatrixMeasure, cfg: CocycleRunConfig) -> CocycleEstimate:
    """Bottom exponent as minus the top exponent of the inverse measure.

    Always starts from random directions: a fixed start direction has no
    meaning for the inverse cocycle.
    """
    est = _estimate(nu.inverse(), cfg, rng.BOTTOM, "lambda_minus", v0=None)
    return replace(est, value=-est.value, samples=-est.samples)


def lift_measure(nu: FiniteMatrixMeasure, k: int) -> FiniteMatrixMeasure:
    """Pushforward of nu under g -> exterior_power(g, k)."""
    if not 1 <= k <= nu.dim:
        raise BadOrder(f"order {k} outside 1..{nu.dim}")
    if k == 1:
        return nu
    return FiniteMatrixMeasure(np.array([glcore.exterior_power(a, k) for a in nu.atoms]), nu.weights)


def estimate_partial_sum(nu: FiniteMatrixMeasure, k: int, cfg: CocycleRunConfig) -> CocycleEstimate:
    """lambda_1 + ... + lambda_k as the top exponent of the k-th exterior power."""
    lifted = lift_measure(nu, k)
    if k == 1:
        est = estimate_top_exponent(nu, cfg)
    else:
        est = _estimate(lifted, cfg, rng.PARTIAL_BASE + k, f"partial_sum_{k}", v0=None)
    return replace(est, quantity=f"partial_sum_{k}")


def individual_exponent(nu: FiniteMatrixMeasure, k: int, cfg: CocycleRunConfig) -> CocycleEstimate:
    if not 1 <= k <= nu.dim:
        raise BadOrder(f"order {k} outside 1..{nu.dim}")
    upper = estimate_partial_sum(nu, k, cfg)
    if k == 1:
        return replace(upper, quantity="lambda_1")
    lower = estimate_partial_sum(nu, k - 1, cfg)
    se = float(np.hypot(upper.std_error, lower.std_error))
    return CocycleEstimate(f"lambda_{k}", upper.value - lower.value, se, cfg.steps, cfg.trajectories, cfg.seed)


def finite_time_average(nu: FiniteMatrixMeasure, v, n: int, trials: int, seed: int,
                        threads: int = 1, stream: int = rng.FINITE_TIME) -> np.ndarray:
    """``trials`` independent draws of (1/n) log |A^n v|."""
    if n < 1 or trials < 1:
        raise InputError("n and trials must be >= 1")
    sums, _ = simulate_iid(nu, n, trials, seed, stream, 0, np.asarray(v, float), threads=threads)
    return sums / n


def _jackknife_variance(x: np.ndarray, groups: int = 16) -> tuple[float, float]:
    """Sample variance of ``x`` and its delete-one-group jackknife std error."""
    T = len(x)
    var = float(np.var(x, ddof=1))
    G = min(groups, T)
    if G < 2 or T < 3:
        return var, 0.0
    labels = np.arange(T) % G
    reps = np.array([np.var(x[labels != g], ddof=1) for g in range(G)])
    se = float(np.sqrt((G - 1) / G * np.sum((reps - reps.mean()) ** 2)))
    return var, se


def estimate_asymptotic_variance(nu: FiniteMatrixMeasure, cfg: CocycleRunConfig) -> CocycleEstimate:
    """m * Var(per-trajectory average) over m = steps - burn_in averaged steps."""
    if cfg.trajectories < 2:
        raise InputError("variance estimation needs at least 2 trajectories")
    sums, _ = simulate_iid(nu, cfg.steps, cfg.trajectories, cfg.seed, rng.FINITE_TIME, cfg.burn_in,
                           cfg.initial_direction, threads=cfg.threads)
    m = cfg.averaged_steps
    var, se = _jackknife_variance(sums / m)
    return CocycleEstimate("sigma2", m * var, m * se, cfg.steps, cfg.trajectories, cfg.seed)


def sample_stationary_measure(nu: FiniteMatrixMeasure, cfg: CocycleRunConfig, keep_every: int = 1,
                              stream: int = rng.STATIONARY) -> EmpiricalProjectiveMeasure:
    """Post-burn-in directions of ``cfg.trajectories`` runs, thinned by ``keep_every``."""
    _, kept = simulate_iid(nu, cfg.steps, cfg.trajectories, cfg.seed, stream, cfg.burn_in,
                           cfg.initial_direction, keep_every=max(1, keep_every), threads=cfg.threads)
    return EmpiricalProjectiveMeasure(kept)


def furstenberg_khasminskii_integral(nu: FiniteMatrixMeasure, eta: EmpiricalProjectiveMeasure) -> float:
    """sum_j p_j * mean_i log |A_j v_i| over the sample cloud of ``eta``."""
    if eta.dim != nu.dim:
        raise DimMismatch(f"measure on GL({nu.dim}) against points in dim {eta.dim}")
    v = eta.samples / np.linalg.norm(eta.samples, axis=1, keepdims=True)
    total = 0.0
    for a, p in zip(nu.atoms, nu.weights):
        if p > 0:
            total += p * float(np.mean(np.log(np.linalg.norm(v @ a.T, axis=1))))
    return total


def furstenberg_khasminskii_bottom(nu: FiniteMatrixMeasure, cfg: CocycleRunConfig, keep_every: int = 1) -> float:
    """Bottom exponent from the FK integral of the inverse cocycle over its own stationary cloud."""
    inv = nu.inverse()
    eta = sample_stationary_measure(inv, replace(cfg, initial_direction=None), keep_every, rng.STATIONARY_INV)
    return -furstenberg_khasminskii_integral(inv, eta)
