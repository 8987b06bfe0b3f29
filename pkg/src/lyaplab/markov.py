"""Matrix products driven by a finite stationary Markov chain."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import glcore, rng
from .cocycle import CocycleEstimate, CocycleRunConfig, _apply, _initial, exponent_error
from .errors import DimMismatch, InputError, NotAperiodic, NotIrreducible

ROW_TOL = 1e-10


def _reachability(P: np.ndarray) -> np.ndarray:
    n = len(P)
    reach = (P > 0) | np.eye(n, dtype=bool)
    for _ in range(max(1, int(np.ceil(np.log2(n))) + 1)):
        reach = (reach.astype(int) @ reach.astype(int)) > 0
    return reach


def check_irreducible(P: np.ndarray) -> None:
    if not np.all(_reachability(P)):
        raise NotIrreducible("transition matrix is not irreducible")


def check_aperiodic(P: np.ndarray) -> None:
    """Some power P^m with m <= N^2 must be entrywise positive (Wielandt's bound suffices)."""
    n = len(P)
    pattern = (P > 0).astype(float)
    Q = pattern.copy()
    for _ in range(n * n):
        if np.all(Q > 0):
            return
        Q = ((Q @ pattern) > 0).astype(float)
    raise NotAperiodic("transition matrix is periodic")


def validate_transition(P) -> np.ndarray:
    P = np.array(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 1:
        raise DimMismatch(f"transition matrix must be square, got shape {P.shape}")
    if not np.all(np.isfinite(P)) or np.any(P < 0):
        raise InputError("transition probabilities must be finite and non-negative")
    if np.any(np.abs(P.sum(axis=1) - 1.0) > ROW_TOL):
        raise InputError("transition rows must sum to 1")
    check_irreducible(P)
    check_aperiodic(P)
    return P


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Left Perron vector, refined by a few power-iteration sweeps."""
    w, V = np.linalg.eig(P.T)
    pi = np.abs(np.real(V[:, np.argmin(np.abs(w - 1.0))]))
    pi /= pi.sum()
    for _ in range(50):
        nxt = pi @ P
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) < 1e-15:
            break
        pi = nxt
    return pi


def chain_spectral_gap(P) -> float:
    """Second-largest eigenvalue modulus of an irreducible aperiodic chain."""
    P = validate_transition(P)
    if len(P) == 1:
        return 0.0
    mods = np.sort(np.abs(np.linalg.eigvals(P)))[::-1]
    return float(min(max(mods[1], 0.0), 1.0))


@dataclass(frozen=True)
class MarkovCocycle:
    transition: np.ndarray
    fibers: np.ndarray
    stationary: np.ndarray = field(init=False)

    def __post_init__(self):
        P = validate_transition(self.transition)
        fibers = np.array([glcore.as_matrix(a) for a in self.fibers])
        if len(fibers) != len(P):
            raise DimMismatch(f"{len(fibers)} fibers for {len(P)} states")
        if len({a.shape for a in fibers}) != 1:
            raise DimMismatch("fiber matrices have different shapes")
        pi = stationary_distribution(P)
        if np.max(np.abs(pi @ P - pi)) > ROW_TOL:
            raise InputError("stationary distribution did not converge")
        for name, arr in (("transition", P), ("fibers", fibers), ("stationary", pi)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.fibers.shape[1]

    @property
    def states(self) -> int:
        return len(self.transition)

    def reversed(self) -> "MarkovCocycle":
        """Time-reversed chain P^_ij = pi_j P_ji / pi_i carrying inverse fibers."""
        pi = self.stationary
        Ph = (self.transition.T * pi[None, :]) / pi[:, None]
        Ph /= Ph.sum(axis=1, keepdims=True)
        return MarkovCocycle(Ph, np.linalg.inv(self.fibers))

    def spectral_gap(self) -> float:
        return chain_spectral_gap(self.transition)


def _markov_block(mc: MarkovCocycle, seed, stream, lo, hi, steps, burn_in, v0):
    gens = [rng.generator(seed, t, stream) for t in range(lo, hi)]
    B, d, N = hi - lo, mc.dim, mc.states
    v = _initial(gens, d, v0)
    cum_pi = np.cumsum(mc.stationary)
    cum_P = np.cumsum(mc.transition, axis=1)
    state = np.minimum(np.searchsorted(cum_pi, np.array([g.random() for g in gens]), side="right"), N - 1)
    acc = np.zeros(B)
    chunk = max(1, min(512, (1 << 20) // B))
    rows = np.arange(B)
    for start in range(0, steps, chunk):
        m = min(chunk, steps - start)
        u = np.stack([g.random(m) for g in gens])
        for s in range(m):
            k = start + s
            v, nrm = _apply(mc.fibers[state], v)
            if k >= burn_in:
                acc = acc + np.log(nrm)
            # next state: count cumulative row entries not exceeding the uniform
            nxt = np.sum(cum_P[state] <= u[rows, s][:, None], axis=1)
            state = np.minimum(nxt, N - 1)
    return acc


def _markov_estimate(mc, cfg: CocycleRunConfig, stream, quantity, v0) -> CocycleEstimate:
    parts = rng.block_map(
        lambda lo, hi: _markov_block(mc, cfg.seed, stream, lo, hi, cfg.steps, cfg.burn_in, v0),
        cfg.trajectories,
        cfg.threads,
    )
    x = np.concatenate(parts) / cfg.averaged_steps
    return CocycleEstimate(quantity, float(np.mean(x)), exponent_error(x), cfg.steps, cfg.trajectories,
                           cfg.seed, samples=x)


def estimate_markov_exponents(mc: MarkovCocycle, cfg: CocycleRunConfig) -> tuple[CocycleEstimate, CocycleEstimate]:
    """Top exponent from the forward chain; bottom from inverse fibers on the reversed chain."""
    top = _markov_estimate(mc, cfg, rng.MARKOV_TOP, "lambda_plus", cfg.initial_direction)
    rev = _markov_estimate(mc.reversed(), cfg, rng.MARKOV_BOTTOM, "lambda_minus", None)
    bottom = CocycleEstimate("lambda_minus", -rev.value, rev.std_error, rev.n, rev.T, rev.seed, samples=-rev.samples)
    return top, bottom
