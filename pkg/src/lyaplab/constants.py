"""Closed-form regularity constants built from eccentricity, Lyapunov gap and theta."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .errors import BadEccentricity, BadGap, BadOrder, BadRho, BadTau, BadTheta, DegenerateGap, InputError

SNAP_TOL = 1e-9
LOG2 = math.log(2.0)


class Regime(str, Enum):
    MH = "MH"
    PERPETUITY = "perpetuity"

    @classmethod
    def parse(cls, text: str) -> "Regime":
        key = str(text).strip().lower()
        for r in cls:
            if key == r.value.lower():
                return r
        raise InputError(f"unknown regime {text!r}; expected 'MH' or 'perpetuity'")


def snap_ceil(x: float) -> int:
    """Ceiling that first snaps values within 1e-9 of an integer onto it."""
    r = round(x)
    if abs(x - r) <= SNAP_TOL:
        return int(r)
    return int(math.ceil(x))


def check_theta(theta: float) -> float:
    if not (0.0 < theta <= 1.0) or not math.isfinite(theta):
        raise BadTheta(f"theta must lie in (0, 1], got {theta}")
    return float(theta)


@dataclass(frozen=True)
class SpectralInputs:
    """Eccentricity bound, Lyapunov gap, Hoelder exponent and theta-diameter of a measure."""

    ecc: float
    lyap_gap: float
    theta: float
    diam_theta: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.ecc) or self.ecc < 1.0:
            raise BadEccentricity(f"eccentricity must be >= 1, got {self.ecc}")
        check_theta(self.theta)
        if not math.isfinite(self.lyap_gap) or self.lyap_gap < 0:
            raise BadGap(f"Lyapunov gap must be finite and >= 0, got {self.lyap_gap}")
        if not math.isfinite(self.diam_theta) or self.diam_theta < 0:
            raise InputError(f"diam_theta must be >= 0, got {self.diam_theta}")


@dataclass(frozen=True)
class ConstantsReport:
    n0: int
    tau0: float
    N_theta: int
    tau: float
    beta_star: float
    r_star: float | None
    C_star: float
    gamma: float
    inputs: SpectralInputs
    rho_P: float | None = None
    N_theta_fiber: int | None = None

    def record(self) -> dict:
        out = asdict(self)
        out.update(out.pop("inputs"))
        return {k: v for k, v in out.items() if v is not None}


@dataclass(frozen=True)
class LogHolderReport:
    regime: Regime
    theta: float
    kappa_star: float


def _require_hoelder_inputs(inp: SpectralInputs) -> None:
    if inp.lyap_gap <= 0:
        raise DegenerateGap("Lyapunov gap is zero: only the log-Hoelder exponent applies (choose a regime)")
    if inp.ecc <= 1.0:
        raise BadEccentricity("the contraction bound needs eccentricity > 1")


def fiber_iterations(gap: float, theta: float) -> int:
    """n0 = ceil(2 log 2 / (theta * gap))."""
    return max(1, snap_ceil(2.0 * LOG2 / (theta * gap)))


def contraction_tau0(ecc: float) -> float:
    return 1.0 - LOG2 / (4.0 * math.log(2.0 * ecc))


def _C_star(ecc: float, theta: float, diam_theta: float, tau: float) -> float:
    L, E2, C1 = 2.0 * ecc, ecc**2, ecc
    diam_term = L * diam_theta ** (1.0 - theta) if diam_theta > 0 else 0.0
    return diam_term + (L + E2) * 2.0 * C1**theta / (1.0 - tau)


def _beta(tau: float, ratio: float, C2: float) -> float:
    num = -math.log(tau)
    return num / (num + ratio * math.log(C2))


def holder_package_gl2(inp: SpectralInputs) -> ConstantsReport:
    _require_hoelder_inputs(inp)
    ecc, theta = inp.ecc, inp.theta
    C2 = ecc**2
    n0 = fiber_iterations(inp.lyap_gap, theta)
    tau0 = contraction_tau0(ecc)
    N_theta = n0 * snap_ceil(3.0 * math.log(C2) / math.log(1.0 / tau0))
    tau = tau0 ** (N_theta / (3.0 * n0))
    beta = _beta(tau, N_theta / n0, C2)
    r_star = min(1.0 / (2.0 * (ecc + 1.0) ** 2), (1.0 - tau) / (4.0 * ecc))
    gamma = n0 * (-math.log(tau)) / (N_theta * math.log(C2))
    return ConstantsReport(n0, tau0, N_theta, tau, beta, r_star, _C_star(ecc, theta, inp.diam_theta, tau), gamma, inp)


def holder_package_gld(inp: SpectralInputs) -> ConstantsReport:
    """Same formulas with the gap read as lambda_1 - lambda_2."""
    return holder_package_gl2(inp)


def log_holder_package(theta: float, regime: Regime | str) -> LogHolderReport:
    theta = check_theta(theta)
    regime = regime if isinstance(regime, Regime) else Regime.parse(regime)
    kappa = theta / (2.0 + theta) if regime is Regime.MH else theta / (8.0 * (1.0 + theta))
    return LogHolderReport(regime, theta, kappa)


@dataclass(frozen=True)
class OptimalityCurve:
    alphas: np.ndarray
    betas: np.ndarray
    gamma: float
    alpha_star: float
    beta_max: float


def method_optimality_curve(inp: SpectralInputs, alphas=None, theta_in_gamma: bool = False) -> OptimalityCurve:
    """beta(alpha) = min(1 - alpha, alpha * gamma) on a grid that always contains the argmax.

    By default gamma = n0 (-log tau) / (N_theta log C2), for which the maximum
    gamma / (1 + gamma) coincides with beta_star. ``theta_in_gamma=True``
    divides gamma by theta as well; the maximum then differs from beta_star
    unless theta = 1.
    """
    rep = holder_package_gl2(inp)
    gamma = rep.gamma / inp.theta if theta_in_gamma else rep.gamma
    alpha_star = 1.0 / (1.0 + gamma)
    grid = np.linspace(0.0, 1.0, 1001) if alphas is None else np.asarray(alphas, dtype=float).ravel()
    if np.any((grid < 0) | (grid > 1)):
        raise InputError("alpha grid must lie in [0, 1]")
    grid = np.unique(np.append(grid, alpha_star))
    betas = np.minimum(1.0 - grid, grid * gamma)
    return OptimalityCurve(grid, betas, gamma, alpha_star, float(betas.max()))


def gamma_curve(gamma: float, alphas) -> np.ndarray:
    a = np.asarray(alphas, dtype=float)
    return np.minimum(1.0 - a, a * gamma)


@dataclass(frozen=True)
class SubtopReport:
    k: int
    d: int
    E_k: float
    beta_k: float
    C_k: float | None
    tau_k: float | None

    @property
    def tau_note(self) -> str:
        if self.tau_k is None:
            return "C_k = 4 C(d,k) ecc^(2k) / (1 - tau_k); tau_k not supplied"
        return f"C_k evaluated at tau_k = {self.tau_k}"


def subtop_package(ecc: float, gap_k: float, theta: float, d: int, k: int, tau_k: float | None = None) -> SubtopReport:
    """Exponent and constant for the k-th exponent gap; tau_k must come from the caller."""
    theta = check_theta(theta)
    if ecc < 1.0:
        raise BadEccentricity(f"eccentricity must be >= 1, got {ecc}")
    if not 1 <= k <= d - 1:
        raise BadOrder(f"k must satisfy 1 <= k <= d-1, got k={k}, d={d}")
    if gap_k <= 0:
        raise DegenerateGap("the k-th exponent gap must be positive")
    binom = math.comb(d, k)
    E_k = binom * ecc**k
    if math.isinf(gap_k):
        beta_k = 1.0
    else:
        beta_k = theta * gap_k / (theta * gap_k + 4.0 * math.log(E_k + 1.0))
    C_k = None
    if tau_k is not None:
        if not 0.0 < tau_k < 1.0:
            raise BadTau(f"tau_k must lie in (0, 1), got {tau_k}")
        C_k = 4.0 * binom * ecc ** (2 * k) / (1.0 - tau_k)
    return SubtopReport(k, d, E_k, beta_k, C_k, tau_k)


def markov_package(rho_P: float, fiber: SpectralInputs) -> ConstantsReport:
    """Closed forms for a chain with second eigenvalue modulus ``rho_P`` driving the fibers."""
    if not (0.0 <= rho_P < 1.0):
        raise BadRho(f"rho_P must lie in [0, 1), got {rho_P}")
    if fiber.lyap_gap <= 0 or not math.isfinite(fiber.lyap_gap):
        raise BadGap("fiber Lyapunov gap must be positive and finite")
    if fiber.ecc <= 1.0:
        raise BadEccentricity("the fiber package needs eccentricity > 1")
    ecc, theta = fiber.ecc, fiber.theta
    C2 = ecc**2
    n0 = fiber_iterations(fiber.lyap_gap, theta)
    tau0 = math.exp(-n0 * theta * fiber.lyap_gap / 2.0)
    N_fiber = n0 * snap_ceil(3.0 * math.log(C2) / math.log(1.0 / tau0))
    slow = max(tau0, rho_P)
    N_P = N_fiber * snap_ceil(3.0 * math.log(C2) / math.log(1.0 / slow))
    tau = slow ** (N_P / (3.0 * N_fiber))
    beta = _beta(tau, N_P / n0, C2)
    gamma = n0 * (-math.log(tau)) / (N_P * math.log(C2))
    return ConstantsReport(n0, tau0, N_P, tau, beta, None, _C_star(ecc, theta, fiber.diam_theta, tau), gamma,
                           fiber, rho_P=rho_P, N_theta_fiber=N_fiber)


@dataclass(frozen=True)
class ConcentrationConstants:
    """Hoeffding-Azuma constant and two variance bounds.

    ``sigma2_bound`` is (log ecc)^2 (1 + 2 tau / (1 - tau)), summing the full
    correlation series; ``sigma2_bound_geometric`` is (log ecc)^2 / (1 - tau),
    the smaller geometric bookkeeping used for the tail bound.
    """

    C_HA: float
    sigma2_bound: float
    sigma2_bound_geometric: float

    def tail_bound(self, n: int, eps: float, geometric: bool = True) -> float:
        s2 = self.sigma2_bound_geometric if geometric else self.sigma2_bound
        return 2.0 * math.exp(-n * eps**2 / (4.0 * s2))

    def azuma_bound(self, n: int, eps: float) -> float:
        return 2.0 * math.exp(-n * eps**2 / (2.0 * self.C_HA))


def concentration_constants(ecc: float, tau: float, theta: float = 1.0) -> ConcentrationConstants:
    check_theta(theta)
    if not math.isfinite(ecc) or ecc <= 1.0:
        raise BadEccentricity(f"eccentricity must be > 1, got {ecc}")
    if not 0.0 < tau < 1.0:
        raise BadTau(f"tau must lie in (0, 1), got {tau}")
    l2 = math.log(ecc) ** 2
    return ConcentrationConstants(2.0 * l2, l2 * (1.0 + 2.0 * tau / (1.0 - tau)), l2 / (1.0 - tau))
