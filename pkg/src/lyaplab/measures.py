"""Finitely supported probability measures on GL(d, R) and distances between them.

Wasserstein-theta is solved exactly as a transport LP (HiGHS via scipy) on
the product of the two finite supports; the Hausdorff term is a direct
max-min over atoms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from . import glcore
from .errors import (
    BadOrder,
    BadTheta,
    DimMismatch,
    IndexMismatch,
    InputError,
    NumericalError,
    ParseError,
    SingularMatrix,
)

WEIGHT_TOL = 1e-12
FILE_WEIGHT_TOL = 1e-9
MERGE_TOL = 1e-12
PLAN_TOL = 1e-10


def _delta_matrix(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    xi = np.linalg.inv(xs)
    yi = np.linalg.inv(ys)
    out = np.empty((len(xs), len(ys)))
    for i in range(len(xs)):
        for j in range(len(ys)):
            out[i, j] = glcore.operator_norm(xs[i] - ys[j], check=False) + glcore.operator_norm(
                xi[i] - yi[j], check=False
            )
    return out


def _validate_stack(atoms: np.ndarray) -> None:
    d = atoms.shape[1]
    if atoms.shape[2] != d:
        raise DimMismatch(f"atoms must be square, got shape {atoms.shape[1:]}")
    if d > glcore.MAX_DIM:
        raise DimMismatch(f"dimension {d} exceeds the cap {glcore.MAX_DIM}")
    if not np.all(np.isfinite(atoms)):
        raise InputError("matrix entries must be finite")
    norms = np.linalg.norm(atoms, ord=2, axis=(1, 2))
    dets = np.abs(np.linalg.det(atoms))
    if np.any(norms == 0) or np.any(dets < glcore.DET_TOL * norms**d):
        raise SingularMatrix("measure has a numerically singular atom")


def _merge_duplicates(atoms: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(atoms) > 64:
        # bucket by rounded entries first; exact pairwise merge only for small supports
        scale = np.abs(atoms).max()
        keys = np.round(atoms.reshape(len(atoms), -1) / scale, 12)
        _, first, inv = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        inv = inv.reshape(-1)
        order = np.argsort(first)
        remap = np.empty_like(order)
        remap[order] = np.arange(len(order))
        merged_w = np.zeros(len(first))
        np.add.at(merged_w, remap[inv], w)
        return atoms[first[order]], merged_w
    keep_atoms: list[np.ndarray] = []
    keep_w: list[float] = []
    for a, wi in zip(atoms, w):
        for j, b in enumerate(keep_atoms):
            if glcore.group_delta(a, b) <= MERGE_TOL:
                keep_w[j] += wi
                break
        else:
            keep_atoms.append(a)
            keep_w.append(wi)
    return np.array(keep_atoms), np.array(keep_w)


@dataclass(frozen=True)
class FiniteMatrixMeasure:
    """sum_j weights[j] * delta_{atoms[j]}.

    Atoms closer than ``MERGE_TOL`` in the group metric are merged on
    construction with their weights summed. Zero-weight atoms are kept (so
    index-paired comparisons stay aligned) but excluded from ``support``.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float)
        if atoms.ndim == 2:
            atoms = atoms[None]
        if atoms.ndim != 3 or atoms.shape[0] == 0:
            raise DimMismatch("atoms must be a nonempty stack of square matrices")
        _validate_stack(atoms)
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size != atoms.shape[0]:
            raise IndexMismatch(f"{atoms.shape[0]} atoms but {w.size} weights")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise InputError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise InputError(f"weights sum to {float(w.sum())!r}, not 1")
        keep_atoms, keep_w = _merge_duplicates(atoms, w)
        object.__setattr__(self, "atoms", keep_atoms)
        object.__setattr__(self, "weights", keep_w)
        self.atoms.setflags(write=False)
        self.weights.setflags(write=False)

    @classmethod
    def uniform(cls, atoms) -> FiniteMatrixMeasure:
        atoms = np.asarray(atoms, dtype=float)
        return cls(atoms, np.full(len(atoms), 1.0 / len(atoms)))

    @classmethod
    def dirac(cls, g) -> FiniteMatrixMeasure:
        return cls(np.asarray(g, dtype=float)[None], [1.0])

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def support(self) -> np.ndarray:
        return self.atoms[self.weights > 0]

    def eccentricity(self) -> float:
        s = np.linalg.svd(self.support, compute_uv=False)
        return float(max(1.0, np.max(s[:, 0] / s[:, -1])))

    def diam(self) -> float:
        """max delta(A_i, A_j) over the listed atoms."""
        return float(_delta_matrix(self.atoms, self.atoms).max())

    def diam_theta(self, theta: float) -> float:
        """Diameter of the support in the metric delta^theta."""
        return float(_delta_matrix(self.support, self.support).max() ** theta)

    def mean_log_det(self) -> float:
        return float(np.dot(self.weights, np.log(np.abs(np.linalg.det(self.atoms)))))

    def inverse(self) -> FiniteMatrixMeasure:
        """Pushforward under g -> g^-1."""
        return FiniteMatrixMeasure(np.linalg.inv(self.atoms), self.weights)

    def pushforward(self, f) -> FiniteMatrixMeasure:
        return FiniteMatrixMeasure(np.array([f(a) for a in self.atoms]), self.weights)

    def convolve(self, other: FiniteMatrixMeasure) -> FiniteMatrixMeasure:
        """Law of g2 @ g1 with g1 ~ self and g2 ~ other independent."""
        if other.dim != self.dim:
            raise DimMismatch("convolution of measures on different dimensions")
        prods = np.einsum("jab,ibc->ijac", other.atoms, self.atoms).reshape(-1, self.dim, self.dim)
        w = np.outer(self.weights, other.weights).reshape(-1)
        return FiniteMatrixMeasure(prods, w / w.sum())


@dataclass(frozen=True)
class Coupling:
    row_measure: FiniteMatrixMeasure
    col_measure: FiniteMatrixMeasure
    plan: np.ndarray
    cost: float = field(default=float("nan"))

    def __post_init__(self):
        p = self.plan
        if np.any(p < -PLAN_TOL):
            raise InputError("coupling plan has negative entries")
        if not np.allclose(p.sum(axis=1), self.row_measure.weights, atol=PLAN_TOL, rtol=0):
            raise InputError("coupling row marginals do not match")
        if not np.allclose(p.sum(axis=0), self.col_measure.weights, atol=PLAN_TOL, rtol=0):
            raise InputError("coupling column marginals do not match")


def _check_pair(mu: FiniteMatrixMeasure, nu: FiniteMatrixMeasure):
    if mu.dim != nu.dim:
        raise DimMismatch(f"measures on GL({mu.dim}) and GL({nu.dim})")


def _check_theta(theta: float):
    if not 0.0 < theta <= 1.0:
        raise BadTheta(f"theta must lie in (0, 1], got {theta}")


def cost_matrix(mu: FiniteMatrixMeasure, nu: FiniteMatrixMeasure, theta: float) -> np.ndarray:
    _check_pair(mu, nu)
    _check_theta(theta)
    return _delta_matrix(mu.atoms, nu.atoms) ** theta


def transport_lp(a: np.ndarray, b: np.ndarray, cost: np.ndarray) -> tuple[float, np.ndarray]:
    """Solve min <cost, P> over couplings P of (a, b); returns (value, plan)."""
    m, n = cost.shape
    A_eq = np.zeros((m + n, m * n))
    for i in range(m):
        A_eq[i, i * n : (i + 1) * n] = 1.0
    for j in range(n):
        A_eq[m + j, j::n] = 1.0
    res = linprog(
        cost.reshape(-1),
        A_eq=A_eq,
        b_eq=np.concatenate([a, b]),
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise NumericalError(f"transport LP failed: {res.message}")
    plan = np.clip(res.x.reshape(m, n), 0.0, None)
    return float(res.fun), plan


def optimal_coupling(mu, nu, theta: float) -> Coupling:
    c = cost_matrix(mu, nu, theta)
    value, plan = transport_lp(mu.weights, nu.weights, c)
    return Coupling(mu, nu, plan, value)


def wasserstein_theta(mu: FiniteMatrixMeasure, nu: FiniteMatrixMeasure, theta: float) -> float:
    """Exact optimal-transport distance with cost delta(g, g')^theta."""
    c = cost_matrix(mu, nu, theta)
    if len(mu) == 1 or len(nu) == 1:
        # the product coupling is the only one
        return float(np.sum(np.outer(mu.weights, nu.weights) * c))
    value, _ = transport_lp(mu.weights, nu.weights, c)
    return max(0.0, value)


def hausdorff_distance(mu: FiniteMatrixMeasure, nu: FiniteMatrixMeasure) -> float:
    _check_pair(mu, nu)
    d = _delta_matrix(mu.support, nu.support)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def support_topology_distance(mu, nu, theta: float) -> float:
    return wasserstein_theta(mu, nu, theta) + hausdorff_distance(mu, nu)


def finite_support_upper_bound(mu: FiniteMatrixMeasure, nu: FiniteMatrixMeasure, theta: float) -> float:
    """Index-paired bound sum_j D^theta |p_j - p'_j| + p'_j delta(A_j, A'_j)^theta.

    D is the diameter of mu's listed atoms in the group metric.
    """
    _check_pair(mu, nu)
    _check_theta(theta)
    if len(mu) != len(nu):
        raise IndexMismatch(f"paired bound needs equal atom counts, got {len(mu)} and {len(nu)}")
    D = mu.diam()
    paired = np.array([glcore.group_delta(a, b) for a, b in zip(mu.atoms, nu.atoms)])
    return float(np.sum(D**theta * np.abs(mu.weights - nu.weights) + nu.weights * paired**theta))


# --- strong irreducibility in dimension 2 -------------------------------------------


class Irreducibility(Enum):
    IRREDUCIBLE = "irreducible"
    REDUCIBLE = "reducible"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class IrreducibilityResult:
    status: Irreducibility
    lines: tuple = ()

    @property
    def irreducible(self) -> bool:
        return self.status is Irreducibility.IRREDUCIBLE


def _real_eigenlines(a: np.ndarray, tol: float) -> list[np.ndarray]:
    tr, det = np.trace(a), np.linalg.det(a)
    disc = tr * tr - 4.0 * det
    scale = max(1.0, tr * tr)
    if disc < -tol * scale:
        return []
    lam = np.linalg.eigvals(a).real
    out = []
    for lv in np.unique(np.round(lam, 14)):
        m = a - lv * np.eye(2)
        # null vector of a rank-one 2x2 matrix: rotate its largest row
        r = m[np.argmax(np.linalg.norm(m, axis=1))]
        if np.linalg.norm(r) <= 1e-14 * max(1.0, abs(lv)):
            continue
        out.append(glcore.canonical_line([-r[1], r[0]]))
    return out


def _find_line(lines, v, tol):
    for i, w in enumerate(lines):
        if glcore.projective_metric(w, v) <= tol:
            return i
    return -1


def strong_irreducibility_check_d2(
    mu: FiniteMatrixMeasure, max_lines: int = 64, line_tol: float = 1e-9
) -> IrreducibilityResult:
    """Search for a finite union of lines invariant under every atom.

    Seeds are the real eigendirections of the atoms; each seed orbit under the
    atom actions is closed breadth-first. A closed orbit is an invariant set.
    If some atom is hyperbolic, any invariant finite union consists of its
    eigendirections, so an exhausted search proves irreducibility.
    """
    if mu.dim != 2:
        raise BadOrder("irreducibility search is implemented for 2x2 matrices only")
    atoms = [a for a in mu.support]
    nonscalar = [a for a in atoms if np.linalg.norm(a - a[0, 0] * np.eye(2)) > 1e-12 * np.linalg.norm(a)]
    if not nonscalar:
        return IrreducibilityResult(Irreducibility.REDUCIBLE, (glcore.canonical_line([1.0, 0.0]),))

    seeds = []
    for a in nonscalar:
        for v in _real_eigenlines(a, 1e-12):
            if _find_line(seeds, v, line_tol) < 0:
                seeds.append(v)
    if not seeds:
        return IrreducibilityResult(Irreducibility.INCONCLUSIVE)

    witness: list[np.ndarray] = []
    for s in seeds:
        orbit = [s]
        frontier = [s]
        escaped = False
        while frontier and not escaped:
            nxt = []
            for v in frontier:
                for a in nonscalar:
                    w = glcore.canonical_line(a @ v)
                    if _find_line(orbit, w, line_tol) < 0:
                        orbit.append(w)
                        nxt.append(w)
                        if len(orbit) > max_lines:
                            escaped = True
                            break
                if escaped:
                    break
            frontier = nxt
        if not escaped:
            for v in orbit:
                if _find_line(witness, v, line_tol) < 0:
                    witness.append(v)
    if witness:
        return IrreducibilityResult(Irreducibility.REDUCIBLE, tuple(witness))
    hyperbolic = any(
        len(_real_eigenlines(a, 1e-12)) == 2
        and abs(abs(np.linalg.eigvals(a)[0]) - abs(np.linalg.eigvals(a)[1])) > 1e-9
        for a in nonscalar
    )
    if not hyperbolic:
        return IrreducibilityResult(Irreducibility.INCONCLUSIVE)
    return IrreducibilityResult(Irreducibility.IRREDUCIBLE)


# --- measure files ------------------------------------------------------------------


def _line_of(text: str, key: str) -> int:
    for i, line in enumerate(text.splitlines(), start=1):
        if f'"{key}"' in line:
            return i
    return 1


def parse_measure(text: str, renormalize: bool = False, source: str = "<measure>") -> FiniteMatrixMeasure:
    """Parse the JSON measure format ``{"dim": d, "atoms": [[...d*d...], ...], "weights": [...]}``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    for key in ("dim", "atoms", "weights"):
        if key not in doc:
            raise ParseError(f"{source}:1: missing field '{key}'")
    d = doc["dim"]
    if not isinstance(d, int) or d < 1:
        raise ParseError(f"{source}:{_line_of(text, 'dim')}: 'dim' must be a positive integer")
    try:
        atoms = np.array(doc["atoms"], dtype=float)
        weights = np.array(doc["weights"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{source}:{_line_of(text, 'atoms')}: non-numeric entries ({exc})") from exc
    if atoms.ndim != 2 or atoms.shape[1] != d * d:
        raise ParseError(f"{source}:{_line_of(text, 'atoms')}: each atom must be a list of {d * d} floats")
    wl = _line_of(text, "weights")
    if weights.ndim != 1 or weights.size != atoms.shape[0]:
        raise ParseError(f"{source}:{wl}: expected {atoms.shape[0]} weights, got {weights.size}")
    if np.any(~np.isfinite(weights)) or np.any(weights < 0):
        raise ParseError(f"{source}:{wl}: weights must be finite and nonnegative")
    total = weights.sum()
    if abs(total - 1.0) > FILE_WEIGHT_TOL:
        if not renormalize or total <= 0:
            raise ParseError(f"{source}:{wl}: weights sum to {float(total)!r}; pass --renormalize to rescale")
    weights = weights / total
    try:
        return FiniteMatrixMeasure(atoms.reshape(-1, d, d), weights)
    except InputError as exc:
        raise ParseError(f"{source}:{_line_of(text, 'atoms')}: {exc}") from exc


def load_measure(path, renormalize: bool = False) -> FiniteMatrixMeasure:
    p = Path(path)
    return parse_measure(p.read_text(), renormalize=renormalize, source=str(p))


def measure_to_dict(mu: FiniteMatrixMeasure) -> dict:
    return {
        "dim": mu.dim,
        "atoms": [a.reshape(-1).tolist() for a in mu.atoms],
        "weights": mu.weights.tolist(),
    }


def dump_measure(mu: FiniteMatrixMeasure, path) -> None:
    Path(path).write_text(json.dumps(measure_to_dict(mu), indent=1) + "\n")
