"""Matrices in GL(d, R), their metrics, and exterior-power lifts.

Matrices are plain ``numpy`` arrays of shape ``(d, d)``; projective points
are unit vectors in canonical sign form (first non-negligible coordinate
positive), so two representatives of one line compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .errors import BadOrder, DimMismatch, InputError, SingularMatrix

MAX_DIM = 10
MAX_SUBSETS = 252
DET_TOL = 1e-12
UNIT_TOL = 1e-12


def as_matrix(g, det_tol: float = DET_TOL) -> np.ndarray:
    """Validate ``g`` as an element of GL(d, R) and return it as a float array."""
    a = np.array(g, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimMismatch(f"expected a square matrix, got shape {a.shape}")
    d = a.shape[0]
    if d > MAX_DIM:
        raise DimMismatch(f"dimension {d} exceeds the cap {MAX_DIM}")
    if not np.all(np.isfinite(a)):
        raise InputError("matrix entries must be finite")
    scale = operator_norm(a, check=False)
    if scale == 0.0 or abs(np.linalg.det(a)) < det_tol * scale**d:
        raise SingularMatrix("matrix is numerically singular")
    return a


def singular_values(g) -> np.ndarray:
    """Singular values in decreasing order, from the symmetric eigenproblem of g^T g."""
    a = np.asarray(g, dtype=float)
    ev = np.linalg.eigvalsh(a.T @ a)
    return np.sqrt(np.clip(ev[::-1], 0.0, None))


def operator_norm(g, check: bool = True) -> float:
    a = np.asarray(g, dtype=float)
    if check and (a.ndim != 2 or a.shape[0] != a.shape[1]):
        raise DimMismatch(f"expected a square matrix, got shape {a.shape}")
    return float(singular_values(a)[0])


def inverse_norm(g) -> float:
    return operator_norm(np.linalg.inv(as_matrix(g)), check=False)


def eccentricity(g) -> float:
    """Condition number ||g|| * ||g^-1||, always >= 1."""
    a = as_matrix(g)
    return max(1.0, operator_norm(a, check=False) * operator_norm(np.linalg.inv(a), check=False))


def group_delta(g, h) -> float:
    """The left-right metric ||g - h|| + ||g^-1 - h^-1|| on GL(d, R)."""
    a, b = as_matrix(g), as_matrix(h)
    if a.shape != b.shape:
        raise DimMismatch(f"shapes {a.shape} and {b.shape} differ")
    return operator_norm(a - b, check=False) + operator_norm(
        np.linalg.inv(a) - np.linalg.inv(b), check=False
    )


@dataclass(frozen=True)
class MetricConstants:
    """Lipschitz constants attached to an eccentricity bound."""

    ecc: float
    C1: float
    C2: float
    L: float
    diam_theta: float = 0.0


def metric_constants(ecc: float, diam_theta: float = 0.0) -> MetricConstants:
    if ecc < 1.0:
        raise InputError(f"eccentricity must be >= 1, got {ecc}")
    return MetricConstants(ecc=ecc, C1=ecc, C2=ecc**2, L=2.0 * ecc, diam_theta=diam_theta)


def canonical_line(v) -> np.ndarray:
    """Unit representative of the line through ``v`` with first nonzero coordinate positive."""
    u = np.array(v, dtype=float).reshape(-1)
    nrm = np.linalg.norm(u)
    if not np.isfinite(nrm) or nrm == 0.0:
        raise InputError("a projective point needs a nonzero finite vector")
    u = u / nrm
    nz = np.flatnonzero(np.abs(u) > UNIT_TOL)
    if u[nz[0]] < 0:
        u = -u
    return u


def projective_metric(p, q) -> float:
    """|u ^ v| / (|u| |v|): the sine of the angle between two lines."""
    u = np.asarray(p, dtype=float).reshape(-1)
    v = np.asarray(q, dtype=float).reshape(-1)
    if u.shape != v.shape:
        raise DimMismatch(f"projective points of dims {u.size} and {v.size}")
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    if u.size == 2:
        wedge = abs(u[0] * v[1] - u[1] * v[0])
    else:
        w = np.outer(u, v)
        wedge = np.sqrt(0.5 * np.sum((w - w.T) ** 2))
    return float(min(1.0, wedge))


def _check_action(g, p) -> tuple[np.ndarray, np.ndarray]:
    a = as_matrix(g)
    v = np.asarray(p, dtype=float).reshape(-1)
    if v.size != a.shape[0]:
        raise DimMismatch(f"matrix of dim {a.shape[0]} acting on vector of dim {v.size}")
    return a, v


def projective_act(g, p) -> np.ndarray:
    a, v = _check_action(g, p)
    return canonical_line(a @ v)


def log_norm_cocycle(g, p) -> float:
    """log(|g v| / |v|)."""
    a, v = _check_action(g, p)
    return float(np.log(np.linalg.norm(a @ v) / np.linalg.norm(v)))


def k_subsets(d: int, k: int) -> list[tuple[int, ...]]:
    return list(combinations(range(d), k))


def exterior_power(g, k: int) -> np.ndarray:
    """Compound matrix of k x k minors, rows/columns indexed by lexicographic k-subsets."""
    a = as_matrix(g)
    d = a.shape[0]
    if not 1 <= k <= d:
        raise BadOrder(f"exterior power order {k} outside 1..{d}")
    if comb(d, k) > MAX_SUBSETS:
        raise BadOrder(f"C({d},{k}) exceeds {MAX_SUBSETS}")
    if k == 1:
        return a.copy()
    idx = np.array(k_subsets(d, k))
    minors = a[idx[:, None, :, None], idx[None, :, None, :]]
    return np.linalg.det(minors)
