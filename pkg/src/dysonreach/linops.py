"""Dense operator helpers: validation, matrix exponential, norms and growth bounds.

Operators are plain square numpy arrays (real or complex). Vectors are 1-D
arrays of matching length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "SemigroupBounds",
    "as_operator",
    "as_vector",
    "expm",
    "operator_norm",
    "log_norm",
    "semigroup_bounds",
]


def as_operator(A, name: str = "A") -> np.ndarray:
    """Return ``A`` as a finite square 2-D array, raising InvalidInputError otherwise."""
    arr = np.asarray(A)
    if arr.dtype == object or not (
        np.issubdtype(arr.dtype, np.number) or arr.dtype == bool
    ):
        raise InvalidInputError(f"{name}: entries must be numeric")
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise InvalidInputError(f"{name}: expected a non-empty square matrix, got shape {arr.shape}")
    if not np.iscomplexobj(arr):
        arr = arr.astype(float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name}: non-finite entries")
    return arr


def as_vector(v, dim: int | None = None, name: str = "psi0") -> np.ndarray:
    arr = np.asarray(v)
    if arr.dtype == object or not np.issubdtype(arr.dtype, np.number):
        raise InvalidInputError(f"{name}: entries must be numeric")
    if arr.ndim != 1:
        raise InvalidInputError(f"{name}: expected a 1-D vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise InvalidInputError(f"{name}: length {arr.shape[0]} does not match dimension {dim}")
    if not np.iscomplexobj(arr):
        arr = arr.astype(float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name}: non-finite entries")
    return arr


def _pade_coefficients(m: int) -> list[float]:
    # b_j = (2m-j)! m! / ((2m)! j! (m-j)!), normalised so that b_m = 1 as in Higham (2005).
    raw = [
        Fraction(math.factorial(2 * m - j) * math.factorial(m),
                 math.factorial(2 * m) * math.factorial(j) * math.factorial(m - j))
        for j in range(m + 1)
    ]
    return [float(c / raw[m]) for c in raw]


_PADE = {m: _pade_coefficients(m) for m in (3, 5, 7, 9, 13)}

# Largest 1-norm for which the degree-m Pade approximant reaches unit roundoff.
_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}


def _pade(A: np.ndarray, m: int) -> np.ndarray:
    b = _PADE[m]
    n = A.shape[0]
    ident = np.eye(n, dtype=A.dtype)
    A2 = A @ A
    if m == 13:
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
                 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
        V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
             + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    else:
        powers = [ident, A2]
        while len(powers) <= m // 2:
            powers.append(powers[-1] @ A2)
        U = A @ sum(b[2 * k + 1] * powers[k] for k in range(m // 2 + 1))
        V = sum(b[2 * k] * powers[k] for k in range(m // 2 + 1))
    return np.linalg.solve(V - U, V + U)


def expm(A, t: float = 1.0) -> np.ndarray:
    """Matrix exponential ``e^{tA}`` by scaling and squaring with a Pade kernel.

    Degree selection follows Higham's 2005 algorithm: the lowest Pade degree
    whose backward-error threshold covers ``||tA||_1`` is used, otherwise
    ``tA`` is scaled by ``2^-s`` into the degree-13 range and squared back.
    """
    A = as_operator(A)
    if not np.isfinite(t):
        raise InvalidInputError("t must be finite")
    X = A * t
    norm1 = np.linalg.norm(X, 1)
    if norm1 == 0.0:
        return np.eye(X.shape[0], dtype=X.dtype)
    for m in (3, 5, 7, 9):
        if norm1 <= _THETA[m]:
            return _pade(X, m)
    s = max(0, int(math.ceil(math.log2(norm1 / _THETA[13]))))
    R = _pade(X / 2.0**s, 13)
    for _ in range(s):
        R = R @ R
    return R


def operator_norm(A) -> float:
    """Spectral norm (largest singular value)."""
    A = as_operator(A)
    return float(np.linalg.svd(A, compute_uv=False)[0])


def log_norm(A) -> float:
    """Euclidean logarithmic norm: top eigenvalue of the Hermitian part of ``A``."""
    A = as_operator(A)
    sym = (A + A.conj().T) / 2
    return float(np.linalg.eigvalsh(sym)[-1])


@dataclass(frozen=True)
class SemigroupBounds:
    """Constants with ``||e^{tA}|| <= M e^{omega t}`` for all ``t >= 0``."""

    M: float
    omega: float

    def __post_init__(self):
        if not (np.isfinite(self.M) and self.M >= 1.0):
            raise InvalidInputError(f"M must be finite and >= 1, got {self.M}")
        if not np.isfinite(self.omega):
            raise InvalidInputError("omega must be finite")

    def growth(self, t: float) -> float:
        return self.M * math.exp(self.omega * t)


def semigroup_bounds(A) -> SemigroupBounds:
    """Growth certificate ``(M=1, omega=mu(A))`` from the logarithmic norm.

    ``d/dt ||e^{tA}x||^2 = 2 Re<x(t), A x(t)> <= 2 mu(A) ||x(t)||^2`` gives
    ``||e^{tA}|| <= e^{mu(A) t}`` for every ``t >= 0``.
    """
    return SemigroupBounds(M=1.0, omega=log_norm(A))
