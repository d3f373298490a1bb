"""Built-in example problems written by ``dysonreach gen``."""

from __future__ import annotations

import math

import numpy as np

from .controls import PiecewiseConstantControl, constant_control, zero_control
from .io import ProblemSpec


def rotation() -> ProblemSpec:
    """Rotation generator with ``B = I``: commuting, closed form ``e^{int u} R(t) psi0``."""
    return ProblemSpec(
        dim=2, field="real",
        A=np.array([[0.0, -1.0], [1.0, 0.0]]), B=np.eye(2), psi0=np.array([1.0, 0.0]),
        control=constant_control(0.5, 2.0), T=2.0, K=1.0, eps=1e-8,
    )


def zero_control_orbit() -> ProblemSpec:
    """Rotation with no control: the attainable set is the half circle orbit."""
    return ProblemSpec(
        dim=2, field="real",
        A=np.array([[0.0, -1.0], [1.0, 0.0]]), B=np.eye(2), psi0=np.array([1.0, 0.0]),
        control=zero_control(), T=math.pi, K=0.0, eps=0.1,
    )


def scalar() -> ProblemSpec:
    return ProblemSpec(
        dim=1, field="real", A=np.array([[1.0]]), B=np.array([[2.0]]), psi0=np.array([1.0]),
        control=constant_control(1.0, 1.0), T=1.0, K=1.0, eps=1e-10,
    )


def nilpotent() -> ProblemSpec:
    """Non-commuting shift pair ``A = E12``, ``B = E21``."""
    return ProblemSpec(
        dim=2, field="real",
        A=np.array([[0.0, 1.0], [0.0, 0.0]]), B=np.array([[0.0, 0.0], [1.0, 0.0]]),
        psi0=np.array([1.0, 0.0]), control=constant_control(1.0, 1.0), T=1.0, K=1.0, eps=1e-8,
    )


def schrodinger(dim: int = 20) -> ProblemSpec:
    """Galerkin truncation of a particle in a box driven by a dipole-like field.

    ``A = -i H0`` with ``H0 = diag((k/10)^2)`` and ``B = -i H1``, where ``H1``
    couples neighbouring levels with weight ``k / dim`` and is normalised to
    spectral norm 1. The initial state is the uniform superposition of the
    four lowest levels.
    """
    k = np.arange(1, dim + 1, dtype=float)
    H0 = np.diag((k / 10.0) ** 2)
    off = k[:-1] / dim
    H1 = np.diag(off, 1) + np.diag(off, -1)
    H1 /= np.linalg.norm(H1, 2)
    psi0 = np.zeros(dim, dtype=complex)
    psi0[: min(4, dim)] = 1.0 / np.sqrt(min(4, dim))
    return ProblemSpec(
        dim=dim, field="complex", A=-1j * H0, B=-1j * H1, psi0=psi0,
        control=PiecewiseConstantControl((0.0, 0.5, 1.0), (1.0, -1.0)),
        T=1.0, K=1.0, eps=0.1, seed=0,
    )


CATALOGUE = {
    "rotation": rotation,
    "zero-control": zero_control_orbit,
    "scalar": scalar,
    "nilpotent": nilpotent,
    "schrodinger20": schrodinger,
}
