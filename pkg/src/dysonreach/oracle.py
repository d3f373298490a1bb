"""Reference solvers for the mild solution, independent of the Dyson hierarchy.

``propagate_oracle`` integrates the bilinear ODE directly with classical RK4.
``picard_solution`` iterates the Duhamel integral equation with trapezoid
quadrature. Neither is fast; both exist to cross-check the propagator.
"""

from __future__ import annotations

import math

import numpy as np

from .controls import PiecewiseConstantControl
from .errors import InvalidInputError, NumericalOverflowError
from .linops import as_operator, as_vector, expm

__all__ = ["propagate_oracle", "picard_solution", "picard_iterates"]


def _validate(A, B, psi0, t):
    A = as_operator(A, "A")
    B = as_operator(B, "B")
    if A.shape != B.shape:
        raise InvalidInputError(f"A has shape {A.shape} but B has shape {B.shape}")
    psi0 = as_vector(psi0, A.shape[0])
    if not (math.isfinite(t) and t >= 0):
        raise InvalidInputError("t must be finite and non-negative")
    return A, B, psi0


@np.errstate(over="ignore", invalid="ignore")
def propagate_oracle(A, B, psi0, u: PiecewiseConstantControl, t: float, steps: int = 200) -> np.ndarray:
    """RK4 solution of ``psi' = (A + u(s) B) psi`` with ``steps`` uniform steps per control piece."""
    A, B, psi0 = _validate(A, B, psi0, t)
    if steps < 1:
        raise InvalidInputError("steps must be >= 1")
    psi = psi0.astype(np.result_type(A, B, psi0, float))
    for a, b, v in u.segments(t):
        G = A + v * B
        h = (b - a) / steps
        for _ in range(steps):
            k1 = G @ psi
            k2 = G @ (psi + (h / 2) * k1)
            k3 = G @ (psi + (h / 2) * k2)
            k4 = G @ (psi + h * k3)
            psi = psi + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(psi)):
            raise NumericalOverflowError(f"oracle state became non-finite at t={b:g}")
    return psi


def _picard_grid(u: PiecewiseConstantControl, t: float, grid: int):
    """Nodes uniform inside each constant piece, plus the control value on each interval."""
    nodes = [0.0]
    uvals = []
    for a, b, v in u.segments(t):
        inner = np.linspace(a, b, grid + 1)[1:]
        nodes.extend(inner.tolist())
        uvals.extend([v] * grid)
    return np.array(nodes), np.array(uvals)


def picard_iterates(A, B, psi0, u: PiecewiseConstantControl, t: float, iterations: int,
                    grid: int = 200) -> list[np.ndarray]:
    """Endpoint values ``psi^k(t)`` for ``k = 0, ..., iterations``.

    ``psi^0(s) = e^{sA} psi0`` and

        psi^{k+1}(s) = e^{sA} psi0 + int_0^s e^{(s-r)A} B psi^k(r) u(r) dr,

    with the integral discretised by the composite trapezoid rule on ``grid``
    uniform intervals per constant piece of ``u``. The running integral obeys
    ``I(s_{m+1}) = e^{h A} I(s_m) + h u_m / 2 (e^{h A} B psi(s_m) + B psi(s_{m+1}))``,
    which is the trapezoid sum regrouped, so each sweep costs one pass over the grid.
    """
    A, B, psi0 = _validate(A, B, psi0, t)
    if iterations < 0:
        raise InvalidInputError("iterations must be >= 0")
    if grid < 1:
        raise InvalidInputError("grid must be >= 1")
    dtype = np.result_type(A, B, psi0, float)
    if t == 0.0:
        return [psi0.astype(dtype)] * (iterations + 1)

    nodes, uvals = _picard_grid(u, t, grid)
    steps = np.diff(nodes)
    cache = {}

    def E(h):
        if h not in cache:
            cache[h] = expm(A, h)
        return cache[h]

    free = np.empty((len(nodes), A.shape[0]), dtype=dtype)
    free[0] = psi0
    for m, h in enumerate(steps):
        free[m + 1] = E(h) @ free[m]

    psi = free.copy()
    ends = [psi[-1].copy()]
    for _ in range(iterations):
        Bpsi = psi @ B.T
        new = np.empty_like(psi)
        new[0] = psi0
        integral = np.zeros(A.shape[0], dtype=dtype)
        for m, h in enumerate(steps):
            Eh = E(h)
            integral = Eh @ integral + (h * uvals[m] / 2) * (Eh @ Bpsi[m] + Bpsi[m + 1])
            new[m + 1] = free[m + 1] + integral
        if not np.all(np.isfinite(new)):
            raise NumericalOverflowError("Picard iterate became non-finite")
        psi = new
        ends.append(psi[-1].copy())
    return ends


def picard_solution(A, B, psi0, u: PiecewiseConstantControl, t: float, iterations: int,
                    grid: int = 200) -> np.ndarray:
    """The ``iterations``-th Picard iterate of the Duhamel equation evaluated at ``t``."""
    if iterations < 1:
        raise InvalidInputError("iterations must be >= 1")
    return picard_iterates(A, B, psi0, u, t, iterations, grid)[-1]
