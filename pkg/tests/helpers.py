"""Shared random-instance generators for the test suite."""

import numpy as np

from dysonreach.controls import PiecewiseConstantControl

ACCEPTANCE_LINES = []


def random_control(rng, n_pieces, T, l1):
    bps = np.sort(rng.uniform(0.0, T, n_pieces - 1))
    bps = np.concatenate([[0.0], bps, [T]])
    raw = rng.uniform(-1.0, 1.0, n_pieces)
    raw *= l1 / np.sum(np.abs(raw) * np.diff(bps))
    return PiecewiseConstantControl(tuple(bps), tuple(raw))


def random_instance(rng, dim=None, complex_field=None):
    """Desk-scale non-commuting system with ||A||, ||B|| of order one."""
    dim = dim or int(rng.integers(2, 9))
    complex_field = bool(rng.integers(2)) if complex_field is None else complex_field

    def mat():
        M = rng.standard_normal((dim, dim))
        if complex_field:
            M = M + 1j * rng.standard_normal((dim, dim))
        return M / np.sqrt(dim)

    A, B = mat(), mat()
    psi0 = rng.standard_normal(dim) + (1j * rng.standard_normal(dim) if complex_field else 0)
    T = float(rng.uniform(0.5, 1.5))
    u = random_control(rng, int(rng.integers(1, 5)), T, float(rng.uniform(0.1, 2.0)))
    t = float(rng.uniform(0.5, 1.2) * T)
    return A, B, psi0, u, t
