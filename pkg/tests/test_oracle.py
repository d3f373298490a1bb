import math

import numpy as np
import pytest
import scipy.linalg

from dysonreach.controls import PiecewiseConstantControl, constant_control, zero_control
from dysonreach.dyson import DysonConfig, propagate_dyson, w_terms
from dysonreach.errors import InvalidInputError, NumericalOverflowError
from dysonreach.oracle import picard_iterates, picard_solution, propagate_oracle
from helpers import random_instance

ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


def test_oracle_zero_control_is_exponential(rng):
    A = rng.standard_normal((4, 4))
    psi0 = rng.standard_normal(4)
    got = propagate_oracle(A, np.eye(4), psi0, zero_control(), 1.5, steps=400)
    np.testing.assert_allclose(got, scipy.linalg.expm(1.5 * A) @ psi0, rtol=1e-9, atol=1e-10)


def test_oracle_scalar_closed_form():
    got = propagate_oracle([[1.0]], [[2.0]], [1.0], constant_control(1.0, 1.0), 1.0, steps=400)
    assert got[0] == pytest.approx(math.exp(3.0), rel=1e-10)
    assert got[0] == pytest.approx(20.085536923187668, rel=1e-10)


def test_oracle_rotation_matches_dyson():
    u = constant_control(0.5, 2.0)
    psi0 = np.array([1.0, 0.0])
    oracle = propagate_oracle(ROT, np.eye(2), psi0, u, 2.0, steps=400)
    dyson = propagate_dyson(ROT, np.eye(2), psi0, u, 2.0, 1e-10, DysonConfig(grid_points_per_piece=64)).state
    np.testing.assert_allclose(oracle, dyson, atol=1e-7)


def test_oracle_control_switches_generator():
    u = PiecewiseConstantControl((0.0, 0.4, 1.0), (1.5, -0.5))
    A, B = np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0, 0.0], [1.0, 0.0]])
    psi0 = np.array([0.3, 1.0])
    expected = scipy.linalg.expm(0.6 * (A - 0.5 * B)) @ scipy.linalg.expm(0.4 * (A + 1.5 * B)) @ psi0
    got = propagate_oracle(A, B, psi0, u, 1.0, steps=400)
    np.testing.assert_allclose(got, expected, rtol=1e-10)


def test_oracle_is_fourth_order(rng):
    A, B, psi0, u, t = random_instance(rng, dim=4, complex_field=False)
    G = [(a, b, v) for a, b, v in u.segments(t)]
    exact = psi0.copy()
    for a, b, v in G:
        exact = scipy.linalg.expm((b - a) * (A + v * B)) @ exact
    errs = [np.linalg.norm(propagate_oracle(A, B, psi0, u, t, steps=s) - exact) for s in (4, 8, 16, 32, 64)]
    slopes = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((slopes > 3.5) & (slopes < 4.5)), slopes


def test_oracle_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        propagate_oracle(np.eye(2), np.eye(3), [1.0, 0.0], zero_control(), 1.0)
    with pytest.raises(InvalidInputError):
        propagate_oracle(np.eye(2), np.eye(2), [1.0, 0.0], zero_control(), -1.0)
    with pytest.raises(InvalidInputError):
        propagate_oracle(np.eye(2), np.eye(2), [1.0, 0.0], zero_control(), 1.0, steps=0)


def test_oracle_overflow():
    with pytest.raises(NumericalOverflowError):
        propagate_oracle([[1e100]], [[0.0]], [1.0], zero_control(), 1.0, steps=1)


# ---- Picard ------------------------------------------------------------------

def test_picard_zero_control_exact_at_every_iterate(rng):
    A = rng.standard_normal((3, 3))
    psi0 = rng.standard_normal(3)
    exact = scipy.linalg.expm(0.9 * A) @ psi0
    for end in picard_iterates(A, rng.standard_normal((3, 3)), psi0, zero_control(), 0.9, 4, grid=20):
        np.testing.assert_allclose(end, exact, rtol=1e-12)


def test_picard_iterates_match_dyson_partial_sums(rng):
    A, B, psi0, u, t = random_instance(rng, dim=3)
    ends = picard_iterates(A, B, psi0, u, t, 3, grid=400)
    terms = w_terms(A, B, psi0, u, t, 3, DysonConfig(grid_points_per_piece=129))
    for k in range(4):
        partial = sum(terms[: k + 1])
        # Trapezoid quadrature is second order, so 400 cells per piece leave roughly 1e-5.
        np.testing.assert_allclose(ends[k], partial, atol=1e-4 * np.linalg.norm(psi0))


def test_picard_commuting_partial_sums_of_e():
    ends = picard_iterates([[0.0]], [[1.0]], [1.0], constant_control(1.0, 1.0), 1.0, 10, grid=2000)
    partial = np.cumsum([1.0 / math.factorial(k) for k in range(11)])
    np.testing.assert_allclose([e[0] for e in ends], partial, rtol=1e-6)
    assert ends[-1][0] == pytest.approx(math.e, rel=1e-6)


def test_picard_trapezoid_is_second_order():
    u = constant_control(1.0, 1.0)
    exact = math.exp(1.0 + 2.0)
    errs = [abs(picard_solution([[1.0]], [[2.0]], [1.0], u, 1.0, 40, grid=g)[0] - exact) for g in (25, 50, 100)]
    slopes = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(slopes - 2.0) < 0.2), slopes


def test_picard_solution_converges_to_oracle(rng):
    A, B, psi0, u, t = random_instance(rng, dim=5)
    picard = picard_solution(A, B, psi0, u, t, iterations=25, grid=800)
    oracle = propagate_oracle(A, B, psi0, u, t, steps=800)
    np.testing.assert_allclose(picard, oracle, atol=1e-5 * np.linalg.norm(psi0))


def test_picard_time_zero_returns_initial_state():
    ends = picard_iterates(np.eye(2), np.eye(2), [1.0, 2.0], constant_control(1.0, 1.0), 0.0, 2)
    assert len(ends) == 3
    for e in ends:
        np.testing.assert_array_equal(e, [1.0, 2.0])


def test_picard_validation():
    with pytest.raises(InvalidInputError):
        picard_solution(np.eye(2), np.eye(2), [1.0, 0.0], zero_control(), 1.0, iterations=0)
    with pytest.raises(InvalidInputError):
        picard_iterates(np.eye(2), np.eye(2), [1.0, 0.0], zero_control(), 1.0, iterations=-1)
    with pytest.raises(InvalidInputError):
        picard_iterates(np.eye(2), np.eye(2), [1.0, 0.0], zero_control(), 1.0, iterations=1, grid=0)
