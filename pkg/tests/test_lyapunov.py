"""Lyapunov solves, shifted solves, and the congestion cost."""

import numpy as np
import pytest

from greensplit.errors import SolveFailure, UnstableMatrix, ValidationError
from greensplit.lyapunov import (ShiftedLyapunov, congestion_cost, gramian,
                                 solve_lyapunov, spectral_abscissa)

from conftest import make_hurwitz


def kron_solve(a, d):
    """Dense reference solve of A X + X A^T + D = 0 via vectorization."""
    n = a.shape[0]
    lhs = np.kron(np.eye(n), a) + np.kron(a, np.eye(n))
    return np.linalg.solve(lhs, -d.reshape(-1, order="F")).reshape((n, n), order="F")


def test_matches_kron_reference():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(2, 9))
        a = make_hurwitz(rng, n)
        d = rng.standard_normal((n, n))
        d = d + d.T
        x = solve_lyapunov(a, d)
        ref = kron_solve(a, d)
        assert np.linalg.norm(x - ref) <= 1e-8 * (1.0 + np.linalg.norm(ref))


def test_residual_direct():
    rng = np.random.default_rng(3)
    a = make_hurwitz(rng, 7)
    d = np.eye(7)
    x = solve_lyapunov(a, d)
    res = a @ x + x @ a.T + d
    assert np.linalg.norm(res) <= 1e-10 * np.linalg.norm(d)


def test_unstable_matrix_rejected():
    with pytest.raises(UnstableMatrix):
        solve_lyapunov(np.array([[0.5]]), np.eye(1))


def test_shifted_solver_reuses_one_decomposition():
    rng = np.random.default_rng(5)
    a = make_hurwitz(rng, 6)
    d = np.eye(6)
    solver = ShiftedLyapunov(a)
    for shift in (-0.5, 0.0, 0.3, 1.0):
        # shifting right by `shift` keeps a - shift*I Hurwitz for shift >= 0
        if spectral_abscissa(a - shift * np.eye(6)) >= 0:
            continue
        x = solver.solve(d, shift=shift)
        res = (a - shift * np.eye(6)) @ x + x @ (a - shift * np.eye(6)).T + d
        assert np.linalg.norm(res) <= 1e-9 * (1.0 + np.linalg.norm(d))


def test_adjoint_solve():
    rng = np.random.default_rng(6)
    a = make_hurwitz(rng, 5)
    d = rng.standard_normal((5, 5))
    d = d @ d.T
    solver = ShiftedLyapunov(a)
    q = solver.solve(d, shift=0.0, adjoint=True)
    res = a.T @ q + q @ a + d
    assert np.linalg.norm(res) <= 1e-9 * (1.0 + np.linalg.norm(d))


def test_singular_shift_raises_solve_failure():
    a = np.diag([-1.0, -2.0])
    solver = ShiftedLyapunov(a)
    with pytest.raises(SolveFailure):
        solver.solve(np.eye(2), shift=-1.0)  # a - shift*I has a zero eigenvalue


def test_abscissa_property():
    rng = np.random.default_rng(8)
    a = make_hurwitz(rng, 6)
    solver = ShiftedLyapunov(a)
    assert solver.abscissa == pytest.approx(np.linalg.eigvals(a).real.max(), abs=1e-10)
    assert spectral_abscissa(a) == pytest.approx(solver.abscissa, abs=1e-12)


def test_gramian_is_psd():
    rng = np.random.default_rng(9)
    for _ in range(20):
        a = make_hurwitz(rng, 5)
        x0 = rng.standard_normal(5)
        w = gramian(a, x0)
        np.testing.assert_allclose(w, w.T, atol=1e-12)
        assert np.linalg.eigvalsh(w).min() >= -1e-10


def test_cost_scalar_closed_form():
    # a=-1: W = x0^2/2, cost = c^2 x0^2 / 2
    cost = congestion_cost(np.array([[-1.0]]), np.array([[1.0]]), np.array([1.0]))
    assert cost == pytest.approx(0.5, abs=1e-12)


def test_cost_infinite_when_unstable():
    cost = congestion_cost(np.array([[0.1]]), np.eye(1), np.ones(1))
    assert cost == np.inf


def test_cost_zero_state():
    cost = congestion_cost(np.array([[-1.0]]), np.eye(1), np.zeros(1))
    assert cost == 0.0


def test_non_square_rejected():
    with pytest.raises(Exception):
        ShiftedLyapunov(np.ones((2, 3)))


def test_solve_shape_mismatch():
    solver = ShiftedLyapunov(-np.eye(3))
    with pytest.raises(Exception):
        solver.solve(np.eye(2))
