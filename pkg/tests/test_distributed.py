"""Cooperative Lyapunov solving over communication topologies."""

import numpy as np
import pytest

from greensplit import distributed as dist
from greensplit.errors import (DimensionError, NotConverged, UnstableMatrix,
                               ValidationError)
from greensplit.lyapunov import solve_lyapunov

from conftest import make_hurwitz


@pytest.fixture(scope="module")
def problem():
    rng = np.random.default_rng(17)
    a = make_hurwitz(rng, 4)
    x0 = rng.standard_normal(4)
    return a, np.outer(x0, x0)


# topology -------------------------------------------------------------------

def test_graph_constructors():
    path = dist.CommGraph.path(4)
    assert path.diameter == 3
    assert path.neighbors(1) == (0, 2)
    grid = dist.CommGraph.grid(3, 3)
    assert grid.diameter == 4
    assert grid.n_agents == 9
    full = dist.CommGraph.complete(5)
    assert full.diameter == 1
    lone = dist.CommGraph.complete(1)
    assert lone.diameter == 0


def test_graph_validation():
    with pytest.raises(ValidationError):
        dist.CommGraph(0, ())
    with pytest.raises(ValidationError):
        dist.CommGraph(2, ((0, 0),))
    with pytest.raises(ValidationError):
        dist.CommGraph(2, ((0, 5),))


def test_disconnected_graph_reports_no_diameter():
    g = dist.CommGraph.from_edges(3, [(0, 1)])
    assert g.diameter is None
    assert not g.is_connected


# partitioning ---------------------------------------------------------------

def test_partition_rows_sum():
    a = np.diag([-1.0, -2.0])
    shares = dist.partition_rows(a, np.array([0, 1]), 2)
    np.testing.assert_array_equal(shares[0], np.diag([-1.0, 0.0]))
    np.testing.assert_array_equal(shares[1], np.diag([0.0, -2.0]))
    np.testing.assert_array_equal(sum(shares), a)


def test_partition_validation():
    a = -np.eye(3)
    with pytest.raises(DimensionError):
        dist.partition_rows(np.ones((2, 3)), np.zeros(2, dtype=int), 1)
    with pytest.raises(DimensionError):
        dist.partition_rows(a, np.zeros(2, dtype=int), 1)
    with pytest.raises(ValidationError):
        dist.partition_rows(a, np.array([0, 1, 3]), 2)


def test_default_assignment_balanced():
    owners = dist.default_assignment(7, 3)
    counts = np.bincount(owners, minlength=3)
    assert counts.tolist() == [3, 2, 2]
    assert (np.diff(owners) >= 0).all()  # contiguous blocks


# solving --------------------------------------------------------------------

def test_single_agent_recovers_centralized(problem):
    a, d = problem
    res = dist.run_distributed(a, d, dist.CommGraph.complete(1))
    assert res.rounds == 0
    np.testing.assert_allclose(res.solutions[0], solve_lyapunov(a, d),
                               atol=1e-10)
    assert res.kernel_dims[-1].max() == 0


def test_two_agents_one_round(problem):
    a, d = problem
    res = dist.run_distributed(a, d, dist.CommGraph.path(2))
    assert res.rounds == 1
    for sol in res.solutions:
        np.testing.assert_allclose(sol, res.reference, atol=1e-9)


def test_path_three_converges_in_diameter(problem):
    a, d = problem
    res = dist.run_distributed(a, d, dist.CommGraph.path(3))
    assert res.rounds <= 2
    # the middle agent hears everyone after one round
    assert res.errors[1, 1] <= 1e-9
    assert res.kernel_dims[-1].tolist() == [0, 0, 0]


def test_kernel_dims_never_grow(problem):
    a, d = problem
    res = dist.run_distributed(a, d, dist.CommGraph.grid(2, 2))
    assert (np.diff(res.kernel_dims.astype(int), axis=0) <= 0).all()


def test_errors_nonincreasing(problem):
    a, d = problem
    res = dist.run_distributed(a, d, dist.CommGraph.grid(2, 2))
    diffs = np.diff(res.errors, axis=0)
    assert (diffs <= 1e-9 * (1.0 + res.errors[:-1])).all()


def test_shares_sum_to_rhs(problem):
    a, d = problem
    res = dist.run_distributed(a, d, dist.CommGraph.path(3))
    np.testing.assert_allclose(sum(res.shares), d, atol=1e-10)


def test_share_consistency_with_solution(problem):
    # each recovered share equals what its owner's rows imply
    a, d = problem
    assignment = dist.default_assignment(4, 2)
    res = dist.run_distributed(a, d, dist.CommGraph.path(2), assignment)
    shares = dist.partition_rows(a, assignment, 2)
    for lam, dhat in zip(shares, res.shares):
        np.testing.assert_allclose(
            dhat, -(lam @ res.reference + res.reference @ lam.T), atol=1e-8)


def test_solutions_symmetric(problem):
    a, d = problem
    res = dist.run_distributed(a, d, dist.CommGraph.grid(2, 2))
    assert max(res.symmetry_gaps) < 1e-10


def test_custom_assignment(problem):
    a, d = problem
    assignment = np.array([1, 0, 1, 0])
    res = dist.run_distributed(a, d, dist.CommGraph.path(2), assignment)
    assert res.converged


def test_disconnected_raises(problem):
    a, d = problem
    graph = dist.CommGraph.from_edges(3, [(0, 1)])
    with pytest.raises(NotConverged):
        dist.run_distributed(a, d, graph, max_rounds=5)


def test_round_budget_enforced(problem):
    a, d = problem
    with pytest.raises(NotConverged):
        dist.run_distributed(a, d, dist.CommGraph.path(3), max_rounds=1)


def test_unstable_matrix_rejected():
    with pytest.raises(UnstableMatrix):
        dist.run_distributed(np.eye(2), np.eye(2), dist.CommGraph.path(2))


def test_shape_mismatch_rejected():
    with pytest.raises(DimensionError):
        dist.run_distributed(-np.eye(3), np.eye(2), dist.CommGraph.path(2))


def test_agent_local_residual_is_tiny(problem):
    a, d = problem
    shares = dist.partition_rows(a, dist.default_assignment(4, 2), 2)
    agent = dist.Agent(0, shares[0], d, 2)
    assert agent.local_residual() < 1e-10
    assert agent.kernel_dim > 0


def test_interior_agents_finish_first(problem):
    a, d = problem
    res = dist.run_distributed(a, d, dist.CommGraph.grid(3, 3))
    assert res.rounds <= 4
    center, corner = 4, 0
    center_done = int(np.argmax(res.errors[:, center] <= 1e-9))
    corner_done = int(np.argmax(res.errors[:, corner] <= 1e-9))
    assert center_done <= corner_done
