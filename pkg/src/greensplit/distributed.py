"""Distributed solution of the network Lyapunov equation.

The stable matrix is split row-wise over agents, ``L = L_1 + ... + L_nu``.
Writing the equation ``L X + X L^T + D = 0`` per share introduces one
unknown share ``D_i = -(L_i X + X L_i^T)`` per agent, tied together by
``sum(D_i) = D``.  Stacking the vectorized unknowns
``w = [X^v, D_1^v, ..., D_nu^v]`` gives each agent a local underdetermined
system ``H_i w = z_i`` whose solution set contains the global solution.

Agents keep an affine description of their solution set: a particular
solution ``w_hat_i`` (minimum norm) and an orthonormal kernel basis
``K_i``.  A pairwise exchange moves ``w_hat_i`` into the intersection of
the two affine sets and intersects the kernels, so after as many
synchronous rounds as the communication graph's diameter every kernel has
collapsed and all agents hold the unique global solution exactly.  Agents
exchange only ``(w_hat, K)``; the centralized solution appears below purely
as instrumentation for error traces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy import linalg

from .errors import (DimensionError, InconsistentLocal, NotConverged,
                     UnstableMatrix, ValidationError)
from .lyapunov import solve_lyapunov, spectral_abscissa

#: relative singular-value cutoff for rank decisions
RANK_TOL = 1e-10


@dataclass(frozen=True)
class CommGraph:
    """Undirected communication topology over agents ``0 .. n_agents - 1``."""

    n_agents: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if self.n_agents < 1:
            raise ValidationError("a communication graph needs at least one agent")
        for i, j in self.edges:
            if not (0 <= i < self.n_agents and 0 <= j < self.n_agents) or i == j:
                raise ValidationError(f"edge ({i}, {j}) is not between distinct agents")

    @classmethod
    def from_edges(cls, n_agents: int, edges) -> "CommGraph":
        canon = sorted({(min(i, j), max(i, j)) for i, j in edges})
        return cls(n_agents, tuple(canon))

    @classmethod
    def path(cls, n_agents: int) -> "CommGraph":
        return cls.from_edges(n_agents, [(k, k + 1) for k in range(n_agents - 1)])

    @classmethod
    def complete(cls, n_agents: int) -> "CommGraph":
        return cls.from_edges(
            n_agents,
            [(i, j) for i in range(n_agents) for j in range(i + 1, n_agents)],
        )

    @classmethod
    def grid(cls, rows: int, cols: int) -> "CommGraph":
        edges = []
        for i in range(rows):
            for j in range(cols):
                k = i * cols + j
                if j + 1 < cols:
                    edges.append((k, k + 1))
                if i + 1 < rows:
                    edges.append((k, k + cols))
        return cls.from_edges(rows * cols, edges)

    def _nx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_agents))
        g.add_edges_from(self.edges)
        return g

    def neighbors(self, agent: int) -> tuple[int, ...]:
        touching = {j for i, j in self.edges if i == agent}
        touching.update(i for i, j in self.edges if j == agent)
        return tuple(sorted(touching))

    @property
    def is_connected(self) -> bool:
        return nx.is_connected(self._nx())

    @property
    def diameter(self) -> int | None:
        g = self._nx()
        if not nx.is_connected(g):
            return None
        return int(nx.diameter(g)) if self.n_agents > 1 else 0


def partition_rows(a: np.ndarray, assignment: np.ndarray, n_agents: int) -> list[np.ndarray]:
    """Split a matrix into per-agent row shares that sum back to it."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"matrix must be square, got {a.shape}")
    assignment = np.asarray(assignment, dtype=int).reshape(-1)
    if assignment.shape[0] != a.shape[0]:
        raise DimensionError("one owning agent is required per matrix row")
    if assignment.min(initial=0) < 0 or assignment.max(initial=0) >= n_agents:
        raise ValidationError(f"row owners must lie in 0..{n_agents - 1}")
    shares = []
    for i in range(n_agents):
        share = np.zeros_like(a)
        rows = assignment == i
        share[rows, :] = a[rows, :]
        shares.append(share)
    return shares


def default_assignment(n: int, n_agents: int) -> np.ndarray:
    """Contiguous balanced row blocks."""
    owners = np.empty(n, dtype=int)
    for i, block in enumerate(np.array_split(np.arange(n), n_agents)):
        owners[block] = i
    return owners


class Agent:
    """One participant: an affine solution set and its pairwise refinement."""

    def __init__(self, agent_id: int, share: np.ndarray, rhs: np.ndarray,
                 n_agents: int, rank_tol: float = RANK_TOL):
        self.id = agent_id
        n = share.shape[0]
        self.n = n
        self.n_agents = n_agents
        self.rank_tol = rank_tol
        nn = n * n
        width = (n_agents + 1) * nn

        lam_bar = np.kron(np.eye(n), share) + np.kron(share, np.eye(n))
        h = np.zeros((2 * nn, width))
        h[:nn, :nn] = lam_bar
        h[:nn, (1 + agent_id) * nn:(2 + agent_id) * nn] = np.eye(nn)
        for j in range(n_agents):
            h[nn:, (1 + j) * nn:(2 + j) * nn] = np.eye(nn)
        z = np.zeros(2 * nn)
        z[nn:] = rhs.reshape(-1, order="F")

        self.w_hat = np.linalg.lstsq(h, z, rcond=None)[0]
        gap = np.linalg.norm(h @ self.w_hat - z)
        if gap > 1e-8 * (1.0 + np.linalg.norm(z)):
            raise InconsistentLocal(
                f"agent {agent_id}: local system residual {gap:.3e}"
            )
        self.kernel = linalg.null_space(h, rcond=rank_tol)
        self._h = h
        self._z = z

    @property
    def kernel_dim(self) -> int:
        return self.kernel.shape[1]

    def local_residual(self) -> float:
        return float(np.linalg.norm(self._h @ self.w_hat - self._z))

    def fold(self, other_w: np.ndarray, other_kernel: np.ndarray) -> None:
        """Refine against one neighbor's (w_hat, K) message."""
        k_i, k_j = self.kernel, other_kernel
        delta = other_w - self.w_hat
        if k_i.shape[1] > 0:
            stacked = np.hstack([k_i, k_j]) if k_j.shape[1] else k_i
            coeff = np.linalg.lstsq(stacked, delta, rcond=None)[0]
            self.w_hat = self.w_hat + k_i @ coeff[: k_i.shape[1]]
        if k_i.shape[1] == 0 or k_j.shape[1] == 0:
            self.kernel = np.zeros((self.w_hat.shape[0], 0))
            return
        joint = linalg.null_space(np.hstack([k_i, -k_j]), rcond=self.rank_tol)
        if joint.shape[1] == 0:
            self.kernel = np.zeros((self.w_hat.shape[0], 0))
            return
        self.kernel = linalg.orth(k_i @ joint[: k_i.shape[1]], rcond=self.rank_tol)

    def solution(self) -> np.ndarray:
        """Current estimate of the Lyapunov solution block."""
        nn = self.n * self.n
        return self.w_hat[:nn].reshape((self.n, self.n), order="F")

    def own_share(self) -> np.ndarray:
        """Current estimate of this agent's right-hand-side share."""
        nn = self.n * self.n
        lo = (1 + self.id) * nn
        return self.w_hat[lo:lo + nn].reshape((self.n, self.n), order="F")


def synchronous_round(agents: list[Agent], graph: CommGraph) -> None:
    """One message round: everyone folds every neighbor's broadcast.

    All messages carry start-of-round values, so the outcome does not
    depend on the order in which agents physically execute.
    """
    snapshot = [(agent.w_hat.copy(), agent.kernel.copy()) for agent in agents]
    for agent in agents:
        for j in graph.neighbors(agent.id):
            agent.fold(*snapshot[j])


@dataclass
class DistributedResult:
    solutions: list[np.ndarray]
    shares: list[np.ndarray]
    rounds: int
    converged: bool
    errors: np.ndarray          # (rounds + 1, n_agents) relative error trace
    kernel_dims: np.ndarray     # (rounds + 1, n_agents)
    reference: np.ndarray       # centralized solution used for the trace
    symmetry_gaps: list[float] = field(default_factory=list)


def run_distributed(a: np.ndarray, d: np.ndarray, graph: CommGraph,
                    assignment: np.ndarray | None = None, *,
                    tol: float = 1e-6, max_rounds: int | None = None,
                    rank_tol: float = RANK_TOL) -> DistributedResult:
    """Solve ``A X + X A^T + D = 0`` cooperatively over a topology.

    Convergence means every agent's solution block is within ``tol``
    (relative Frobenius) of the centralized solution; with a connected
    graph this happens after at most ``diameter`` rounds.  A disconnected
    graph cannot agree and ends in :class:`NotConverged`.
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    if a.shape != d.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(
            f"matrix {a.shape} and right-hand side {d.shape} must be equal square shapes"
        )
    if spectral_abscissa(a) >= 0:
        raise UnstableMatrix("the distributed solve requires a Hurwitz matrix")
    n = a.shape[0]
    nu = graph.n_agents
    if assignment is None:
        assignment = default_assignment(n, nu)
    shares = partition_rows(a, assignment, nu)

    reference = solve_lyapunov(a, d)
    ref_norm = np.linalg.norm(reference)

    agents = [Agent(i, shares[i], d, nu, rank_tol) for i in range(nu)]

    def snapshot_errors() -> np.ndarray:
        return np.array([
            np.linalg.norm(agent.solution() - reference) / max(ref_norm, 1e-300)
            for agent in agents
        ])

    if max_rounds is None:
        diam = graph.diameter
        max_rounds = 2 * (diam if diam is not None else nu) + 2

    errors = [snapshot_errors()]
    kernel_dims = [np.array([agent.kernel_dim for agent in agents])]
    rounds = 0
    converged = bool(np.all(errors[-1] <= tol))
    while not converged and rounds < max_rounds:
        synchronous_round(agents, graph)
        rounds += 1
        errors.append(snapshot_errors())
        kernel_dims.append(np.array([agent.kernel_dim for agent in agents]))
        converged = bool(np.all(errors[-1] <= tol))

    result = DistributedResult(
        solutions=[agent.solution() for agent in agents],
        shares=[agent.own_share() for agent in agents],
        rounds=rounds,
        converged=converged,
        errors=np.vstack(errors),
        kernel_dims=np.vstack(kernel_dims),
        reference=reference,
        symmetry_gaps=[
            float(np.linalg.norm(agent.solution() - agent.solution().T)
                  / max(np.linalg.norm(agent.solution()), 1e-300))
            for agent in agents
        ],
    )
    if not converged:
        worst = ", ".join(
            f"agent {i}: {e:.2e}" for i, e in enumerate(result.errors[-1])
        )
        raise NotConverged(
            f"agents disagree after {rounds} rounds ({worst})"
        )
    return result
