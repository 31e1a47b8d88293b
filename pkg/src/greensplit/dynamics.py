"""Switched linear dynamics of a signalized network and their average.

Each global mode holds one signal configuration fixed; the network then
evolves as ``x' = A_k x + B u``.  Within a road, cells pass density
downstream at the rate ``free_flow_speed / h``; a green movement moves
density from the upstream road's stop-line cell into the downstream road's
first cell; destination roads leak from their stop-line cell at
``exit_rate``.  Off-diagonal entries are nonnegative and every column sums
to at most zero (mass only leaves through exits), which is what the
stability results lean on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DimensionError, ValidationError
from .net_model import NetworkSpec, Schedule


@dataclass(frozen=True)
class ModeSet:
    """The ``A_k`` matrices of one schedule, with their window lengths."""

    modes: tuple[np.ndarray, ...]
    durations: np.ndarray
    input_map: np.ndarray
    green_sets: tuple[frozenset[tuple[str, str]], ...]

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def n(self) -> int:
        return self.input_map.shape[0]

    @property
    def cycle_time(self) -> float:
        return float(self.durations.sum())

    @property
    def sparsity(self) -> np.ndarray:
        """Union support of all modes (the support of any average)."""
        mask = np.zeros_like(self.modes[0], dtype=bool)
        for a in self.modes:
            mask |= a != 0.0
        return mask


@dataclass(frozen=True)
class AveragedSystem:
    """Time-invariant surrogate ``x' = A x + B u``, output ``y = C x``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    u: np.ndarray


def _chain_block(cells: int, rate: float) -> np.ndarray:
    """In-road transport: strictly lower bidiagonal flow at ``rate``.

    The last cell has no in-road outflow; it only empties through
    movements or an exit, which enter as separate terms.
    """
    block = np.zeros((cells, cells))
    for k in range(cells - 1):
        block[k, k] = -rate
        block[k + 1, k] = rate
    return block


def assemble_modes(network: NetworkSpec, schedule: Schedule) -> ModeSet:
    """Build one state matrix per mode window of the schedule."""
    n = network.n
    base = np.zeros((n, n))
    for r in network.roads:
        sl = network.state_slice(r.id)
        base[sl, sl] = _chain_block(r.cell_count, r.free_flow_speed / network.h)
        if r.exit_rate > 0:
            stop = network.downstream_index(r.id)
            base[stop, stop] -= r.exit_rate

    modes = []
    green_sets = []
    for k in range(schedule.n_modes):
        green = schedule.green_set(network, k)
        a = base.copy()
        for key in green:
            if key not in network.movement_index:
                raise ValidationError(
                    f"schedule references unknown movement {key!r}"
                )
            _, mv = network.movement_index[key]
            src = network.downstream_index(mv.from_road)
            dst = network.upstream_index(mv.to_road)
            a[dst, src] += mv.rate
            a[src, src] -= mv.rate
        modes.append(a)
        green_sets.append(green)

    input_map = np.zeros((n, network.n_roads))
    for i, r in enumerate(network.roads):
        input_map[network.upstream_index(r.id), i] = 1.0

    return ModeSet(
        modes=tuple(modes),
        durations=schedule.durations,
        input_map=input_map,
        green_sets=tuple(green_sets),
    )


def average_matrix(mode_set: ModeSet, durations: Iterable[float] | None = None) -> np.ndarray:
    """Duration-weighted mean of the mode matrices.

    Normalizing by the sum of the durations makes the result invariant
    under positive rescaling of the whole duration vector.
    """
    d = mode_set.durations if durations is None else np.asarray(list(durations), dtype=float)
    if d.shape != (mode_set.n_modes,):
        raise DimensionError(
            f"expected {mode_set.n_modes} durations, got shape {d.shape}"
        )
    if np.any(d < 0):
        raise ValidationError("mode durations must be nonnegative")
    total = d.sum()
    if total <= 0:
        raise ValidationError("mode durations must have a positive sum")
    avg = np.zeros_like(mode_set.modes[0])
    for weight, a in zip(d, mode_set.modes):
        if weight > 0:
            avg += (weight / total) * a
    return avg


def output_map(network: NetworkSpec) -> np.ndarray:
    """Selector of every road's stop-line cell (one row per road)."""
    C = np.zeros((network.n_roads, network.n))
    for i, r in enumerate(network.roads):
        C[i, network.downstream_index(r.id)] = 1.0
    return C


def average_system(network: NetworkSpec, mode_set: ModeSet,
                   durations: Iterable[float] | None = None) -> AveragedSystem:
    """Averaged surrogate of the switched dynamics over one cycle."""
    return AveragedSystem(
        A=average_matrix(mode_set, durations),
        B=mode_set.input_map.copy(),
        C=output_map(network),
        u=network.average_inflow(),
    )
