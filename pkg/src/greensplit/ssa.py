"""Smoothed stability margin of the averaged system and its sensitivity.

The spectral abscissa itself is a nonsmooth function of the mode durations.
Instead of descending on it directly, the optimizer works with the smoothed
abscissa: for a smoothing weight ``epsilon > 0``, the value ``alpha_s`` is
the unique root of

    g(s) = trace(C P(s) C^T) = 1 / epsilon,

where ``P(s)`` solves ``(A - s I) P + P (A - s I)^T + x0 x0^T = 0``.  The
map ``g`` is strictly decreasing from ``+inf`` (as ``s`` approaches the
true abscissa from above, whenever the critical mode couples ``x0`` to the
output) to ``0``, so a bracketed bisection is globally convergent.  The
root always lies strictly above the true abscissa and tends to it as
``epsilon`` goes to zero.

The sensitivity of the root with respect to the mode durations follows
from the adjoint pair: with ``Q`` solving the transposed equation driven
by ``C^T C``, the derivative with respect to the entries of ``A`` is
``Q P / trace(Q P)``, and the chain rule through the duration-weighted
average contributes one vectorized mode matrix per duration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ModeSet
from .errors import (DegenerateSystem, DimensionError, NoConvergence,
                     SolveFailure, ValidationError, ZeroTrace)
from .lyapunov import ShiftedLyapunov

#: relative width at which the bisection bracket is considered resolved
ROOT_TOL = 1e-10

_MAX_DOUBLINGS = 90
_MAX_BISECTIONS = 400


@dataclass(frozen=True)
class SmoothedAbscissa:
    """Root of the smoothing equation together with its certificates."""

    value: float          # the smoothed abscissa
    abscissa: float       # true spectral abscissa of the matrix
    epsilon: float
    P: np.ndarray         # shifted Gramian at the root
    Q: np.ndarray         # adjoint solution at the root
    trace_value: float    # g(value); equals 1/epsilon up to the root tolerance
    evaluations: int


def _validate_triple(a: np.ndarray, output: np.ndarray, x0: np.ndarray):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"state matrix must be square, got {a.shape}")
    n = a.shape[0]
    output = np.asarray(output, dtype=float)
    if output.ndim == 1:
        output = output.reshape(1, -1)
    if output.ndim != 2 or output.shape[1] != n:
        raise DimensionError(f"output map {output.shape} does not act on {n} states")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != n:
        raise DimensionError(f"initial state has length {x0.shape[0]}, expected {n}")
    return a, output, x0


def smoothing_trace(solver: ShiftedLyapunov, output: np.ndarray,
                    source: np.ndarray, shift: float) -> float:
    """Evaluate ``g(shift)``; ``+inf`` when the solve degenerates at the pole."""
    try:
        p = solver.solve(source, shift=shift)
    except SolveFailure:
        # so close to the pole that the solve breaks down: the trace is
        # beyond floating-point range there anyway
        return math.inf
    return float(np.trace(output @ p @ output.T))


def smoothed_abscissa(a: np.ndarray, output: np.ndarray, x0: np.ndarray,
                      epsilon: float, tol: float = ROOT_TOL) -> SmoothedAbscissa:
    """Solve the smoothing equation for the given weight.

    Parameters
    ----------
    a : (n, n) array
        State matrix of the averaged system.  Stability is not required;
        the root is sought above the spectral abscissa wherever it lies.
    output : (p, n) array
        Output map whose squared trajectory norm defines the cost.
    x0 : (n,) array
        Initial state exciting the system.
    epsilon : float
        Smoothing weight; larger values push the root further above the
        true abscissa.
    tol : float
        Relative bracket width at which bisection stops.
    """
    a, output, x0 = _validate_triple(a, output, x0)
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise ValidationError(f"epsilon must be positive, got {epsilon!r}")
    if not (math.isfinite(tol) and tol > 0):
        raise ValidationError(f"tol must be positive, got {tol!r}")

    solver = ShiftedLyapunov(a)
    alpha = solver.abscissa
    source = np.outer(x0, x0)
    target = 1.0 / epsilon
    scale = 1.0 + abs(alpha)
    evaluations = 0

    delta = 1e-6 * scale
    lo = alpha + delta
    g_lo = smoothing_trace(solver, output, source, lo)
    evaluations += 1
    if g_lo <= 0.0:
        raise DegenerateSystem(
            "the smoothing trace vanishes: the initial state never reaches the output"
        )
    # root may sit between the abscissa and the default ledge; tighten it
    while g_lo < target and delta > 0.25 * tol * scale:
        delta *= 0.25
        lo = alpha + delta
        g_lo = smoothing_trace(solver, output, source, lo)
        evaluations += 1
        if g_lo <= 0.0:
            raise DegenerateSystem(
                "the smoothing trace vanishes: the initial state never reaches the output"
            )
    if g_lo < target:
        # the root is pinched against the abscissa closer than the tolerance
        root = lo
        hi = lo
    else:
        step = max(1.0, abs(alpha))
        hi = lo + step
        g_hi = smoothing_trace(solver, output, source, hi)
        evaluations += 1
        doublings = 0
        while g_hi >= target:
            step *= 2.0
            hi += step
            g_hi = smoothing_trace(solver, output, source, hi)
            evaluations += 1
            doublings += 1
            if doublings > _MAX_DOUBLINGS:
                raise NoConvergence(
                    "no upper bracket for the smoothing root; the trace never "
                    f"drops below 1/epsilon = {target:.3e}"
                )
        iterations = 0
        while hi - lo > tol * (1.0 + 0.5 * abs(hi + lo)):
            mid = 0.5 * (lo + hi)
            if smoothing_trace(solver, output, source, mid) >= target:
                lo = mid
            else:
                hi = mid
            evaluations += 1
            iterations += 1
            if iterations > _MAX_BISECTIONS:
                raise NoConvergence("bisection failed to resolve the smoothing root")
        root = 0.5 * (lo + hi)

    p = solver.solve(source, shift=root)
    q = solver.solve(output.T @ output, shift=root, adjoint=True)
    return SmoothedAbscissa(
        value=root,
        abscissa=alpha,
        epsilon=epsilon,
        P=p,
        Q=q,
        trace_value=float(np.trace(output @ p @ output.T)),
        evaluations=evaluations,
    )


def duration_gradient(mode_set: ModeSet, result: SmoothedAbscissa,
                      durations: np.ndarray | None = None) -> np.ndarray:
    """Derivative of the smoothed abscissa with respect to mode durations.

    The averaged matrix is the duration-weighted mean of the modes with the
    cycle time held fixed at the schedule's value, so each component is the
    elementwise product of one mode matrix with the normalized sensitivity
    ``Q P / trace(Q P)``, divided by the cycle time.
    """
    d = mode_set.durations if durations is None else np.asarray(durations, dtype=float)
    total = float(d.sum())
    if total <= 0:
        raise ValidationError("mode durations must have a positive sum")
    qp = result.Q @ result.P
    tr = float(np.trace(qp))
    norm_scale = float(np.linalg.norm(result.P) * np.linalg.norm(result.Q))
    if tr <= 1e-300 or tr <= 1e-14 * norm_scale:
        raise ZeroTrace(
            "trace(Q P) vanished; the smoothing sensitivity is undefined here"
        )
    sens = qp / tr
    grad = np.empty(mode_set.n_modes)
    for i, mode in enumerate(mode_set.modes):
        grad[i] = np.vdot(sens, mode) / total
    return grad
