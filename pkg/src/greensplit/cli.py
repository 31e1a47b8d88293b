"""Command-line front end and artifact export.

Every numeric artifact starts with ``#``-prefixed header lines carrying the
package version, the seed, and the scenario's config hash.  No timestamps
are written anywhere, so rerunning a command with the same inputs produces
byte-identical files.

Exit codes: 0 success, 2 invalid input, 3 numerical failure,
4 agreement/iteration limit reached.
"""

from __future__ import annotations

import csv
import functools
import json
import os
import sys
from typing import Any

import click
import numpy as np

from . import __version__, dynamics, net_model, scenario, sim
from . import distributed as dist
from .errors import (DimensionError, GreensplitError, NotConverged,
                     ValidationError)
from .optimizer import OptimizationReport, optimize

_THREAD_LIMITER = None


def _apply_thread_cap() -> None:
    """Honor GREENSPLIT_THREADS by capping BLAS thread pools."""
    global _THREAD_LIMITER
    raw = os.environ.get("GREENSPLIT_THREADS")
    if not raw:
        return
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"GREENSPLIT_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise ValidationError("GREENSPLIT_THREADS must be at least 1")
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return
    _THREAD_LIMITER = threadpool_limits(limits=n)


def _exit_code(exc: GreensplitError) -> int:
    if isinstance(exc, NotConverged):
        return 4
    if isinstance(exc, (ValidationError, DimensionError)):
        return 2
    return 3


def _wrap(callback):
    @functools.wraps(callback)
    def inner(*args, **kwargs):
        try:
            return callback(*args, **kwargs)
        except GreensplitError as exc:
            click.echo(f"{type(exc).__name__}: {exc}", err=True)
            sys.exit(_exit_code(exc))
    return inner


def load_state(source: str, network: net_model.NetworkSpec) -> np.ndarray:
    """Initial state from a preset name (zeros, ones) or a text file."""
    if source == "zeros":
        return np.zeros(network.n)
    if source == "ones":
        return np.ones(network.n)
    try:
        values = np.loadtxt(source, comments="#", ndmin=1, dtype=float)
    except OSError as exc:
        raise ValidationError(f"cannot read state file {source!r}: {exc}")
    except ValueError as exc:
        raise ValidationError(f"state file {source!r} is not numeric: {exc}")
    values = values.reshape(-1)
    if values.shape[0] != network.n:
        raise DimensionError(
            f"state file has {values.shape[0]} entries, network has {network.n} cells"
        )
    if np.any(values < 0):
        raise ValidationError("densities must be nonnegative")
    return values


def _header_lines(network: net_model.NetworkSpec, seed: int) -> list[str]:
    return [
        f"greensplit {__version__}",
        f"seed: {seed}",
        f"config: {scenario.config_hash(network)}",
    ]


def _write_csv(path: str, headers: list[str], columns: list[str],
               rows: list[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        for line in headers:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return int(value)
    return value


def export_plotdata(report: Any, path: str, headers: list[str]) -> None:
    """Emit the plottable series behind a report as tidy CSV."""
    if isinstance(report, OptimizationReport):
        rows = [
            (i, row["alpha_smooth"], row["kkt_norm"], row["cost"])
            for i, row in enumerate(report.trajectory)
        ]
        _write_csv(path, headers, ["iter", "alpha_tilde", "kkt_norm", "cost"], rows)
        return
    if isinstance(report, dist.DistributedResult):
        rows = [
            (r, agent, report.errors[r, agent])
            for r in range(report.errors.shape[0])
            for agent in range(report.errors.shape[1])
        ]
        _write_csv(path, headers, ["round", "agent", "frobenius_error"], rows)
        return
    raise ValidationError(f"no plot-data exporter for {type(report).__name__}")


def _trajectory_rows(traj: sim.Trajectory,
                     labels: tuple[str, ...]) -> list[tuple]:
    rows = []
    for j, label in enumerate(labels):
        for i, t in enumerate(traj.times):
            rows.append((label, t, traj.states[i, j]))
    return rows


@click.group()
@click.version_option(__version__, prog_name="greensplit")
def main() -> None:
    """Green-split analysis for signalized road networks."""
    _wrap(_apply_thread_cap)()


@main.command()
@click.argument("scenario_ref")
@click.option("--validate", is_flag=True, help="Only check the file, print one line.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the scenario back in canonical form.")
@_wrap
def build(scenario_ref: str, validate: bool, out: str | None) -> None:
    """Load a scenario, validate it, and summarize the network."""
    network = scenario.load(scenario_ref)
    digest = scenario.config_hash(network)
    if validate:
        click.echo(f"ok {network.name} n={network.n} config={digest}")
    else:
        schedule = net_model.uniform_schedule(network)
        click.echo(f"scenario:      {network.name}")
        click.echo(f"roads:         {network.n_roads} ({network.n} cells)")
        click.echo(f"intersections: {len(network.intersections)}")
        click.echo(f"modes:         {schedule.n_modes}")
        click.echo(f"cycle time:    {network.cycle_time}")
        click.echo(f"config:        {digest}")
    if out is not None:
        with open(out, "w") as fh:
            for line in _header_lines(network, 0):
                fh.write(f"# {line}\n")
            fh.write(scenario.dumps(network))
        click.echo(f"wrote {out}")


@main.command()
@click.argument("scenario_ref")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write nonzero mode-matrix entries as CSV triplets.")
@_wrap
def modes(scenario_ref: str, out: str | None) -> None:
    """List the schedule modes and their green movements."""
    network = scenario.load(scenario_ref)
    schedule = net_model.uniform_schedule(network)
    mode_set = dynamics.assemble_modes(network, schedule)
    for k in range(mode_set.n_modes):
        green = sorted(net_model.movement_label(key)
                       for key in schedule.green_set(network, k))
        shown = ", ".join(green) if green else "(all red)"
        click.echo(f"mode {k}: {mode_set.durations[k]:g}s  {shown}")
    if out is not None:
        rows = []
        for k, a in enumerate(mode_set.modes):
            for i, j in zip(*np.nonzero(a)):
                rows.append((k, int(i), int(j), a[i, j]))
        _write_csv(out, _header_lines(network, 0),
                   ["mode", "row", "col", "value"], rows)
        click.echo(f"wrote {out}")


@main.command()
@click.argument("scenario_ref")
@click.option("--mode", "which", type=click.Choice(["switching", "average"]),
              default="switching", show_default=True)
@click.option("--x0", default="ones", show_default=True,
              help="Initial state: zeros, ones, or a file of densities.")
@click.option("--horizon", type=float, default=None,
              help="Length of the run [s]; default ten cycles.")
@click.option("--dt", type=float, default=1.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the trajectory as tidy CSV (series, t, value).")
@_wrap
def simulate(scenario_ref: str, which: str, x0: str, horizon: float | None,
             dt: float, out: str | None) -> None:
    """Integrate the switched or the averaged dynamics."""
    network = scenario.load(scenario_ref)
    schedule = net_model.uniform_schedule(network)
    state0 = load_state(x0, network)
    if horizon is None:
        horizon = 10.0 * network.cycle_time
    if which == "switching":
        traj = sim.simulate_switching(network, schedule, state0, horizon, dt)
    else:
        traj = sim.simulate_average(network, schedule, state0, horizon, dt)
    final = traj.states[-1]
    click.echo(f"{which} run on {network.name}: {traj.times.shape[0]} samples, "
               f"t_end={traj.times[-1]:g}")
    click.echo(f"final state norm {np.linalg.norm(final):.6g}, "
               f"max cell {final.max():.6g}")
    if out is not None:
        _write_csv(out, _header_lines(network, 0), ["series", "t", "value"],
                   _trajectory_rows(traj, network.state_labels))
        click.echo(f"wrote {out}")


@main.command("compare-averaging")
@click.argument("scenario_ref")
@click.option("--cycles", default="30,60,100,120", show_default=True,
              help="Comma-separated cycle times to sweep.")
@click.option("--x0", default="ones", show_default=True)
@click.option("--horizon", type=float, default=None,
              help="Common horizon [s]; default ten times the largest cycle.")
@click.option("--dt", type=float, default=1.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_wrap
def compare_averaging(scenario_ref: str, cycles: str, x0: str,
                      horizon: float | None, dt: float,
                      out: str | None) -> None:
    """Averaging error against cycle length, on one shared horizon."""
    network = scenario.load(scenario_ref)
    try:
        cycle_list = [float(tok) for tok in cycles.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse cycle list {cycles!r}")
    if not cycle_list or any(c <= 0 for c in cycle_list):
        raise ValidationError("cycle times must be positive")
    state0 = load_state(x0, network)
    if horizon is None:
        horizon = 10.0 * max(cycle_list)
    rows = []
    for cycle in cycle_list:
        schedule = net_model.uniform_schedule(network, cycle_time=cycle)
        report = sim.averaging_error(network, schedule, state0, horizon, dt)
        rows.append((cycle, report.error_percent))
        click.echo(f"T={cycle:g}: error {report.error_percent:.4f}%")
    if out is not None:
        _write_csv(out, _header_lines(network, 0),
                   ["cycle_time", "error_percent"], rows)
        click.echo(f"wrote {out}")


@main.command("optimize")
@click.argument("scenario_ref")
@click.option("--x0", default="ones", show_default=True)
@click.option("--mu", type=float, default=0.5, show_default=True,
              help="Step damping in (0, 1).")
@click.option("--xi", type=float, default=0.05, show_default=True,
              help="Weight increment relative to the starting weight.")
@click.option("--starts", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the full report as JSON.")
@click.option("--plot-out", type=click.Path(dir_okay=False), default=None,
              help="Write the iteration trace as tidy CSV.")
@_wrap
def optimize_cmd(scenario_ref: str, x0: str, mu: float, xi: float,
                 starts: int, seed: int, out: str | None,
                 plot_out: str | None) -> None:
    """Optimize the green splits of a scenario's schedule."""
    network = scenario.load(scenario_ref)
    schedule = net_model.uniform_schedule(network)
    mode_set = dynamics.assemble_modes(network, schedule)
    output = dynamics.output_map(network)
    state0 = load_state(x0, network)
    report = optimize(mode_set, output, state0, mu=mu, xi=xi,
                      starts=starts, seed=seed)
    click.echo(f"baseline cost {report.baseline_cost:.6g}")
    if report.baseline_cost > 0 and np.isfinite(report.baseline_cost):
        gain = 100.0 * (1.0 - report.cost / report.baseline_cost)
        click.echo(f"optimized cost {report.cost:.6g} ({gain:.2f}% lower)")
    else:
        click.echo(f"optimized cost {report.cost:.6g}")
    click.echo("durations: " + " ".join(f"{d:.4f}" for d in report.durations))
    if out is not None:
        payload = {
            "version": __version__,
            "seed": seed,
            "config": scenario.config_hash(network),
            "report": report.to_dict(),
        }
        with open(out, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        click.echo(f"wrote {out}")
    if plot_out is not None:
        export_plotdata(report, plot_out, _header_lines(network, seed))
        click.echo(f"wrote {plot_out}")


def _parse_layout(layout: str, n: int) -> dist.CommGraph:
    """Agent layouts: 'RxC' grid, 'path:K', 'complete:K'."""
    token = layout.strip().lower()
    try:
        if "x" in token and ":" not in token:
            r, c = token.split("x")
            return dist.CommGraph.grid(int(r), int(c))
        kind, _, count = token.partition(":")
        k = int(count)
        if kind == "path":
            return dist.CommGraph.path(k)
        if kind == "complete":
            return dist.CommGraph.complete(k)
    except ValueError:
        pass
    raise ValidationError(
        f"cannot parse agent layout {layout!r}; use RxC, path:K, or complete:K"
    )


@main.command("distributed")
@click.argument("scenario_ref")
@click.option("--agents", default="2x2", show_default=True,
              help="Topology: RxC grid, path:K, or complete:K.")
@click.option("--rounds", type=int, default=None,
              help="Round budget; default twice the graph diameter plus two.")
@click.option("--x0", default="ones", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the per-round per-agent error trace as CSV.")
@_wrap
def distributed_cmd(scenario_ref: str, agents: str, rounds: int | None,
                    x0: str, out: str | None) -> None:
    """Solve the scenario's averaged Lyapunov equation cooperatively."""
    network = scenario.load(scenario_ref)
    schedule = net_model.uniform_schedule(network)
    mode_set = dynamics.assemble_modes(network, schedule)
    a = dynamics.average_matrix(mode_set)
    state0 = load_state(x0, network)
    graph = _parse_layout(agents, network.n)
    result = dist.run_distributed(a, np.outer(state0, state0), graph,
                                  max_rounds=rounds)
    click.echo(f"{graph.n_agents} agents agreed after {result.rounds} rounds "
               f"(max error {result.errors[-1].max():.3e})")
    if out is not None:
        export_plotdata(result, out, _header_lines(network, 0))
        click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
