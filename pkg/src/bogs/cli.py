"""CLI entry point for bogs."""

import sys
import json
import time
import logging
import argparse
import dataclasses
from typing import Any
from pathlib import Path
from datetime import datetime
from dataclasses import field, dataclass
from collections.abc import Callable, Sequence

import bogs
from bogs.gauge import gauge_residual
from bogs.config import RunConfig, load_config
from bogs.errors import BogsError, ScaleError, ConfigError, BlowUpError
from bogs.probes import lp_probe, strichartz_probe_suite
from bogs.spectral import Field, check_scale
from bogs.analysis import (
    MixedNormSpec,
    x_norm,
    y_norm,
    mixed_norm,
    scaling_check,
    resolvable_scales,
    spacetime_l2_ensemble,
)
from bogs.profiles import random_ensemble
from bogs.artifacts import DEFAULT_OUT_DIR, RunDirectory
from bogs.evolution import Trajectory, run
from bogs.equations import EquationKind

logger = logging.getLogger(__name__)

# Exit codes
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG_ERROR = 2
EXIT_BLOWUP = 3
EXIT_SCALE_ERROR = 4

MIXED_NORMS = {
    'L2_xT': MixedNormSpec('x', 2, 2),
    'Lx2_LTinf': MixedNormSpec('x', 2, float('inf')),
    'Lxinf_LT2': MixedNormSpec('x', float('inf'), 2),
    'Lx4_LTinf': MixedNormSpec('x', 4, float('inf')),
    'LTinf_Lx2': MixedNormSpec('t', float('inf'), 2),
}


@dataclass
class Table:
    """A named CSV table."""

    name: str
    header: tuple[str, ...]
    rows: list[list[Any]]


@dataclass
class CommandOutput:
    """Everything a command produces; written to disk only after it completes."""

    tables: list[Table] = field(default_factory=list[Table])
    snapshots: list[tuple[int, Field, float]] = field(default_factory=list[tuple[int, Field, float]])
    summary: dict[str, Any] = field(default_factory=dict[str, Any])


@dataclass(frozen=True)
class CommandResult:
    """Exit status of a command and where its artifacts went."""

    status: int
    run_dir: Path | None = None
    summary: dict[str, Any] = field(default_factory=dict[str, Any])
    error: str | None = None


def _simulate_trajectory(cfg: RunConfig) -> Trajectory:
    return run(cfg.initial_field(), cfg.equation, cfg.solver)


def _conservation_table(traj: Trajectory) -> Table:
    assert traj.conservation is not None
    return Table(
        'conservation.csv',
        ('time', 'mean_mass', 'l2_mass', 'hamiltonian', 'bo_energy'),
        traj.conservation.rows(),
    )


def _run_summary(traj: Trajectory) -> dict[str, Any]:
    summary: dict[str, Any] = {
        'snapshots': len(traj),
        'final_time': float(traj.times[-1]),
        'diagnostics': traj.diagnostics.codes(),
    }
    if traj.conservation is not None:
        summary['drift'] = traj.conservation.drifts
    if traj.imag_residue:
        summary['imag_residue'] = traj.imag_residue
    return summary


def _simulate(cfg: RunConfig) -> CommandOutput:
    traj = _simulate_trajectory(cfg)
    kind = cfg.equation.kind
    snapshots = [(i, traj.snapshot(i), float(t)) for i, t in enumerate(traj.times)]
    out = CommandOutput([_conservation_table(traj)], snapshots, _run_summary(traj))
    out.summary['equation'] = kind.value
    return out


def _conserve(cfg: RunConfig) -> CommandOutput:
    traj = _simulate_trajectory(cfg)
    assert traj.conservation is not None
    drifts = traj.conservation.drifts
    tables = [
        _conservation_table(traj),
        Table('drift.csv', ('quantity', 'drift'), [[name, value] for name, value in drifts.items()]),
    ]
    return CommandOutput(tables, summary=_run_summary(traj))


def _gauge_verify(cfg: RunConfig) -> CommandOutput:
    if cfg.equation.kind is not EquationKind.MBO:
        raise ConfigError(f'gauge-verify needs equation.kind = mBO, got {cfg.equation.kind.value}')
    scales = resolvable_scales(cfg.grid, cfg.analysis.dyadic)
    for N in scales:
        check_scale(cfg.grid, N)
    traj = run(cfg.initial_field(), cfg.equation, cfg.solver, track_conservation=False)
    settings = cfg.analysis.gauge_settings(cfg.solver.dealias_fraction)
    out = CommandOutput()
    maxima: dict[str, float] = {}
    mismatches: dict[str, float] = {}
    for N in scales:
        series = gauge_residual(traj, N, settings)
        columns = (series.times, series.residual, series.relative, series.phase_mismatch)
        rows = [[float(value) for value in row] for row in zip(*columns, strict=True)]
        out.tables.append(
            Table(
                f'gauge_residual_N{N}.csv',
                ('time', 'residual', 'relative_residual', 'phase_mismatch'),
                rows,
            )
        )
        maxima[str(N)] = series.max
        mismatches[str(N)] = series.max_phase_mismatch
        logger.info('N=%d: max gauge residual %.6g', N, series.max)
    out.summary = _run_summary(traj) | {'max_residual': maxima, 'max_phase_mismatch': mismatches}
    return out


def _norms(cfg: RunConfig) -> CommandOutput:
    traj = run(cfg.initial_field(), cfg.equation, cfg.solver, track_conservation=False)
    cutoff = cfg.analysis.cutoff()
    reports = [x_norm(traj, cfg.analysis.s, cutoff), y_norm(traj)]
    rows: list[list[Any]] = []
    for report in reports:
        rows.extend(report.rows())
    mixed = {name: mixed_norm(traj, spec) for name, spec in MIXED_NORMS.items()}
    rows.extend(['mixed', name, value] for name, value in mixed.items())
    summary = _run_summary(traj) | {r.name: r.total for r in reports} | {'mixed': mixed}
    return CommandOutput([Table('norms.csv', ('norm', 'block', 'value'), rows)], summary=summary)


def _probe(cfg: RunConfig) -> CommandOutput:
    reports = strichartz_probe_suite(cfg.analysis.probe_settings(cfg.grid))
    out = CommandOutput()
    summary_rows: list[list[Any]] = []
    for name, report in reports.items():
        out.tables.append(
            Table(f'probe_{name}.csv', ('parameter', 'sample', 'ratio'), [list(r) for r in report.rows()])
        )
        summary_rows.extend(report.summary_rows())
    out.tables.append(
        Table('probe_summary.csv', ('probe', 'parameter', 'max_ratio', 'slope', 'samples'), summary_rows)
    )
    out.summary = {
        name: {'max_ratio': r.max_ratio, 'slope': r.slope, 'samples': r.sample_count}
        for name, r in reports.items()
    }
    return out


def _lp_check(cfg: RunConfig) -> CommandOutput:
    report = lp_probe(cfg.analysis.probe_settings(cfg.grid))
    table = Table('lp_check.csv', ('p', 'sample', 'ratio'), [list(r) for r in report.rows()])
    summary = {
        f'p={p:g}': {'min': float(report.ratios(p).min()), 'max': float(report.ratios(p).max())}
        for p in report.parameters
    }
    return CommandOutput([table], summary=summary)


def _spacetime_l2(cfg: RunConfig) -> CommandOutput:
    if cfg.equation.complex_valued:
        raise ConfigError('prop14 needs a real equation (BO or mBO)')
    an = cfg.analysis
    fields = random_ensemble(
        cfg.grid,
        an.ensemble,
        an.seed,
        (an.amplitude_min, an.amplitude_max),
        (an.band_min, an.band_max),
        an.envelope,
    )
    members = spacetime_l2_ensemble(fields, cfg.equation, cfg.solver, an.cutoff())
    rows = [[m.seed, m.check.lhs, m.check.rhs, m.check.ratio] for m in members]
    ratios = [m.check.ratio for m in members]
    return CommandOutput(
        [Table('spacetime_l2.csv', ('seed', 'lhs', 'rhs', 'ratio'), rows)],
        summary={'members': len(members), 'max_ratio': max(ratios)},
    )


def _scale(cfg: RunConfig) -> CommandOutput:
    solver = dataclasses.replace(cfg.solver, t_end=cfg.analysis.scale_time, snapshot_stride=1)
    report = scaling_check(
        cfg.initial_field(), cfg.analysis.lam, cfg.equation, solver, max_points=cfg.analysis.max_points
    )
    rows = report.rows()
    return CommandOutput(
        [Table('scale.csv', ('quantity', 'value'), rows)],
        summary={str(name): value for name, value in rows},
    )


COMMANDS: dict[str, Callable[[RunConfig], CommandOutput]] = {
    'simulate': _simulate,
    'gauge-verify': _gauge_verify,
    'conserve': _conserve,
    'norms': _norms,
    'probe': _probe,
    'lp-check': _lp_check,
    'prop14': _spacetime_l2,
    'spacetime-l2': _spacetime_l2,
    'scale': _scale,
}

COMMAND_HELP = {
    'simulate': 'Run the flow, write snapshots and conservation.csv',
    'gauge-verify': 'Residual of the gauged equation per dyadic scale',
    'conserve': 'Drift of the conserved quantities',
    'norms': 'X, Y and mixed space-time norms of a run',
    'probe': 'Strichartz, maximal and smoothing probes of the free flow',
    'lp-check': 'Littlewood-Paley square-function probe',
    'prop14': 'Space-time L2 estimate over a seeded ensemble',
    'spacetime-l2': 'Same as prop14',
    'scale': 'Scaling symmetry check',
}


def exit_code(error: BaseException) -> int:
    """Exit status for an error raised by a command."""
    match error:
        case ConfigError():
            return EXIT_CONFIG_ERROR
        case BlowUpError():
            return EXIT_BLOWUP
        case ScaleError():
            return EXIT_SCALE_ERROR
        case _:
            return EXIT_ERROR


def dispatch(
    command: str,
    cfg: RunConfig,
    out_dir: Path | str = DEFAULT_OUT_DIR,
    *,
    now: datetime | None = None,
) -> CommandResult:
    """Run one command and write its artifacts to a fresh run directory.

    Nothing is written when the command fails.
    """
    handler = COMMANDS.get(command)
    if handler is None:
        return CommandResult(
            EXIT_ERROR, error=f"unknown command '{command}' (choose from {', '.join(COMMANDS)})"
        )
    try:
        output = handler(cfg)
    except BogsError as e:
        logger.debug('%s failed', command, exc_info=True)
        return CommandResult(exit_code(e), error=str(e))

    try:
        run_dir = RunDirectory(out_dir, command, cfg.seed, cfg.values, now=now)
        for table in output.tables:
            run_dir.write_csv(table.name, table.header, table.rows)
        for index, f, t in output.snapshots:
            run_dir.write_snapshot(index, f, cfg.equation.kind, t)
        run_dir.write_metadata(EXIT_OK, output.summary)
    except BogsError as e:
        return CommandResult(EXIT_ERROR, error=str(e))
    return CommandResult(EXIT_OK, run_dir.path, output.summary)


def _build_parser() -> argparse.ArgumentParser:
    """Build the CLI argument parser."""
    parser = argparse.ArgumentParser(
        prog='bogs',
        description='Pseudospectral experiments for the Benjamin-Ono family',
    )
    parser.add_argument('command', choices=list(COMMANDS), help='Command to run')
    parser.add_argument('-c', '--config', metavar='FILE', required=True, help='TOML configuration')
    parser.add_argument(
        '-o',
        '--out',
        metavar='DIR',
        default=str(DEFAULT_OUT_DIR),
        help=f'Parent of the run directory (default: {DEFAULT_OUT_DIR})',
    )
    parser.add_argument(
        '--seed', type=int, metavar='SEED', help='Override initial.seed and analysis.seed'
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='Warnings and errors only')

    # Meta
    parser.add_argument('--version', action='version', version=f'bogs {bogs.__version__}')
    parser.add_argument(
        '--json',
        action='store_true',
        dest='json_output',
        help='Output in JSON format (for machine consumption)',
    )
    parser.epilog = '\n'.join(f'  {name:<13} {text}' for name, text in COMMAND_HELP.items())
    parser.formatter_class = argparse.RawDescriptionHelpFormatter
    return parser


def _json_out(data: dict[str, Any]) -> None:
    """Print JSON to stdout."""
    print(json.dumps(data, indent=2, default=str))


def _configure_logging(*, verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
    root = logging.getLogger('bogs')
    root.handlers[:] = [handler]
    root.setLevel(level)
    root.propagate = False


def main(argv: Sequence[str] | None = None) -> None:
    """CLI entry point."""
    parser = _build_parser()
    args = parser.parse_args(argv)

    json_mode: bool = args.json_output
    _configure_logging(verbose=args.verbose, quiet=args.quiet)

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
    except ConfigError as e:
        if json_mode:
            _json_out({'error': 'config_error', 'message': str(e)})
        else:
            print(f'Error: {e}', file=sys.stderr)
        sys.exit(EXIT_CONFIG_ERROR)

    if not args.quiet:
        print(
            f'{args.command}: {cfg.equation.kind.value} on {cfg.grid.n_points} points, '
            f'L = {cfg.grid.length:g}, seed {cfg.seed}',
            file=sys.stderr,
        )
    start_time = time.time()
    result = dispatch(args.command, cfg, args.out)
    elapsed = time.time() - start_time

    if result.status != EXIT_OK:
        if json_mode:
            _json_out({'status': 'error', 'exit_code': result.status, 'message': result.error})
        else:
            print(f'Error: {result.error}', file=sys.stderr)
        sys.exit(result.status)

    if not args.quiet:
        print(f'Completed in {elapsed:.2f}s, artifacts in {result.run_dir}', file=sys.stderr)
    if json_mode:
        _json_out(
            {
                'status': 'ok',
                'command': args.command,
                'run_dir': str(result.run_dir),
                'elapsed_seconds': round(elapsed, 2),
                'summary': result.summary,
            }
        )
