#!/usr/bin/env python
"""Run planner episodes and sweeps, and summarize their statistics.

Subcommands:

    run     one episode on a world file
    sweep   every (strategy, t_map, trial) cell of a sweep specification
    stats   improvement table, per-t_map summary and pruning timings of a
            finished sweep
"""

import argparse
import concurrent.futures
import csv
import dataclasses
import json
import logging
import math
import os
import statistics
import sys

import config
import costs
import db
import plotutils
import simulator
import strutils
import templateutils
import valutils
import worldutils
from simulator import TrialRecord

logger = logging.getLogger(__name__)

TRIALS_HEADER = [
    'trial_id', 'strategy', 't_map', 'arrival_time', 'path_length',
    'n_collisions', 'n_intentional', 'success', 'seed'
]
TRAJECTORY_HEADER = ['t', 'x', 'y']
TMAP_SUMMARY_HEADER = [
    'strategy', 't_map', 'n', 'mean_arrival_time', 'std_arrival_time',
    'mean_path_length', 'std_path_length'
]
HARNESS_STRATEGY = 'harness'
BASELINE_STRATEGIES = ('high_risk', 'low_risk')


class HarnessError(ValueError):
    """Raised for invalid sweeps and unusable result sets.
    """


##############################################################
# Sweep Specification
##############################################################

@dataclasses.dataclass(frozen=True)
class SweepSpec:
    strategies: tuple  # of (label, CostWeights)
    t_map_grid: tuple
    trials_per_cell: int = config.TRIALS_PER_CELL
    base_seed: int = config.BASE_SEED
    world: str = 'corridor_2x2.world'
    timeout: float = config.TIMEOUT
    measure_unpruned: bool = False

    def __post_init__(self):
        if self.trials_per_cell < 1:
            raise HarnessError(
                'trials_per_cell must be at least 1, got %s!'
                % self.trials_per_cell
            )
        if len(self.strategies) == 0 or len(self.t_map_grid) == 0:
            raise HarnessError('A sweep needs strategies and a t_map grid!')

    @classmethod
    def from_document(cls, doc):
        is_ok, status_messages = valutils.validate_sweep_document(doc)
        if not is_ok:
            raise HarnessError(
                'Invalid sweep specification: %s' % ' '.join(status_messages)
            )
        strategies = []
        for entry in doc['strategies']:
            if isinstance(entry, str):
                strategies.append((entry, costs.CostWeights.for_strategy(entry)))
            else:
                strategies.append((entry['label'], costs.CostWeights(
                    entry['w_p'], entry['w_r'], entry['w_v']
                )))
        return cls(
            strategies=tuple(strategies),
            t_map_grid=tuple(float(t) for t in doc['t_map_grid']),
            trials_per_cell=doc['trials_per_cell'],
            base_seed=doc.get('base_seed', config.BASE_SEED),
            world=doc.get('world', 'corridor_2x2.world'),
            timeout=float(doc.get('timeout', config.TIMEOUT)),
            measure_unpruned=bool(doc.get('measure_unpruned', False)),
        )


def load_sweep_spec(path):
    try:
        with open(path, 'r') as f:
            doc = json.load(f)
    except (OSError, ValueError) as e:
        raise HarnessError('Cannot read sweep file "%s": %s' % (path, e)) from e
    return SweepSpec.from_document(doc)


def full_protocol_spec(world='corridor_2x2.world'):
    """Three strategies, the full t_map grid and config.TRIALS_PER_CELL
    trials per cell.
    """
    return SweepSpec(
        strategies=tuple(
            (label, costs.CostWeights.for_strategy(label))
            for label in ('harness', 'high_risk', 'low_risk')
        ),
        t_map_grid=tuple(config.T_MAP_GRID),
        world=world,
    )


##############################################################
# Running Trials
##############################################################

@dataclasses.dataclass(frozen=True)
class TrialCell:
    trial_id: int
    planner_config: simulator.PlannerConfig
    t_map: float
    seed: int
    timeout: float


def trial_cells(spec):
    """Enumerate the trials of a sweep in (strategy, t_map, trial) order.

    Trial ids are sequential from 0; the seed of trial k within its cell is
    base_seed + k.
    """
    cells = []
    for label, weights in spec.strategies:
        planner_config = simulator.PlannerConfig(
            strategy=label, weights=weights,
            measure_unpruned=spec.measure_unpruned,
            clearance=config.STRATEGY_CLEARANCE.get(label, 0.0)
        )
        for t_map in spec.t_map_grid:
            for k in range(spec.trials_per_cell):
                cells.append(TrialCell(
                    len(cells), planner_config, t_map, spec.base_seed + k,
                    spec.timeout
                ))
    return cells


def run_cell(world_doc, cell):
    """Run one trial. Top-level so that worker processes can pickle it.
    """
    world = worldutils.world_from_document(world_doc)
    return simulator.run_episode(
        world, cell.planner_config, cell.t_map, timeout=cell.timeout,
        seed=cell.seed, trial_id=cell.trial_id
    )


def run_sweep(spec, world_file=None, jobs=1):
    """Run every trial of a sweep.

    Parameters
    ----------
    spec : SweepSpec
        The sweep.
    world_file : str, optional
        World file; defaults to spec.world.
    jobs : int, optional
        Number of worker processes. 1 runs in this process.

    Returns
    -------
    results : list of EpisodeResult
        Sorted by trial id.
    """
    world_path = worldutils.resolve_world_path(world_file or spec.world)
    world = worldutils.load_world(world_path)
    world_doc = worldutils.world_document(world)
    cells = trial_cells(spec)
    logger.info(
        'Running %d trials on %s with %d job(s)', len(cells), world.name, jobs
    )
    if jobs <= 1:
        results = [run_cell(world_doc, cell) for cell in cells]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_cell, world_doc, cell) for cell in cells]
            results = [
                f.result() for f in concurrent.futures.as_completed(futures)
            ]
    results.sort(key=lambda r: r.record.trial_id)
    return results


def run_trials(spec, world_file=None, jobs=1):
    """Trial records of a sweep, one per (strategy, t_map, trial).
    """
    return [r.record for r in run_sweep(spec, world_file, jobs)]


##############################################################
# Statistics
##############################################################

def _mean(values):
    return statistics.fmean(values) if values else math.nan


def _std(values):
    if not values:
        return math.nan
    return statistics.stdev(values) if len(values) >= 2 else 0.0


def improvement(baseline, harnessing):
    """Percent improvement 100 * (baseline - harnessing) / baseline.

    Equal values give 0 and a zero baseline otherwise gives nan.
    """
    if baseline == harnessing:
        return 0.0
    if baseline == 0:
        return math.nan
    return 100.0 * (baseline - harnessing) / baseline


def _successful(records, strategy):
    return [r for r in records if r.strategy == strategy and r.success]


def improvement_table(
    records, strategy=HARNESS_STRATEGY, baselines=BASELINE_STRATEGIES
):
    """Improvements of one strategy over baselines in arrival time and path
    length, for both the mean and the STD over successful trials.

    Parameters
    ----------
    records : list of TrialRecord
        The records; every strategy involved must be present.
    strategy : str, optional
        The strategy being compared.
    baselines : tuple of str, optional
        The baseline strategies.

    Returns
    -------
    table : dict
        'strategy', 'baselines', and 'rows': one dict per (metric, statistic)
        with the improvement in percent keyed by baseline label.
    """
    present = {r.strategy for r in records}
    missing = [s for s in (strategy,) + tuple(baselines) if s not in present]
    if missing:
        raise HarnessError(
            'Records are missing strategies: %s' % ', '.join(missing)
        )
    rows = []
    for metric in ['arrival_time', 'path_length']:
        for statistic, reduce in [('mean', _mean), ('std', _std)]:
            ours = reduce([
                getattr(r, metric) for r in _successful(records, strategy)
            ])
            row = {'metric': metric, 'statistic': statistic}
            for baseline in baselines:
                theirs = reduce([
                    getattr(r, metric) for r in _successful(records, baseline)
                ])
                row[baseline] = improvement(theirs, ours)
            rows.append(row)
    return {'strategy': strategy, 'baselines': list(baselines), 'rows': rows}


def strategy_summary(records):
    """Per-strategy trial counts and mean/STD of the trial metrics.
    """
    summaries = []
    for strategy in sorted({r.strategy for r in records}):
        own = [r for r in records if r.strategy == strategy]
        ok = [r for r in own if r.success]
        summaries.append({
            'strategy': strategy,
            'n_trials': len(own),
            'n_success': len(ok),
            'mean_arrival_time': _mean([r.arrival_time for r in ok]),
            'std_arrival_time': _std([r.arrival_time for r in ok]),
            'mean_path_length': _mean([r.path_length for r in ok]),
            'std_path_length': _std([r.path_length for r in ok]),
            'mean_collisions': _mean([r.n_collisions for r in own]),
            'mean_intentional': _mean([r.n_intentional for r in own]),
        })
    return summaries


def tmap_summary(records):
    """Mean and STD of arrival time and path length per (strategy, t_map)
    over successful trials.
    """
    rows = []
    for strategy, t_map in sorted({(r.strategy, r.t_map) for r in records}):
        ok = [
            r for r in records
            if r.strategy == strategy and r.t_map == t_map and r.success
        ]
        rows.append({
            'strategy': strategy,
            't_map': t_map,
            'n': len(ok),
            'mean_arrival_time': _mean([r.arrival_time for r in ok]),
            'std_arrival_time': _std([r.arrival_time for r in ok]),
            'mean_path_length': _mean([r.path_length for r in ok]),
            'std_path_length': _std([r.path_length for r in ok]),
        })
    return rows


def timing_report(cycles):
    """Time saved by pruning per planning cycle.

    Parameters
    ----------
    cycles : list
        Cycle logs or PlanningCycles rows. Only cycles with both timings
        count for the times; every cycle that sampled candidates counts for
        the reduction ratio.

    Returns
    -------
    report : dict
        n_cycles, mean_pruned_ms, mean_unpruned_ms, mean_saving_ms and
        mean_reduction_ratio (candidates kept over candidates sampled).
    """
    def measured(x):
        return x is not None and not math.isnan(x)

    timed = [
        c for c in cycles if measured(c.pruned_ms) and measured(c.unpruned_ms)
    ]
    sampled = [c for c in cycles if c.n_sampled > 0]
    return {
        'n_cycles': len(timed),
        'mean_pruned_ms': _mean([c.pruned_ms for c in timed]),
        'mean_unpruned_ms': _mean([c.unpruned_ms for c in timed]),
        'mean_saving_ms': _mean([c.unpruned_ms - c.pruned_ms for c in timed]),
        'mean_reduction_ratio': _mean([
            c.n_after_velocity / c.n_sampled for c in sampled
        ]),
    }


##############################################################
# Output Files
##############################################################

def record_row(record):
    return [
        str(record.trial_id), record.strategy,
        strutils.format_float(record.t_map),
        strutils.format_float(record.arrival_time),
        strutils.format_float(record.path_length),
        str(record.n_collisions), str(record.n_intentional),
        strutils.format_bool(record.success), str(record.seed),
    ]


def write_trials_csv(records, path):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(TRIALS_HEADER)
        for record in sorted(records, key=lambda r: r.trial_id):
            writer.writerow(record_row(record))


def parse_trials_csv(path):
    """Read trials.csv back into TrialRecords.

    Raises HarnessError on a wrong header or malformed row.
    """
    try:
        with open(path, 'r', newline='') as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != TRIALS_HEADER:
                raise HarnessError(
                    'Unexpected header in "%s": %s' % (path, header)
                )
            records = []
            for line_number, row in enumerate(reader, start=2):
                try:
                    records.append(TrialRecord(
                        trial_id=int(row[0]),
                        strategy=row[1],
                        t_map=float(row[2]),
                        arrival_time=float(row[3]),
                        path_length=float(row[4]),
                        n_collisions=int(row[5]),
                        n_intentional=int(row[6]),
                        success=strutils.parse_bool(row[7]),
                        seed=int(row[8]),
                    ))
                except (IndexError, ValueError) as e:
                    raise HarnessError(
                        'Bad row %d in "%s": %s' % (line_number, path, e)
                    ) from e
    except OSError as e:
        raise HarnessError('Cannot read "%s": %s' % (path, e)) from e
    return records


def write_trajectory_csv(rows, path):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(TRAJECTORY_HEADER)
        for t, x, y in rows:
            writer.writerow([
                strutils.format_float(t), strutils.format_float(x),
                strutils.format_float(y)
            ])


def write_tmap_summary_csv(rows, path):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(TMAP_SUMMARY_HEADER)
        for row in rows:
            writer.writerow([
                row['strategy'], strutils.format_float(row['t_map']), row['n']
            ] + [
                strutils.format_float(row[key])
                for key in TMAP_SUMMARY_HEADER[3:]
            ])


def emit_outputs(results, out_dir, world=None, store=True):
    """Write the output files of a set of episodes.

    Writes trials.csv, trajectories/<trial_id>.csv, tmap_summary.csv and,
    when there are records, the trajectory and t_map plots plus the trial
    store.

    Parameters
    ----------
    results : list of EpisodeResult or TrialRecord
        The episodes. Bare records produce no trajectory files or
        trajectory plot.
    out_dir : str
        The output directory; created if needed.
    world : World, optional
        Needed for the trajectory plot.
    store : bool, optional
        Also write the trial store. Default is True.

    Returns
    -------
    paths : list of str
        The files written.
    """
    try:
        os.makedirs(out_dir, exist_ok=True)
        episodes = [r for r in results if isinstance(r, simulator.EpisodeResult)]
        records = [
            r.record if isinstance(r, simulator.EpisodeResult) else r
            for r in results
        ]
        paths = []

        path = os.path.join(out_dir, 'trials.csv')
        write_trials_csv(records, path)
        paths.append(path)

        if episodes:
            trajectory_dir = os.path.join(out_dir, 'trajectories')
            os.makedirs(trajectory_dir, exist_ok=True)
            for episode in episodes:
                path = os.path.join(
                    trajectory_dir, '%d.csv' % episode.record.trial_id
                )
                write_trajectory_csv(episode.trajectory_rows, path)
                paths.append(path)

        tmap_rows = tmap_summary(records)
        path = os.path.join(out_dir, 'tmap_summary.csv')
        write_tmap_summary_csv(tmap_rows, path)
        paths.append(path)

        if records:
            path = os.path.join(out_dir, 'tmap_panels.png')
            plotutils.plot_tmap_panels(tmap_rows, path)
            paths.append(path)
            if episodes and world is not None:
                path = os.path.join(out_dir, 'trajectories.png')
                plotutils.plot_trajectories(world, episodes, path)
                paths.append(path)

        if store and episodes:
            session = db.get_session(db.database_url(out_dir))
            try:
                db.add_results(session, episodes)
            finally:
                session.close()
    except OSError as e:
        raise HarnessError(
            'Cannot write outputs to "%s": %s' % (out_dir, e)
        ) from e
    logger.info('Wrote %d files to %s', len(paths), out_dir)
    return paths


def build_stats_report(in_dir):
    """Render the text report for a finished sweep directory.
    """
    records = parse_trials_csv(os.path.join(in_dir, 'trials.csv'))
    context = {
        'source': in_dir,
        'summaries': strategy_summary(records),
        'tmap_rows': tmap_summary(records),
        'improvement': None,
        'improvement_error': None,
        'timing': None,
    }
    try:
        context['improvement'] = improvement_table(records)
    except HarnessError as e:
        context['improvement_error'] = str(e)

    store_exists = os.getenv(db.DATABASE_URL_VARIABLE) or os.path.exists(
        os.path.join(in_dir, config.TRIALS_DATABASE_NAME)
    )
    if store_exists:
        session = db.get_session(db.database_url(in_dir))
        try:
            timing = timing_report(db.get_cycle_timings(session))
        finally:
            session.close()
        if timing['n_cycles'] > 0:
            context['timing'] = timing
    return templateutils.render_stats_report(**context)


##############################################################
# Command Line
##############################################################

def defaults_epilog():
    cost_params = costs.CostParams()
    sampling_params = simulator.PlannerConfig().sampling_params
    lines = ['defaults:']
    for record in (cost_params, sampling_params):
        for field in dataclasses.fields(record):
            lines.append('  %s = %s' % (field.name, getattr(record, field.name)))
    lines.append('  strategies = %s' % ', '.join(
        '%s %s' % (label, weights)
        for label, weights in sorted(config.STRATEGIES.items())
    ))
    lines.append('  window_size = %s, p_safe = %s, n_samples = %s' % (
        config.WINDOW_SIZE, config.P_SAFE, config.N_SAMPLES
    ))
    lines.append('  dt = %s, control_period = %s, goal_tolerance = %s' % (
        config.DT, config.CONTROL_PERIOD, config.GOAL_TOLERANCE
    ))
    lines.append('  actuation_sigma = %s, pid = (%s, %s, %s)' % (
        config.ACTUATION_SIGMA, config.KP, config.KI, config.KD
    ))
    return '\n'.join(lines)


def build_parser():
    parser = argparse.ArgumentParser(
        description='Collision-harnessing planner: episodes, sweeps and '
        'statistics.',
        epilog=defaults_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument(
        '--verbose', action='store_true', help='Log debug output.'
    )
    verbosity.add_argument(
        '--quiet', action='store_true', help='Log warnings only.'
    )
    subparsers = parser.add_subparsers(dest='command', required=True)

    run_parser = subparsers.add_parser('run', help='Run one episode.')
    run_parser.add_argument('--world', required=True, help='World file.')
    run_parser.add_argument(
        '--strategy', default=HARNESS_STRATEGY,
        choices=sorted(config.STRATEGIES), help='Weight strategy.'
    )
    run_parser.add_argument(
        '--t-map', type=float, default=config.T_MAP_GRID[0],
        help='Map update period in seconds. Default: %(default)s'
    )
    run_parser.add_argument('--seed', type=int, default=config.BASE_SEED)
    run_parser.add_argument(
        '--timeout', type=float, default=config.TIMEOUT,
        help='Episode timeout in seconds. Default: %(default)s'
    )
    run_parser.add_argument(
        '--out', default='.', help='Output directory. Default: %(default)s'
    )
    run_parser.add_argument(
        '--plot', action='store_true', help='Also write the trajectory plot.'
    )

    sweep_parser = subparsers.add_parser('sweep', help='Run a sweep.')
    sweep_parser.add_argument('--spec', required=True, help='Sweep file.')
    sweep_parser.add_argument('--out', required=True, help='Output directory.')
    sweep_parser.add_argument('--world', help='Override the sweep world.')
    sweep_parser.add_argument(
        '--jobs', type=int, default=1,
        help='Worker processes. Default: %(default)s'
    )

    stats_parser = subparsers.add_parser('stats', help='Summarize a sweep.')
    stats_parser.add_argument(
        '--in', dest='in_dir', required=True, help='Sweep output directory.'
    )
    return parser


def command_run(args):
    world = worldutils.load_world(args.world)
    planner_config = simulator.PlannerConfig.for_strategy(args.strategy)
    result = simulator.run_episode(
        world, planner_config, args.t_map, timeout=args.timeout,
        seed=args.seed
    )
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, 'trajectory_%d.csv' % args.seed)
    write_trajectory_csv(result.trajectory_rows, path)
    if args.plot:
        plotutils.plot_trajectories(
            world, [result],
            os.path.join(args.out, 'trajectory_%d.png' % args.seed)
        )
    print(','.join(TRIALS_HEADER))
    print(','.join(record_row(result.record)))
    return 0


def command_sweep(args):
    if args.jobs < 1:
        raise HarnessError('--jobs must be at least 1, got %d!' % args.jobs)
    spec = load_sweep_spec(args.spec)
    world_file = args.world or spec.world
    results = run_sweep(spec, world_file, jobs=args.jobs)
    world = worldutils.load_world(world_file)
    emit_outputs(results, args.out, world=world)
    return 0


def command_stats(args):
    report = build_stats_report(args.in_dir)
    path = os.path.join(args.in_dir, 'stats_report.txt')
    try:
        with open(path, 'w') as f:
            f.write(report)
    except OSError as e:
        raise HarnessError('Cannot write "%s": %s' % (path, e)) from e
    sys.stdout.write(report)
    return 0


COMMANDS = {
    'run': command_run,
    'sweep': command_sweep,
    'stats': command_stats,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level, format='%(asctime)s %(name)s %(levelname)s: %(message)s'
    )
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as e:
        sys.stderr.write('error: %s\n' % e)
        return 1


if __name__ == '__main__':
    sys.exit(main())
