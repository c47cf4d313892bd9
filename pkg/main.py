"""
Corrode - Command Line Interface
Computes how long an eventually-consistent graph database stays usable
"""

import argparse
import logging
import os
import sys

from dotenv import load_dotenv

from config import (apply_overrides, build_config, default_output_dir, log_level,
                    read_document, worker_count)
from engines.fluid import FluidSolver
from engines.simulator import run_simulation
from errors import ConfigError, CorrodeError, InvalidInputError
from harness import compare_topologies, run_sweep, run_validation
from models import SECONDS_PER_DAY, SECONDS_PER_MONTH
from utils.output_writer import (output_session, write_json, write_sweep_csv,
                                 write_trajectory_csv)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERDICT_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_NOT_CONVERGED = 3

TRAJECTORY_POINTS = 101


def _count(text):
    """Whole number, scientific notation allowed (1e10)"""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not value.is_integer():
        raise argparse.ArgumentTypeError(f"must be a whole number: {text!r}")
    return int(value)


def _boolean(text):
    lowered = text.lower()
    if lowered in ('true', 'yes', '1'):
        return True
    if lowered in ('false', 'no', '0'):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


# (config path, short aliases, type, help with units)
FLAGS = [
    ('graph.n', ['--n'], _count, "total edge count N (edges; 1e10 style accepted)"),
    ('graph.f', ['--f'], float, "fraction of distributed edges, in [0, 1]"),
    ('graph.topology.kind', [], str, "edge access pattern: complete | scale-free"),
    ('workload.lambda', ['--lambda'], float, "read-then-write query arrival rate (queries/s)"),
    ('workload.tps', ['--tps'], float, "total transactions per second (tx/s); lambda = 0.10 x tps"),
    ('workload.r', ['--r'], float, "geometric read-count parameter r, in (0, 1] (dimensionless)"),
    ('workload.delta', ['--delta'], float, "mean distributed write duration (s)"),
    ('solver.gamma', ['--gamma'], float, "corrupt-edge fraction threshold, in (0, 1)"),
    ('solver.fp_tolerance', [], float, "relative fixed-point convergence threshold (dimensionless)"),
    ('solver.max_iterations', [], int, "fixed-point iteration cap (iterations)"),
    ('solver.damping', [], float, "weight of the new iterate, in (0, 1]"),
    ('solver.seed_state2', [], float, "bootstrap average of state-2 edges at iteration 0 (edges)"),
    ('sim.seed', ['--seed'], int, "simulator RNG seed (64-bit unsigned)"),
    ('sim.seeds', ['--seeds'], int, "number of replicate seeds starting at sim.seed (count)"),
    ('sim.horizon', ['--horizon'], float, "maximum simulated time (s)"),
    ('sim.sample_interval', [], float, "time between trajectory samples (s)"),
    ('sim.debug_assertions', [], _boolean, "check every state change against the legal arcs (true/false)"),
    ('sim.dirty_reads', [], _boolean, "let corrupt reads taint writes (true/false)"),
    ('sweep.parameter', [], str, "swept parameter: lambda | delta | f | gamma | r"),
    ('sweep.from', [], float, "first grid value (unit of the swept parameter)"),
    ('sweep.to', [], float, "last grid value (unit of the swept parameter)"),
    ('sweep.steps', [], int, "number of grid points (count, >= 2)"),
    ('sweep.scale', [], str, "grid spacing: linear | log"),
    ('validation.tolerance', [], float, "largest accepted relative error for validate (fraction)"),
]

SUBCOMMANDS = {
    'solve': "analytic U_gamma for a Complete graph",
    'simulate': "one discrete-event simulation run",
    'sweep': "analytic U_gamma over a parameter grid",
    'validate': "analytic solver against simulator replicates",
    'compare-topologies': "simulated Complete vs Scale-Free access",
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog='corrode',
        description="Time until a fraction gamma of graph edges is semantically corrupt")
    subparsers = parser.add_subparsers(dest='command', required=True)
    for name, summary in SUBCOMMANDS.items():
        sub = subparsers.add_parser(name, help=summary, description=summary)
        sub.add_argument('--config', help="experiment config file (JSON)")
        sub.add_argument('--output-dir', help="directory for result files "
                                              "(default: $CORRODE_OUTPUT_DIR or ./results)")
        sub.add_argument('-v', '--verbose', action='count', default=0, help="more logging (-vv for debug)")
        sub.add_argument('-q', '--quiet', action='store_true', help="errors only")
        for path, aliases, kind, text in FLAGS:
            sub.add_argument(f'--{path}', *aliases, dest=path, type=kind, default=None,
                             metavar=path.split('.')[-1].upper(), help=text)
    return parser


def configure_logging(verbose, quiet):
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = getattr(logging, log_level(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='[%(levelname)-5s] %(name)s: %(message)s', force=True)


def resolve_config(args):
    """Config file (if any) plus flag overrides, validated in one pass"""
    document = read_document(args.config) if args.config else {}
    overrides = {path: getattr(args, path) for path, *_ in FLAGS}
    seed_count = overrides.pop('sim.seeds')
    if seed_count is not None:
        base = overrides['sim.seed']
        if base is None:
            base = document.get('sim', {}).get('seed', 0)
        overrides['sim.seeds'] = {'base': base, 'count': seed_count}
    return build_config(apply_overrides(document, overrides))


def _seconds_text(seconds):
    return (f"{seconds:.6g} s ({seconds / SECONDS_PER_DAY:.4g} days, "
            f"{seconds / SECONDS_PER_MONTH:.4g} months)")


def _banner(title):
    print(f"\n{'=' * 60}")
    print(title)
    print(f"{'=' * 60}\n")


def command_solve(config, output_dir, workers):
    solver = FluidSolver(config.graph, config.workload, config.solver)
    result = solver.solve()
    _banner("Analytic U_gamma")
    print(f"N={config.graph.n_edges} f={config.graph.distributed_fraction} "
          f"lambda={config.workload.arrival_rate:g}/s delta={config.workload.write_delay:g}s "
          f"r={config.workload.read_parameter} gamma={config.solver.gamma}")
    if result.is_infinite:
        print(f"U_gamma: infinite ({result.note})")
    else:
        print(f"U_gamma: {_seconds_text(result.u_gamma)}")
        print(f"alpha={result.alpha:.9g} beta={result.beta:.9g} q={result.q:.6g}")
        print(f"iterations: {result.iterations}  conservation drift: {result.conservation_drift:.3g}")
    if not result.converged:
        print(f"NOT CONVERGED: {result.note}")

    with output_session(output_dir) as out:
        write_json(os.path.join(out, 'result.json'), result.to_dict())
        if not result.is_infinite and result.averaged is not None:
            trajectory = solver.trajectory(result)
            times = [result.u_gamma * i / (TRAJECTORY_POINTS - 1) for i in range(TRAJECTORY_POINTS)]
            write_trajectory_csv(os.path.join(out, 'trajectory.csv'), trajectory.sample(times))
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def command_simulate(config, output_dir, workers):
    result = run_simulation(config.graph, config.workload, config.sim)
    _banner("Simulated first passage")
    if result.horizon_exceeded:
        print(f"horizon of {config.sim.horizon:g} s exceeded; final state {list(result.final_state)}")
    else:
        print(f"U_gamma estimate: {_seconds_text(result.u_gamma_estimate)}")
    for key, value in sorted(result.event_counts.items()):
        print(f"  {key}: {value}")

    with output_session(output_dir) as out:
        write_json(os.path.join(out, 'result.json'), result.to_dict())
        write_trajectory_csv(os.path.join(out, 'trajectory.csv'), result.trajectory)
    return EXIT_OK


def command_sweep(config, output_dir, workers):
    if config.sweep is None:
        raise ConfigError('sweep', "the sweep command needs a sweep section or --sweep.* flags")
    rows = run_sweep(config, workers)
    with_simulation = bool(config.seeds)
    _banner(f"Sweep over {config.sweep.parameter}")
    for row in rows:
        line = f"{row.param}={row.value:<12.6g} U={row.u_gamma_seconds:.6g} s ({row.u_gamma_months:.4g} months)"
        if with_simulation and row.sim_mean is not None:
            line += f"  sim={row.sim_mean:.6g} s"
        print(f"{line}  [{row.status}]")

    with output_session(output_dir) as out:
        write_sweep_csv(os.path.join(out, 'sweep.csv'), rows, with_simulation)
        write_json(os.path.join(out, 'result.json'),
                   {'kind': 'sweep', 'rows': [row.to_dict() for row in rows]})
    return EXIT_NOT_CONVERGED if any(row.status == 'not-converged' for row in rows) else EXIT_OK


def command_validate(config, output_dir, workers):
    report = run_validation(config, workers)
    _banner("Cross-engine validation")
    print(f"analytic U_gamma: {report.analytic_u:.6g} s [{report.analytic_status}]")
    if report.sim_mean is not None:
        ci = f" +/- {report.sim_ci95:.3g}" if report.sim_ci95 is not None else ''
        print(f"simulated mean:   {report.sim_mean:.6g} s{ci} over {len(report.per_seed)} seeds")
    if report.relative_error is not None:
        print(f"relative error:   {report.relative_error:.4g} (tolerance {report.tolerance:g})")
    print(f"verdict: {report.status}")
    if report.note:
        print(f"note: {report.note}")

    with output_session(output_dir) as out:
        write_json(os.path.join(out, 'result.json'), report.to_dict())
    if report.analytic_status == 'not-converged':
        return EXIT_NOT_CONVERGED
    return EXIT_OK if report.passed else EXIT_VERDICT_FAILED


def command_compare(config, output_dir, workers):
    comparison = compare_topologies(config, workers)
    _banner("Topology comparison")
    for name, summary in (('complete', comparison.complete), ('scale-free', comparison.scale_free)):
        mean = f"{summary['mean']:.6g} s" if summary['mean'] is not None else "horizon exceeded"
        print(f"{name:<11} mean U_gamma: {mean} ({summary['finished']}/{summary['seeds']} seeds)")
    if comparison.ratio is not None:
        print(f"ratio scale-free/complete: {comparison.ratio:.4g}")
    for onset in comparison.category_onsets:
        when = f"{onset['mean_onset']:.6g} s" if onset['mean_onset'] is not None else "never"
        print(f"  category {onset['category']} ({onset['edges']} edges, p={onset['probability']}): {when}")
    if comparison.note:
        print(f"note: {comparison.note}")

    with output_session(output_dir) as out:
        write_json(os.path.join(out, 'result.json'), comparison.to_dict())
    return EXIT_OK if comparison.status == 'ok' else EXIT_VERDICT_FAILED


COMMANDS = {
    'solve': command_solve,
    'simulate': command_simulate,
    'sweep': command_sweep,
    'validate': command_validate,
    'compare-topologies': command_compare,
}


def main(argv=None):
    load_dotenv()
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        config = resolve_config(args)
        workers = worker_count()
        output_dir = args.output_dir or default_output_dir()
        return COMMANDS[args.command](config, output_dir, workers)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except InvalidInputError as e:
        print(f"invalid input ({e.field or 'input'}): {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except CorrodeError as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VERDICT_FAILED


if __name__ == '__main__':
    sys.exit(main())
