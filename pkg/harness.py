"""
Experiment Harness
Parameter sweeps, cross-engine validation and topology comparison
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import stats

from config import worker_count
from engines.fluid import fixed_point_solve
from engines.simulator import run_simulation
from errors import InvalidInputError
from models import (STANDARD_CATEGORY_SIZES, SECONDS_PER_MONTH, CompleteTopology, ScaleFreeTopology,
                    TopologyComparison, ValidationReport)

logger = logging.getLogger(__name__)


@dataclass
class SweepRow:
    param: str
    value: float
    u_gamma_seconds: float
    u_gamma_months: float
    status: str
    sim_mean: Optional[float] = None
    sim_ci95: Optional[float] = None

    def to_dict(self):
        return {
            'param': self.param,
            'value': self.value,
            'u_gamma_seconds': 'inf' if math.isinf(self.u_gamma_seconds) else self.u_gamma_seconds,
            'u_gamma_months': 'inf' if math.isinf(self.u_gamma_months) else self.u_gamma_months,
            'status': self.status,
            'sim_mean': self.sim_mean,
            'sim_ci95': self.sim_ci95,
        }


def with_parameter(config, name, value):
    """Copy of config with one sweepable parameter replaced"""
    if name == 'lambda':
        return replace(config, workload=replace(config.workload, arrival_rate=value, tps=None))
    if name == 'delta':
        return replace(config, workload=replace(config.workload, write_delay=value))
    if name == 'r':
        return replace(config, workload=replace(config.workload, read_parameter=value))
    if name == 'f':
        return replace(config, graph=replace(config.graph, distributed_fraction=value))
    if name == 'gamma':
        return replace(config, solver=replace(config.solver, gamma=value),
                       sim=replace(config.sim, gamma=value))
    raise InvalidInputError(f"unknown sweep parameter {name!r}", field="sweep.parameter")


def summarize(values):
    """
    Mean, sample standard deviation and 95% confidence half-width

    The half-width uses Student's t and needs at least two values.
    """
    if not values:
        return None, None, None
    data = np.asarray(values, dtype=float)
    mean = float(data.mean())
    if len(data) < 2:
        return mean, None, None
    std = float(data.std(ddof=1))
    half_width = float(stats.t.ppf(0.975, len(data) - 1) * std / math.sqrt(len(data)))
    return mean, std, half_width


def _map(function, items, workers):
    """Ordered map, in a process pool when more than one worker is allowed"""
    items = list(items)
    if workers is None:
        workers = worker_count()
    if workers <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as executor:
        return list(executor.map(function, items))


def _solve_job(job):
    graph, workload, solver = job
    return fixed_point_solve(graph, workload, solver)


def _simulate_job(job):
    graph, workload, sim = job
    return run_simulation(graph, workload, sim)


def run_solve(config):
    return fixed_point_solve(config.graph, config.workload, config.solver)


def run_simulations(graph, workload, sim, seeds, workers=None):
    """One run per seed, returned in seed-list order"""
    logger.info("dispatching %d simulation seeds", len(seeds))
    return _map(_simulate_job, [(graph, workload, replace(sim, seed=seed)) for seed in seeds], workers)


def run_sweep(config, workers=None):
    """
    Solve at every grid point of config.sweep

    Simulator replicates are added when the config lists seeds. A point that
    fails to converge is flagged in its row's status; the sweep carries on.

    Returns:
        List of SweepRow in grid order
    """
    if config.sweep is None:
        raise InvalidInputError("config has no sweep section", field="sweep")
    sweep = config.sweep
    points = [with_parameter(config, sweep.parameter, value) for value in sweep.values()]
    logger.info("sweeping %s over %d points", sweep.parameter, len(points))

    solves = _map(_solve_job, [(p.graph, p.workload, p.solver) for p in points], workers)

    simulated = {}
    if config.seeds:
        jobs = [(p.graph, p.workload, replace(p.sim, seed=seed)) for p in points for seed in config.seeds]
        results = _map(_simulate_job, jobs, workers)
        per_point = len(config.seeds)
        for i in range(len(points)):
            chunk = results[i * per_point:(i + 1) * per_point]
            finished = [r.u_gamma_estimate for r in chunk if not r.horizon_exceeded]
            mean, _, half_width = summarize(finished)
            simulated[i] = (mean, half_width)

    rows = []
    for i, (value, result) in enumerate(zip(sweep.values(), solves)):
        if result.status == 'not-converged':
            logger.warning("sweep point %s=%g did not converge", sweep.parameter, value)
        mean, half_width = simulated.get(i, (None, None))
        rows.append(SweepRow(param=sweep.parameter, value=value, u_gamma_seconds=result.u_gamma,
                             u_gamma_months=result.u_gamma / SECONDS_PER_MONTH, status=result.status,
                             sim_mean=mean, sim_ci95=half_width))
    return rows


def validation_verdict(analytic_u, sim_mean, sim_ci95, tolerance):
    """
    Pass when the relative error is within tolerance and the simulator's 95%
    interval covers the analytic value

    Returns:
        (status, relative_error)
    """
    relative_error = abs(analytic_u - sim_mean) / sim_mean
    covered = sim_ci95 is not None and abs(analytic_u - sim_mean) <= sim_ci95
    status = 'pass' if relative_error <= tolerance and covered else 'fail'
    return status, relative_error


def run_validation(config, workers=None):
    """
    Compare the analytic U_gamma with the simulator's mean first passage

    Returns:
        ValidationReport with status pass, fail, inconclusive or
        consistent-degenerate
    """
    seeds = config.seeds
    if len(seeds) < 2:
        raise InvalidInputError("validation needs at least 2 seeds", field="sim.seeds")

    analytic = run_solve(config)
    runs = run_simulations(config.graph, config.workload, config.sim, seeds, workers)
    per_seed = [(run.seed, run.u_gamma_estimate) for run in runs]
    finished = [run.u_gamma_estimate for run in runs if not run.horizon_exceeded]
    exceeded = len(runs) - len(finished)
    mean, std, half_width = summarize(finished)
    tolerance = config.validation_tolerance

    def report(status, relative_error=None, note=''):
        return ValidationReport(analytic_u=analytic.u_gamma, analytic_status=analytic.status,
                                sim_mean=mean, sim_std=std, sim_ci95=half_width,
                                relative_error=relative_error, tolerance=tolerance, status=status,
                                per_seed=per_seed, note=note)

    if analytic.is_infinite and not finished:
        return report('consistent-degenerate',
                      note=f"both engines report no corruption ({analytic.note or 'infinite U_gamma'})")
    if exceeded * 2 > len(runs):
        return report('inconclusive',
                      note=f"{exceeded} of {len(runs)} seeds exceeded the horizon; raise sim.horizon")
    if analytic.is_infinite:
        return report('fail', note="analytic U_gamma is infinite but the simulator reached gamma")

    status, relative_error = validation_verdict(analytic.u_gamma, mean, half_width, tolerance)
    note = ''
    if analytic.status == 'not-converged':
        note = analytic.note
    elif status == 'fail' and relative_error <= tolerance:
        note = "relative error within tolerance but the 95% interval misses the analytic value"
    elif exceeded:
        note = f"{exceeded} seed(s) exceeded the horizon and were left out of the statistics"
    logger.info("validation: analytic %.6g s, simulated %.6g s, relative error %.3g",
                analytic.u_gamma, mean, relative_error)
    return report(status, relative_error, note)


def scale_free_for(graph):
    """The Scale-Free table to compare against at the graph's size"""
    if isinstance(graph.topology, ScaleFreeTopology):
        return graph.topology
    if graph.n_edges == sum(STANDARD_CATEGORY_SIZES):
        return ScaleFreeTopology.standard()
    return ScaleFreeTopology.scaled(graph.n_edges)


def _topology_summary(runs):
    finished = [run.u_gamma_estimate for run in runs if not run.horizon_exceeded]
    mean, std, half_width = summarize(finished)
    return {
        'mean': mean,
        'std': std,
        'ci95': half_width,
        'finished': len(finished),
        'seeds': len(runs),
        'per_seed': [{'seed': run.seed, 'u_gamma_estimate': run.u_gamma_estimate} for run in runs],
    }


def compare_topologies(config, workers=None):
    """
    Simulate Complete and Scale-Free access at matched N, f and workload

    Also reports, per Scale-Free category, the mean time its own state-3
    fraction first reached gamma over the seeds where it did. Runs go on past
    the global crossing until every category has its onset or the horizon ends.
    """
    seeds = config.replicate_seeds()
    scale_free = scale_free_for(config.graph)
    complete_graph = replace(config.graph, topology=CompleteTopology())
    scale_free_graph = replace(config.graph, topology=scale_free)

    sim = replace(config.sim, until_category_onsets=True)
    complete_runs = run_simulations(complete_graph, config.workload, sim, seeds, workers)
    scale_free_runs = run_simulations(scale_free_graph, config.workload, sim, seeds, workers)
    complete = _topology_summary(complete_runs)
    scale_free_summary = _topology_summary(scale_free_runs)

    onsets = []
    for j, category in enumerate(scale_free.categories):
        reached = [run.category_onsets[j] for run in scale_free_runs if run.category_onsets[j] is not None]
        onsets.append({
            'category': j,
            'edges': category.edges,
            'probability': category.probability,
            'reached': len(reached),
            'mean_onset': float(np.mean(reached)) if reached else None,
        })

    ratio = None
    status = 'ok'
    note = ''
    if complete['mean'] is None or scale_free_summary['mean'] is None:
        status = 'inconclusive'
        note = "a topology never reached gamma within the horizon; raise sim.horizon"
    elif any((len(seeds) - s['finished']) * 2 > len(seeds) for s in (complete, scale_free_summary)):
        status = 'inconclusive'
        note = "most seeds exceeded the horizon; raise sim.horizon"
    if complete['mean'] is not None and scale_free_summary['mean'] is not None:
        ratio = scale_free_summary['mean'] / complete['mean']
    return TopologyComparison(complete=complete, scale_free=scale_free_summary, ratio=ratio,
                              category_onsets=onsets, status=status, note=note)
