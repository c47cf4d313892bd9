"""
Fluid Solver
Time-averaged fluid trajectories and the fixed-point search for U_gamma
"""

import logging
import math

from scipy.optimize import bisect

from errors import InvalidInputError
from models import (AveragedState, CompleteTopology, IterationRecord, SolveResult,
                    StateVector)
from utils.formulas import (all_reads_clean_probability, clean_fraction,
                            conflict_probability, transition_coefficients)
from utils.numerics import ramp_integral, relative_decay

logger = logging.getLogger(__name__)

PASSAGE_RTOL = 1e-10
MAX_BRACKET_DOUBLINGS = 2000
CHANGE_FLOOR = 1e-12


class ClosedFormTrajectory:
    """
    Closed-form solution of the decoupled fluid equations

    With the coupling terms frozen at their averages every equation is linear
    with constant coefficients:
        n0(t) = n0(0) e^(-k0 t)                          k0 = g_*3
        n1(t) = n1(0) e^(-k1 t) + g_21 nbar2 t phi(k1 t)  k1 = g_*3 + g_12
        n2(t) = g_12 nbar1 t phi(k2 t)                   k2 = g_*3 + g_21
        n3(t) = g_*3 * integral of (n0 + n1 + n2)
    where phi(x) = (1 - e^(-x)) / x. Writing the relaxation terms through phi
    keeps every rate-zero limit finite.
    """

    def __init__(self, initial, coefficients, averaged):
        self.initial = initial
        self.coefficients = coefficients
        self.averaged = averaged
        g = coefficients
        self.k0 = g.g_star3
        self.k1 = g.g_star3 + g.g_12
        self.k2 = g.g_star3 + g.g_21
        self.inflow_1 = g.g_21 * averaged.nbar2
        self.inflow_2 = g.g_12 * averaged.nbar1

    @property
    def total(self):
        return self.initial.total

    def n0(self, t):
        return self.initial.n0 * math.exp(-self.k0 * t)

    def n1(self, t):
        return (self.initial.n1 * math.exp(-self.k1 * t)
                + self.inflow_1 * t * relative_decay(self.k1 * t))

    def n2(self, t):
        return self.inflow_2 * t * relative_decay(self.k2 * t)

    def integral0(self, t):
        return self.initial.n0 * t * relative_decay(self.k0 * t)

    def integral1(self, t):
        return (self.initial.n1 * t * relative_decay(self.k1 * t)
                + self.inflow_1 * t * t * ramp_integral(self.k1 * t))

    def integral2(self, t):
        return self.inflow_2 * t * t * ramp_integral(self.k2 * t)

    def n3(self, t):
        if self.k0 == 0:
            return 0.0
        return self.k0 * (self.integral0(t) + self.integral1(t) + self.integral2(t))

    def evaluate(self, t):
        return (self.n0(t), self.n1(t), self.n2(t), self.n3(t))

    def sample(self, times):
        """Rows (t, n0, n1, n2, n3) for trajectory export"""
        return [(t, *self.evaluate(t)) for t in times]


def closed_form_trajectory(graph, coefficients, averaged):
    """Build the trajectory starting from the clean database of `graph`"""
    return ClosedFormTrajectory(StateVector.initial(graph), coefficients, averaged)


def time_averages(trajectory, u_gamma):
    """
    Exact averages of n0, n1, n2 over [0, u_gamma]

    Args:
        trajectory: ClosedFormTrajectory
        u_gamma: positive, finite horizon in seconds

    Returns:
        AveragedState
    """
    if not u_gamma > 0 or math.isinf(u_gamma):
        raise InvalidInputError("averaging horizon must be positive and finite", field="u_gamma")
    return AveragedState(
        nbar0=trajectory.integral0(u_gamma) / u_gamma,
        nbar1=trajectory.integral1(u_gamma) / u_gamma,
        nbar2=trajectory.integral2(u_gamma) / u_gamma,
    )


def first_passage(trajectory, gamma, n_edges):
    """
    Smallest t with n3(t) >= gamma N

    n3 must be non-decreasing. The root is bracketed by doubling and refined
    by bisection to relative tolerance 1e-10. Returns math.inf when n3 never
    reaches the threshold (no state-3 inflow at all, for instance).
    """
    target = gamma * n_edges
    if getattr(trajectory, 'k0', None) == 0:
        return math.inf

    def excess(t):
        return trajectory.n3(t) - target

    low, high = 0.0, 1.0
    rate = getattr(trajectory, 'k0', 0.0)
    if rate > 0:
        # n3 grows no faster than g_*3 N t, so this is still below the root
        high = target / (rate * max(n_edges, 1.0))
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if excess(high) >= 0:
            break
        low, high = high, 2.0 * high
        if math.isinf(high):
            return math.inf
    else:
        return math.inf

    return bisect(excess, low, high, xtol=1e-300, rtol=PASSAGE_RTOL, maxiter=400)


class FluidSolver:
    """Fixed-point iteration over (nbar0, nbar1, nbar2, U_gamma)"""

    def __init__(self, graph, workload, config):
        if not isinstance(graph.topology, CompleteTopology):
            raise InvalidInputError("the fluid solver covers the Complete topology only; "
                                    "simulate Scale-Free graphs instead", field="graph.topology.kind")
        self.graph = graph
        self.workload = workload
        self.config = config
        self.initial = StateVector.initial(graph)
        self.q = conflict_probability(workload.arrival_rate, workload.write_delay, graph.n_edges)

    def solve(self):
        """
        Iterate averages -> alpha -> beta -> g -> trajectory -> (averages, U)

        Returns:
            SolveResult; `converged` is False when max_iterations ran out
        """
        degenerate = self._degenerate_note()
        if degenerate:
            logger.info("U_gamma is infinite: %s", degenerate)
            return SolveResult(u_gamma=math.inf, averaged=None, alpha=1.0, beta=1.0, q=self.q,
                               iterations=0, iteration_log=[], converged=True, note=degenerate)

        config = self.config
        # seed edges are taken from state 1 so alpha starts strictly below 1
        seed = min(config.seed_state2, self.initial.n1)
        averaged = AveragedState(self.initial.n0, self.initial.n1 - seed, seed)
        u_gamma = None
        log = []
        converged = False
        step = None

        for iteration in range(1, config.max_iterations + 1):
            step = self._pipeline(averaged)
            if math.isinf(step.u_gamma):
                log.append(IterationRecord(iteration, *averaged.as_tuple(), math.inf, math.inf))
                logger.warning("iteration %d: state 3 never reaches gamma N", iteration)
                break

            mixed = self._mix(averaged, step.averaged)
            if u_gamma is None:
                new_u, change = step.u_gamma, math.inf
            else:
                new_u = _blend(config.damping, step.u_gamma, u_gamma)
                change = _relative_change(averaged.as_tuple() + (u_gamma,),
                                          mixed.as_tuple() + (new_u,))
            averaged, u_gamma = mixed, new_u
            log.append(IterationRecord(iteration, *averaged.as_tuple(), u_gamma, change))
            logger.debug("iteration %d: nbar=(%.6g, %.6g, %.6g) U=%.6g change=%.3g",
                         iteration, *averaged.as_tuple(), u_gamma, change)
            if change <= config.fp_tolerance:
                converged = True
                break

        if u_gamma is None or math.isinf(step.u_gamma):
            return SolveResult(u_gamma=math.inf, averaged=averaged, alpha=step.coefficients.alpha,
                               beta=step.coefficients.beta, q=self.q, iterations=len(log),
                               iteration_log=log, converged=converged,
                               coefficients=step.coefficients,
                               note="state 3 never reaches the threshold")

        final = self._pipeline(averaged)
        residual = _relative_change(averaged.as_tuple() + (u_gamma,),
                                    final.averaged.as_tuple() + (final.u_gamma,))
        trajectory = closed_form_trajectory(self.graph, final.coefficients, averaged)
        drift = (sum(trajectory.evaluate(u_gamma)) - self.graph.n_edges) / self.graph.n_edges

        if converged:
            logger.info("converged after %d iterations: U_gamma=%.6g s", len(log), u_gamma)
            note = ''
        else:
            logger.warning("no convergence within %d iterations (last change %.3g)",
                           config.max_iterations, log[-1].change)
            note = f"not converged within {config.max_iterations} iterations"

        return SolveResult(u_gamma=u_gamma, averaged=averaged, alpha=final.coefficients.alpha,
                           beta=final.coefficients.beta, q=self.q, iterations=len(log),
                           iteration_log=log, converged=converged, coefficients=final.coefficients,
                           residual=residual, conservation_drift=drift, note=note)

    def trajectory(self, result):
        """Closed-form trajectory at a solved fixed point"""
        return closed_form_trajectory(self.graph, result.coefficients, result.averaged)

    def _pipeline(self, averaged):
        """One pass of the fixed-point map"""
        n = self.graph.n_edges
        alpha = min(1.0, max(0.0, clean_fraction(*averaged.as_tuple(), n)))
        beta = all_reads_clean_probability(alpha, self.workload.read_parameter)
        coefficients = transition_coefficients(self.workload.arrival_rate, n, beta, self.q, alpha=alpha)
        trajectory = closed_form_trajectory(self.graph, coefficients, averaged)
        u_gamma = first_passage(trajectory, self.config.gamma, n)
        new_averaged = None if math.isinf(u_gamma) else time_averages(trajectory, u_gamma)
        return _Step(coefficients, new_averaged, u_gamma)

    def _mix(self, old, new):
        d = self.config.damping
        return AveragedState(*(_blend(d, b, a) for a, b in zip(old.as_tuple(), new.as_tuple())))

    def _degenerate_note(self):
        if self.graph.distributed_fraction == 0:
            return "no distributed edges"
        if self.workload.write_delay == 0:
            return "instantaneous writes never conflict"
        return ''


class _Step:
    __slots__ = ('coefficients', 'averaged', 'u_gamma')

    def __init__(self, coefficients, averaged, u_gamma):
        self.coefficients = coefficients
        self.averaged = averaged
        self.u_gamma = u_gamma


def _blend(damping, new, old):
    return damping * new + (1.0 - damping) * old


def _relative_change(old, new):
    return max(abs(b - a) / max(abs(a), CHANGE_FLOOR) for a, b in zip(old, new))


def fixed_point_solve(graph, workload, config):
    """Solve for U_gamma on a Complete graph"""
    return FluidSolver(graph, workload, config).solve()
