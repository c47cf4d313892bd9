"""
Domain Models for the Edge Corruption Model
Edge states, graph and workload descriptions, and the records both engines return
"""

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional, Union

import numpy as np

from errors import InvalidInputError, IllegalTransitionError

SECONDS_PER_DAY = 86400.0
SECONDS_PER_MONTH = 30 * SECONDS_PER_DAY  # months are 30-day months throughout

# Share of all transactions that read and then write edges
UPDATE_FRACTION = 0.10

# Full-scale Scale-Free table: category j holds 10^(4+j) edges
STANDARD_ACCESS_PROBABILITIES = (0.50, 0.25, 0.13, 0.06, 0.03, 0.02, 0.01)
STANDARD_CATEGORY_SIZES = tuple(10 ** (4 + j) for j in range(7))

CONSERVATION_RTOL = 1e-9


class EdgeState(IntEnum):
    """Corruption state of one edge record"""
    CLEAN_LOCAL = 0
    CLEAN_DISTRIBUTED = 1
    RECIPROCALLY_INCONSISTENT = 2
    SEMANTICALLY_CORRUPT = 3

    @property
    def is_distributed(self):
        return self in (EdgeState.CLEAN_DISTRIBUTED, EdgeState.RECIPROCALLY_INCONSISTENT)

    @property
    def is_clean(self):
        return self in (EdgeState.CLEAN_LOCAL, EdgeState.CLEAN_DISTRIBUTED)


# The only state changes an edge can undergo. State 3 is absorbing.
LEGAL_TRANSITIONS = frozenset({
    (EdgeState.CLEAN_DISTRIBUTED, EdgeState.RECIPROCALLY_INCONSISTENT),
    (EdgeState.RECIPROCALLY_INCONSISTENT, EdgeState.CLEAN_DISTRIBUTED),
    (EdgeState.CLEAN_LOCAL, EdgeState.SEMANTICALLY_CORRUPT),
    (EdgeState.CLEAN_DISTRIBUTED, EdgeState.SEMANTICALLY_CORRUPT),
    (EdgeState.RECIPROCALLY_INCONSISTENT, EdgeState.SEMANTICALLY_CORRUPT),
})


def check_transition(source, target, time=None, edge=None):
    """
    Raise IllegalTransitionError unless source -> target is a legal arc

    Staying in the same state is not a transition and always passes.
    """
    source, target = EdgeState(source), EdgeState(target)
    if source != target and (source, target) not in LEGAL_TRANSITIONS:
        raise IllegalTransitionError(source, target, time=time, edge=edge)


@dataclass(frozen=True)
class StateVector:
    """Edge counts per corruption state; real-valued in the fluid model"""
    n0: float
    n1: float
    n2: float
    n3: float
    total: float

    def __post_init__(self):
        if self.total <= 0:
            raise InvalidInputError("StateVector total must be positive", field="total")
        for name in ('n0', 'n1', 'n2', 'n3'):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"StateVector.{name} must be non-negative", field=name)
        if not math.isclose(self.n0 + self.n1 + self.n2 + self.n3, self.total,
                            rel_tol=CONSERVATION_RTOL):
            raise InvalidInputError(
                f"state counts sum to {self.n0 + self.n1 + self.n2 + self.n3}, expected {self.total}",
                field="total")

    @classmethod
    def initial(cls, graph):
        """The clean starting state [(1-f)N, fN, 0, 0]"""
        distributed = graph.distributed_fraction * graph.n_edges
        return cls(graph.n_edges - distributed, distributed, 0.0, 0.0, float(graph.n_edges))

    def as_tuple(self):
        return (self.n0, self.n1, self.n2, self.n3)

    def fractions(self):
        return tuple(n / self.total for n in self.as_tuple())

    def to_dict(self):
        return {'n0': self.n0, 'n1': self.n1, 'n2': self.n2, 'n3': self.n3, 'total': self.total}


@dataclass(frozen=True)
class Category:
    """One popularity class of a Scale-Free access pattern"""
    edges: int
    probability: float

    def to_dict(self):
        return {'edges': self.edges, 'probability': self.probability}


@dataclass(frozen=True)
class CompleteTopology:
    """Every edge is equally likely to be accessed"""
    kind = 'complete'

    def per_edge_probability(self, index, n_edges):
        return 1.0 / n_edges

    def to_dict(self):
        return {'kind': self.kind}


@dataclass(frozen=True)
class ScaleFreeTopology:
    """Popularity categories: pick category j with probability p_j, then uniformly inside it"""
    categories: tuple
    kind = 'scale-free'

    # derived lookup tables, excluded from equality
    offsets: tuple = field(init=False, repr=False, compare=False)
    cumulative: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        categories = tuple(c if isinstance(c, Category) else Category(*c) for c in self.categories)
        if not categories:
            raise InvalidInputError("Scale-Free topology needs at least one category",
                                    field="graph.topology.categories")
        for j, category in enumerate(categories):
            if category.edges < 1:
                raise InvalidInputError(f"category {j} must hold at least one edge",
                                        field="graph.topology.categories")
            if category.probability <= 0:
                raise InvalidInputError(f"category {j} access probability must be positive",
                                        field="graph.topology.categories")
        total_probability = sum(c.probability for c in categories)
        if not math.isclose(total_probability, 1.0, abs_tol=1e-9):
            raise InvalidInputError(f"access probabilities sum to {total_probability}, expected 1.0",
                                    field="graph.topology.categories")

        offsets = [0]
        for category in categories[:-1]:
            offsets.append(offsets[-1] + category.edges)
        cumulative = np.cumsum([c.probability for c in categories])
        cumulative[-1] = 1.0

        object.__setattr__(self, 'categories', categories)
        object.__setattr__(self, 'offsets', tuple(offsets))
        object.__setattr__(self, 'cumulative', cumulative)

    @classmethod
    def standard(cls):
        """Seven categories, N_j = 10^(4+j), p_j = 1/2^(j+1) rounded to two decimals"""
        return cls(tuple(Category(n, p) for n, p in zip(STANDARD_CATEGORY_SIZES, STANDARD_ACCESS_PROBABILITIES)))

    @classmethod
    def scaled(cls, n_edges, growth=2):
        """
        Desk-scale table with the standard seven access probabilities

        Category sizes grow geometrically by `growth` and are rounded so they
        add up to n_edges exactly; the last category absorbs the remainder.
        """
        count = len(STANDARD_ACCESS_PROBABILITIES)
        if n_edges < count:
            raise InvalidInputError(f"a scaled Scale-Free graph needs at least {count} edges",
                                    field="graph.n")
        weights = [growth ** j for j in range(count)]
        sizes = [max(1, int(round(n_edges * w / sum(weights)))) for w in weights[:-1]]
        sizes.append(n_edges - sum(sizes))
        if sizes[-1] < 1:
            raise InvalidInputError(f"cannot split {n_edges} edges into {count} categories",
                                    field="graph.n")
        return cls(tuple(Category(n, p) for n, p in zip(sizes, STANDARD_ACCESS_PROBABILITIES)))

    @property
    def n_edges(self):
        return sum(c.edges for c in self.categories)

    def category_of(self, index):
        """Category holding the given edge index"""
        return int(np.searchsorted(self.offsets, index, side='right')) - 1

    def per_edge_probability(self, index, n_edges=None):
        category = self.categories[self.category_of(index)]
        return category.probability / category.edges

    def to_dict(self):
        return {'kind': self.kind, 'categories': [c.to_dict() for c in self.categories]}


Topology = Union[CompleteTopology, ScaleFreeTopology]


@dataclass(frozen=True)
class GraphSpec:
    """Edge population, distributed fraction and access pattern"""
    n_edges: int
    distributed_fraction: float
    topology: Topology = field(default_factory=CompleteTopology)

    def __post_init__(self):
        if self.n_edges < 1:
            raise InvalidInputError("graph must hold at least one edge", field="graph.n")
        if not 0.0 <= self.distributed_fraction <= 1.0:
            raise InvalidInputError("distributed fraction must lie in [0, 1]", field="graph.f")
        if isinstance(self.topology, ScaleFreeTopology) and self.topology.n_edges != self.n_edges:
            raise InvalidInputError(
                f"Scale-Free categories hold {self.topology.n_edges} edges, graph has {self.n_edges}",
                field="graph.topology.categories")

    def to_dict(self):
        return {'n': self.n_edges, 'f': self.distributed_fraction, 'topology': self.topology.to_dict()}


@dataclass(frozen=True)
class WorkloadSpec:
    """Read-then-write query stream"""
    arrival_rate: float
    read_parameter: float = 0.4
    write_delay: float = 0.005
    tps: Optional[float] = None

    def __post_init__(self):
        if self.tps is not None and not math.isclose(self.arrival_rate, UPDATE_FRACTION * self.tps):
            raise InvalidInputError("lambda must equal 0.10 x tps when tps is given",
                                    field="workload.lambda")
        if self.arrival_rate <= 0:
            raise InvalidInputError("arrival rate must be positive", field="workload.lambda")
        if self.write_delay < 0:
            raise InvalidInputError("write delay must be non-negative", field="workload.delta")
        if not 0.0 < self.read_parameter <= 1.0:
            raise InvalidInputError("read parameter r must lie in (0, 1]", field="workload.r")

    @classmethod
    def from_tps(cls, tps, read_parameter=0.4, write_delay=0.005):
        """Only the updating tenth of all transactions matters"""
        return cls(UPDATE_FRACTION * tps, read_parameter, write_delay, tps=tps)

    def to_dict(self):
        data = {'r': self.read_parameter, 'delta': self.write_delay}
        if self.tps is not None:
            data['tps'] = self.tps
        else:
            data['lambda'] = self.arrival_rate
        return data


@dataclass(frozen=True)
class TransitionCoefficients:
    """Per-edge transition rates and the probabilities they derive from"""
    g_star3: float
    g_12: float
    g_21: float
    alpha: float
    beta: float
    q: float

    def rate(self, source, target, count):
        """a_ij = g_ij * n_i"""
        pair = (EdgeState(source), EdgeState(target))
        check_transition(*pair)
        if pair[1] == EdgeState.SEMANTICALLY_CORRUPT:
            return self.g_star3 * count
        if pair == (EdgeState.CLEAN_DISTRIBUTED, EdgeState.RECIPROCALLY_INCONSISTENT):
            return self.g_12 * count
        return self.g_21 * count

    def to_dict(self):
        return {'g_star3': self.g_star3, 'g_12': self.g_12, 'g_21': self.g_21,
                'alpha': self.alpha, 'beta': self.beta, 'q': self.q}


@dataclass(frozen=True)
class SolverConfig:
    gamma: float = 0.1
    fp_tolerance: float = 1e-8
    max_iterations: int = 10000
    damping: float = 1.0
    seed_state2: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise InvalidInputError("gamma must lie in (0, 1)", field="solver.gamma")
        if not 0.0 < self.damping <= 1.0:
            raise InvalidInputError("damping must lie in (0, 1]", field="solver.damping")
        if self.fp_tolerance <= 0:
            raise InvalidInputError("fp_tolerance must be positive", field="solver.fp_tolerance")
        if self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be at least 1", field="solver.max_iterations")
        if self.seed_state2 <= 0:
            raise InvalidInputError("seed_state2 must be positive", field="solver.seed_state2")

    def to_dict(self):
        return {'gamma': self.gamma, 'fp_tolerance': self.fp_tolerance,
                'max_iterations': self.max_iterations, 'damping': self.damping,
                'seed_state2': self.seed_state2}


@dataclass(frozen=True)
class AveragedState:
    """Time averages of n0, n1, n2 over [0, U_gamma]"""
    nbar0: float
    nbar1: float
    nbar2: float

    def as_tuple(self):
        return (self.nbar0, self.nbar1, self.nbar2)

    def to_dict(self):
        return {'nbar0': self.nbar0, 'nbar1': self.nbar1, 'nbar2': self.nbar2}


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    nbar0: float
    nbar1: float
    nbar2: float
    u_gamma: float
    change: float

    def to_dict(self):
        return {'iteration': self.iteration, 'nbar0': self.nbar0, 'nbar1': self.nbar1,
                'nbar2': self.nbar2, 'u_gamma': _finite_or_text(self.u_gamma),
                'change': _finite_or_text(self.change)}


@dataclass
class SolveResult:
    """Outcome of one fixed-point solve"""
    u_gamma: float
    averaged: Optional[AveragedState]
    alpha: float
    beta: float
    q: float
    iterations: int
    iteration_log: list
    converged: bool
    coefficients: Optional[TransitionCoefficients] = None
    residual: Optional[float] = None
    conservation_drift: Optional[float] = None
    note: str = ''

    @property
    def is_infinite(self):
        return math.isinf(self.u_gamma)

    @property
    def status(self):
        if not self.converged:
            return 'not-converged'
        return 'infinite' if self.is_infinite else 'converged'

    @property
    def u_gamma_days(self):
        return self.u_gamma / SECONDS_PER_DAY

    @property
    def u_gamma_months(self):
        return self.u_gamma / SECONDS_PER_MONTH

    def to_dict(self):
        return {
            'kind': 'solve',
            'status': self.status,
            'u_gamma_seconds': _finite_or_text(self.u_gamma),
            'u_gamma_days': _finite_or_text(self.u_gamma_days),
            'u_gamma_months': _finite_or_text(self.u_gamma_months),
            'averaged': self.averaged.to_dict() if self.averaged else None,
            'alpha': self.alpha,
            'beta': self.beta,
            'q': self.q,
            'coefficients': self.coefficients.to_dict() if self.coefficients else None,
            'iterations': self.iterations,
            'converged': self.converged,
            'residual': self.residual,
            'conservation_drift': self.conservation_drift,
            'note': self.note,
            'iteration_log': [record.to_dict() for record in self.iteration_log],
        }


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    horizon: float = 3600.0
    sample_interval: float = 1.0
    gamma: float = 0.1
    debug_assertions: bool = True
    dirty_reads: bool = True
    # keep going past the global crossing until every category has its onset
    until_category_onsets: bool = False

    def __post_init__(self):
        if self.horizon <= 0:
            raise InvalidInputError("horizon must be positive", field="sim.horizon")
        if self.sample_interval <= 0:
            raise InvalidInputError("sample_interval must be positive", field="sim.sample_interval")
        if not 0.0 < self.gamma < 1.0:
            raise InvalidInputError("gamma must lie in (0, 1)", field="solver.gamma")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer", field="sim.seed")

    def to_dict(self):
        return {'seed': self.seed, 'horizon': self.horizon, 'sample_interval': self.sample_interval,
                'debug_assertions': self.debug_assertions, 'dirty_reads': self.dirty_reads}


@dataclass(eq=False)
class WriteInFlight:
    """A distributed write that has started but not reached its remote end"""
    edge: int
    start_time: float
    completion_time: float
    remote_end: str
    writer_dirty: bool
    conflicted: bool = False
    partner_dirty: bool = False

    @property
    def start_end(self):
        return 'A' if self.remote_end == 'B' else 'B'


@dataclass(slots=True)
class EdgeRecord:
    state: EdgeState
    is_distributed: bool
    category: int = 0
    in_flight: list = field(default_factory=list)

    @property
    def latest_write(self):
        return self.in_flight[-1] if self.in_flight else None


@dataclass
class SimResult:
    """Outcome of one simulation run"""
    seed: int
    u_gamma_estimate: Optional[float]
    end_time: float
    trajectory: list
    event_counts: dict
    final_state: tuple
    category_onsets: list = field(default_factory=list)

    @property
    def horizon_exceeded(self):
        return self.u_gamma_estimate is None

    def to_dict(self):
        return {
            'kind': 'simulate',
            'seed': self.seed,
            'status': 'horizon-exceeded' if self.horizon_exceeded else 'reached',
            'u_gamma_estimate': self.u_gamma_estimate,
            'end_time': self.end_time,
            'final_state': list(self.final_state),
            'event_counts': dict(sorted(self.event_counts.items())),
            'category_onsets': list(self.category_onsets),
            'samples': len(self.trajectory),
        }


SWEEP_PARAMETERS = ('lambda', 'delta', 'f', 'gamma', 'r')

# upper end of each bounded parameter: (limit, limit itself allowed)
SWEEP_UPPER_BOUNDS = {'f': (1.0, True), 'gamma': (1.0, False), 'r': (1.0, True)}


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    steps: int
    scale: str = 'linear'

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise InvalidInputError(f"unknown sweep parameter {self.parameter!r}", field="sweep.parameter")
        if self.steps < 2:
            raise InvalidInputError("sweep needs at least 2 steps", field="sweep.steps")
        if self.start <= 0 or self.stop <= 0:
            raise InvalidInputError("sweep bounds must be positive", field="sweep.from")
        if not self.start < self.stop:
            raise InvalidInputError("sweep bounds must satisfy from < to", field="sweep.to")
        if self.parameter in SWEEP_UPPER_BOUNDS:
            limit, inclusive = SWEEP_UPPER_BOUNDS[self.parameter]
            if self.stop > limit or (self.stop == limit and not inclusive):
                bound = 'at most' if inclusive else 'below'
                raise InvalidInputError(f"{self.parameter} sweep must end {bound} {limit:g}", field="sweep.to")
        if self.scale not in ('linear', 'log'):
            raise InvalidInputError("sweep scale must be 'linear' or 'log'", field="sweep.scale")

    def values(self):
        if self.scale == 'log':
            grid = np.geomspace(self.start, self.stop, self.steps)
        else:
            grid = np.linspace(self.start, self.stop, self.steps)
        return [float(v) for v in grid]

    def to_dict(self):
        return {'parameter': self.parameter, 'from': self.start, 'to': self.stop,
                'steps': self.steps, 'scale': self.scale}


@dataclass(frozen=True)
class ExperimentConfig:
    graph: GraphSpec
    workload: WorkloadSpec
    solver: SolverConfig
    sim: SimConfig
    sweep: Optional[SweepSpec] = None
    seeds: tuple = ()
    validation_tolerance: float = 0.10

    def replicate_seeds(self):
        """Seeds for multi-run experiments; the single sim seed when none were listed"""
        return self.seeds if self.seeds else (self.sim.seed,)


@dataclass
class ValidationReport:
    """Analytic U_gamma against the simulator's mean first passage"""
    analytic_u: float
    analytic_status: str
    sim_mean: Optional[float]
    sim_std: Optional[float]
    sim_ci95: Optional[float]
    relative_error: Optional[float]
    tolerance: float
    status: str
    per_seed: list
    note: str = ''

    @property
    def passed(self):
        return self.status in ('pass', 'consistent-degenerate')

    @property
    def ci_overlaps(self):
        if self.sim_mean is None or self.sim_ci95 is None or math.isinf(self.analytic_u):
            return False
        return abs(self.analytic_u - self.sim_mean) <= self.sim_ci95

    def to_dict(self):
        return {
            'kind': 'validate',
            'status': self.status,
            'analytic_u_seconds': _finite_or_text(self.analytic_u),
            'analytic_status': self.analytic_status,
            'sim_mean': self.sim_mean,
            'sim_std': self.sim_std,
            'sim_ci95': self.sim_ci95,
            'ci_overlaps': self.ci_overlaps,
            'relative_error': self.relative_error,
            'tolerance': self.tolerance,
            'note': self.note,
            'per_seed': [{'seed': seed, 'u_gamma_estimate': u} for seed, u in self.per_seed],
        }


@dataclass
class TopologyComparison:
    """Simulated U_gamma for Complete and Scale-Free access at matched N, f and workload"""
    complete: dict
    scale_free: dict
    ratio: Optional[float]
    category_onsets: list
    status: str
    note: str = ''

    def to_dict(self):
        return {
            'kind': 'compare-topologies',
            'status': self.status,
            'complete': self.complete,
            'scale_free': self.scale_free,
            'ratio': self.ratio,
            'category_onsets': self.category_onsets,
            'note': self.note,
        }


def _finite_or_text(value):
    """JSON has no infinity; infinite values are written as the string 'inf'"""
    if value is not None and math.isinf(value):
        return 'inf'
    return value
