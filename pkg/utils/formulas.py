"""
Corruption Model Formulas
Closed-form probabilities and rates shared by the fluid solver and the simulator
"""

import numpy as np

from errors import InvalidInputError
from models import TransitionCoefficients


def clean_fraction(n0, n1, n2, total):
    """(n0 + n1 + n2/2) / N; a state-2 read lands on the correct side half the time"""
    if total <= 0:
        raise InvalidInputError("edge count N must be positive", field="N")
    return (n0 + n1 + 0.5 * n2) / total


def clean_read_probability(state):
    """
    Probability alpha that one read returns a clean record

    Args:
        state: StateVector

    Returns:
        alpha in [0, 1]
    """
    return clean_fraction(state.n0, state.n1, state.n2, state.total)


def all_reads_clean_probability(alpha, r):
    """
    Probability beta that every read of a query is clean

    The read count K has P(K=k) = r (1-r)^(k-2) for k >= 2, so
    beta = E[alpha^K] = alpha^2 r / (1 - alpha (1 - r)).
    """
    if not 0.0 <= alpha <= 1.0:
        raise InvalidInputError("alpha must lie in [0, 1]", field="alpha")
    if not 0.0 < r <= 1.0:
        raise InvalidInputError("r must lie in (0, 1]", field="r")
    return alpha * alpha * r / (1.0 - alpha * (1.0 - r))


def conflict_probability(arrival_rate, write_delay, n_edges):
    """
    Probability q that a distributed write is overlapped at its remote end

    Race between the write completing (rate 1/delta) and another query
    starting an update at the same end of the same edge (rate lambda / 2N).
    """
    if arrival_rate < 0 or write_delay < 0:
        raise InvalidInputError("lambda and delta must be non-negative", field="workload")
    if n_edges < 1:
        raise InvalidInputError("N must be at least 1", field="N")
    load = arrival_rate * write_delay
    return load / (2.0 * n_edges + load)


def transition_coefficients(arrival_rate, n_edges, beta, q, alpha=None):
    """
    Per-edge transition rates g_ij, with a_ij = g_ij * n_i

    - g_*3 = lambda (1 - beta) / N: the updating query read something corrupt
    - g_12 = lambda beta^2 q / N: both conflicting writers clean, write conflicted
    - g_21 = lambda beta (1 - q) / N: clean writer, conflict-free overwrite
    """
    if n_edges <= 0:
        raise InvalidInputError("N must be positive", field="N")
    per_edge = arrival_rate / n_edges
    return TransitionCoefficients(
        g_star3=per_edge * (1.0 - beta),
        g_12=per_edge * beta * beta * q,
        g_21=per_edge * beta * (1.0 - q),
        alpha=alpha if alpha is not None else float('nan'),
        beta=beta,
        q=q,
    )


def fluid_derivatives(state, coefficients, averaged=None):
    """
    Right-hand sides [n0', n1', n2', n3'] of the fluid equations

    Args:
        state: StateVector (or any object with n0..n3)
        coefficients: TransitionCoefficients
        averaged: optional AveragedState; when given the coupling terms use
            nbar2 in n1' and nbar1 in n2' (the decoupled form)

    Returns:
        numpy array of four derivatives
    """
    g3, g12, g21 = coefficients.g_star3, coefficients.g_12, coefficients.g_21
    n0, n1, n2 = state.n0, state.n1, state.n2
    inflow_1 = g21 * (averaged.nbar2 if averaged is not None else n2)
    inflow_2 = g12 * (averaged.nbar1 if averaged is not None else n1)
    return np.array([
        -g3 * n0,
        inflow_1 - (g3 + g12) * n1,
        inflow_2 - (g3 + g21) * n2,
        g3 * (n0 + n1 + n2),
    ])
