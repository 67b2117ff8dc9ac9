"""Energy, cost, waiting and decomposition measures of a solved model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import BatchDistribution, ModelParams
from .moments import mean_queue_length
from .solver import JointDistribution, SolvedModel


def setup_probability(solved: SolvedModel) -> float:
    """Stationary probability that a setup is in progress.

    A setup runs exactly in the states with waiting customers and a spare
    server, i.e. everywhere except the no-queue states below the top level
    and the whole all-busy level.
    """
    below = math.fsum(solved.boundary[:-1])
    return 1.0 - below - solved.top_mass


def power_on_off(solved: SolvedModel) -> float:
    """Mean power draw under the switch-off policy.

    Setup cost is charged while a setup is in progress; run cost is charged
    per busy server, whose long-run mean is lam E[B] / mu regardless of the
    setup policy (work conservation).
    """
    costs = solved.params.costs
    return costs.setup * setup_probability(solved) + costs.run * solved.params.mean_busy_servers


def power_on_idle(params: ModelParams) -> float:
    """Mean power draw when idle servers stay on: run + idle split of c."""
    busy = params.mean_busy_servers
    return params.costs.run * busy + params.costs.idle * (params.servers - busy)


def cost_functions(solved: SolvedModel, onidle_mean_queue: float) -> tuple[float, float]:
    """Total cost (power + weighted mean queue) of both policies.

    ``onidle_mean_queue`` is the mean waiting count of the conventional
    system without setup, e.g. from :func:`setupq.oracle.onidle_mean_queue`.
    """
    delta = solved.params.costs.delta
    on_off = power_on_off(solved) + mean_queue_length(solved) / delta
    on_idle = power_on_idle(solved.params) + onidle_mean_queue / delta
    return on_off, on_idle


def mean_wait(solved: SolvedModel) -> float:
    """Mean waiting time via Little's law on the waiting room."""
    lam_customers = solved.params.arrival_rate * solved.params.batch.mean
    return mean_queue_length(solved) / lam_customers


def batch_position_probabilities(batch: BatchDistribution) -> tuple[float, ...]:
    """Probability that an arriving customer is j-th within its batch.

    Size-biased tail sums: r_j = P(B >= j) / E[B], a nonincreasing sequence.
    """
    eb = batch.mean
    return tuple(t / eb for t in batch.tail_probabilities())


@dataclass(frozen=True, eq=False)
class PositionDistribution:
    """Joint law of the level seen by an arriving customer and its position.

    ``rows[i][t]`` is the probability of finding level i and standing at
    overall position i + 1 + t (positions count customers ahead plus the
    arriver itself, so the earliest position on level i is i + 1).
    """

    in_batch: tuple[float, ...]
    rows: tuple[np.ndarray, ...]

    def prob(self, level: int, position: int) -> float:
        t = position - level - 1
        row = self.rows[level]
        if t < 0 or t >= len(row):
            return 0.0
        return float(row[t])

    @property
    def total_mass(self) -> float:
        return float(sum(row.sum() for row in self.rows))


def position_distribution(joint: JointDistribution, batch: BatchDistribution) -> PositionDistribution:
    """Distribution of (level, position) seen by an arriving customer.

    Convolves each level of the stationary table with the within-batch
    position probabilities: the batch sees the stationary state, and the
    tagged customer stands r_j-deep inside its own batch.
    """
    r = batch_position_probabilities(batch)
    r_arr = np.asarray(r)
    rows = []
    for row in joint.rows:
        conv = np.convolve(np.asarray(row), r_arr)
        conv.setflags(write=False)
        rows.append(conv)
    return PositionDistribution(in_batch=r, rows=tuple(rows))


def conventional_waiting_coefficients(params: ModelParams, count: int) -> np.ndarray:
    """Coefficients of the conditional waiting law of the system without setup.

    The generating function is (c mu - lam E[B])(z - 1) / f_c(z) with
    f_c(z) = (lam + c mu) z - lam z beta(z) - c mu.  Since f_c vanishes at
    1, the (z - 1) factor divides out exactly (synthetic division) and the
    series of the reciprocal polynomial follows from the standard
    convolution recurrence.  Coefficient 0 equals 1 - rho.
    """
    lam = params.arrival_rate
    mu = params.service_rate
    c = params.servers
    batch = params.batch
    top = batch.max_size
    # f_c coefficients: a_0 = -c mu, a_1 = lam + c mu, a_{k+1} = -lam beta_k
    coeff = np.zeros(top + 2)
    coeff[0] = -c * mu
    coeff[1] = lam + c * mu
    for k, p in zip(batch.sizes, batch.probs):
        coeff[k + 1] -= lam * p
    # synthetic division by (z - 1); the residual is zero because f_c(1) = 0
    h = np.zeros(top + 1)
    h[top] = coeff[top + 1]
    for m in range(top, 0, -1):
        h[m - 1] = coeff[m] + h[m]
    out = np.zeros(count)
    out[0] = 1.0 / h[0]
    for n in range(1, count):
        acc = 0.0
        for m in range(1, min(n, top) + 1):
            acc += h[m] * out[n - m]
        out[n] = -acc / h[0]
    return (c * mu - lam * batch.mean) * out


def decomposition_gap(
    solved: SolvedModel, joint: JointDistribution, k_max: int | None = None
) -> float:
    """Pointwise gap in the conditional waiting-queue decomposition.

    Given all servers busy, the waiting count should equal the independent
    sum of (a) the conditional waiting count of the conventional system
    without setup and (b) the stationary number of waiting customers seen
    ahead by a waiting customer one level below (the equilibrium tail law
    of that level).  Returns max_k of the absolute difference between the
    conditional law from the table and the convolution of (a) and (b).
    """
    c = solved.params.servers
    row_c = np.asarray(joint.rows[c])
    row_below = np.asarray(joint.rows[c - 1])
    if k_max is None:
        k_max = min(len(row_c), len(row_below)) - 2
    if k_max < 0:
        raise ValueError("table too shallow for the decomposition check")
    conditional = row_c[: k_max + 1] / solved.top_mass
    g = conventional_waiting_coefficients(solved.params, k_max + 1)
    # equilibrium tail law of the level below, via complements against the
    # exact level mass so table truncation does not bias the tail sums
    mass_below = solved.level_masses[c - 1]
    partial = np.cumsum(row_below[: k_max + 1])
    tail = mass_below - partial
    residual = tail / solved.first_moments[c - 1]
    conv = np.convolve(g, residual)[: k_max + 1]
    return float(np.max(np.abs(conditional - conv)))


def mean_setup_servers(rows, counts) -> float:
    """Mean number of servers simultaneously in setup, from a joint table.

    ``counts[i]`` says how many servers are in setup at level i while
    customers wait (1 under the staggered policy, c - i under the vacation
    policy).  Diagnostic for cost models that charge per setting-up server
    rather than per setup period in progress.
    """
    total = 0.0
    for i, row in enumerate(rows[:-1]):
        waiting_mass = float(np.asarray(row)[1:].sum())
        total += counts[i] * waiting_mass
    return total


@dataclass(frozen=True)
class PerformanceReport:
    """Headline performance and energy figures of one model instance."""

    mean_queue: float
    level_masses: tuple[float, ...]
    power_on_off: float
    power_on_idle: float
    cost_on_off: float
    cost_on_idle: float
    mean_wait: float
    onidle_mean_queue: float
    decomposition_gap: float


def build_report(
    solved: SolvedModel,
    joint: JointDistribution,
    onidle_mean_queue: float,
) -> PerformanceReport:
    e_q = mean_queue_length(solved)
    on_off, on_idle = cost_functions(solved, onidle_mean_queue)
    lam_customers = solved.params.arrival_rate * solved.params.batch.mean
    return PerformanceReport(
        mean_queue=e_q,
        level_masses=solved.level_masses,
        power_on_off=power_on_off(solved),
        power_on_idle=power_on_idle(solved.params),
        cost_on_off=on_off,
        cost_on_idle=on_idle,
        mean_wait=e_q / lam_customers,
        onidle_mean_queue=onidle_mean_queue,
        decomposition_gap=decomposition_gap(solved, joint),
    )
