"""Factorial moments of the waiting count, by exact recursions.

The n-th factorial moment of level i is the n-th derivative of its partial
generating function at 1.  Level 0 is differentiated in closed form; the
interior levels satisfy a linear recursion obtained by differentiating the
functional equation n times; the all-busy level needs an extra application
of L'Hopital and therefore one interior order more than requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import ModelParams


def level0_moments(params: ModelParams, pi00: float, n_max: int) -> list[float]:
    """Derivatives of the empty-level GF at z = 1, orders 0 .. n_max.

    The GF is (lam + a0) pi00 / d(z) with d(z) = lam + a0 - lam beta(z).
    Derivatives of 1/d follow the reciprocal convolution recurrence

        (1/d)^(n) = -(1/d(1)) sum_{k=1..n} C(n,k) d^(k)(1) (1/d)^(n-k),

    with d(1) = a0 and d^(k)(1) = -lam beta^(k)(1).  For unit batches this
    collapses to n! pi00 (lam)^n (lam + a0) / a0^(n+1); for general batches
    the higher beta derivatives contribute, so the recurrence is the exact
    form.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    lam = params.arrival_rate
    a0 = params.setup_rates[0]
    batch = params.batch
    recip = [1.0 / a0]
    for n in range(1, n_max + 1):
        acc = 0.0
        for k in range(1, n + 1):
            acc += math.comb(n, k) * (-lam * batch.factorial_derivative(k)) * recip[n - k]
        recip.append(-acc / a0)
    scale = (lam + a0) * pi00
    return [scale * r for r in recip]


def first_moments(params: ModelParams, boundary, masses) -> list[float]:
    """First moments of levels 0 .. c-1, in the scaling of the inputs.

    ``boundary`` holds the no-queue probabilities up to level c and
    ``masses`` the level masses up to c-1.  Level i satisfies

        P_i'(1) = (a_{i-1}/a_i) P_{i-1}'(1)
                  + (lam E[B] - a_i - i mu) P_i(1) / a_i
                  + ((i+1) mu b_{i+1} + a_i b_i) / a_i.
    """
    lam = params.arrival_rate
    mu = params.service_rate
    eb = params.batch.mean
    out = [level0_moments(params, boundary[0], 1)[1]]
    for i in range(1, params.servers):
        a_i = params.setup_rates[i]
        a_im1 = params.setup_rates[i - 1]
        out.append(
            (a_im1 / a_i) * out[i - 1]
            + (lam * eb - a_i - i * mu) * masses[i] / a_i
            + ((i + 1) * mu * boundary[i + 1] + a_i * boundary[i]) / a_i
        )
    return out


def _interior_grid(params: ModelParams, boundary, masses, n_max: int) -> list[list[float]]:
    """Moment grid m[i][n] for i = 0 .. c-1, n = 0 .. n_max."""
    lam = params.arrival_rate
    mu = params.service_rate
    batch = params.batch
    eb = batch.mean
    grid = [level0_moments(params, boundary[0], n_max)]
    firsts = first_moments(params, boundary, masses)
    for i in range(1, params.servers):
        a_i = params.setup_rates[i]
        a_im1 = params.setup_rates[i - 1]
        row = [masses[i]]
        if n_max >= 1:
            row.append(firsts[i])
        for n in range(2, n_max + 1):
            acc = (a_im1 / a_i) * grid[i - 1][n]
            acc += n * (lam * eb - i * mu - a_i) * row[n - 1] / a_i
            for k in range(2, n + 1):
                coeff = lam * (
                    batch.factorial_derivative(k) + k * batch.factorial_derivative(k - 1)
                )
                acc += math.comb(n, k) * coeff * row[n - k] / a_i
            row.append(acc)
        grid.append(row)
    return grid


def _top_row(params: ModelParams, interior_grid, top_mass: float, n_max: int) -> list[float]:
    """Moments of the all-busy level, orders 0 .. n_max.

    Each order n needs the interior level at order n + 1:

        P_c^(n)(1) = A_n / ((n+1)(c mu - lam E[B])),
        A_n = a_{c-1} P_{c-1}^(n+1)(1)
              + sum_{k=2..n+1} C(n+1,k) lam (k beta^(k-1)(1) + beta^(k)(1))
                               P_c^(n+1-k)(1).
    """
    lam = params.arrival_rate
    mu = params.service_rate
    c = params.servers
    batch = params.batch
    a_top = params.setup_rates[c - 1]
    drift = c * mu - lam * batch.mean
    row = [top_mass]
    for n in range(1, n_max + 1):
        acc = a_top * interior_grid[c - 1][n + 1]
        for k in range(2, n + 2):
            coeff = lam * (
                k * batch.factorial_derivative(k - 1) + batch.factorial_derivative(k)
            )
            acc += math.comb(n + 1, k) * coeff * row[n + 1 - k]
        row.append(acc / ((n + 1) * drift))
    return row


@dataclass(frozen=True)
class MomentTable:
    """values[i][n] = n-th factorial moment of level i, normalized."""

    values: tuple[tuple[float, ...], ...]
    order: int

    def moment(self, level: int, n: int) -> float:
        return self.values[level][n]


def moment_table(solved, n_max: int = 4) -> MomentTable:
    """Factorial moments of every level up to ``n_max``.

    The interior recursion is run one order deeper than requested because
    the all-busy level consumes it.
    """
    params = solved.params
    boundary = solved.boundary
    masses = solved.level_masses
    grid = _interior_grid(params, boundary, masses, n_max + 1)
    top = _top_row(params, grid, masses[params.servers], n_max)
    values = tuple(tuple(row[: n_max + 1]) for row in grid) + (tuple(top),)
    return MomentTable(values=values, order=n_max)


def interior_first_moment(solved, level: int) -> float:
    """First moment of an interior level 1 .. c-1 (normalized)."""
    if not 1 <= level <= solved.params.servers - 1:
        raise ValueError("level must be interior (1 .. c-1)")
    return first_moments(solved.params, solved.boundary, solved.level_masses)[level]


def interior_higher_moment(solved, level: int, n: int) -> float:
    """n-th factorial moment (n >= 2) of an interior level."""
    if n < 2:
        raise ValueError("use interior_first_moment for n < 2")
    if not 1 <= level <= solved.params.servers - 1:
        raise ValueError("level must be interior (1 .. c-1)")
    grid = _interior_grid(solved.params, solved.boundary, solved.level_masses, n)
    return grid[level][n]


def top_moment(solved, n: int) -> float:
    """n-th factorial moment of the all-busy level (normalized)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    params = solved.params
    if n == 0:
        return solved.level_masses[params.servers]
    grid = _interior_grid(params, solved.boundary, solved.level_masses, n + 1)
    return _top_row(params, grid, solved.level_masses[params.servers], n)[n]


def mean_queue_length(solved) -> float:
    """Mean number of waiting customers: the level first moments summed."""
    return math.fsum(solved.first_moments) + top_moment(solved, 1)
