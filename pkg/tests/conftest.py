"""Shared builders, independent checkers and hypothesis strategies."""

from __future__ import annotations

import math

import numpy as np
from hypothesis import strategies as st

from setupq import BatchDistribution, ModelParams, SetupPolicy


def staggered(lam, mu, c, alpha, batch=None, costs=None):
    batch = batch or BatchDistribution.deterministic(1)
    kwargs = {"costs": costs} if costs is not None else {}
    return ModelParams.from_policy(lam, mu, c, SetupPolicy.staggered(alpha), batch, **kwargs)


def vacation(lam, mu, c, alpha, batch=None, costs=None):
    batch = batch or BatchDistribution.deterministic(1)
    kwargs = {"costs": costs} if costs is not None else {}
    return ModelParams.from_policy(lam, mu, c, SetupPolicy.vacation(alpha), batch, **kwargs)


def custom_rates(lam, mu, c, alphas, batch=None, costs=None):
    batch = batch or BatchDistribution.deterministic(1)
    kwargs = {"costs": costs} if costs is not None else {}
    return ModelParams.from_policy(lam, mu, c, SetupPolicy.custom(alphas), batch, **kwargs)


def from_rho(rho, mu, c, policy, batch):
    """Model with the requested traffic intensity (arrival rate derived)."""
    lam = rho * c * mu / batch.mean
    return ModelParams.from_policy(lam, mu, c, policy, batch)


def balance_residuals(params: ModelParams, rows) -> float:
    """Largest absolute residual of the per-state balance equations.

    ``rows[i][k]`` holds the probability of level i with k waiting; states
    whose neighbours fall outside the table are skipped.
    """
    lam = params.arrival_rate
    mu = params.service_rate
    c = params.servers
    sizes = params.batch.sizes
    probs = params.batch.probs

    def p(i, j):
        k = j - i
        row = rows[i]
        return float(row[k]) if 0 <= k < len(row) else None

    worst = 0.0
    j_top = min(len(rows[i]) + i for i in range(c + 1)) - 2
    for i in range(c + 1):
        a_i = params.setup_rates[i] if i < c else 0.0
        a_im1 = params.setup_rates[i - 1] if i >= 1 else 0.0
        for j in range(i, j_top):
            arr = math.fsum(
                q * p(i, j - k) for k, q in zip(sizes, probs) if j - k >= i
            )
            if j == i:
                # boundary state: service drops a level, next level feeds in
                out = (lam + i * mu) * p(i, i)
                inflow = arr * 0.0
                if i >= 1:
                    inflow += a_im1 * p(i - 1, i)
                if i >= 1:
                    inflow += i * mu * p(i, i + 1)
                if i < c:
                    nxt = p(i + 1, i + 1)
                    inflow += (i + 1) * mu * nxt
                res = out - inflow
            else:
                out = (lam + i * mu + a_i) * p(i, j)
                inflow = lam * arr
                if i >= 1:
                    inflow += a_im1 * p(i - 1, j)
                if i >= 1:
                    inflow += i * mu * p(i, j + 1)
                res = out - inflow
            worst = max(worst, abs(res))
    return worst


def table_gap(rows_a, rows_b, j_hi: int) -> float:
    """Max entrywise gap between two per-level tables up to j_hi jobs."""
    worst = 0.0
    for i, row in enumerate(rows_a):
        keep = j_hi - i + 1
        if keep <= 0:
            continue
        head = np.asarray(row[:keep])
        other = np.asarray(rows_b[i][: len(head)])
        n = min(len(head), len(other))
        if n:
            worst = max(worst, float(np.max(np.abs(head[:n] - other[:n]))))
    return worst


def factorial_sum(row, order: int) -> float:
    """sum_k k (k-1) ... (k-order+1) row[k], the table-side factorial moment."""
    k = np.arange(len(row), dtype=float)
    weight = np.ones_like(k)
    for step in range(order):
        weight *= k - step
    return float(np.sum(np.where(k >= order, weight, 0.0) * np.asarray(row)))


def backward_derivative(fn, n: int, h: float = 1e-3, levels: int = 3) -> float:
    """n-th derivative at 1 from backward differences, Richardson-extrapolated.

    Uses only points at or below 1, so generating functions never get
    evaluated past their radius of convergence.
    """

    def stencil(step):
        acc = 0.0
        for k in range(n + 1):
            acc += (-1) ** k * math.comb(n, k) * fn(1.0 - k * step)
        return acc / step**n

    estimates = [stencil(h / 2**m) for m in range(levels)]
    # first-order stencil: error series in powers of the step
    for order in range(1, levels):
        factor = 2.0**order
        estimates = [
            (factor * estimates[m + 1] - estimates[m]) / (factor - 1.0)
            for m in range(len(estimates) - 1)
        ]
    return estimates[0]


# hypothesis strategies ----------------------------------------------------

def batch_strategy():
    deterministic = st.integers(1, 4).map(BatchDistribution.deterministic)
    geometric = st.floats(0.25, 0.95).map(lambda p: BatchDistribution.geometric(p))
    two_point = st.tuples(
        st.integers(1, 3), st.integers(4, 7), st.floats(0.05, 0.95)
    ).map(lambda t: BatchDistribution.custom([(t[0], t[2]), (t[1], 1.0 - t[2])]))
    return st.one_of(deterministic, geometric, two_point)


@st.composite
def stable_model_strategy(draw):
    c = draw(st.integers(1, 4))
    mu = draw(st.floats(0.5, 2.0))
    rho = draw(st.floats(0.05, 0.9))
    batch = draw(batch_strategy())
    style = draw(st.sampled_from(["staggered", "vacation", "custom"]))
    if style == "custom":
        alphas = [draw(st.floats(0.2, 4.0)) for _ in range(c)]
        policy = SetupPolicy.custom(alphas)
    else:
        alpha = draw(st.floats(0.2, 4.0))
        policy = SetupPolicy.staggered(alpha) if style == "staggered" else SetupPolicy.vacation(alpha)
    return from_rho(rho, mu, c, policy, batch)
