"""Independent ground truth: direct stationary solves of truncated chains.

Builds the generator of the setup model (and of the conventional system
without setup) on a finite window of the state space and solves the global
balance equations by linear algebra.  Batches that would overshoot the
window are dropped rather than clipped, so the truncated generator is a
strict sub-stochastic restriction of the true one and the boundary-layer
distortion shrinks as the window grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import ModelParams

_DENSE_LIMIT = 1500


class SingularSystemError(RuntimeError):
    """The truncated generator did not yield a valid stationary vector."""


@dataclass(frozen=True, eq=False)
class TruncatedChain:
    """Sparse rate matrix over an explicit state enumeration.

    Diagonal entries carry the full exit rate of each state, so rows whose
    arrivals were dropped at the truncation boundary sum to a negative
    number.
    """

    states: tuple
    index: dict
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    j_max: int

    def generator(self) -> sp.csr_matrix:
        n = len(self.states)
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(n, n))


def _assemble(states, transitions, j_max) -> TruncatedChain:
    index = {s: n for n, s in enumerate(states)}
    rows, cols, vals = [], [], []
    diag = [0.0] * len(states)
    for src, dst, rate in transitions:
        s = index[src]
        diag[s] -= rate
        if dst is not None:
            rows.append(s)
            cols.append(index[dst])
            vals.append(rate)
    for s, d in enumerate(diag):
        rows.append(s)
        cols.append(s)
        vals.append(d)
    return TruncatedChain(
        states=tuple(states),
        index=index,
        rows=np.asarray(rows),
        cols=np.asarray(cols),
        vals=np.asarray(vals, dtype=float),
        j_max=j_max,
    )


def build_setup_chain(params: ModelParams, j_max: int) -> TruncatedChain:
    """Setup-model chain on {(i, j): 0 <= i <= min(c, j), j <= j_max}.

    Transitions: batch arrivals keep the level and add k jobs; a service
    completion with waiting customers stays on the level; a completion with
    none drops to the previous boundary state (spare servers switch off);
    a setup completion activates one server when customers are waiting.
    """
    lam = params.arrival_rate
    mu = params.service_rate
    c = params.servers
    batch = params.batch
    if j_max < c:
        raise ValueError("j_max must be >= server count")
    states = [(i, j) for j in range(j_max + 1) for i in range(min(c, j) + 1)]
    transitions = []
    for (i, j) in states:
        for k, p in zip(batch.sizes, batch.probs):
            dst = (i, j + k) if j + k <= j_max else None  # dropped at the boundary
            transitions.append(((i, j), dst, lam * p))
        if i >= 1:
            if j > i:
                transitions.append(((i, j), (i, j - 1), i * mu))
            else:
                transitions.append(((i, i), (i - 1, i - 1), i * mu))
        if i < c and j > i:
            transitions.append(((i, j), (i + 1, j), params.setup_rates[i]))
    return _assemble(states, transitions, j_max)


def build_onidle_chain(params: ModelParams, j_max: int) -> TruncatedChain:
    """Conventional system without setup: all servers always available.

    Birth-death-with-batches chain on the job count alone; service rate
    min(j, c) mu.
    """
    lam = params.arrival_rate
    mu = params.service_rate
    c = params.servers
    batch = params.batch
    states = list(range(j_max + 1))
    transitions = []
    for j in states:
        for k, p in zip(batch.sizes, batch.probs):
            dst = j + k if j + k <= j_max else None
            transitions.append((j, dst, lam * p))
        if j >= 1:
            transitions.append((j, j - 1, min(j, c) * mu))
    return _assemble(states, transitions, j_max)


def stationary(chain: TruncatedChain) -> np.ndarray:
    """Stationary probabilities of the truncated chain.

    Solves the transposed generator equations with the equation of the
    first state replaced by normalization.  Dense solve below
    ``_DENSE_LIMIT`` states, sparse LU above.
    """
    n = len(chain.states)
    q = chain.generator()
    b = np.zeros(n)
    b[0] = 1.0
    if n <= _DENSE_LIMIT:
        a = q.toarray().T
        a[0, :] = 1.0
        try:
            pi = np.linalg.solve(a, b)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(str(exc)) from exc
    else:
        a = q.T.tolil()
        a[0, :] = 1.0
        try:
            pi = spla.spsolve(a.tocsc(), b)
        except RuntimeError as exc:
            raise SingularSystemError(str(exc)) from exc
    if not np.all(np.isfinite(pi)):
        raise SingularSystemError("solver returned non-finite entries")
    if pi.min() < -1e-8:
        raise SingularSystemError(f"large negative probability {pi.min():.3e}")
    pi = np.where(pi < 0.0, 0.0, pi)
    return pi


def default_truncation(params: ModelParams) -> int:
    """Validation window: heavier traffic needs a longer tail."""
    return params.servers + math.ceil(50.0 / (1.0 - params.rho))


def setup_rows(chain: TruncatedChain, pi: np.ndarray, servers: int) -> list[np.ndarray]:
    """Reshape a setup-chain vector into per-level rows.

    ``rows[i][k]`` is the probability of level i with k waiting customers,
    matching the layout of the analytic joint table.
    """
    rows = []
    for i in range(servers + 1):
        vals = [pi[chain.index[(i, j)]] for j in range(i, chain.j_max + 1)]
        rows.append(np.asarray(vals))
    return rows


def reference_rows(
    params: ModelParams,
    j_max: int | None = None,
    tol: float = 1e-10,
    max_doublings: int = 3,
):
    """Per-level stationary rows at a truncation validated by doubling.

    Doubles the window until entries with at most j_max/2 jobs move by less
    than ``tol``, then returns the finer solution and the depth that
    converged.
    """
    depth = default_truncation(params) if j_max is None else int(j_max)
    chain = build_setup_chain(params, depth)
    rows = setup_rows(chain, stationary(chain), params.servers)
    for _ in range(max_doublings):
        chain2 = build_setup_chain(params, 2 * depth)
        rows2 = setup_rows(chain2, stationary(chain2), params.servers)
        gap = 0.0
        for i, row in enumerate(rows):
            keep = depth // 2 - i + 1
            if keep > 0:
                head = row[:keep]
                gap = max(gap, float(np.max(np.abs(head - rows2[i][: len(head)]))))
        if gap < tol:
            return rows2, depth
        depth *= 2
        rows = rows2
    return rows, depth


def onidle_distribution(params: ModelParams, j_max: int | None = None) -> np.ndarray:
    if j_max is None:
        j_max = default_truncation(params)
    chain = build_onidle_chain(params, j_max)
    return stationary(chain)


def onidle_mean_queue(params: ModelParams, j_max: int | None = None) -> float:
    """Mean waiting count of the conventional system without setup."""
    pi = onidle_distribution(params, j_max)
    c = params.servers
    return float(sum(max(j - c, 0) * p for j, p in enumerate(pi)))


def onidle_conditional_waiting(
    params: ModelParams, k_max: int, j_max: int | None = None
) -> np.ndarray:
    """P(waiting = k | all busy) in the conventional system, k = 0 .. k_max."""
    pi = onidle_distribution(params, j_max)
    c = params.servers
    busy = pi[c:]
    out = np.zeros(k_max + 1)
    out[: min(k_max + 1, len(busy))] = busy[: k_max + 1]
    return out / busy.sum()


def erlang_c(servers: int, offered_load: float) -> float:
    """Waiting probability of the conventional single-arrival system.

    Uses the numerically stable blocking-probability recursion rather than
    raw factorials.
    """
    if servers <= 0:
        raise ValueError("servers must be positive")
    rho = offered_load / servers
    if rho >= 1.0:
        raise ValueError("offered load must satisfy a/c < 1")
    blocking = 1.0
    for k in range(1, servers + 1):
        blocking = offered_load * blocking / (k + offered_load * blocking)
    return blocking / (1.0 - rho * (1.0 - blocking))
