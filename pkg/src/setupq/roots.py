"""Per-level characteristic functions and their roots inside (0, 1).

With i active servers the generating-function balance reduces to a
characteristic function

    f_i(z) = (lam + i mu + alpha_i) z - lam z beta(z) - i mu,

where beta is the batch-size generating function and alpha_i the setup rate
at level i (absent for the all-busy level i = c).  For 1 <= i <= c-1 the
function has exactly one root z_i in the open unit interval, bracketed by
f_i(0) = -i mu < 0 and f_i(1) = alpha_i > 0; that root eliminates the
unknown boundary probability of the next level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import BatchDistribution, ModelParams

# bisection bracket width before the final Newton polish
_BRACKET_TOL = 1e-14


class NoSignChangeError(RuntimeError):
    """The characteristic function does not change sign on (0, 1)."""


class WrongBatchKindError(ValueError):
    """Closed form requested for a batch distribution it does not cover."""


@dataclass(frozen=True)
class LevelPolynomial:
    """Characteristic function of one activity level.

    ``level == servers`` denotes the all-busy level, which carries no setup
    term.
    """

    params: ModelParams
    level: int

    def _alpha(self) -> float:
        if self.level == self.params.servers:
            return 0.0
        return self.params.setup_rates[self.level]

    def value(self, z: float) -> float:
        lam = self.params.arrival_rate
        mu = self.params.service_rate
        i = self.level
        return (lam + i * mu + self._alpha()) * z - lam * z * self.params.batch.pgf(z) - i * mu

    def derivative(self, z: float) -> float:
        lam = self.params.arrival_rate
        mu = self.params.service_rate
        batch = self.params.batch
        return (
            (lam + self.level * mu + self._alpha())
            - lam * batch.pgf(z)
            - lam * z * batch.pgf_derivative(z)
        )


def find_root(params: ModelParams, level: int) -> float:
    """Unique root of the level characteristic function in (0, 1).

    Bisection on the sign change f(0) < 0 < f(1) down to a 1e-14 bracket,
    then one Newton step.  Bisection alone is unconditionally convergent;
    the polish pushes the residual to rounding level because the root is
    simple.
    """
    if not 1 <= level <= params.servers - 1:
        raise ValueError(f"level must be in 1..{params.servers - 1} (got {level})")
    poly = LevelPolynomial(params, level)
    lo, hi = 0.0, 1.0
    if not (poly.value(lo) < 0.0 < poly.value(hi)):
        raise NoSignChangeError(
            f"no sign change for level {level}; parameters are invalid"
        )
    while hi - lo > _BRACKET_TOL:
        mid = 0.5 * (lo + hi)
        fm = poly.value(mid)
        if fm == 0.0:
            return mid
        if fm < 0.0:
            lo = mid
        else:
            hi = mid
    z = 0.5 * (lo + hi)
    slope = poly.derivative(z)
    if slope != 0.0:
        step = poly.value(z) / slope
        if 0.0 < z - step < 1.0:
            z -= step
    return z


def find_all_roots(params: ModelParams) -> tuple[float, ...]:
    """Roots z_1 .. z_{c-1}; empty for a single server."""
    return tuple(find_root(params, i) for i in range(1, params.servers))


def single_arrival_root(params: ModelParams, level: int) -> float:
    """Closed-form root for single arrivals, where f_i is a quadratic.

    Only valid when every batch has size one; other batch kinds raise
    WrongBatchKindError.
    """
    batch = params.batch
    if batch.sizes != (1,):
        raise WrongBatchKindError("closed form requires unit batches")
    lam = params.arrival_rate
    mu = params.service_rate
    a = params.setup_rates[level]
    s = lam + level * mu + a
    return (s - math.sqrt(s * s - 4.0 * level * lam * mu)) / (2.0 * lam)


def _root_above_one(fn, hi_start: float = 2.0, max_doublings: int = 64) -> float:
    """Root of ``fn`` on (1, inf) given fn(1+) > 0 and eventual negativity."""
    lo = 1.0 + 1e-9
    if not fn(lo) > 0.0:
        return lo
    hi = hi_start
    n = 0
    while fn(hi) > 0.0:
        lo = hi
        hi *= 2.0
        n += 1
        if n > max_doublings:
            return math.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if fn(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * hi:
            break
    return 0.5 * (lo + hi)


def tail_decay_rate(params: ModelParams) -> float:
    """Geometric decay ratio bounding the stationary queue-length tails.

    The partial generating functions are rational; the slowest coefficient
    decay is set by the smallest real singularity above 1 across all
    levels.  Candidates: the root of the empty-level denominator
    lam + alpha_0 - lam beta(z), the roots of f_i above 1 for the interior
    levels, and the root of f_c(z) / (z - 1) (the all-busy level after the
    known zero at 1 is removed).
    """
    lam = params.arrival_rate
    a0 = params.setup_rates[0]
    batch = params.batch
    c = params.servers

    probes = [lambda z: lam + a0 - lam * batch.pgf(z)]
    for i in range(1, c):
        probes.append(LevelPolynomial(params, i).value)
    top = LevelPolynomial(params, c)
    probes.append(lambda z: top.value(z) / (z - 1.0))

    smallest = min(_root_above_one(fn) for fn in probes)
    if not math.isfinite(smallest):
        return 0.0
    return 1.0 / smallest
