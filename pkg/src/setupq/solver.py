"""Stationary solution of the setup-queue model via generating functions.

The solve pipeline expresses everything in terms of the empty-system
probability: seed the boundary recursion with an unnormalized value of 1,
walk the levels upward using the roots of the level characteristic
functions, evaluate the level masses and first moments, and normalize once
at the end.  A :class:`SolvedModel` then evaluates any partial generating
function exactly and expands the full joint table by extracting the
coefficient sequences of those functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import roots as roots_mod
from .model import ModelParams, validate_params
from .moments import first_moments as _first_moments
from .roots import LevelPolynomial

# |z - z_i| below which the level GF switches to its removable-singularity
# limit (numerator derivative over f_i'), estimated with a centered
# two-point numerator evaluation at z_i +/- _DD_STEP.
_NEAR_ROOT = 1e-6
_DD_STEP = 1e-4

# recursion round-off clamp: entries in [-_CLAMP_TOL, 0) are set to zero,
# anything more negative signals a real numerical failure
_CLAMP_TOL = 1e-12


class NumericalBreakdownError(RuntimeError):
    """A recursion produced values inconsistent with a distribution."""


class TruncationTooSmallError(RuntimeError):
    """The truncated table leaves more tail mass than permitted."""


def level0_gf(params: ModelParams, z: float, pi00: float = 1.0) -> float:
    """Generating function of the queue with no active server.

    Closed form (lam + alpha_0) pi00 / (lam + alpha_0 - lam beta(z)); the
    denominator is bounded below by alpha_0 on [0, 1].
    """
    lam = params.arrival_rate
    a0 = params.setup_rates[0]
    return (lam + a0) * pi00 / (lam + a0 - lam * params.batch.pgf(z))


def _gf(params: ModelParams, roots: tuple[float, ...], boundary, level: int, z: float) -> float:
    """Partial GF of level ``level`` (0 .. c-1), same scaling as ``boundary``.

    Levels above 0 are evaluated through the functional equation

        f_i(z) P_i(z) = (alpha_i z - i mu) b_i + (i+1) mu z b_{i+1}
                        + alpha_{i-1} (P_{i-1}(z) - b_{i-1}),

    recursing down to the closed form of level 0.  ``boundary`` must hold
    the no-queue probabilities at least up to index ``level + 1``.  At the
    root z_i the numerator vanishes by construction of b_{i+1}; close to it
    the value is recovered as numerator'(z_i) / f_i'(z_i) instead of by
    direct division.
    """
    if level == 0:
        return level0_gf(params, z, boundary[0])
    lam = params.arrival_rate
    mu = params.service_rate
    a_i = params.setup_rates[level]
    a_im1 = params.setup_rates[level - 1]
    b_i = boundary[level]
    b_ip1 = boundary[level + 1]
    b_im1 = boundary[level - 1]
    poly = LevelPolynomial(params, level)
    z_i = roots[level - 1]

    def numerator(x: float) -> float:
        below = _gf(params, roots, boundary, level - 1, x)
        return (
            (a_i * x - level * mu) * b_i
            + (level + 1) * mu * x * b_ip1
            + a_im1 * (below - b_im1)
        )

    if abs(z - z_i) >= _NEAR_ROOT:
        return numerator(z) / poly.value(z)
    h = _DD_STEP
    slope = (numerator(z_i + h) - numerator(z_i - h)) / (2.0 * h)
    return slope / poly.derivative(z_i)


def boundary_probabilities(params: ModelParams, roots: tuple[float, ...]) -> tuple[float, ...]:
    """No-queue probabilities for levels 0 .. c, unnormalized (level 0 = 1).

    Level 1 follows from the flow balance between the empty level and the
    rest; each further level is pinned by evaluating the functional
    equation of the previous level at its interior root:

        b_{i+1} = [(i mu - alpha_i z_i) b_i
                   + alpha_{i-1} (b_{i-1} - P_{i-1}(z_i))] / ((i+1) mu z_i)
    """
    lam = params.arrival_rate
    mu = params.service_rate
    c = params.servers
    boundary = [1.0, lam / mu]
    for i in range(1, c):
        z_i = roots[i - 1]
        a_i = params.setup_rates[i]
        a_im1 = params.setup_rates[i - 1]
        below = _gf(params, roots, boundary, i - 1, z_i)
        nxt = (
            (i * mu - a_i * z_i) * boundary[i] + a_im1 * (boundary[i - 1] - below)
        ) / ((i + 1) * mu * z_i)
        boundary.append(nxt)
    out = tuple(boundary[: c + 1])
    if any(not (b > 0.0) or not math.isfinite(b) for b in out):
        raise NumericalBreakdownError(
            f"nonpositive boundary probabilities {out}; check root accuracy"
        )
    return out


def _unnormalized_masses(params: ModelParams, roots, boundary) -> list[float]:
    """Level masses P_i(1) for i = 0 .. c-1, unnormalized.

    At z = 1 the functional equation divides by f_i(1) = alpha_i.
    """
    lam = params.arrival_rate
    mu = params.service_rate
    a0 = params.setup_rates[0]
    masses = [(lam + a0) * boundary[0] / a0]
    for i in range(1, params.servers):
        a_i = params.setup_rates[i]
        a_im1 = params.setup_rates[i - 1]
        masses.append(
            (
                (a_i - i * mu) * boundary[i]
                + (i + 1) * mu * boundary[i + 1]
                + a_im1 * (masses[i - 1] - boundary[i - 1])
            )
            / a_i
        )
    return masses


@dataclass(frozen=True)
class SolvedModel:
    """Everything needed to evaluate the stationary distribution.

    ``boundary_raw`` keeps the unnormalized no-queue probabilities (level 0
    equals 1); ``norm`` is the empty-system probability that rescales them.
    ``level_masses`` and ``first_moments`` are stored normalized.
    """

    params: ModelParams
    roots: tuple[float, ...]
    boundary_raw: tuple[float, ...]
    level_masses: tuple[float, ...]
    first_moments: tuple[float, ...]
    norm: float

    @property
    def pi00(self) -> float:
        return self.norm

    @property
    def boundary(self) -> tuple[float, ...]:
        """Normalized no-queue probabilities for levels 0 .. c."""
        return tuple(b * self.norm for b in self.boundary_raw)

    @property
    def top_mass(self) -> float:
        """Stationary probability that all servers are busy."""
        return self.level_masses[-1]

    def level_gf(self, level: int, z: float, normalized: bool = True) -> float:
        """Partial generating function of level 0 .. c-1 at ``z``."""
        if not 0 <= level <= self.params.servers - 1:
            raise ValueError(f"level must be in 0..{self.params.servers - 1}")
        value = _gf(self.params, self.roots, self.boundary_raw, level, z)
        return value * self.norm if normalized else value

    def top_gf(self, z: float, normalized: bool = True) -> float:
        """Generating function of the waiting count with all servers busy.

        Valid for z in [0, 1); the z -> 1 limit is ``top_mass``.  The
        numerator vanishes at z = 1 together with f_c, so evaluation within
        roughly 1e-8 of 1 loses precision and is not supported.
        """
        c = self.params.servers
        a = self.params.setup_rates[c - 1]
        below = _gf(self.params, self.roots, self.boundary_raw, c - 1, z)
        mass_below = self.level_masses[c - 1] / self.norm
        value = a * (below - mass_below) / LevelPolynomial(self.params, c).value(z)
        return value * self.norm if normalized else value


def solve(params: ModelParams) -> SolvedModel:
    """Validate, find the interior roots, and assemble the full solution."""
    validate_params(params)
    lam = params.arrival_rate
    mu = params.service_rate
    c = params.servers
    roots = roots_mod.find_all_roots(params)
    boundary = boundary_probabilities(params, roots)
    masses = _unnormalized_masses(params, roots, boundary)
    moments1 = _first_moments(params, boundary, masses)
    top = params.setup_rates[c - 1] * moments1[c - 1] / (c * mu - lam * params.batch.mean)
    norm = 1.0 / math.fsum(masses + [top])
    return SolvedModel(
        params=params,
        roots=roots,
        boundary_raw=boundary,
        level_masses=tuple(m * norm for m in masses + [top]),
        first_moments=tuple(m * norm for m in moments1),
        norm=norm,
    )


def default_truncation(params: ModelParams, tail_tol: float = 1e-10) -> int:
    """Smallest table depth whose geometric tail estimate is below ``tail_tol``."""
    phi = roots_mod.tail_decay_rate(params)
    c = params.servers
    if phi <= 0.0:
        return c + 25
    depth = math.ceil(math.log(tail_tol * (1.0 - phi)) / math.log(phi)) + 5
    return c + max(25, depth)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Truncated joint table of the stationary distribution.

    ``rows[i][k]`` is the probability of level i with k waiting customers
    (system size i + k); row lengths differ because every level starts at
    its own boundary state.
    """

    rows: tuple[np.ndarray, ...]
    j_max: int
    tail_mass_bound: float
    clamped: int

    def prob(self, level: int, jobs: int) -> float:
        """Stationary probability of ``level`` active servers, ``jobs`` in system."""
        k = jobs - level
        row = self.rows[level]
        if k < 0 or k >= len(row):
            return 0.0
        return float(row[k])

    @property
    def total_mass(self) -> float:
        return float(sum(math.fsum(row.tolist()) for row in self.rows))


def joint_distribution(
    solved: SolvedModel,
    j_max: int | None = None,
    tail_limit: float | None = 1e-8,
) -> JointDistribution:
    """Expand the stationary probabilities up to ``j_max`` jobs in system.

    Each level's row is the coefficient sequence of its partial generating
    function, extracted by a discrete Cauchy integral: the GF is evaluated
    on a circle of radius just under 1 and inverted with an FFT.  Because
    the coefficients are nonnegative, the GF magnitude on the circle is
    bounded by the level mass, so every coefficient is recovered with
    near-machine absolute accuracy at any depth.  (Stepping the balance
    equations forward instead amplifies round-off geometrically with a
    ratio equal to the reciprocal tail decay rate; the states far down a
    long table would drown in noise.)

    When ``j_max`` is omitted a depth targeting 1e-10 tail mass is chosen
    and doubled, up to three times, while the realized tail bound exceeds
    ``tail_limit``.
    """
    auto = j_max is None
    depth = default_truncation(solved.params) if auto else int(j_max)
    if depth < solved.params.servers:
        raise ValueError("j_max must be at least the server count")
    attempts = 4 if auto else 1
    result = None
    for _ in range(attempts):
        result = _extract_table(solved, depth)
        if tail_limit is None or result.tail_mass_bound <= tail_limit:
            return result
        depth *= 2
    raise TruncationTooSmallError(
        f"tail mass bound {result.tail_mass_bound:.3e} exceeds {tail_limit:.3e} "
        f"at j_max={result.j_max}"
    )


def _pgf_values(batch, z: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z)
    for k, p in zip(batch.sizes, batch.probs):
        out += p * z**k
    return out


def _gf_values(params, roots, boundary, level: int, z: np.ndarray) -> np.ndarray:
    """Vectorized counterpart of :func:`_gf` for arrays of complex points.

    Points that land within the near-root window of some interior root are
    patched with the scalar evaluation.
    """
    lam = params.arrival_rate
    a0 = params.setup_rates[0]
    if level == 0:
        return (lam + a0) * boundary[0] / (lam + a0 - lam * _pgf_values(params.batch, z))
    mu = params.service_rate
    a_i = params.setup_rates[level]
    a_im1 = params.setup_rates[level - 1]
    below = _gf_values(params, roots, boundary, level - 1, z)
    numer = (
        (a_i * z - level * mu) * boundary[level]
        + (level + 1) * mu * z * boundary[level + 1]
        + a_im1 * (below - boundary[level - 1])
    )
    f = (lam + level * mu + a_i) * z - lam * z * _pgf_values(params.batch, z) - level * mu
    z_i = roots[level - 1]
    near = np.abs(z - z_i) < _NEAR_ROOT
    if near.any():
        f = np.where(near, 1.0, f)
    out = numer / f
    if near.any():
        for idx in np.nonzero(near)[0]:
            out[idx] = _gf(params, roots, boundary, level, complex(z[idx]))
    return out


def _pick_radius(j_max: int, roots: tuple[float, ...]) -> float:
    """Evaluation radius: close to 1 so r**-j stays tame, away from roots."""
    base = min(math.exp(-3.0 / max(j_max, 1)), 0.9995)
    candidates = [base, base * 0.995, base * 0.99, min(base * 1.004, 0.9998), base * 0.98]
    if not roots:
        return base
    return max(candidates, key=lambda r: min(abs(r - z) for z in roots))


def _extract_table(solved: SolvedModel, j_max: int) -> JointDistribution:
    params = solved.params
    c = params.servers
    m = 1 << max(8, math.ceil(math.log2(4.0 * (j_max + 1))))
    radius = _pick_radius(j_max, solved.roots)
    z = radius * np.exp(2j * np.pi * np.arange(m) / m)

    values = []
    for i in range(c):
        values.append(_gf_values(params, solved.roots, solved.boundary_raw, i, z))
    a_top = params.setup_rates[c - 1]
    mass_below = solved.level_masses[c - 1] / solved.norm
    f_top = (
        (params.arrival_rate + c * params.service_rate) * z
        - params.arrival_rate * z * _pgf_values(params.batch, z)
        - c * params.service_rate
    )
    values.append(a_top * (values[c - 1] - mass_below) / f_top)

    clamped = 0
    worst = 0.0
    arrays = []
    for i, vals in enumerate(values):
        count = j_max - i + 1
        coeff = np.fft.fft(vals)[:count].real / m
        coeff *= solved.norm / radius ** np.arange(count)
        neg = coeff < 0.0
        if neg.any():
            worst = min(worst, float(coeff.min()))
            clamped += int(neg.sum())
            coeff = np.where(neg, 0.0, coeff)
        coeff.setflags(write=False)
        arrays.append(coeff)
    if worst < -_CLAMP_TOL:
        raise NumericalBreakdownError(
            f"table entry {worst:.3e} below the round-off clamp {-_CLAMP_TOL:.0e}"
        )
    total = sum(math.fsum(arr.tolist()) for arr in arrays)
    return JointDistribution(
        rows=tuple(arrays),
        j_max=j_max,
        tail_mass_bound=max(0.0, 1.0 - total),
        clamped=clamped,
    )
