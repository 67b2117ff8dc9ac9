"""Model parameters for batch-arrival multiserver queues with setup times.

Customers arrive in batches at Poisson epochs and are served by up to ``c``
identical exponential servers.  A server with no work is switched off
immediately; whenever customers are waiting, one off server undergoes an
exponential setup whose rate may depend on the number of currently active
servers.  Per-level setup rates cover the staggered policy (one server in
setup at a time), vacation-style policies and arbitrary custom rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

PROB_TOL = 1e-12


class ModelError(ValueError):
    """Invalid model input."""


class BadBatchError(ModelError):
    """Batch-size distribution violates its invariants."""


class NonPositiveRateError(ModelError):
    """A rate parameter that must be strictly positive is not."""

    def __init__(self, name: str, value: float):
        super().__init__(f"{name} must be positive (got {value!r})")
        self.name = name


class UnstableError(ModelError):
    """Offered load meets or exceeds capacity."""

    def __init__(self, rho: float):
        super().__init__(f"unstable: rho = {rho:.6g} >= 1")
        self.rho = rho


class ConfigError(ValueError):
    """Malformed JSON model configuration."""


@dataclass(frozen=True)
class BatchDistribution:
    """Finite-support batch-size distribution on {1, 2, ...}.

    Probabilities are validated to sum to one within ``PROB_TOL`` and then
    renormalized exactly, so downstream recursions never accumulate drift
    from an input that is off by a few ulps.
    """

    sizes: tuple[int, ...]
    probs: tuple[float, ...]
    kind: str = "custom"

    def __post_init__(self):
        if len(self.sizes) == 0 or len(self.sizes) != len(self.probs):
            raise BadBatchError("support and probabilities must be nonempty and aligned")
        prev = 0
        for k in self.sizes:
            if not isinstance(k, int) or k < 1:
                raise BadBatchError(f"batch sizes must be integers >= 1 (got {k!r})")
            if k <= prev:
                raise BadBatchError("batch sizes must be strictly increasing")
            prev = k
        for p in self.probs:
            if not (p >= 0.0) or not math.isfinite(p):
                raise BadBatchError(f"batch probabilities must be nonnegative (got {p!r})")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > PROB_TOL:
            raise BadBatchError(f"batch probabilities sum to {total!r}, expected 1")
        object.__setattr__(self, "probs", tuple(p / total for p in self.probs))

    @classmethod
    def deterministic(cls, size: int) -> "BatchDistribution":
        """All batches have exactly ``size`` customers."""
        return cls(sizes=(size,), probs=(1.0,), kind="deterministic")

    @classmethod
    def geometric(cls, p: float, k_max: int | None = None) -> "BatchDistribution":
        """Geometric batch sizes P(B=k) = (1-p)^(k-1) p, truncated and renormalized.

        The default truncation point is the smallest K whose tail mass
        (1-p)^K falls below ``PROB_TOL``.
        """
        if not (0.0 < p <= 1.0):
            raise BadBatchError(f"geometric parameter must be in (0, 1] (got {p!r})")
        if k_max is None:
            if p == 1.0:
                k_max = 1
            else:
                k_max = max(1, math.ceil(math.log(PROB_TOL) / math.log1p(-p)))
        if k_max < 1:
            raise BadBatchError("k_max must be >= 1")
        raw = [(1.0 - p) ** (k - 1) * p for k in range(1, k_max + 1)]
        total = math.fsum(raw)
        return cls(
            sizes=tuple(range(1, k_max + 1)),
            probs=tuple(w / total for w in raw),
            kind="geometric",
        )

    @classmethod
    def custom(cls, pmf) -> "BatchDistribution":
        """Build from (size, probability) pairs; duplicates are merged."""
        merged: dict[int, float] = {}
        for k, p in pmf:
            merged[int(k)] = merged.get(int(k), 0.0) + float(p)
        items = sorted((k, p) for k, p in merged.items() if p > 0.0)
        if not items:
            raise BadBatchError("custom pmf has no positive mass")
        return cls(
            sizes=tuple(k for k, _ in items),
            probs=tuple(p for _, p in items),
            kind="custom",
        )

    @property
    def mean(self) -> float:
        return self.factorial_derivative(1)

    @property
    def max_size(self) -> int:
        return self.sizes[-1]

    def pgf(self, z):
        """Probability generating function at ``z`` (a polynomial in z).

        Accepts real or complex arguments; coefficient extraction walks the
        unit disk.
        """
        if isinstance(z, complex):
            return sum(p * z**k for k, p in zip(self.sizes, self.probs))
        return math.fsum(p * z**k for k, p in zip(self.sizes, self.probs))

    def pgf_derivative(self, z):
        if isinstance(z, complex):
            return sum(p * k * z ** (k - 1) for k, p in zip(self.sizes, self.probs))
        return math.fsum(p * k * z ** (k - 1) for k, p in zip(self.sizes, self.probs))

    def factorial_derivative(self, order: int) -> float:
        """k-th derivative of the generating function at z = 1.

        Equals the k-th factorial moment sum_j j(j-1)...(j-k+1) P(B=j);
        order 0 gives 1 and order 1 gives the mean batch size.
        """
        if order < 0:
            raise ValueError("order must be >= 0")
        if order == 0:
            return 1.0
        return math.fsum(
            p * math.perm(k, order) for k, p in zip(self.sizes, self.probs) if k >= order
        )

    def tail_probabilities(self) -> tuple[float, ...]:
        """P(B > x) for x = 0 .. max_size - 1 (zero beyond the support)."""
        dense = [0.0] * (self.max_size + 1)
        for k, p in zip(self.sizes, self.probs):
            dense[k] = p
        tails = [0.0] * self.max_size
        acc = 0.0
        for x in range(self.max_size - 1, -1, -1):
            acc += dense[x + 1]
            tails[x] = acc
        tails[0] = 1.0  # exact by normalization
        return tuple(tails)


@dataclass(frozen=True)
class SetupPolicy:
    """Per-level setup rates, expanded against a server count.

    staggered(a): every level uses rate a (one server in setup at a time).
    vacation(a):  level i uses rate (c - i) a, the classic synchronized
                  vacation equivalence.
    custom(list): explicit rates for levels 0 .. c-1.
    """

    kind: str
    alpha: float = 0.0
    alphas: tuple[float, ...] = ()

    @classmethod
    def staggered(cls, alpha: float) -> "SetupPolicy":
        return cls(kind="staggered", alpha=alpha)

    @classmethod
    def vacation(cls, alpha: float) -> "SetupPolicy":
        return cls(kind="vacation", alpha=alpha)

    @classmethod
    def custom(cls, alphas) -> "SetupPolicy":
        return cls(kind="custom", alphas=tuple(float(a) for a in alphas))

    def rates(self, servers: int) -> tuple[float, ...]:
        if self.kind == "staggered":
            return (self.alpha,) * servers
        if self.kind == "vacation":
            return tuple((servers - i) * self.alpha for i in range(servers))
        if self.kind == "custom":
            if len(self.alphas) != servers:
                raise ModelError(
                    f"custom policy has {len(self.alphas)} rates, expected {servers}"
                )
            return self.alphas
        raise ModelError(f"unknown setup policy {self.kind!r}")


@dataclass(frozen=True)
class CostRates:
    """Power draw per unit time in each server state, plus the cost weight
    trading mean queue length against power."""

    setup: float = 1.0
    run: float = 1.0
    idle: float = 0.6
    delta: float = 1.0


@dataclass(frozen=True)
class ModelParams:
    """Immutable description of one queueing model instance."""

    arrival_rate: float
    service_rate: float
    servers: int
    setup_rates: tuple[float, ...]
    batch: BatchDistribution
    costs: CostRates = CostRates()

    @classmethod
    def from_policy(
        cls,
        arrival_rate: float,
        service_rate: float,
        servers: int,
        policy: SetupPolicy,
        batch: BatchDistribution,
        costs: CostRates = CostRates(),
    ) -> "ModelParams":
        return cls(
            arrival_rate=float(arrival_rate),
            service_rate=float(service_rate),
            servers=int(servers),
            setup_rates=policy.rates(int(servers)),
            batch=batch,
            costs=costs,
        )

    @property
    def rho(self) -> float:
        """Traffic intensity: customer arrival rate over total service capacity."""
        return self.arrival_rate * self.batch.mean / (self.servers * self.service_rate)

    @property
    def mean_busy_servers(self) -> float:
        """Long-run mean number of serving servers (work conservation)."""
        return self.arrival_rate * self.batch.mean / self.service_rate


def validate_params(params: ModelParams) -> None:
    """Raise on the first violated model invariant.

    Checks rates, the setup-rate vector length, the batch distribution and
    finally strict stability (rho < 1).
    """
    if not (params.arrival_rate > 0.0):
        raise NonPositiveRateError("lambda", params.arrival_rate)
    if not (params.service_rate > 0.0):
        raise NonPositiveRateError("mu", params.service_rate)
    if params.servers < 1:
        raise ModelError(f"server count must be >= 1 (got {params.servers})")
    if len(params.setup_rates) != params.servers:
        raise ModelError(
            f"need {params.servers} setup rates, got {len(params.setup_rates)}"
        )
    for i, a in enumerate(params.setup_rates):
        if not (a > 0.0):
            raise NonPositiveRateError(f"alpha_{i}", a)
    total = math.fsum(params.batch.probs)
    if abs(total - 1.0) > PROB_TOL or min(params.batch.sizes) < 1:
        raise BadBatchError("batch distribution invariants violated")
    rho = params.rho
    if rho >= 1.0:
        raise UnstableError(rho)


def _batch_from_config(cfg: dict) -> BatchDistribution:
    kind = cfg.get("type")
    if kind == "deterministic":
        if "size" not in cfg:
            raise ConfigError("deterministic batch needs 'size'")
        return BatchDistribution.deterministic(int(cfg["size"]))
    if kind == "geometric":
        if "p" not in cfg:
            raise ConfigError("geometric batch needs 'p'")
        k_max = int(cfg["k_max"]) if "k_max" in cfg else None
        return BatchDistribution.geometric(float(cfg["p"]), k_max)
    if kind == "custom":
        if "pmf" not in cfg:
            raise ConfigError("custom batch needs 'pmf'")
        return BatchDistribution.custom(cfg["pmf"])
    raise ConfigError(f"unknown batch type {kind!r}")


def _policy_from_config(cfg: dict) -> SetupPolicy:
    kind = cfg.get("type")
    if kind in ("staggered", "vacation"):
        if "alpha" not in cfg:
            raise ConfigError(f"{kind} setup needs 'alpha'")
        return SetupPolicy(kind=kind, alpha=float(cfg["alpha"]))
    if kind == "custom":
        if "alphas" not in cfg:
            raise ConfigError("custom setup needs 'alphas'")
        return SetupPolicy.custom(cfg["alphas"])
    raise ConfigError(f"unknown setup type {kind!r}")


def params_from_config(cfg: dict) -> ModelParams:
    """Build ModelParams from the JSON config schema used by the CLI.

    Schema::

        {"lambda": number, "mu": number, "c": int,
         "setup": {"type": "staggered"|"vacation"|"custom",
                   "alpha": number | "alphas": [number, ...]},
         "batch": {"type": "deterministic"|"geometric"|"custom",
                   "size": int | "p": number | "pmf": [[k, prob], ...]},
         "costs": {"setup": number, "run": number, "idle": number,
                   "delta": number}}        # costs optional

    The returned params are not yet validated; call :func:`validate_params`.
    """
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    for key in ("lambda", "mu", "c", "setup", "batch"):
        if key not in cfg:
            raise ConfigError(f"missing config key {key!r}")
    try:
        lam = float(cfg["lambda"])
        mu = float(cfg["mu"])
        c = int(cfg["c"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad numeric field: {exc}") from exc
    try:
        batch = _batch_from_config(cfg["batch"])
    except BadBatchError as exc:
        raise ConfigError(f"bad batch distribution: {exc}") from exc
    policy = _policy_from_config(cfg["setup"])
    costs_cfg = cfg.get("costs", {})
    if not isinstance(costs_cfg, dict):
        raise ConfigError("'costs' must be an object")
    defaults = CostRates()
    costs = CostRates(
        setup=float(costs_cfg.get("setup", defaults.setup)),
        run=float(costs_cfg.get("run", defaults.run)),
        idle=float(costs_cfg.get("idle", defaults.idle)),
        delta=float(costs_cfg.get("delta", defaults.delta)),
    )
    try:
        return ModelParams.from_policy(lam, mu, c, policy, batch, costs)
    except ModelError as exc:
        raise ConfigError(str(exc)) from exc
