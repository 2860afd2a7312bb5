"""Run and partition configuration objects."""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

from .errors import ConfigError


@dataclass
class RunConfig:
    """Hyperparameters shared by the client and server learning stages.

    Attributes:
        eta: learning rate for the competitive weight updates.
        k0_fraction: initial cluster count as a fraction of the data size.
        weight_floor: live clusters whose weight drops below this are removed.
        objective_eps: relative objective tolerance for the multi-granularity
            stopping rule.
        max_epochs: cap on passes over the data in one competitive run and on
            sweeps of the final categorical clustering.
        max_granularities: cap on the number of granularity levels explored.
        seed: 64-bit master seed; every random draw in a run derives from it.
        fixed_prototypes: when True, centroids stay at their sampled initial
            positions instead of moving to member means each epoch.
    """

    eta: float = 0.05
    k0_fraction: float = 0.5
    weight_floor: float = 1e-3
    objective_eps: float = 1e-6
    max_epochs: int = 100
    max_granularities: int = 12
    seed: int = 0
    fixed_prototypes: bool = False

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if not 0 < self.k0_fraction <= 1:
            raise ConfigError(f"k0_fraction must be in (0, 1], got {self.k0_fraction}")
        if not 0 < self.weight_floor < 1:
            raise ConfigError(f"weight_floor must be in (0, 1), got {self.weight_floor}")
        if self.max_epochs < 1 or self.max_granularities < 1:
            raise ConfigError("max_epochs and max_granularities must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(**d)


@dataclass
class PartitionSpec:
    """Knobs for the heterogeneous client partitioner.

    ``k_l_range`` and ``n_select_range`` override the default draws for the
    number of clusters a client receives and the number of subclusters kept
    per cluster. Left as None, a client draws uniformly from [1, k] clusters
    and keeps a uniform [1, k_sub] share of each cluster's subclusters;
    narrowing the ranges is how the heterogeneity level is steered.
    """

    L: int = 8
    k_sub_range: tuple[int, int] = (2, 5)
    sample_fraction_range: tuple[float, float] = (0.25, 0.75)
    seed: int = 0
    k_l_range: tuple[int, int] | None = None
    n_select_range: tuple[int, int] | None = None
    max_retries: int = 20

    def __post_init__(self):
        self.k_sub_range = tuple(self.k_sub_range)
        self.sample_fraction_range = tuple(self.sample_fraction_range)
        if self.k_l_range is not None:
            self.k_l_range = tuple(self.k_l_range)
        if self.n_select_range is not None:
            self.n_select_range = tuple(self.n_select_range)
        if self.L < 1:
            raise ConfigError(f"L must be >= 1, got {self.L}")
        if self.k_sub_range[0] < 1 or self.k_sub_range[1] < self.k_sub_range[0]:
            raise ConfigError(f"bad k_sub_range {self.k_sub_range}")
        lo, hi = self.sample_fraction_range
        if not (0 < lo <= hi <= 1):
            raise ConfigError(f"sample fractions must lie in (0, 1], got {self.sample_fraction_range}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["k_sub_range"] = list(self.k_sub_range)
        d["sample_fraction_range"] = list(self.sample_fraction_range)
        d["k_l_range"] = list(self.k_l_range) if self.k_l_range else None
        d["n_select_range"] = list(self.n_select_range) if self.n_select_range else None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PartitionSpec":
        return cls(**d)


# Presets behind the heterogeneity-level knob: narrower cluster/subcluster
# draws fragment the global structure more aggressively.
LAMBDA_LEVELS = {
    "low": dict(k_l_range=None, n_select_range=None),
    "mid": dict(k_l_range=None, n_select_range=(1, 2)),
    "high": dict(k_l_range=(1, 2), n_select_range=(1, 1)),
}


def apply_lambda_level(spec: PartitionSpec, level: str) -> PartitionSpec:
    """Return a copy of ``spec`` with the named heterogeneity preset applied."""
    if level not in LAMBDA_LEVELS:
        raise ConfigError(f"unknown lambda level {level!r}; choose from {sorted(LAMBDA_LEVELS)}")
    d = spec.to_dict()
    d.update(LAMBDA_LEVELS[level])
    return PartitionSpec.from_dict(d)
