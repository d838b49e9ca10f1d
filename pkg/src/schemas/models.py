import math
from enum import Enum
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from errors import ConfigurationError, InvalidArgumentError

DEPOT = 0


# Problem data
class Instance(BaseModel):
    """A TSP-D instance. Node 0 is the depot."""

    model_config = ConfigDict(frozen=True)

    n: int
    coords: Tuple[Tuple[float, float], ...]
    alpha: float
    seed: Optional[int] = None

    @model_validator(mode="after")
    def check_invariants(self):
        if self.n < 2:
            raise InvalidArgumentError(f"an instance needs at least 2 nodes, got n={self.n}")
        if len(self.coords) != self.n:
            raise InvalidArgumentError(f"expected {self.n} coordinates, got {len(self.coords)}")
        if not math.isfinite(self.alpha) or self.alpha < 1:
            raise InvalidArgumentError(f"alpha must be >= 1, got {self.alpha}")
        for x, y in self.coords:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise InvalidArgumentError("coordinates must be finite")
        return self

    @classmethod
    def from_points(cls, points, alpha: float, seed: Optional[int] = None) -> "Instance":
        coords = tuple((float(x), float(y)) for x, y in points)
        return cls(n=len(coords), coords=coords, alpha=float(alpha), seed=seed)

    @property
    def customers(self) -> range:
        return range(1, self.n)


class DensityModel(BaseModel):
    """Axis-independent Gaussian kernel density over sample points."""

    model_config = ConfigDict(frozen=True)

    points: Tuple[Tuple[float, float], ...]
    bandwidths: Tuple[float, float]

    @field_validator("bandwidths")
    @classmethod
    def positive_bandwidths(cls, value):
        if any(not (h > 0) for h in value):
            raise InvalidArgumentError("bandwidths must be positive")
        return value


# Solutions
class Sortie(BaseModel):
    model_config = ConfigDict(frozen=True)

    launch: int
    customer: int
    rendezvous: int


class Plan(BaseModel):
    """An executed solution, replayable against the environment."""

    actions: List[Tuple[int, int]] = Field(default_factory=list, description="(truck, drone) per step")
    costs: List[float] = Field(default_factory=list, description="Elapsed-time increment of each step")
    truck_route: List[int] = Field(default_factory=list)
    sorties: List[Sortie] = Field(default_factory=list)
    makespan: float = 0.0
    mode: Literal["no-revisit", "revisit"] = "no-revisit"
    truncated: bool = False

    def served_customers(self) -> List[int]:
        truck = [v for v in self.truck_route if v != DEPOT]
        return truck + [s.customer for s in self.sorties]


class Assignment(str, Enum):
    TRUCK = "truck"
    DRONE = "drone"


class PartitionLeg(BaseModel):
    """One arc between combined positions; `drone` is the position of the drone customer, if any."""

    model_config = ConfigDict(frozen=True)

    start: int
    end: int
    drone: Optional[int] = None


class Partition(BaseModel):
    tour: Tuple[int, ...]
    assignment: Tuple[Assignment, ...]
    legs: Tuple[PartitionLeg, ...]
    makespan: float

    @property
    def sortie_count(self) -> int:
        return sum(1 for leg in self.legs if leg.drone is not None)


# Model and training configuration
class ModelConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    hidden_dim: int = 128
    layers: int = 3
    heads: int = 8
    ff_dim: Optional[int] = None
    dropout: float = 0.1
    bn_momentum: float = 0.9
    bn_eps: float = 1e-5
    candidate_term: bool = True

    @model_validator(mode="after")
    def check_shapes(self):
        if self.hidden_dim <= 0 or self.layers < 1 or self.heads < 1:
            raise ConfigurationError("hidden_dim, layers and heads must be positive")
        if self.hidden_dim % self.heads != 0:
            raise ConfigurationError(f"hidden_dim {self.hidden_dim} is not divisible by heads {self.heads}")
        if not 0 <= self.dropout < 1:
            raise ConfigurationError("dropout must lie in [0, 1)")
        return self

    @property
    def ff_width(self) -> int:
        return self.ff_dim or 4 * self.hidden_dim

    @property
    def decoder_mode(self) -> str:
        return "full" if self.candidate_term else "literal"


class Algorithm(str, Enum):
    REINFORCE = "reinforce"
    A2C = "a2c"
    DFPG = "dfpg"


class TrainConfig(BaseModel):
    workers: int = 1
    epochs: int = 100
    batch_size: int = 128
    learning_rate: float = 1e-4
    n: int = 11
    alpha: float = 2.0
    seed: int = 0
    validation_size: int = 64
    samples: int = 1
    algorithm: Algorithm = Algorithm.DFPG
    optimizer: Literal["sgd", "adam"] = "sgd"
    clip_norm: Optional[float] = 1.0
    checkpoint_every: int = 10
    mode: Literal["no-revisit", "revisit"] = "no-revisit"
    kde_points: Optional[str] = None
    jobs: int = 1
    model: ModelConfig = Field(default_factory=ModelConfig)

    @model_validator(mode="after")
    def check_ranges(self):
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigurationError("learning rate must be > 0")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigurationError("epochs must be >= 0 and batch size >= 1")
        if self.validation_size < 1:
            raise ConfigurationError("the validation set must not be empty")
        if self.n < 2 or self.alpha < 1:
            raise ConfigurationError("training instances need n >= 2 and alpha >= 1")
        if self.checkpoint_every < 1:
            raise ConfigurationError("checkpoint interval must be >= 1")
        if self.seed < 0 or self.jobs < 1 or self.samples < 1:
            raise ConfigurationError("seed must be >= 0, jobs and samples >= 1")
        return self


# Benchmark reports
class MethodSummary(BaseModel):
    method: str
    count: int
    cost_mean: float
    cost_std: float
    gap_ratio_of_means: float
    gap_mean_of_ratios: float
    seconds_mean: float


class InstanceResult(BaseModel):
    instance: str
    method: str
    cost: float
    seconds: float


class EvalReport(BaseModel):
    set_name: str
    n: int
    count: int
    seed: Optional[int] = None
    generator: str = "file"
    rows: List[MethodSummary] = Field(default_factory=list)
    results: List[InstanceResult] = Field(default_factory=list)
