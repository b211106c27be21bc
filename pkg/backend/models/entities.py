"""
Data models for the overlapping-cluster Bernoulli mixture toolkit

Heir clusters are addressed in memory by 0-based *heir codes*: bit k of the
code says whether parent k (0-based) belongs to the heir cluster, so code 0
is the empty cluster. Files and printed tables use the 1-based index h = code + 1.
"""
import math
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from backend.models.errors import ConfigurationError


MAX_PARENTS = 16
PROB_FLOOR = 1e-12
SIMPLEX_TOL = 1e-8
SEED_MODULUS = 2**64


class Combiner(str, Enum):
    """Combiner psi mapping parent attendance probabilities to an heir cluster"""
    MIN = "min"
    MAX = "max"


class ModelKind(str, Enum):
    """Which mixture produced a chain"""
    OVERLAPPING = "overlapping"
    FLAT = "flat"


# --- Data ---

class IncidenceMatrix(BaseModel):
    """n x d binary actor-event attendance matrix"""
    y: np.ndarray = Field(..., description="n x d matrix of 0/1 attendances")
    actor_labels: List[str] = Field(default_factory=list, description="Row labels")
    event_labels: List[str] = Field(default_factory=list, description="Column labels")

    class Config:
        arbitrary_types_allowed = True

    @field_validator("y", mode="before")
    @classmethod
    def _binary_matrix(cls, value: Any) -> np.ndarray:
        arr = np.asarray(value)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ConfigurationError(f"Incidence matrix must be a non-empty 2-d array, got shape {arr.shape}")
        if not np.isin(arr, (0, 1)).all():
            raise ConfigurationError("Incidence matrix entries must be exactly 0 or 1")
        return arr.astype(np.int8)

    @model_validator(mode="after")
    def _labels(self) -> "IncidenceMatrix":
        n, d = self.y.shape
        if not self.actor_labels:
            self.actor_labels = [f"actor_{i + 1}" for i in range(n)]
        if not self.event_labels:
            self.event_labels = [f"event_{j + 1}" for j in range(d)]
        if len(self.actor_labels) != n or len(self.event_labels) != d:
            raise ConfigurationError(
                f"Label lengths ({len(self.actor_labels)}, {len(self.event_labels)}) do not match shape {self.y.shape}"
            )
        return self

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def d(self) -> int:
        return int(self.y.shape[1])

    def attendance_counts(self) -> np.ndarray:
        """Number of events attended by each actor"""
        return self.y.sum(axis=1).astype(int)


# --- Priors and chain configuration ---

class Hyperparams(BaseModel):
    """Dirichlet concentrations for the weights and Beta shapes for the parent probabilities"""
    a: np.ndarray = Field(..., description="Dirichlet concentrations, one per heir cluster")
    b1: np.ndarray = Field(..., description="Beta first shapes, K x d")
    b2: np.ndarray = Field(..., description="Beta second shapes, K x d")

    class Config:
        arbitrary_types_allowed = True

    @field_validator("a", "b1", "b2", mode="before")
    @classmethod
    def _positive(cls, value: Any) -> np.ndarray:
        arr = np.asarray(value, dtype=float)
        if arr.size == 0 or not np.all(arr > 0):
            raise ConfigurationError("Hyperparameters must be strictly positive")
        return arr

    @model_validator(mode="after")
    def _shapes(self) -> "Hyperparams":
        if self.a.ndim != 1 or self.b1.ndim != 2 or self.b1.shape != self.b2.shape:
            raise ConfigurationError(
                f"Hyperparameter shapes inconsistent: a{self.a.shape}, b1{self.b1.shape}, b2{self.b2.shape}"
            )
        return self

    @classmethod
    def uniform(cls, n_weights: int, n_rows: int, d: int,
                a: float = 1.0, b1: float = 1.0, b2: float = 1.0) -> "Hyperparams":
        return cls(
            a=np.full(n_weights, a),
            b1=np.full((n_rows, d), b1),
            b2=np.full((n_rows, d), b2),
        )


class ChainConfig(BaseModel):
    """Settings of a single Gibbs chain"""
    iterations: int = Field(default=30000, ge=1, description="Total sweeps T_total")
    burn_in: int = Field(default=15000, ge=0, description="Discarded leading sweeps")
    thinning: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0, lt=SEED_MODULUS)
    K: int = Field(default=2, description="Parent clusters (components for the flat baseline)")
    combiner: Combiner = Combiner.MIN
    a: float = Field(default=1.0, gt=0)
    b1: float = Field(default=1.0, gt=0)
    b2: float = Field(default=1.0, gt=0)
    hyper: Optional[Hyperparams] = Field(default=None, description="Full hyperparameter arrays; overrides a/b1/b2")
    log_every: int = Field(default=1000, ge=1)

    class Config:
        arbitrary_types_allowed = True

    @model_validator(mode="after")
    def _check(self) -> "ChainConfig":
        if self.burn_in >= self.iterations:
            raise ConfigurationError(f"burn_in ({self.burn_in}) must be < iterations ({self.iterations})")
        if not 1 <= self.K <= MAX_PARENTS:
            raise ConfigurationError(f"K must be in 1..{MAX_PARENTS}, got {self.K}")
        return self

    @property
    def retained(self) -> int:
        return math.ceil((self.iterations - self.burn_in) / self.thinning)

    def is_retained(self, sweep: int) -> bool:
        """Whether 1-based sweep number is kept after burn-in and thinning"""
        return sweep > self.burn_in and (sweep - self.burn_in - 1) % self.thinning == 0

    def with_overrides(self, **changes: Any) -> "ChainConfig":
        """Validated copy with some fields replaced"""
        values = {**self.model_dump(exclude={"hyper"}), "hyper": self.hyper}
        values.update(changes)
        return ChainConfig(**values)

    def hyperparams_for(self, n_weights: int, n_rows: int, d: int) -> Hyperparams:
        if self.hyper is None:
            return Hyperparams.uniform(n_weights, n_rows, d, self.a, self.b1, self.b2)
        if self.hyper.a.shape != (n_weights,) or self.hyper.b1.shape != (n_rows, d):
            raise ConfigurationError(
                f"Hyperparameters shaped a{self.hyper.a.shape}, b{self.hyper.b1.shape}; "
                f"expected a({n_weights},), b({n_rows}, {d})"
            )
        return self.hyper

    def echo(self) -> Dict[str, Any]:
        """JSON-friendly copy for manifests"""
        data = self.model_dump(exclude={"hyper"})
        data["combiner"] = self.combiner.value
        data["custom_hyper"] = self.hyper is not None
        return data


# --- Chain state and output ---

@dataclass
class ChainState:
    """One Gibbs iteration's (z*, alpha*, pi)"""
    z_star: np.ndarray
    alpha_star: np.ndarray
    pi: np.ndarray
    iteration: int = 0


@dataclass
class PosteriorSamples:
    """Retained post-burn-in trajectory of a chain

    For the flat baseline, ``alpha_star`` holds the component weights and ``pi``
    the component probabilities (identity heir map).
    """
    kind: ModelKind
    K: int
    combiner: Combiner
    alpha_star: np.ndarray  # T x K*
    pi: np.ndarray  # T x K x d
    z_star: np.ndarray  # T x n
    sweeps: np.ndarray  # T, 1-based sweep numbers
    allocation_sums: Optional[np.ndarray] = None  # n x K*
    seed: Optional[int] = None

    @property
    def T(self) -> int:
        return int(self.alpha_star.shape[0])

    @property
    def n_heirs(self) -> int:
        return int(self.alpha_star.shape[1])

    @property
    def averaged_allocations(self) -> Optional[np.ndarray]:
        if self.allocation_sums is None:
            return None
        return self.allocation_sums / self.T


@dataclass
class BaselineParams:
    """Posterior-mean parameters of the flat mixture"""
    weights: np.ndarray
    probs: np.ndarray


# --- Selection ---

class DicResult(BaseModel):
    """DIC3 of one candidate K"""
    K: int
    dic: float
    expected_deviance_term: float = Field(..., description="Posterior mean of log P(y | alpha*, pi)")
    log_phat_term: float = Field(..., description="Sum over units of log P-hat(y_i)")
    retained_T: int

    @classmethod
    def assemble(cls, K: int, expected_loglik: float, log_phat: float, retained_T: int) -> "DicResult":
        return cls(
            K=K,
            dic=-4.0 * expected_loglik + 2.0 * log_phat,
            expected_deviance_term=expected_loglik,
            log_phat_term=log_phat,
            retained_T=retained_T,
        )


@dataclass
class ScanResult:
    """DIC scan over candidate K values"""
    results: List[DicResult]
    selected_K: int
    chains: Dict[int, PosteriorSamples] = field(default_factory=dict, repr=False)

    def result_for(self, K: int) -> DicResult:
        return next(r for r in self.results if r.K == K)


# --- Diagnostics ---

@dataclass
class PCM:
    """Posterior confusion matrix"""
    raw: np.ndarray
    rescaled: np.ndarray
    row_units: np.ndarray


# --- Simulation ---

class SimConfig(BaseModel):
    """Data-generating settings"""
    n: int = Field(..., ge=1)
    d: int = Field(..., ge=1)
    K: int = Field(..., ge=1, le=MAX_PARENTS)
    alpha_star: List[float]
    base_column: List[float]
    seed: int = Field(default=0, ge=0, lt=SEED_MODULUS)
    combiner: Combiner = Combiner.MIN

    @model_validator(mode="after")
    def _check(self) -> "SimConfig":
        weights = np.asarray(self.alpha_star, dtype=float)
        if weights.shape != (2 ** self.K,):
            raise ConfigurationError(f"alpha_star needs {2 ** self.K} entries for K={self.K}, got {weights.size}")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > SIMPLEX_TOL:
            raise ConfigurationError("alpha_star must lie on the probability simplex")
        base = np.asarray(self.base_column, dtype=float)
        if base.shape != (self.K,) or np.any(base <= 0) or np.any(base >= 1):
            raise ConfigurationError(f"base_column needs {self.K} entries strictly inside (0, 1)")
        return self


@dataclass
class SimDataset:
    """Simulated incidence matrix with its ground truth"""
    data: IncidenceMatrix
    true_labels: np.ndarray  # heir codes
    true_pi: np.ndarray
    true_alpha_star: np.ndarray


# --- Artifacts ---

class RunManifest(BaseModel):
    """Everything needed to rerun a command bit-for-bit"""
    command: str
    argv: List[str] = Field(default_factory=list)
    config: Dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None
    software_version: str
    started_at: datetime = Field(default_factory=datetime.utcnow)
    duration_seconds: float = 0.0
    input_digest: Optional[str] = Field(default=None, description="sha256 of the input incidence file")
    model: Dict[str, Any] = Field(default_factory=dict, description="kind, K and combiner of stored draws")
