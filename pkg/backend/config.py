import os
from pathlib import Path
from typing import Dict, List, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

VERSION = "0.3.0"

# Base directories
BASE_DIR = Path(__file__).parent
DATA_DIR = BASE_DIR / "data"
RESULTS_DIR = BASE_DIR.parent / "results"

# File names inside a run directory
MANIFEST_NAME = "manifest.json"
TRAJECTORY_TEMPLATE = "seed_{seed:04d}.jsonl"

# ============================================================================
# HYPERBAND CONFIGURATION
# ============================================================================
DEFAULT_ETA = 3.0
DEFAULT_MIN_BUDGET = 9.0
DEFAULT_MAX_BUDGET = 729.0

# ============================================================================
# SAMPLER CONFIGURATION
# ============================================================================
# Knobs the sampler exposes; N_min defaults to d + 1 when left unset.
DEFAULT_RHO = 1.0 / 3.0             # fraction of purely random proposals
DEFAULT_TOP_Q = 0.15                # good-set fraction of D_b
DEFAULT_NUM_SAMPLES = 64            # candidates drawn from l'(x)
DEFAULT_BANDWIDTH_FACTOR = 3.0      # b_w, widens l(x) when drawing candidates
DEFAULT_MIN_BANDWIDTH = 1e-3        # floor for continuous bandwidths (unit space)
DEFAULT_DENSITY_FLOOR = 1e-32       # floor for g(x) in the l/g ratio

# Truncated Gaussian kernel sampling: resample this often, then clamp
REJECTION_LIMIT = 64

# ============================================================================
# EXECUTION CONFIGURATION
# ============================================================================
DEFAULT_N_WORKERS = 1
DEFAULT_CLOCK = "simulated"
# Realtime mode: workers sleep cost * TIME_SCALE seconds before reporting (0 = no wait)
DEFAULT_TIME_SCALE = 0.0

OPTIMIZER_KINDS = ("bohb", "hyperband", "random_search", "tpe")
BENCHMARK_NAMES = ("counting-ones", "sphere")


class Settings(BaseSettings):
    """Environment overrides (prefix BOHB_LAB_, also read from .env)."""

    model_config = SettingsConfigDict(env_prefix="BOHB_LAB_", env_file=".env", extra="ignore")

    output_dir: Path = RESULTS_DIR
    log_level: str = "WARNING"


class SamplerParams(BaseModel):
    """Knobs of the KDE proposal step."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    rho: float = Field(default=DEFAULT_RHO, ge=0.0, le=1.0)
    top_q: float = Field(default=DEFAULT_TOP_Q, gt=0.0, lt=1.0)
    num_samples: int = Field(default=DEFAULT_NUM_SAMPLES, gt=0)
    min_points: Optional[int] = Field(default=None, gt=0)
    bandwidth_factor: float = Field(default=DEFAULT_BANDWIDTH_FACTOR, ge=1.0)
    min_bandwidth: float = Field(default=DEFAULT_MIN_BANDWIDTH, gt=0.0)
    density_floor: float = Field(default=DEFAULT_DENSITY_FLOOR, gt=0.0)

    def resolve_min_points(self, n_dims: int) -> int:
        """N_min, falling back to d + 1."""
        return self.min_points if self.min_points is not None else n_dims + 1


class RunConfig(BaseModel):
    """Everything one `run` invocation needs, validated before any seed starts."""

    model_config = ConfigDict(extra="forbid")

    optimizer: Literal["bohb", "hyperband", "random_search", "tpe"] = "bohb"
    benchmark: str = "counting-ones"
    n_categorical: int = Field(default=4, ge=0)
    n_continuous: int = Field(default=4, ge=0)
    min_budget: Optional[float] = Field(default=None, gt=0.0)
    max_budget: Optional[float] = Field(default=None, gt=0.0)
    eta: float = Field(default=DEFAULT_ETA, gt=1.0)
    sampler: SamplerParams = Field(default_factory=SamplerParams)
    n_workers: int = Field(default=DEFAULT_N_WORKERS, ge=1)
    clock: Literal["simulated", "realtime"] = DEFAULT_CLOCK
    time_scale: float = Field(default=DEFAULT_TIME_SCALE, ge=0.0)
    n_iterations: Optional[int] = Field(default=None, gt=0)
    budget_limit: Optional[float] = Field(default=None, gt=0.0)
    seeds: List[int] = Field(default_factory=lambda: [0])
    output_dir: Path = Field(default_factory=lambda: Settings().output_dir)

    @field_validator("benchmark")
    @classmethod
    def _known_benchmark(cls, value: str) -> str:
        if value not in BENCHMARK_NAMES:
            raise ValueError(f"unknown benchmark '{value}', valid names: {', '.join(BENCHMARK_NAMES)}")
        return value

    @field_validator("seeds")
    @classmethod
    def _distinct_seeds(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("at least one seed is required")
        if len(set(value)) != len(value):
            raise ValueError("seeds must be distinct")
        return value

    @model_validator(mode="after")
    def _check_run(self) -> "RunConfig":
        if self.n_iterations is None and self.budget_limit is None:
            raise ValueError("set n_iterations or budget_limit (or both)")
        if self.min_budget is not None and self.max_budget is not None and self.min_budget > self.max_budget:
            raise ValueError("min_budget must not exceed max_budget")
        if self.n_categorical + self.n_continuous == 0:
            raise ValueError("the benchmark needs at least one dimension")
        if self.benchmark == "sphere" and self.n_continuous == 0:
            raise ValueError("sphere needs n_continuous >= 1")
        return self

    def manifest(self) -> Dict:
        """Resolved configuration as written next to the trajectories."""
        return {"version": VERSION, "config": self.model_dump(mode="json", exclude={"seeds", "output_dir"})}


def load_config_file(path: Path) -> Dict:
    """Read a YAML run configuration; keys mirror RunConfig fields."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found at {path}")
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping at the top level")
    return data


def merge_overrides(flags: Dict, overrides: Dict) -> Dict:
    """Config-file values win over flag values; the nested sampler mapping merges key by key."""
    merged = dict(flags)
    for key, value in overrides.items():
        if key == "sampler" and isinstance(value, dict):
            merged["sampler"] = {**dict(merged.get("sampler") or {}), **value}
        else:
            merged[key] = value
    return merged


def configure_from_env() -> Settings:
    """Settings resolved from the process environment and .env."""
    # .env in the working directory takes effect through pydantic-settings
    return Settings(_env_file=os.environ.get("BOHB_LAB_ENV_FILE", ".env"))
