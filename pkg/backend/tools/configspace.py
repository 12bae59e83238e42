"""
Mixed continuous / integer / categorical search spaces.

Every configuration lives in an internal unit representation: continuous and
integer dimensions map to [0, 1] (linearly or on a log scale), categorical
dimensions hold the choice index. The density model only ever sees this
representation.
"""

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Annotated

from utils.errors import SpaceValidationError

# Fallback id source for callers that do not own one (coordinators pass their own)
_DEFAULT_IDS = itertools.count()


class _NumericParameter(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(min_length=1)
    lower: float
    upper: float
    log: bool = False

    @model_validator(mode="after")
    def _check_bounds(self):
        if not self.lower < self.upper:
            raise ValueError(f"{self.name}: lower must be < upper")
        if self.log and self.lower <= 0:
            raise ValueError(f"{self.name}: log-scaled bounds must be positive")
        return self

    @property
    def cardinality(self) -> int:
        return 0

    def _check(self, value: float):
        if not (self.lower <= value <= self.upper) or math.isnan(value):
            raise SpaceValidationError(self.name, f"{value!r} outside [{self.lower}, {self.upper}]")

    def to_unit(self, value: float) -> float:
        value = float(value)
        self._check(value)
        if self.log:
            lo, hi = math.log(self.lower), math.log(self.upper)
            u = (math.log(value) - lo) / (hi - lo)
        else:
            u = (value - self.lower) / (self.upper - self.lower)
        return min(1.0, max(0.0, u))

    def _from_unit(self, u: float) -> float:
        if self.log:
            lo, hi = math.log(self.lower), math.log(self.upper)
            x = math.exp(lo + u * (hi - lo))
        else:
            x = self.lower + u * (self.upper - self.lower)
        return min(self.upper, max(self.lower, x))


class ContinuousParameter(_NumericParameter):
    kind: Literal["continuous"] = "continuous"

    def from_unit(self, u: float) -> float:
        return self._from_unit(float(u))


class IntegerParameter(_NumericParameter):
    """Integer values travel as continuous unit coordinates and are rounded on the way out."""

    kind: Literal["integer"] = "integer"

    @model_validator(mode="after")
    def _check_integral(self):
        if self.lower != int(self.lower) or self.upper != int(self.upper):
            raise ValueError(f"{self.name}: integer bounds must be whole numbers")
        return self

    def to_unit(self, value: float) -> float:
        if float(value) != round(float(value)):
            raise SpaceValidationError(self.name, f"{value!r} is not an integer")
        return super().to_unit(value)

    def from_unit(self, u: float) -> int:
        return int(min(self.upper, max(self.lower, round(self._from_unit(float(u))))))


class CategoricalParameter(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["categorical"] = "categorical"
    name: str = Field(min_length=1)
    choices: List[Union[bool, int, float, str]]

    @model_validator(mode="after")
    def _check_choices(self):
        if len(self.choices) < 2:
            raise ValueError(f"{self.name}: a categorical needs at least 2 choices")
        if len(set(map(repr, self.choices))) != len(self.choices):
            raise ValueError(f"{self.name}: choices must be distinct")
        return self

    @property
    def cardinality(self) -> int:
        return len(self.choices)

    def to_unit(self, value: Any) -> float:
        for index, choice in enumerate(self.choices):
            if type(choice) is type(value) and choice == value:
                return float(index)
        # numeric labels given as another numeric type (e.g. 1.0 for 1)
        for index, choice in enumerate(self.choices):
            if not isinstance(choice, (str, bool)) and not isinstance(value, (str, bool)) and choice == value:
                return float(index)
        raise SpaceValidationError(self.name, f"{value!r} is not one of {self.choices}")

    def from_unit(self, u: float) -> Any:
        index = int(u)
        if not 0 <= index < self.cardinality or index != u:
            raise SpaceValidationError(self.name, f"index {u!r} outside 0..{self.cardinality - 1}")
        return self.choices[index]


ParameterSpec = Annotated[
    Union[ContinuousParameter, IntegerParameter, CategoricalParameter],
    Field(discriminator="kind"),
]


@dataclass(frozen=True, eq=False)
class Configuration:
    """A point of the space in unit representation plus a run-unique id."""

    id: int
    unit: np.ndarray = field(repr=False)

    def __post_init__(self):
        unit = np.array(self.unit, dtype=float)
        unit.setflags(write=False)
        object.__setattr__(self, "unit", unit)


class ConfigurationSpace(BaseModel):
    """Ordered list of parameters; immutable once built."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    parameters: List[ParameterSpec]

    @model_validator(mode="after")
    def _check_parameters(self):
        if not self.parameters:
            raise ValueError("a configuration space needs at least one parameter")
        names = [p.name for p in self.parameters]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ValueError(f"duplicate parameter names: {duplicates}")
        return self

    @classmethod
    def from_yaml(cls, path: Path) -> "ConfigurationSpace":
        """Load a space definition file (top-level `parameters:` list)."""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Space file not found at {path}")
        with open(path, "r", encoding="utf-8") as f:
            return cls.model_validate(yaml.safe_load(f))

    @property
    def d(self) -> int:
        return len(self.parameters)

    @property
    def names(self) -> List[str]:
        return [p.name for p in self.parameters]

    @property
    def cardinalities(self) -> np.ndarray:
        """Choice count per dimension, 0 for continuous/integer ones."""
        return np.array([p.cardinality for p in self.parameters], dtype=int)

    @property
    def categorical_mask(self) -> np.ndarray:
        return self.cardinalities > 0

    def to_unit(self, values: Dict[str, Any]) -> np.ndarray:
        missing = [n for n in self.names if n not in values]
        if missing:
            raise SpaceValidationError(missing[0], "value missing")
        return np.array([p.to_unit(values[p.name]) for p in self.parameters], dtype=float)

    def from_unit(self, unit: np.ndarray) -> Dict[str, Any]:
        self.validate_unit(unit)
        return {p.name: p.from_unit(u) for p, u in zip(self.parameters, unit)}

    def validate_unit(self, unit: np.ndarray):
        unit = np.asarray(unit, dtype=float)
        if unit.shape != (self.d,):
            raise ValueError(f"expected a unit vector of length {self.d}, got shape {unit.shape}")
        for p, u in zip(self.parameters, unit):
            if p.cardinality:
                if u != int(u) or not 0 <= u < p.cardinality:
                    raise SpaceValidationError(p.name, f"index {u!r} outside 0..{p.cardinality - 1}")
            elif not 0.0 <= u <= 1.0:
                raise SpaceValidationError(p.name, f"unit value {u!r} outside [0, 1]")

    def make_configuration(self, unit: np.ndarray, ids: Optional[Iterator[int]] = None) -> Configuration:
        self.validate_unit(unit)
        return Configuration(id=next(ids if ids is not None else _DEFAULT_IDS), unit=unit)

    def sample_uniform(self, rng: np.random.Generator, ids: Optional[Iterator[int]] = None) -> Configuration:
        """Uniform draw: U[0,1] per numeric dimension, uniform index per categorical."""
        cards = self.cardinalities
        unit = rng.random(self.d)
        cat = cards > 0
        if cat.any():
            unit[cat] = np.floor(unit[cat] * cards[cat])
            unit[cat] = np.minimum(unit[cat], cards[cat] - 1)
        return Configuration(id=next(ids if ids is not None else _DEFAULT_IDS), unit=unit)


def sample_uniform(space: ConfigurationSpace, rng: np.random.Generator,
                   ids: Optional[Iterator[int]] = None) -> Configuration:
    return space.sample_uniform(rng, ids)
