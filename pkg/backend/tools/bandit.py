"""
Hyperband bracket arithmetic and SuccessiveHalving stage logic.

Nothing here knows how configurations are proposed: a bracket says how many
configurations to start with and at which budgets, and ShRunState tracks one
live SuccessiveHalving run through its stages.
"""

import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

# Allow `python tools/bandit.py` from the backend directory
sys.path.append(str(Path(__file__).parent.parent))

from config import DEFAULT_ETA
from tools.configspace import Configuration
from utils.errors import ContractError

# Relative tolerance for "this budget is b_max"
BUDGET_RTOL = 1e-9


class HyperbandParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    min_budget: float = Field(gt=0.0)
    max_budget: float = Field(gt=0.0)
    eta: float = Field(default=DEFAULT_ETA, gt=1.0)

    @model_validator(mode="after")
    def _check_range(self):
        if self.min_budget > self.max_budget:
            raise ValueError(f"min_budget ({self.min_budget}) must not exceed max_budget ({self.max_budget})")
        return self

    @property
    def s_max(self) -> int:
        return int(math.floor(math.log(self.max_budget / self.min_budget) / math.log(self.eta) + BUDGET_RTOL))


class Stage(NamedTuple):
    n: int
    budget: float


@dataclass(frozen=True)
class BracketSpec:
    s: int
    n: int
    b0: float
    stages: Tuple[Stage, ...]

    @property
    def total_budget(self) -> float:
        return sum(stage.n * stage.budget for stage in self.stages)


def sh_stages(n: int, b0: float, max_budget: float, eta: float) -> List[Stage]:
    """
    SuccessiveHalving schedule: n_{k+1} = floor(n_k / eta), b_{k+1} = eta * b_k,
    ending with the stage at max_budget. Never fewer than one survivor.
    """
    if n < 1:
        raise ValueError("a SuccessiveHalving run needs at least one configuration")
    if b0 > max_budget * (1 + BUDGET_RTOL):
        raise ValueError(f"initial budget {b0} exceeds max budget {max_budget}")
    steps = math.log(max_budget / b0) / math.log(eta)
    if abs(steps - round(steps)) > BUDGET_RTOL:
        raise ValueError(f"initial budget {b0} is not max budget {max_budget} divided by a power of eta={eta}")
    # count stages from the top so the last budget is max_budget exactly
    n_stages = int(round(steps)) + 1
    stages = []
    for k in range(n_stages):
        budget = max_budget / eta ** (n_stages - 1 - k)
        stages.append(Stage(n, budget))
        n = max(1, int(math.floor(n / eta)))
    return stages


def hyperband_brackets(params: HyperbandParams) -> List[BracketSpec]:
    """Brackets s = s_max ... 0 with n = ceil((s_max+1)/(s+1) * eta^s) and b0 = b_max * eta^-s."""
    s_max = params.s_max
    brackets = []
    for s in range(s_max, -1, -1):
        n = int(math.ceil((s_max + 1) / (s + 1) * params.eta ** s - BUDGET_RTOL))
        b0 = params.max_budget / params.eta ** s
        stages = sh_stages(n, b0, params.max_budget, params.eta)
        brackets.append(BracketSpec(s=s, n=n, b0=stages[0].budget, stages=tuple(stages)))
    return brackets


def single_stage_bracket(n: int, max_budget: float) -> BracketSpec:
    """Pseudo-bracket for full-budget baselines: n configurations straight at b_max."""
    return BracketSpec(s=0, n=n, b0=max_budget, stages=(Stage(n, max_budget),))


def top_k(items: Sequence, losses: Sequence[float], k: int) -> List:
    """The k items with the lowest losses; ties keep insertion order."""
    order = sorted(range(len(items)), key=lambda i: losses[i])
    return [items[i] for i in order[:k]]


class ShRunState:
    """
    Live progress of one SuccessiveHalving run.

    Stage 0 is filled lazily: the coordinator samples configurations one at a
    time as workers free up. Later stages are populated by `advance`.
    """

    def __init__(self, run_id: int, bracket: BracketSpec):
        self.run_id = run_id
        self.bracket = bracket
        self.stage = 0
        self.configs: List[Configuration] = []
        self.dispatched: Dict[int, bool] = {}
        self.losses: Dict[int, float] = {}
        self.finished = False
        self.result: Optional[Tuple[Configuration, float]] = None

    @property
    def current(self) -> Stage:
        return self.bracket.stages[self.stage]

    @property
    def budget(self) -> float:
        return self.current.budget

    @property
    def is_final_stage(self) -> bool:
        return self.stage == len(self.bracket.stages) - 1

    @property
    def needs_sampling(self) -> bool:
        return not self.finished and self.stage == 0 and len(self.configs) < self.current.n

    def add_config(self, config: Configuration):
        if not self.needs_sampling:
            raise ContractError(f"SH run {self.run_id} cannot take more configurations")
        self.configs.append(config)
        self.dispatched[config.id] = False

    def next_undispatched(self) -> Optional[Configuration]:
        if self.finished:
            return None
        for config in self.configs:
            if not self.dispatched[config.id]:
                return config
        return None

    def has_runnable(self) -> bool:
        return self.next_undispatched() is not None or self.needs_sampling

    def mark_dispatched(self, config_id: int):
        if config_id not in self.dispatched:
            raise ContractError(f"config {config_id} is not part of stage {self.stage} of SH run {self.run_id}")
        if self.dispatched[config_id]:
            raise ContractError(f"config {config_id} already dispatched in SH run {self.run_id}")
        self.dispatched[config_id] = True

    def record(self, config_id: int, loss: float):
        if not self.dispatched.get(config_id, False):
            raise ContractError(f"result for config {config_id} which was never dispatched in SH run {self.run_id}")
        if config_id in self.losses:
            raise ContractError(f"duplicate result for config {config_id} in SH run {self.run_id}")
        self.losses[config_id] = loss

    @property
    def stage_complete(self) -> bool:
        return len(self.configs) == self.current.n and len(self.losses) == self.current.n

    @property
    def awaiting_results(self) -> bool:
        """Every job of the stage is out, some results are still missing."""
        return not self.finished and not self.has_runnable() and not self.stage_complete

    def advance(self):
        """
        Close the current stage.

        Returns the survivors of the next stage, or the (config, loss) of the
        single best configuration when the final stage closes.
        """
        if not self.stage_complete:
            raise ContractError(
                f"SH run {self.run_id} stage {self.stage}: {len(self.losses)}/{self.current.n} results in"
            )
        losses = [self.losses[c.id] for c in self.configs]
        if self.is_final_stage:
            best = top_k(self.configs, losses, 1)[0]
            self.finished = True
            self.result = (best, self.losses[best.id])
            return self.result

        survivors = top_k(self.configs, losses, self.bracket.stages[self.stage + 1].n)
        self.stage += 1
        self.configs = list(survivors)
        self.dispatched = {c.id: False for c in survivors}
        self.losses = {}
        return survivors


if __name__ == "__main__":
    from utils.display_utils import format_schedule

    print(format_schedule(hyperband_brackets(HyperbandParams(min_budget=9, max_budget=729, eta=3))))
