import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from tools.configspace import Configuration

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Observation:
    """One evaluated (configuration, budget, loss) triple."""

    config: Configuration
    budget: float
    loss: float
    worker_id: int = 0
    sim_time: float = 0.0
    wall_time: float = 0.0


class ObservationStore:
    """
    All observations D, partitioned per budget into D_b.

    Each D_b keeps insertion order; non-finite losses are stored as +inf so
    they count toward N_b and sort as the worst entries. Only the coordinator
    mutates the store.
    """

    def __init__(self, budget_range: Optional[Tuple[float, float]] = None):
        self._by_budget: Dict[float, List[Observation]] = {}
        self.budget_range = budget_range

    def record(self, observation: Observation) -> Observation:
        budget = float(observation.budget)
        if self.budget_range is not None:
            lo, hi = self.budget_range
            if not lo * (1 - 1e-9) <= budget <= hi * (1 + 1e-9):
                raise ValueError(f"budget {budget} outside [{lo}, {hi}]")
        loss = observation.loss
        if loss is None or not math.isfinite(loss):
            if loss != math.inf:
                logger.debug("non-finite loss %r for config %d stored as +inf", observation.loss, observation.config.id)
            loss = math.inf
        observation = replace(observation, budget=budget, loss=float(loss))
        self._by_budget.setdefault(budget, []).append(observation)
        return observation

    def budgets(self) -> List[float]:
        return sorted(self._by_budget)

    def count(self, budget: float) -> int:
        return len(self._by_budget.get(float(budget), []))

    def counts(self) -> Dict[float, int]:
        return {b: len(obs) for b, obs in sorted(self._by_budget.items())}

    def observations(self, budget: float) -> List[Observation]:
        return list(self._by_budget.get(float(budget), []))

    def losses(self, budget: float) -> np.ndarray:
        return np.array([o.loss for o in self._by_budget.get(float(budget), [])], dtype=float)

    def __len__(self) -> int:
        return sum(len(obs) for obs in self._by_budget.values())

    def __iter__(self):
        for budget in self.budgets():
            yield from self._by_budget[budget]
