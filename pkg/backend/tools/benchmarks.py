"""
Multi-fidelity objective functions with exact-value oracles.

`evaluate(config, budget, rng)` is the noisy low-fidelity loss, `exact(config)`
the true objective used for regret. Both are stateless given the rng, so the
realtime workers can call them concurrently with per-call random sources.
"""

import math
from abc import ABC, abstractmethod
from typing import Dict, Type

import numpy as np

from config import DEFAULT_MAX_BUDGET, DEFAULT_MIN_BUDGET
from tools.configspace import (
    CategoricalParameter,
    Configuration,
    ConfigurationSpace,
    ContinuousParameter,
)


class Benchmark(ABC):
    name: str = ""
    # False for objectives without a known optimum; trajectories then carry no regret
    has_exact: bool = True

    def __init__(self, space: ConfigurationSpace, min_budget: float, max_budget: float, optimum: float):
        if min_budget > max_budget:
            raise ValueError(f"min_budget ({min_budget}) must not exceed max_budget ({max_budget})")
        self.space = space
        self.min_budget = float(min_budget)
        self.max_budget = float(max_budget)
        self.optimum = float(optimum)

    @abstractmethod
    def evaluate(self, config: Configuration, budget: float, rng: np.random.Generator) -> float:
        """Noisy loss at the given budget."""

    @abstractmethod
    def exact(self, config: Configuration) -> float:
        """True objective f(x)."""

    def cost(self, config: Configuration, budget: float) -> float:
        """Simulated seconds an evaluation takes."""
        return float(budget)

    def regret(self, config: Configuration) -> float:
        return abs(self.exact(config) - self.optimum)

    def describe(self) -> Dict:
        return {"name": self.name, "min_budget": self.min_budget, "max_budget": self.max_budget}


class CountingOnes(Benchmark):
    """
    f(x) = -(sum of binary categorical dims + sum of continuous dims).

    A continuous dim x_j enters the noisy loss as the mean of b Bernoulli(x_j)
    draws, with b the budget rounded to the nearest integer.
    """

    name = "counting-ones"

    def __init__(self, n_categorical: int = 4, n_continuous: int = 4,
                 min_budget: float = DEFAULT_MIN_BUDGET, max_budget: float = DEFAULT_MAX_BUDGET):
        params = [CategoricalParameter(name=f"cat_{i}", choices=[0, 1]) for i in range(n_categorical)]
        params += [ContinuousParameter(name=f"cont_{j}", lower=0.0, upper=1.0) for j in range(n_continuous)]
        super().__init__(ConfigurationSpace(parameters=params), min_budget, max_budget,
                         optimum=-(n_categorical + n_continuous))
        self.n_categorical = n_categorical
        self.n_continuous = n_continuous

    def _split(self, config: Configuration):
        unit = config.unit
        return unit[: self.n_categorical], unit[self.n_categorical:]

    def exact(self, config: Configuration) -> float:
        cat, cont = self._split(config)
        return -float(cat.sum() + cont.sum())

    def evaluate(self, config: Configuration, budget: float, rng: np.random.Generator) -> float:
        if budget < 1:
            raise ValueError(f"counting-ones needs at least one sample, got budget {budget}")
        n_samples = int(round(budget))
        cat, cont = self._split(config)
        # b Bernoulli draws per continuous dim, summarized by their binomial count
        means = rng.binomial(n_samples, cont) / n_samples
        return -float(cat.sum() + means.sum())

    def describe(self) -> Dict:
        return {**super().describe(), "n_categorical": self.n_categorical, "n_continuous": self.n_continuous}


class MultiFidelitySphere(Benchmark):
    """
    Continuous sphere centred at 0.7 with a fidelity bias and budget-dependent noise.

    loss = sum (x_j - 0.7)^2 + (1 - b/b_max) * sum 0.1 sin(20 x_j) + N(0, (0.01 sqrt(b_max/b))^2)
    """

    name = "sphere"
    center = 0.7

    def __init__(self, n_continuous: int = 4, min_budget: float = DEFAULT_MIN_BUDGET,
                 max_budget: float = DEFAULT_MAX_BUDGET):
        params = [ContinuousParameter(name=f"x_{j}", lower=0.0, upper=1.0) for j in range(n_continuous)]
        super().__init__(ConfigurationSpace(parameters=params), min_budget, max_budget, optimum=0.0)
        self.n_continuous = n_continuous

    def exact(self, config: Configuration) -> float:
        return float(np.sum((config.unit - self.center) ** 2))

    def bias(self, config: Configuration, budget: float) -> float:
        return (1.0 - budget / self.max_budget) * float(np.sum(0.1 * np.sin(20.0 * config.unit)))

    def noise_scale(self, budget: float) -> float:
        return 0.01 * math.sqrt(self.max_budget / budget)

    def evaluate(self, config: Configuration, budget: float, rng: np.random.Generator) -> float:
        return self.exact(config) + self.bias(config, budget) + float(rng.normal(0.0, self.noise_scale(budget)))

    def describe(self) -> Dict:
        return {**super().describe(), "n_continuous": self.n_continuous}


BENCHMARKS: Dict[str, Type[Benchmark]] = {
    CountingOnes.name: CountingOnes,
    MultiFidelitySphere.name: MultiFidelitySphere,
}


def make_benchmark(name: str, **kwargs) -> Benchmark:
    if name not in BENCHMARKS:
        raise ValueError(f"unknown benchmark '{name}', valid names: {', '.join(BENCHMARKS)}")
    return BENCHMARKS[name](**kwargs)


def regret(benchmark: Benchmark, config: Configuration) -> float:
    return benchmark.regret(config)
