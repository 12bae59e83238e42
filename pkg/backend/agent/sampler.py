import logging
import math
from dataclasses import dataclass
from typing import Iterator, List, Literal, Optional, Tuple

import numpy as np

from config import SamplerParams
from services.observation_store import Observation, ObservationStore
from tools.configspace import Configuration, ConfigurationSpace
from tools.density import DensityParams, KdeModel
from utils.errors import ContractError

logger = logging.getLogger(__name__)

Provenance = Literal["random", "model"]


@dataclass(frozen=True)
class Proposal:
    """A proposed configuration and where it came from."""

    config: Configuration
    provenance: Provenance
    model_budget: Optional[float] = None
    # model path only: the candidate set and their l/g ratios
    candidates: Optional[np.ndarray] = None
    ratios: Optional[np.ndarray] = None


def select_model_budget(store: ObservationStore, min_points: int) -> Optional[float]:
    """Largest budget b with N_b >= N_min + 2, or None."""
    qualifying = [b for b, n in store.counts().items() if n >= min_points + 2]
    return max(qualifying) if qualifying else None


def split_sizes(n_obs: int, top_q: float, min_points: int) -> Tuple[int, int]:
    n_good = max(min_points, int(math.floor(top_q * n_obs)))
    n_bad = max(min_points, n_obs - n_good)
    return n_good, n_bad


def split_good_bad(observations: List[Observation], top_q: float,
                   min_points: int) -> Tuple[List[Observation], List[Observation]]:
    """
    Split D_b into the N_{b,l} best and N_{b,g} worst observations.

    Sorting is stable, so equal losses keep insertion order. The two lists may
    overlap while N_b < N_{b,l} + N_{b,g}.
    """
    n_obs = len(observations)
    if n_obs < min_points + 2:
        raise ContractError(f"split needs at least N_min + 2 = {min_points + 2} observations, got {n_obs}")
    ranked = sorted(observations, key=lambda o: o.loss)
    n_good, n_bad = split_sizes(n_obs, top_q, min_points)
    return ranked[:n_good], ranked[n_obs - n_bad:]


class BohbSampler:
    """
    Proposal step of BOHB.

    With probability rho, or while no budget has N_min + 2 observations, a
    configuration is drawn uniformly. Otherwise KDEs l and g are fit on the
    good and bad parts of D_b for the largest qualifying budget, N_s
    candidates are drawn from the widened l', and the candidate with the
    highest l/max(g, floor) wins.
    """

    def __init__(self, space: ConfigurationSpace, params: SamplerParams, rng: np.random.Generator,
                 ids: Optional[Iterator[int]] = None):
        self.space = space
        self.params = params
        self.rng = rng
        self.ids = ids
        self.min_points = params.resolve_min_points(space.d)
        self.density_params = DensityParams(
            min_bandwidth=params.min_bandwidth,
            bandwidth_factor=params.bandwidth_factor,
        )

    def _random(self) -> Proposal:
        return Proposal(config=self.space.sample_uniform(self.rng, self.ids), provenance="random")

    def fit_models(self, store: ObservationStore, budget: float) -> Tuple[KdeModel, KdeModel]:
        good, bad = split_good_bad(store.observations(budget), self.params.top_q, self.min_points)
        good_model = KdeModel.fit(np.array([o.config.unit for o in good]), self.space, self.params.min_bandwidth)
        bad_model = KdeModel.fit(np.array([o.config.unit for o in bad]), self.space, self.params.min_bandwidth)
        return good_model, bad_model

    def propose(self, store: ObservationStore) -> Proposal:
        if self.rng.random() < self.params.rho:
            return self._random()

        budget = select_model_budget(store, self.min_points)
        if budget is None:
            return self._random()

        try:
            good_model, bad_model = self.fit_models(store, budget)
            candidates = good_model.sample_unit(self.density_params, self.rng, size=self.params.num_samples)
            ratios = good_model.pdf_many(candidates) / np.maximum(bad_model.pdf_many(candidates), self.params.density_floor)
        except (ValueError, FloatingPointError) as e:
            logger.warning("model-based proposal on budget %s failed (%s); sampling at random", budget, e)
            return self._random()

        if not np.isfinite(ratios).any():
            logger.debug("no finite l/g ratio on budget %s; sampling at random", budget)
            return self._random()
        best = int(np.argmax(np.where(np.isfinite(ratios), ratios, -np.inf)))
        config = self.space.make_configuration(candidates[best], self.ids)
        return Proposal(config=config, provenance="model", model_budget=budget, candidates=candidates, ratios=ratios)


def propose(store: ObservationStore, params: SamplerParams, space: ConfigurationSpace,
            rng: np.random.Generator, ids: Optional[Iterator[int]] = None) -> Proposal:
    return BohbSampler(space, params, rng, ids).propose(store)
