"""
Factorized kernel density estimator over unit-space configurations.

Continuous (and integer) dimensions use a Gaussian kernel, categorical
dimensions the Aitchison-Aitken kernel. Bandwidths follow Scott's rule with
the full model dimension in the exponent.
"""

from typing import Iterator, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import norm

from config import DEFAULT_BANDWIDTH_FACTOR, DEFAULT_MIN_BANDWIDTH, REJECTION_LIMIT
from tools.configspace import Configuration, ConfigurationSpace


class DensityParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    min_bandwidth: float = Field(default=DEFAULT_MIN_BANDWIDTH, gt=0.0)
    bandwidth_factor: float = Field(default=DEFAULT_BANDWIDTH_FACTOR, ge=1.0)


def max_lambda(cardinalities: np.ndarray) -> np.ndarray:
    """Upper end (c-1)/c of the Aitchison-Aitken bandwidth; 0 for non-categorical dims."""
    cards = np.asarray(cardinalities, dtype=float)
    return np.where(cards > 0, (cards - 1.0) / np.maximum(cards, 1.0), 0.0)


def scott_bandwidths(data: np.ndarray, space: ConfigurationSpace,
                     min_bandwidth: float = DEFAULT_MIN_BANDWIDTH) -> np.ndarray:
    """
    Scott's rule on unit data.

    Continuous dim j: max(min_bandwidth, std_j * n^(-1/(d+4))), population std.
    Categorical dim j: the same normal-reference value computed on the
    category indices, clamped to [0, (c_j-1)/c_j].
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    n, d = data.shape
    if n < 1:
        raise ValueError("Scott's rule needs at least one data point")
    factor = n ** (-1.0 / (d + 4))
    cat = space.categorical_mask
    bandwidths = np.maximum(min_bandwidth, data.std(axis=0, ddof=0) * factor)
    bandwidths[cat] = np.clip(bandwidths[cat], 0.0, max_lambda(space.cardinalities)[cat])
    return bandwidths


class KdeModel:
    """Immutable product-kernel density; `pdf` and `sample_unit` are safe to share."""

    def __init__(self, data: np.ndarray, space: ConfigurationSpace, bandwidths: np.ndarray,
                 min_bandwidth: float = DEFAULT_MIN_BANDWIDTH):
        data = np.atleast_2d(np.asarray(data, dtype=float))
        bandwidths = np.asarray(bandwidths, dtype=float)
        if data.shape[0] < 1:
            raise ValueError("a KDE needs at least one data point")
        if data.shape[1] != space.d or bandwidths.shape != (space.d,):
            raise ValueError(f"data/bandwidths must have {space.d} columns")

        self.space = space
        self.cardinalities = space.cardinalities
        self.cat = self.cardinalities > 0
        self.cont = ~self.cat
        if np.any(bandwidths[self.cont] < min_bandwidth):
            raise ValueError(f"continuous bandwidths must be >= min_bandwidth={min_bandwidth}")
        lam_max = max_lambda(self.cardinalities)
        if np.any(bandwidths[self.cat] < 0) or np.any(bandwidths[self.cat] > lam_max[self.cat] + 1e-12):
            raise ValueError("categorical bandwidths must lie in [0, (c-1)/c]")

        self.data = data.copy()
        self.data.setflags(write=False)
        self.bandwidths = bandwidths.copy()
        self.bandwidths.setflags(write=False)
        self.min_bandwidth = min_bandwidth

    @classmethod
    def fit(cls, data: np.ndarray, space: ConfigurationSpace,
            min_bandwidth: float = DEFAULT_MIN_BANDWIDTH) -> "KdeModel":
        return cls(data, space, scott_bandwidths(data, space, min_bandwidth), min_bandwidth)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def pdf_many(self, points: np.ndarray) -> np.ndarray:
        """Density at each row of an (m, d) unit matrix."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        # (m, n) kernel products, accumulated dimension by dimension
        kernel = np.ones((points.shape[0], self.n))
        for j in range(self.space.d):
            diff_x = points[:, j][:, None]
            diff_d = self.data[:, j][None, :]
            h = self.bandwidths[j]
            if self.cat[j]:
                c = self.cardinalities[j]
                kernel *= np.where(diff_x == diff_d, 1.0 - h, h / (c - 1))
            else:
                kernel *= norm.pdf(diff_x, loc=diff_d, scale=h)
        return kernel.mean(axis=1)

    def pdf(self, x) -> float:
        unit = x.unit if isinstance(x, Configuration) else x
        return float(self.pdf_many(np.asarray(unit, dtype=float)[None, :])[0])

    def sample_unit(self, params: DensityParams, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        """
        Draw `size` points from the widened density l'(x).

        A data row is picked uniformly; continuous dims draw from
        N(row, b_w * h) truncated to [0, 1] by resampling (clamped after
        REJECTION_LIMIT rounds); categorical dims keep the row's category with
        probability 1 - min(b_w * lambda, (c-1)/c), otherwise switch uniformly
        to one of the other c - 1 categories.
        """
        if params.bandwidth_factor < 1:
            raise ValueError("bandwidth_factor must be >= 1")
        rows = rng.integers(0, self.n, size=size)
        samples = self.data[rows].copy()
        widened = self.bandwidths * params.bandwidth_factor
        lam_max = max_lambda(self.cardinalities)

        for j in range(self.space.d):
            centers = self.data[rows, j]
            if self.cat[j]:
                c = int(self.cardinalities[j])
                lam = min(widened[j], lam_max[j])
                switch = rng.random(size) < lam
                offsets = rng.integers(1, c, size=size)
                samples[:, j] = np.where(switch, (centers + offsets) % c, centers)
                continue

            values = rng.normal(centers, widened[j])
            outside = (values < 0.0) | (values > 1.0)
            for _ in range(REJECTION_LIMIT):
                if not outside.any():
                    break
                values[outside] = rng.normal(centers[outside], widened[j])
                outside = (values < 0.0) | (values > 1.0)
            samples[:, j] = np.clip(values, 0.0, 1.0)
        return samples

    def sample(self, params: DensityParams, rng: np.random.Generator,
               ids: Optional[Iterator[int]] = None) -> Configuration:
        return self.space.make_configuration(self.sample_unit(params, rng, size=1)[0], ids)
