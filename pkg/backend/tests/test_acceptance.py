"""
Desk-scale experiments on counting-ones (4 categorical + 4 continuous dims,
budgets 9..729, eta 3). Minutes each, so they only run with `-m slow`.
"""

import numpy as np
import pytest
from scipy.stats import binomtest, ttest_rel

from agent.coordinator import Coordinator, run
from tools.benchmarks import CountingOnes
from utils.report import incumbent_curve, step_interpolate

pytestmark = pytest.mark.slow

TOTAL_BUDGET = 5e5


def counting_ones():
    return CountingOnes(n_categorical=4, n_continuous=4, min_budget=9, max_budget=729)


def regret_at(trajectory, budget):
    xs, regrets = incumbent_curve(trajectory, "cum_budget")
    return float(step_interpolate(xs, regrets, np.array([budget]))[0])


def time_to_regret(trajectory, threshold):
    """Simulated time at which the incumbent regret first drops to the threshold; censored at the end."""
    for record in trajectory.incumbents():
        if record.regret <= threshold:
            return record.sim_time
    return trajectory.evaluations()[-1].sim_time


@pytest.fixture(scope="module")
def final_budget_runs():
    bench = counting_ones()
    return {
        optimizer: [run(bench, optimizer=optimizer, budget_limit=TOTAL_BUDGET, seed=seed) for seed in range(64)]
        for optimizer in ("bohb", "hyperband", "random_search")
    }


def test_bohb_beats_hyperband_and_random_search(final_budget_runs):
    final = {
        optimizer: np.array([t.final_incumbent().regret for t in trajectories])
        for optimizer, trajectories in final_budget_runs.items()
    }
    assert ttest_rel(final["bohb"], final["hyperband"], alternative="less").pvalue < 0.01
    assert ttest_rel(final["bohb"], final["random_search"], alternative="less").pvalue < 0.01
    assert final["bohb"].mean() <= 0.5 * final["hyperband"].mean()


def early_means(final_budget_runs):
    early = 0.05 * TOTAL_BUDGET
    return {
        optimizer: np.mean([regret_at(t, early) for t in trajectories])
        for optimizer, trajectories in final_budget_runs.items()
    }


def test_bohb_keeps_up_with_hyperband_early(final_budget_runs):
    means = early_means(final_budget_runs)
    assert means["bohb"] <= 1.2 * means["hyperband"]
    assert means["bohb"] < means["random_search"]
    assert means["hyperband"] < means["random_search"]


@pytest.mark.xfail(reason="the model is fit from N_min + 2 results at the minimum budget, reached inside "
                          "the first bracket, so BOHB is already well ahead of Hyperband at 5% of the budget",
                   strict=False)
def test_bohb_matches_hyperband_early(final_budget_runs):
    means = early_means(final_budget_runs)
    assert abs(means["bohb"] - means["hyperband"]) <= 0.2 * means["hyperband"]


def test_four_workers_at_least_halve_the_time():
    bench = counting_ones()
    times = {}
    for n_workers in (1, 4):
        times[n_workers] = np.mean([
            time_to_regret(run(bench, n_workers=n_workers, budget_limit=TOTAL_BUDGET, seed=seed), 0.5)
            for seed in range(32)
        ])
    assert times[4] <= 0.5 * times[1]


def test_random_configurations_at_max_budget():
    m = 20
    coordinator = Coordinator(counting_ones(), n_iterations=m * 5, seed=0)
    trajectory = coordinator.run_simulated(1)
    # the s = 0 bracket samples straight at the maximum budget, after a model exists
    direct = [r for r in trajectory.evaluations() if r.budget == 729.0 and r.stage == 0]
    assert len(direct) == 5 * m
    n_random = sum(r.provenance == "random" for r in direct)
    assert binomtest(n_random, len(direct), coordinator.sampler_params.rho).pvalue > 0.01
