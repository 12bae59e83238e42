import numpy as np
import pytest
from pydantic import ValidationError

from tools.bandit import HyperbandParams, ShRunState, hyperband_brackets, sh_stages, single_stage_bracket, top_k
from utils.display_utils import format_schedule
from utils.errors import ContractError


def test_s_max():
    assert HyperbandParams(min_budget=9, max_budget=729, eta=3).s_max == 4
    assert HyperbandParams(min_budget=1, max_budget=1, eta=3).s_max == 0
    assert HyperbandParams(min_budget=1, max_budget=100, eta=3).s_max == 4


def test_brackets_for_default_range():
    brackets = hyperband_brackets(HyperbandParams(min_budget=9, max_budget=729, eta=3))
    assert [(b.s, b.n, b.b0) for b in brackets] == [
        (4, 81, 9), (3, 34, 27), (2, 15, 81), (1, 8, 243), (0, 5, 729)
    ]


def test_degenerate_single_budget():
    brackets = hyperband_brackets(HyperbandParams(min_budget=50, max_budget=50, eta=3))
    assert len(brackets) == 1
    assert (brackets[0].s, brackets[0].n, brackets[0].b0) == (0, 1, 50)


def test_brackets_from_budget_one():
    brackets = hyperband_brackets(HyperbandParams(min_budget=1, max_budget=81, eta=3))
    assert [b.n for b in brackets] == [81, 34, 15, 8, 5]
    assert [b.b0 for b in brackets] == [1, 3, 9, 27, 81]


def test_min_above_max_rejected():
    with pytest.raises(ValidationError):
        HyperbandParams(min_budget=10, max_budget=9)


def test_sh_stages_full_bracket():
    stages = sh_stages(81, 9, 729, 3)
    assert [tuple(s) for s in stages] == [(81, 9), (27, 27), (9, 81), (3, 243), (1, 729)]
    assert sum(s.n * s.budget for s in stages) == 3645


def test_default_range_budget_totals():
    brackets = hyperband_brackets(HyperbandParams(min_budget=9, max_budget=729, eta=3))
    assert [b.total_budget for b in brackets] == [3645, 3267, 3159, 3402, 3645]


def test_sh_stages_partial_bracket():
    assert [tuple(s) for s in sh_stages(34, 27, 729, 3)] == [(34, 27), (11, 81), (3, 243), (1, 729)]


def test_sh_stages_single_stage():
    assert [tuple(s) for s in sh_stages(5, 729, 729, 3)] == [(5, 729)]


def test_sh_stages_rejects_bad_input():
    with pytest.raises(ValueError):
        sh_stages(0, 9, 729, 3)
    with pytest.raises(ValueError):
        sh_stages(3, 1000, 729, 3)


@pytest.mark.parametrize("n, b0", [(10, 10), (5, 700), (27, 26.9)])
def test_sh_stages_rejects_off_grid_initial_budget(n, b0):
    with pytest.raises(ValueError, match="power of eta"):
        sh_stages(n, b0, 729, 3)


def test_sh_stages_keeps_the_requested_first_stage():
    stages = sh_stages(10, 729 / 2.5 ** 2, 729, 2.5)
    assert stages[0] == (10, pytest.approx(729 / 6.25))
    assert stages[-1].budget == 729


@pytest.mark.parametrize("min_budget, max_budget, eta", [(9, 729, 3), (1, 81, 3), (1, 100, 3), (2, 256, 2), (0.5, 64, 4)])
def test_equal_budget_law(min_budget, max_budget, eta):
    params = HyperbandParams(min_budget=min_budget, max_budget=max_budget, eta=eta)
    target = (params.s_max + 1) * max_budget
    for bracket in hyperband_brackets(params):
        # rounding of n and the survivor counts moves at most one configuration per stage
        slack = sum(s.budget for s in bracket.stages)
        assert abs(bracket.total_budget - target) <= slack + 1e-9
        budgets = [s.budget for s in bracket.stages]
        assert budgets[-1] == pytest.approx(max_budget, rel=1e-12)
        assert np.allclose(np.diff(np.log(budgets)), np.log(eta)) if len(budgets) > 1 else True
        assert all(s.n >= 1 for s in bracket.stages)


def test_top_k_argmin():
    assert top_k(["a", "b", "c"], [0.3, 0.1, 0.2], 1) == ["b"]


def test_top_k_ties_keep_insertion_order():
    assert top_k(["a", "b", "c"], [0.5, 0.5, 0.5], 1) == ["a"]


def test_top_k_matches_sorting_oracle(rng):
    losses = list(rng.permutation(9) / 10)
    items = list(range(9))
    assert sorted(top_k(items, losses, 3)) == sorted(np.argsort(losses)[:3].tolist())


def _run_stage(run, space, rng, ids, losses=None):
    """Sample (stage 0) or take the survivors, dispatch all, report losses."""
    while run.needs_sampling:
        run.add_config(space.sample_uniform(rng, ids))
    dispatched = []
    while (config := run.next_undispatched()) is not None:
        run.mark_dispatched(config.id)
        dispatched.append(config)
    for i, config in enumerate(dispatched):
        run.record(config.id, losses[i] if losses is not None else float(config.unit.sum()))
    return dispatched


def test_sh_run_walks_all_stages(unit_cube, rng, ids):
    bracket = hyperband_brackets(HyperbandParams(min_budget=9, max_budget=729, eta=3))[1]
    run = ShRunState(0, bracket)
    previous = None
    for k, stage in enumerate(bracket.stages):
        assert run.stage == k and run.budget == stage.budget
        dispatched = _run_stage(run, unit_cube, rng, ids)
        assert len(dispatched) == stage.n
        if previous is not None:
            assert {c.id for c in dispatched} <= {c.id for c in previous}
        previous = dispatched
        outcome = run.advance()
    assert run.finished
    best, loss = outcome
    assert loss == min(float(c.unit.sum()) for c in previous)
    assert not run.has_runnable()


def test_survivors_are_the_lowest_losses(unit_cube, rng, ids):
    run = ShRunState(0, hyperband_brackets(HyperbandParams(min_budget=3, max_budget=27, eta=3))[0])
    losses = [0.9, 0.1, 0.5, 0.3, 0.8, 0.2, 0.7, 0.4, 0.6]
    dispatched = _run_stage(run, unit_cube, rng, ids, losses)
    survivors = run.advance()
    assert [c.id for c in survivors] == [dispatched[i].id for i in (1, 5, 3)]


def test_advance_before_stage_complete(unit_cube, rng, ids):
    run = ShRunState(0, single_stage_bracket(2, 729.0))
    run.add_config(unit_cube.sample_uniform(rng, ids))
    with pytest.raises(ContractError):
        run.advance()


def test_duplicate_and_unknown_results_rejected(unit_cube, rng, ids):
    run = ShRunState(0, single_stage_bracket(2, 729.0))
    config = unit_cube.sample_uniform(rng, ids)
    run.add_config(config)
    with pytest.raises(ContractError):
        run.record(config.id, 0.1)
    run.mark_dispatched(config.id)
    run.record(config.id, 0.1)
    with pytest.raises(ContractError):
        run.record(config.id, 0.2)
    with pytest.raises(ContractError):
        run.mark_dispatched(config.id)


def test_awaiting_results_state(unit_cube, rng, ids):
    run = ShRunState(0, single_stage_bracket(1, 729.0))
    config = unit_cube.sample_uniform(rng, ids)
    run.add_config(config)
    run.mark_dispatched(config.id)
    assert run.awaiting_results and not run.has_runnable()
    with pytest.raises(ContractError):
        run.add_config(unit_cube.sample_uniform(rng, ids))


def test_schedule_table_text():
    text = format_schedule(hyperband_brackets(HyperbandParams(min_budget=9, max_budget=729, eta=3)))
    lines = text.splitlines()
    assert len(lines) == 2 + 5
    assert "81x9 -> 27x27 -> 9x81 -> 3x243 -> 1x729" in lines[2]
    assert lines[2].rstrip().endswith("3645")
    assert len({len(line) for line in lines[2:]}) == 1
