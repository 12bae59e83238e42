import numpy as np
import pytest

from agent.coordinator import run
from tools.benchmarks import CountingOnes
from utils.report import (
    ReportError,
    aggregate,
    build_report,
    incumbent_curve,
    load_run_dir,
    make_grid,
    sem,
    step_interpolate,
    to_csv,
)
from utils.trajectory import (
    RECORD_FIELDS,
    Trajectory,
    TrajectoryRecord,
    read_trajectory,
    write_manifest,
    write_trajectory,
)


def incumbent(cum_budget, regret, sim_time=None):
    return TrajectoryRecord(
        event="incumbent", sim_time=cum_budget if sim_time is None else sim_time, cum_budget=cum_budget,
        sh_run=0, stage=0, budget=9.0, config_id=0, loss=-regret, provenance="random", regret=regret,
    )


def write_run_dir(path, optimizer, trajectories, benchmark="counting-ones"):
    write_manifest(path, {"version": "test", "config": {
        "optimizer": optimizer, "benchmark": benchmark, "n_categorical": 2, "n_continuous": 2,
        "min_budget": 9.0, "max_budget": 729.0,
    }})
    for seed, trajectory in enumerate(trajectories):
        write_trajectory(path / f"seed_{seed:04d}.jsonl", trajectory)
    return path


def test_single_run_after_final_event():
    trajectory = Trajectory([incumbent(10, 0.7), incumbent(50, 0.3)])
    xs, regrets = incumbent_curve(trajectory)
    values = step_interpolate(xs, regrets, np.array([100.0]))
    assert values[0] == 0.3
    assert sem(np.array([0.3])) == 0.0


def test_two_run_statistics():
    values = np.array([0.2, 0.4])
    assert values.mean() == pytest.approx(0.3)
    assert sem(values) == pytest.approx(0.1)


def test_step_interpolation_boundaries():
    xs = np.array([10.0, 20.0, 20.0, 40.0])
    regrets = np.array([0.9, 0.6, 0.5, 0.1])
    grid = np.array([5.0, 10.0, 19.9, 20.0, 39.0, 40.0])
    out = step_interpolate(xs, regrets, grid)
    assert np.isnan(out[0])
    assert list(out[1:]) == [0.9, 0.9, 0.5, 0.5, 0.1]


def test_missing_marker_before_first_incumbent(tmp_path):
    run_dir = write_run_dir(tmp_path / "bohb", "bohb", [
        Trajectory([incumbent(10, 0.4)]),
        Trajectory([incumbent(30, 0.2)]),
    ])
    table = aggregate([load_run_dir(run_dir)], np.array([5.0, 20.0, 30.0]))
    assert np.isnan(table["bohb_mean"][0]) and np.isnan(table["bohb_mean"][1])
    assert table["bohb_mean"][2] == pytest.approx(0.3)
    assert table["bohb_sem"][2] == pytest.approx(0.1)
    assert list(table["bohb_runs"]) == [2, 2, 2]
    lines = to_csv(table).splitlines()
    assert lines[0] == "grid,bohb_mean,bohb_sem,bohb_runs"
    assert lines[1] == "5,,,2"
    assert lines[3] == "30,0.3,0.1,2"


def test_mixed_benchmarks_rejected(tmp_path):
    a = write_run_dir(tmp_path / "a", "bohb", [Trajectory([incumbent(10, 0.4)])])
    b = write_run_dir(tmp_path / "b", "hyperband", [Trajectory([incumbent(10, 0.4)])], benchmark="sphere")
    with pytest.raises(ReportError, match="mixed benchmarks"):
        build_report([a, b])


def test_grids():
    linear = make_grid(100.0, 4)
    assert list(linear) == [25.0, 50.0, 75.0, 100.0]
    log = make_grid(1000.0, 4, scale="log", x_min=1.0)
    assert log == pytest.approx([1.0, 10.0, 100.0, 1000.0])
    assert np.all(np.diff(log) > 0)
    with pytest.raises(ReportError):
        make_grid(0.0, 10)
    with pytest.raises(ReportError):
        make_grid(10.0, 5, x_min=20.0)


def test_report_matches_raw_trajectories(tmp_path):
    bench = CountingOnes(n_categorical=2, n_continuous=2)
    trajectories = {
        opt: [run(bench, optimizer=opt, n_workers=2, n_iterations=5, seed=s) for s in range(3)]
        for opt in ("bohb", "random_search")
    }
    dirs = [write_run_dir(tmp_path / opt, opt, trajs) for opt, trajs in trajectories.items()]
    table = build_report(dirs, n_points=20)
    assert list(table.columns) == [
        "grid", "bohb_mean", "bohb_sem", "bohb_runs",
        "random_search_mean", "random_search_sem", "random_search_runs",
    ]
    assert np.all(np.diff(table["grid"]) > 0)

    # independent recomputation: latest incumbent with cum_budget <= t, per run
    for i, t in enumerate(table["grid"]):
        per_run = []
        for trajectory in trajectories["bohb"]:
            before = [r.regret for r in trajectory.incumbents() if r.cum_budget <= t]
            per_run.append(before[-1] if before else None)
        if None in per_run:
            assert np.isnan(table["bohb_mean"][i])
        else:
            assert table["bohb_mean"][i] == pytest.approx(np.mean(per_run))


def test_report_is_reproducible(tmp_path):
    bench = CountingOnes(n_categorical=2, n_continuous=2)
    run_dir = write_run_dir(tmp_path / "hb", "hyperband",
                            [run(bench, optimizer="hyperband", n_iterations=3, seed=s) for s in range(2)])
    assert to_csv(build_report([run_dir])) == to_csv(build_report([run_dir]))


def test_trajectory_file_round_trip(tmp_path):
    bench = CountingOnes(n_categorical=1, n_continuous=1, min_budget=1, max_budget=9)
    trajectory = run(bench, optimizer="hyperband", n_iterations=3, seed=0)
    path = write_trajectory(tmp_path / "seed_0000.jsonl", trajectory)
    assert path.read_text().count("\n") == len(trajectory)
    assert read_trajectory(path).to_jsonl() == trajectory.to_jsonl()
    assert list(trajectory.to_frame().columns) == RECORD_FIELDS


def test_infinite_loss_survives_the_file(tmp_path):
    record = TrajectoryRecord(event="eval_end", sim_time=1.0, cum_budget=1.0, sh_run=0, stage=0,
                              budget=1.0, config_id=3, loss=float("inf"), provenance="model")
    path = write_trajectory(tmp_path / "seed_0001.jsonl", Trajectory([record]))
    back = read_trajectory(path).records[0]
    assert back.loss == float("inf") and back.regret is None


def test_malformed_line_names_the_file(tmp_path):
    path = tmp_path / "seed_0000.jsonl"
    path.write_text('{"event": "eval_end"}\n')
    with pytest.raises(ValueError, match="seed_0000.jsonl:1"):
        read_trajectory(path)
