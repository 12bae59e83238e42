import sys
import os
import json
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Dict, List, Optional

# Add backend directory to sys.path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import click
import numpy as np
import yaml
from dotenv import load_dotenv
from pydantic import ValidationError
from tqdm import tqdm

from config import MANIFEST_NAME, TRAJECTORY_TEMPLATE, VERSION, RunConfig, configure_from_env, load_config_file, merge_overrides
from agent.coordinator import Coordinator
from tools.bandit import HyperbandParams, hyperband_brackets
from tools.benchmarks import BENCHMARKS, Benchmark, make_benchmark
from tools.configspace import ConfigurationSpace
from utils.display_utils import format_run_summary, format_schedule
from utils.report import ReportError, build_report, to_csv
from utils.trajectory import read_manifest, write_manifest, write_trajectory

logger = logging.getLogger(__name__)


def _echo(msg: str = ""):
    """Progress goes to stderr so stdout carries data only."""
    click.echo(msg, err=True)


def _validation_message(error: ValidationError) -> str:
    parts = []
    for err in error.errors():
        field = ".".join(str(p) for p in err["loc"]) or "config"
        parts.append(f"{field}: {err['msg']}")
    return "; ".join(parts)


def parse_seeds(text: str) -> List[int]:
    """'0-31' or '0,3,7' or a mix such as '0-3,10'."""
    seeds = []
    try:
        for chunk in text.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            if "-" in chunk:
                lo, hi = chunk.split("-", 1)
                seeds.extend(range(int(lo), int(hi) + 1))
            else:
                seeds.append(int(chunk))
    except ValueError:
        raise click.BadParameter(f"cannot parse seed list '{text}'", param_hint="'--seeds'")
    return seeds


def build_benchmark(config: RunConfig) -> Benchmark:
    kwargs = {"n_continuous": config.n_continuous}
    if config.benchmark == "counting-ones":
        kwargs["n_categorical"] = config.n_categorical
    if config.min_budget is not None:
        kwargs["min_budget"] = config.min_budget
    if config.max_budget is not None:
        kwargs["max_budget"] = config.max_budget
    return make_benchmark(config.benchmark, **kwargs)


def resolve_config(config: RunConfig) -> RunConfig:
    """Fill the budget range from the benchmark defaults so the manifest is complete."""
    benchmark = build_benchmark(config)
    return config.model_copy(update={"min_budget": benchmark.min_budget, "max_budget": benchmark.max_budget})


def run_seed(config_data: Dict, seed: int, path: str) -> Dict:
    """One seed of a batch: run, write the trajectory, return the summary. Picklable for --jobs."""
    config = RunConfig.model_validate(config_data)
    benchmark = build_benchmark(config)
    coordinator = Coordinator(
        benchmark,
        optimizer=config.optimizer,
        sampler_params=config.sampler,
        hyperband_params=HyperbandParams(min_budget=benchmark.min_budget, max_budget=benchmark.max_budget,
                                         eta=config.eta),
        n_iterations=config.n_iterations,
        budget_limit=config.budget_limit,
        seed=seed,
    )
    if config.clock == "simulated":
        coordinator.run_simulated(config.n_workers)
    else:
        import asyncio
        asyncio.run(coordinator.run_realtime(config.n_workers, config.time_scale))
    write_trajectory(Path(path), coordinator.trajectory)
    return coordinator.summary()


@click.group()
@click.version_option(VERSION)
@click.option("--log-level", default=None, help="Python logging level (env BOHB_LAB_LOG_LEVEL).")
def cli(log_level: Optional[str]):
    """BOHB multi-fidelity optimizer lab: run experiments, print schedules, build reports."""
    load_dotenv()
    settings = configure_from_env()
    level = (log_level or settings.log_level).upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


@cli.command()
@click.option("--config", "config_file", type=click.Path(dir_okay=False, path_type=Path),
              help="YAML file whose keys override the flags.")
@click.option("--optimizer", type=click.Choice(["bohb", "hyperband", "random_search", "tpe"]))
@click.option("--benchmark", type=click.Choice(sorted(BENCHMARKS)))
@click.option("--n-categorical", type=int)
@click.option("--n-continuous", type=int)
@click.option("--min-budget", type=float)
@click.option("--max-budget", type=float)
@click.option("--eta", type=float)
@click.option("--rho", type=float, help="Fraction of random proposals.")
@click.option("--top-q", type=float, help="Good-set fraction.")
@click.option("--num-samples", type=int, help="Candidates drawn per model-based proposal.")
@click.option("--min-points", type=int, help="N_min (default d + 1).")
@click.option("--bandwidth-factor", type=float)
@click.option("--min-bandwidth", type=float)
@click.option("--n-workers", type=int)
@click.option("--clock", type=click.Choice(["simulated", "realtime"]))
@click.option("--time-scale", type=float, help="Realtime mode: seconds slept per unit of cost.")
@click.option("--n-iterations", type=int, help="Number of SH runs.")
@click.option("--budget-limit", type=float, help="Stop opening SH runs after this much budget.")
@click.option("--seeds", type=str, help="Seed list, e.g. 0-31 or 0,4,9.")
@click.option("--output-dir", type=click.Path(file_okay=False, path_type=Path), help="Env BOHB_LAB_OUTPUT_DIR.")
@click.option("--jobs", type=int, default=1, show_default=True, help="Seeds run concurrently in processes.")
def run(config_file, jobs, **flags):
    """Run one optimizer over a batch of seeds, one trajectory file per seed."""
    sampler_keys = ("rho", "top_q", "num_samples", "min_points", "bandwidth_factor", "min_bandwidth")
    sampler = {k: v for k in sampler_keys if (v := flags.pop(k)) is not None}
    values = {k: v for k, v in flags.items() if v is not None}
    if "seeds" in values:
        values["seeds"] = parse_seeds(values["seeds"])
    if sampler:
        values["sampler"] = sampler
    if jobs < 1:
        raise click.BadParameter("must be >= 1", param_hint="'--jobs'")

    if config_file is not None:
        try:
            overrides = load_config_file(config_file)
        except (OSError, ValueError, yaml.YAMLError) as e:
            raise click.UsageError(f"config: {e}")
        if "seeds" in overrides and isinstance(overrides["seeds"], str):
            overrides["seeds"] = parse_seeds(overrides["seeds"])
        values = merge_overrides(values, overrides)

    try:
        config = resolve_config(RunConfig.model_validate(values))
    except ValidationError as e:
        raise click.UsageError(_validation_message(e))
    except ValueError as e:
        raise click.UsageError(str(e))

    out_dir = Path(config.output_dir)
    manifest = config.manifest()
    if (out_dir / MANIFEST_NAME).exists():
        existing = read_manifest(out_dir)
        if existing.get("config") != manifest["config"]:
            raise click.UsageError(f"{out_dir} holds runs of a different configuration")
    write_manifest(out_dir, manifest)

    todo = []
    for seed in config.seeds:
        path = out_dir / TRAJECTORY_TEMPLATE.format(seed=seed)
        if path.exists():
            continue
        todo.append((seed, path))

    _echo(f"🚀 {config.optimizer} on {config.benchmark} "
          f"({config.n_workers} worker(s), {config.clock} clock) -> {out_dir}")
    skipped = len(config.seeds) - len(todo)
    if skipped:
        _echo(f"⏭️  Resuming: {skipped} seed file(s) already present")

    config_data = config.model_dump(mode="json")
    summaries = []
    try:
        with tqdm(total=len(todo), desc="seeds", unit="run", file=sys.stderr, disable=not todo) as bar:
            if jobs == 1:
                for seed, path in todo:
                    summaries.append(run_seed(config_data, seed, str(path)))
                    bar.update(1)
            else:
                with ProcessPoolExecutor(max_workers=jobs) as pool:
                    futures = [pool.submit(run_seed, config_data, seed, str(path)) for seed, path in todo]
                    for future in as_completed(futures):
                        summaries.append(future.result())
                        bar.update(1)
    except Exception as e:
        logger.exception("run failed")
        raise click.ClickException(f"run failed: {e}")

    summaries.sort(key=lambda s: s["seed"])
    _echo(format_run_summary(summaries))
    _echo(f"✅ {len(todo)} run(s) written, {skipped} skipped")


@cli.command()
@click.option("--min-budget", type=float, required=True)
@click.option("--max-budget", type=float, required=True)
@click.option("--eta", type=float, default=3.0, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Structured output instead of a text table.")
def schedule(min_budget: float, max_budget: float, eta: float, as_json: bool):
    """Print the Hyperband bracket table for a budget range."""
    try:
        params = HyperbandParams(min_budget=min_budget, max_budget=max_budget, eta=eta)
    except ValidationError as e:
        raise click.UsageError(_validation_message(e))
    brackets = hyperband_brackets(params)
    if as_json:
        rows = [
            {
                "s": b.s,
                "n": b.n,
                "b0": b.b0,
                "stages": [[stage.n, stage.budget] for stage in b.stages],
                "total_budget": b.total_budget,
            }
            for b in brackets
        ]
        click.echo(json.dumps(rows, indent=2))
    else:
        click.echo(format_schedule(brackets))


@cli.command()
@click.argument("run_dirs", nargs=-1, required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--points", type=int, default=50, show_default=True, help="Number of grid points.")
@click.option("--x-axis", type=click.Choice(["cum_budget", "sim_time"]), default="cum_budget", show_default=True)
@click.option("--scale", type=click.Choice(["linear", "log"]), default="linear", show_default=True)
@click.option("--x-max", type=float, help="Grid end (default: last incumbent event over all runs).")
@click.option("--x-min", type=float, help="Grid start.")
@click.option("--output", type=click.Path(dir_okay=False, path_type=Path), help="Write the CSV here instead of stdout.")
def report(run_dirs, points, x_axis, scale, x_max, x_min, output):
    """Mean incumbent regret and its standard error per optimizer, as CSV."""
    try:
        table = build_report(list(run_dirs), n_points=points, x_axis=x_axis, scale=scale, x_max=x_max, x_min=x_min)
    except ReportError as e:
        raise click.UsageError(str(e))
    except (OSError, ValueError) as e:
        raise click.ClickException(str(e))

    text = to_csv(table)
    if output is None:
        click.echo(text, nl=False)
    else:
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(text, encoding="utf-8")
        _echo(f"💾 Report written to {output}")


@cli.command()
@click.argument("space_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--samples", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def space(space_file: Path, samples: int, seed: int):
    """Validate a space definition file and print uniform samples as JSON lines."""
    try:
        cs = ConfigurationSpace.from_yaml(space_file)
    except ValidationError as e:
        raise click.UsageError(_validation_message(e))
    except (ValueError, yaml.YAMLError) as e:
        raise click.UsageError(str(e))

    _echo(f"✅ {space_file}: {cs.d} parameter(s): {', '.join(cs.names)}")
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        config = cs.sample_uniform(rng)
        click.echo(json.dumps(cs.from_unit(config.unit)))


if __name__ == "__main__":
    cli()
