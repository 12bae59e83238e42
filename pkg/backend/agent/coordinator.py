# Optimizer Coordinator
# ---------------------------------------------------
# One coordinator owns every piece of mutable optimizer state:
#   * the shared ObservationStore (all SH runs read and feed the same models)
#   * the live SuccessiveHalving runs (ShRunState)
#   * the incumbent and the trajectory
# Workers only turn (config, budget) into a loss and report back.
#
# Dispatch policy for a free worker:
#   1. among active SH runs, the runnable job with the smallest budget
#      (ties: older run first, then stage insertion order); a run still
#      filling stage 0 samples its next configuration on the spot
#   2. nothing runnable -> open the next SH run in the bracket cycle
#      s_max, ..., 0, s_max, ... unless the iteration cap or budget limit is hit
#   3. otherwise wait
#
# Usage:
#   trajectory = run(make_benchmark("counting-ones"), optimizer="bohb", n_workers=4, n_iterations=10, seed=0)

import asyncio
import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

from config import DEFAULT_TIME_SCALE, SamplerParams
from services.observation_store import Observation, ObservationStore
from tools.bandit import (
    BUDGET_RTOL,
    HyperbandParams,
    ShRunState,
    hyperband_brackets,
    single_stage_bracket,
)
from tools.benchmarks import Benchmark
from tools.configspace import Configuration
from utils.clock import RealtimeClock, SimulatedClock
from utils.errors import ContractError
from utils.trajectory import Trajectory, TrajectoryRecord

from .sampler import BohbSampler

logger = logging.getLogger(__name__)

# Independent random streams derived from the run seed
SAMPLER_STREAM = 0
EVALUATION_STREAM = 1


@dataclass(frozen=True)
class Job:
    job_id: int
    config: Configuration
    budget: float
    sh_run: int
    stage: int
    dispatch_time: float
    provenance: str


@dataclass(frozen=True)
class Dispatch:
    time: float
    worker: int
    job: Job


class Coordinator:
    def __init__(self,
                 benchmark: Benchmark,
                 optimizer: str = "bohb",
                 sampler_params: Optional[SamplerParams] = None,
                 hyperband_params: Optional[HyperbandParams] = None,
                 n_iterations: Optional[int] = None,
                 budget_limit: Optional[float] = None,
                 seed: int = 0):
        if n_iterations is None and budget_limit is None:
            raise ValueError("set n_iterations or budget_limit (or both)")
        if optimizer not in ("bohb", "hyperband", "random_search", "tpe"):
            raise ValueError(f"unknown optimizer '{optimizer}'")

        self.benchmark = benchmark
        self.space = benchmark.space
        self.optimizer = optimizer
        self.seed = seed
        self.n_iterations = n_iterations
        self.budget_limit = budget_limit
        self.hyperband_params = hyperband_params or HyperbandParams(
            min_budget=benchmark.min_budget, max_budget=benchmark.max_budget
        )

        sampler_params = sampler_params or SamplerParams()
        if optimizer in ("hyperband", "random_search"):
            sampler_params = sampler_params.model_copy(update={"rho": 1.0})
        self.sampler_params = sampler_params

        # full-budget baselines run pseudo-brackets costing one SH run each
        if optimizer in ("bohb", "hyperband"):
            self.brackets = hyperband_brackets(self.hyperband_params)
        else:
            self.brackets = [single_stage_bracket(self.hyperband_params.s_max + 1, self.hyperband_params.max_budget)]

        self.ids = itertools.count()
        self.sampler = BohbSampler(
            self.space, sampler_params, np.random.default_rng((seed, SAMPLER_STREAM)), self.ids
        )
        self.store = ObservationStore((self.hyperband_params.min_budget, self.hyperband_params.max_budget))
        self.trajectory = Trajectory()

        self.runs: List[ShRunState] = []
        self.provenance: Dict[int, str] = {}
        self.in_flight: Dict[int, Job] = {}
        self.completed: Set[int] = set()
        self.dispatches: List[Dispatch] = []
        self._job_ids = itertools.count()

        self.dispatched_budget = 0.0
        self.cum_budget = 0.0
        self.incumbent: Optional[Tuple[Configuration, float, float]] = None

    # ------------------------------------------------------------------
    # Dispatch
    # ------------------------------------------------------------------
    def active_runs(self) -> List[ShRunState]:
        return [r for r in self.runs if not r.finished]

    def can_open_run(self) -> bool:
        if self.n_iterations is not None and len(self.runs) >= self.n_iterations:
            return False
        if self.budget_limit is not None and self.dispatched_budget >= self.budget_limit:
            return False
        return True

    def _open_run(self) -> ShRunState:
        bracket = self.brackets[len(self.runs) % len(self.brackets)]
        run = ShRunState(len(self.runs), bracket)
        self.runs.append(run)
        logger.info("opened SH run %d (s=%d, n=%d, b0=%g)", run.run_id, bracket.s, bracket.n, bracket.b0)
        return run

    def next_action(self, worker: int, now: float = 0.0) -> Optional[Job]:
        """A job for the free worker, or None to wait."""
        chosen = None
        for run in self.active_runs():
            if not run.has_runnable():
                continue
            if chosen is None or run.budget < chosen.budget * (1 - BUDGET_RTOL):
                chosen = run
        if chosen is None:
            if not self.can_open_run():
                return None
            chosen = self._open_run()
        return self._dispatch(chosen, worker, now)

    def _dispatch(self, run: ShRunState, worker: int, now: float) -> Job:
        config = run.next_undispatched()
        if config is None:
            proposal = self.sampler.propose(self.store)
            config = proposal.config
            self.provenance[config.id] = proposal.provenance
            run.add_config(config)
        run.mark_dispatched(config.id)

        job = Job(
            job_id=next(self._job_ids),
            config=config,
            budget=run.budget,
            sh_run=run.run_id,
            stage=run.stage,
            dispatch_time=now,
            provenance=self.provenance[config.id],
        )
        self.in_flight[job.job_id] = job
        self.dispatched_budget += job.budget
        self.dispatches.append(Dispatch(now, worker, job))
        logger.debug("worker %d <- config %d @ budget %g (SH run %d, stage %d)",
                     worker, config.id, job.budget, job.sh_run, job.stage)
        return job

    # ------------------------------------------------------------------
    # Results
    # ------------------------------------------------------------------
    def eval_rng(self, job: Job) -> np.random.Generator:
        """Per-job random source, independent of completion order."""
        return np.random.default_rng((self.seed, EVALUATION_STREAM, job.job_id))

    def evaluate(self, job: Job) -> float:
        try:
            return float(self.benchmark.evaluate(job.config, job.budget, self.eval_rng(job)))
        except Exception as e:
            logger.warning("evaluation of config %d @ budget %g failed: %s", job.config.id, job.budget, e)
            return math.inf

    def _regret(self, config: Configuration) -> Optional[float]:
        if not self.benchmark.has_exact:
            return None
        return float(self.benchmark.regret(config))

    def _update_incumbent(self, config: Configuration, budget: float, loss: float) -> bool:
        if not math.isfinite(loss):
            return False
        if self.incumbent is not None:
            _, inc_loss, inc_budget = self.incumbent
            if budget < inc_budget * (1 - BUDGET_RTOL):
                return False
            same_budget = budget <= inc_budget * (1 + BUDGET_RTOL)
            if same_budget and loss >= inc_loss:
                return False
        self.incumbent = (config, loss, budget)
        return True

    def on_result(self, job: Job, loss: float, worker: int = 0, now: float = 0.0):
        if job.job_id in self.completed:
            raise ContractError(f"duplicate result for job {job.job_id}")
        if job.job_id not in self.in_flight:
            raise ContractError(f"job {job.job_id} was never dispatched")
        del self.in_flight[job.job_id]
        self.completed.add(job.job_id)

        observation = self.store.record(Observation(
            config=job.config, budget=job.budget, loss=loss,
            worker_id=worker, sim_time=now, wall_time=time.time(),
        ))
        loss = observation.loss
        self.cum_budget += job.budget

        run = self.runs[job.sh_run]
        run.record(job.config.id, loss)

        record = dict(
            sim_time=now, cum_budget=self.cum_budget, sh_run=job.sh_run, stage=job.stage,
            budget=job.budget, config_id=job.config.id, loss=loss, provenance=job.provenance,
        )
        self.trajectory.append(TrajectoryRecord(event="eval_end", regret=self._regret(job.config), **record))
        if self._update_incumbent(job.config, job.budget, loss):
            regret = self._regret(job.config)
            self.trajectory.append(TrajectoryRecord(event="incumbent", regret=regret, **record))
            logger.info("new incumbent: config %d loss %.6g @ budget %g (regret %s)",
                        job.config.id, loss, job.budget, regret)

        if run.stage_complete:
            outcome = run.advance()
            if run.finished:
                best, best_loss = outcome
                logger.info("SH run %d finished: best config %d (loss %.6g)", run.run_id, best.id, best_loss)

    # ------------------------------------------------------------------
    # Drivers
    # ------------------------------------------------------------------
    def run_simulated(self, n_workers: int) -> Trajectory:
        """Single-threaded discrete-event run; completion time = dispatch time + cost."""
        clock = SimulatedClock()
        free = list(range(n_workers))
        while True:
            while free:
                job = self.next_action(free[0], clock.now())
                if job is None:
                    break
                worker = free.pop(0)
                loss = self.evaluate(job)
                clock.schedule(self.benchmark.cost(job.config, job.budget), worker, (job, loss))
            if not clock.has_pending():
                break
            for finish, worker, (job, loss) in clock.pop_simultaneous():
                self.on_result(job, loss, worker, finish)
                free.append(worker)
            free.sort()
        return self.trajectory

    async def run_realtime(self, n_workers: int, time_scale: float = DEFAULT_TIME_SCALE) -> Trajectory:
        """Concurrent workers; results are serialized through this coroutine."""
        from .worker import EvaluationWorker

        clock = RealtimeClock()
        free = list(range(n_workers))
        pending: Dict[asyncio.Task, Tuple[int, Job]] = {}
        with ThreadPoolExecutor(max_workers=n_workers) as executor:
            workers = [EvaluationWorker(i, self.benchmark, time_scale, executor) for i in range(n_workers)]
            while True:
                while free:
                    job = self.next_action(free[0], clock.now())
                    if job is None:
                        break
                    worker = free.pop(0)
                    task = asyncio.create_task(workers[worker].run_job(job, self.eval_rng(job)))
                    pending[task] = (worker, job)
                if not pending:
                    break
                done, _ = await asyncio.wait(pending, return_when=asyncio.FIRST_COMPLETED)
                for task in sorted(done, key=lambda t: pending[t][0]):
                    worker, job = pending.pop(task)
                    self.on_result(job, task.result(), worker, clock.now())
                    free.append(worker)
                free.sort()
        return self.trajectory

    def summary(self) -> Dict:
        evaluations = self.trajectory.evaluations()
        n_model = sum(1 for r in evaluations if r.provenance == "model")
        final = self.trajectory.final_incumbent()
        return {
            "optimizer": self.optimizer,
            "seed": self.seed,
            "sh_runs": len(self.runs),
            "evaluations": len(evaluations),
            "evaluations_per_budget": self.store.counts(),
            "model_fraction": n_model / len(evaluations) if evaluations else 0.0,
            "cum_budget": self.cum_budget,
            "incumbent_loss": final.loss if final else None,
            "incumbent_regret": final.regret if final else None,
        }


def run(benchmark: Benchmark,
        optimizer: str = "bohb",
        sampler_params: Optional[SamplerParams] = None,
        hyperband_params: Optional[HyperbandParams] = None,
        n_workers: int = 1,
        n_iterations: Optional[int] = None,
        budget_limit: Optional[float] = None,
        clock: str = "simulated",
        seed: int = 0,
        time_scale: float = DEFAULT_TIME_SCALE) -> Trajectory:
    """Run one optimizer to completion and return its trajectory."""
    if n_workers < 1:
        raise ValueError("n_workers must be >= 1")
    coordinator = Coordinator(benchmark, optimizer, sampler_params, hyperband_params,
                              n_iterations, budget_limit, seed)
    if clock == "simulated":
        return coordinator.run_simulated(n_workers)
    if clock == "realtime":
        return asyncio.run(coordinator.run_realtime(n_workers, time_scale))
    raise ValueError(f"unknown clock mode '{clock}'")
