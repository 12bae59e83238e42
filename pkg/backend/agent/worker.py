import sys
import os

# Add backend directory to sys.path to allow imports from tools
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import asyncio
import logging
import math
from concurrent.futures import Executor
from typing import Optional

import numpy as np

from tools.benchmarks import Benchmark

logger = logging.getLogger(__name__)


class EvaluationWorker:
    """
    Realtime worker: runs one (config, budget) evaluation at a time.

    The benchmark call goes through the event loop's executor so the
    coordinator coroutine stays responsive. With time_scale > 0 the worker
    also sleeps cost * time_scale seconds to mimic the evaluation duration.
    A failed evaluation is reported as +inf.
    """

    def __init__(self,
                 worker_id: int,
                 benchmark: Benchmark,
                 time_scale: float = 0.0,
                 executor: Optional[Executor] = None):
        if time_scale < 0:
            raise ValueError("time_scale must be >= 0")
        self.worker_id = worker_id
        self.benchmark = benchmark
        self.time_scale = time_scale
        self.executor = executor
        self.n_jobs = 0

    async def run_job(self, job, rng: np.random.Generator) -> float:
        loop = asyncio.get_running_loop()
        try:
            loss = await loop.run_in_executor(self.executor, self.benchmark.evaluate, job.config, job.budget, rng)
            loss = float(loss)
        except Exception as e:
            logger.warning("worker %d: config %d @ budget %g failed: %s",
                           self.worker_id, job.config.id, job.budget, e)
            loss = math.inf

        if self.time_scale > 0:
            await asyncio.sleep(self.benchmark.cost(job.config, job.budget) * self.time_scale)

        self.n_jobs += 1
        return loss


if __name__ == "__main__":
    from agent.coordinator import Coordinator
    from tools.benchmarks import CountingOnes

    async def test_worker():
        print("🧪 Testing EvaluationWorker standalone...")
        coordinator = Coordinator(CountingOnes(), optimizer="random_search", n_iterations=1, seed=0)
        job = coordinator.next_action(0)
        worker = EvaluationWorker(0, coordinator.benchmark)
        loss = await worker.run_job(job, coordinator.eval_rng(job))
        print(f"✅ config {job.config.id} @ budget {job.budget:g} -> loss {loss:.4f}")

    asyncio.run(test_worker())
