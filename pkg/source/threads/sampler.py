from __future__ import annotations

from dataclasses import dataclass, field

from modules.ensembles import EnsembleSample, draw_pool
from modules.enums import Group
from modules.task import Task
from modules.tasks import run_tasks

BATCH_SIZE = 250


@dataclass
class EnsembleDrawTask(Task):
    group: Group
    n: int
    seed: int
    start: int
    count: int
    result: list[EnsembleSample] = field(default_factory=list, init=False)

    def compute(self) -> list[EnsembleSample]:
        return draw_pool(self.group, self.n, self.seed, self.count, self.start)

    def __str__(self):
        return f"{self.group.value}({self.n}) draws {self.start}..{self.start + self.count - 1}"


def parallel_draws(group: Group, n: int, seed: int, start: int, count: int, worker_count: int) -> list[EnsembleSample]:
    """Draws start .. start + count - 1 of the stream `seed`, split into batches across `worker_count` threads."""
    tasks = [
        EnsembleDrawTask(group, n, seed, s, min(BATCH_SIZE, start + count - s))
        for s in range(start, start + count, BATCH_SIZE)
    ]
    run_tasks(tasks, worker_count)
    return [sample for task in tasks for sample in task.result]
