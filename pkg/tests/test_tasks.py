from dataclasses import dataclass, field

import pytest
from modules.enums import Group
from modules.ensembles import draw_pool
from modules.task import Task
from modules.tasks import run_tasks
from threads.sampler import BATCH_SIZE, parallel_draws


@dataclass
class SquareTask(Task):
    x: int
    result: int | None = field(default=None, init=False)

    def compute(self):
        if self.x < 0:
            raise ValueError(f"negative input {self.x}")
        return self.x * self.x


@pytest.mark.parametrize("workers", [1, 3])
def test_results_stay_on_the_tasks(workers):
    tasks = [SquareTask(x) for x in range(10)]
    run_tasks(tasks, workers)
    assert [t.result for t in tasks] == [x * x for x in range(10)]


def test_first_failure_in_submission_order_is_raised():
    tasks = [SquareTask(1), SquareTask(-2), SquareTask(3), SquareTask(-4)]
    with pytest.raises(ValueError, match="-2"):
        run_tasks(tasks, 2)
    assert tasks[0].result == 1
    assert tasks[2].result == 9


def test_finished_signal_is_emitted():
    seen = []
    task = SquareTask(4)
    task.finished.connect(seen.append)
    run_tasks([task], 1)
    assert seen == [16]


def test_parallel_draws_match_the_serial_stream():
    count = BATCH_SIZE + 17
    parallel = parallel_draws(Group.SO_EVEN, 4, 21, 5, count, worker_count=3)
    serial = draw_pool(Group.SO_EVEN, 4, 21, count, start=5)
    assert [s.draw for s in parallel] == list(range(5, 5 + count))
    assert [s.lambda_at_one for s in parallel] == [s.lambda_at_one for s in serial]


def test_failure_signal_carries_the_exception():
    seen = []
    task = SquareTask(-1)
    task.failure.connect(seen.append)
    with pytest.raises(ValueError):
        task.run()
    assert isinstance(seen[0], ValueError)
    assert task.result is None
