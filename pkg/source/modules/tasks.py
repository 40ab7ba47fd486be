from __future__ import annotations

import logging
from collections import deque
from typing import TYPE_CHECKING

from PyQt5.QtCore import QMutex, QMutexLocker, Qt, QThread, pyqtSignal

if TYPE_CHECKING:
    from collections.abc import Sequence

    from modules.task import Task

logger = logging.getLogger(__name__)


class TaskQueue(deque):
    """A finite work queue drained by `TaskWorker` threads.

    Workers stop once the queue is empty; call `join()` to wait for them.
    Signals are connected directly, so no Qt event loop is needed.
    """

    def __init__(self, worker_count: int = 4):
        super().__init__()
        self.workers = [TaskWorker(self, name=str(i)) for i in range(worker_count)]
        self.failures: list[tuple[Task, Exception]] = []
        self.done = 0
        self._mutex = QMutex()
        for w in self.workers:
            w.task_done.connect(self._count_done, Qt.ConnectionType.DirectConnection)

    def take(self) -> Task | None:
        with QMutexLocker(self._mutex):
            return self.popleft() if self else None

    def _count_done(self, task: Task):
        with QMutexLocker(self._mutex):
            self.done += 1
        logger.debug(f"{task} done")

    def report_failure(self, task: Task, e: Exception):
        with QMutexLocker(self._mutex):
            self.failures.append((task, e))

    def start(self):
        for worker in self.workers:
            worker.start()

    def join(self):
        for worker in self.workers:
            worker.wait()


class TaskWorker(QThread):
    task_done = pyqtSignal(object)  # Task

    def __init__(self, queue: TaskQueue, name: str):
        super().__init__()
        self.queue = queue
        self.setObjectName(name)

    def run(self):
        while (task := self.queue.take()) is not None:
            try:
                task.run()
            except Exception as e:
                logger.exception(f"{self!r}: {task} failed")
                self.queue.report_failure(task, e)
            else:
                self.task_done.emit(task)

    def __repr__(self):
        return f"{self.__class__.__name__}[{self.objectName()}]"


def run_tasks(tasks: Sequence[Task], worker_count: int) -> Sequence[Task]:
    """Run `tasks` on a worker pool and re-raise the first failure in submission order.

    Results stay on the task objects, so callers merge them in the order they were submitted.
    """
    if worker_count <= 1 or len(tasks) <= 1:
        for task in tasks:
            task.run()
        return tasks

    queue = TaskQueue(worker_count=min(worker_count, len(tasks)))
    queue.extend(tasks)
    queue.start()
    queue.join()
    logger.debug(f"{queue.done} of {len(tasks)} tasks finished on {len(queue.workers)} workers")

    if queue.failures:
        order = {id(task): i for i, task in enumerate(tasks)}
        _, e = min(queue.failures, key=lambda failure: order[id(failure[0])])
        raise e
    return tasks
