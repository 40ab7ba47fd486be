from __future__ import annotations

from abc import abstractmethod

from PyQt5.QtCore import QObject, pyqtSignal


class Task(QObject):
    """One twist or batch of draws for the worker pool.

    Subclasses are dataclasses with a `result` field; `compute` returns the value stored there.
    """

    finished = pyqtSignal(object)
    failure = pyqtSignal(Exception)

    def __post_init__(self):
        super().__init__()

    def run(self):
        try:
            self.result = self.compute()
        except Exception as e:
            self.failure.emit(e)
            raise
        self.finished.emit(self.result)

    @abstractmethod
    def compute(self):
        raise NotImplementedError
