from __future__ import annotations

from dataclasses import dataclass, field

from modules.lfunc import central_value, twisted_l_function
from modules.newforms import Newform
from modules.task import Task


@dataclass
class CentralValueTask(Task):
    form: Newform
    d: int
    afe_tolerance: float = 1e-12
    max_terms: int = 4_000_000
    result: complex | None = field(default=None, init=False)

    def compute(self) -> complex:
        L = twisted_l_function(self.form, self.d, afe_tolerance=self.afe_tolerance, max_terms=self.max_terms)
        return central_value(L)

    def __str__(self):
        return f"L({self.form.label}, 1/2, psi_{self.d})"
