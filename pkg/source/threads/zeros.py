from __future__ import annotations

from dataclasses import dataclass, field

from modules.lfunc import ZeroList, lowest_zeros, twisted_l_function
from modules.newforms import Newform
from modules.task import Task


@dataclass(frozen=True)
class ZeroSearchParameters:
    count: int = 1
    t_max: float = 20.0
    afe_tolerance: float = 1e-12
    zero_tolerance: float = 1e-8
    imag_tolerance: float = 1e-6
    max_terms: int = 4_000_000


@dataclass
class ZeroTask(Task):
    form: Newform
    d: int
    params: ZeroSearchParameters
    vanishing_threshold: float | None = None
    result: ZeroList | None = field(default=None, init=False)

    def compute(self) -> ZeroList:
        L = twisted_l_function(
            self.form, self.d, afe_tolerance=self.params.afe_tolerance, max_terms=self.params.max_terms
        )
        return lowest_zeros(
            L,
            self.params.count,
            t_max=self.params.t_max,
            zero_tolerance=self.params.zero_tolerance,
            imag_tolerance=self.params.imag_tolerance,
            vanishing_threshold=self.vanishing_threshold,
        )

    def __str__(self):
        return f"Zeros of {self.form.label} twisted by D={self.d}"
