"""Kronecker symbols, fundamental discriminants and the twist families built from them."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cache
from math import gcd, isqrt
from typing import TYPE_CHECKING, NewType

import numpy as np
from modules.enums import FamilyKind

if TYPE_CHECKING:
    from modules.newforms import Newform

logger = logging.getLogger(__name__)

FundamentalDiscriminant = NewType("FundamentalDiscriminant", int)

# (2/n) for odd n, indexed by n mod 8
_KRONECKER_TWO = (0, 1, 0, -1, 0, -1, 0, 1)


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n) for arbitrary integers, with (a/0) = 1 iff |a| = 1."""
    a, n = int(a), int(n)
    if n == 0:
        return 1 if abs(a) == 1 else 0
    if a % 2 == 0 and n % 2 == 0:
        return 0

    v = 0
    while n % 2 == 0:
        v += 1
        n //= 2
    k = 1 if v % 2 == 0 else _KRONECKER_TWO[a & 7]

    if n < 0:
        n = -n
        if a < 0:
            k = -k

    # n is odd and positive from here on
    while True:
        if a == 0:
            return k if n == 1 else 0
        v = 0
        while a % 2 == 0:
            v += 1
            a //= 2
        if v % 2 == 1:
            k *= _KRONECKER_TWO[n & 7]
        # reciprocity: both congruent to 3 mod 4
        if a & n & 2:
            k = -k
        r = abs(a)
        a = n % r
        n = r


def kronecker_table(d: int, n_max: int) -> np.ndarray:
    """(d/n) for n = 0..n_max as an int8 array.

    A fundamental discriminant is the conductor of its Kronecker character, so the values repeat mod |d|.
    """
    period = abs(d)
    base = np.array([kronecker(d, n) for n in range(period)], dtype=np.int8)
    reps = n_max // period + 1
    return np.tile(base, reps)[: n_max + 1]


@cache
def squarefree_mask(limit: int) -> np.ndarray:
    """Boolean mask over 0..limit, True where the index is squarefree (0 is not)."""
    mask = np.ones(limit + 1, dtype=bool)
    mask[0] = False
    for p in range(2, isqrt(limit) + 1):
        mask[p * p :: p * p] = False
    return mask


def is_squarefree(m: int) -> bool:
    if m <= 0:
        return False
    return all(m % (p * p) for p in range(2, isqrt(m) + 1))


def is_fundamental_discriminant(d: int) -> bool:
    if d == 1:
        return False
    if d % 4 == 1:
        return is_squarefree(abs(d))
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and is_squarefree(abs(m))
    return False


def fundamental_discriminants(x: float) -> list[FundamentalDiscriminant]:
    """All positive fundamental discriminants D with 1 < D <= x, ascending."""
    limit = int(x)
    if limit < 5:
        return []
    sqfree = squarefree_mask(limit)
    d = np.arange(limit + 1)

    odd = (d % 4 == 1) & sqfree
    quarter = d // 4
    even = (d % 4 == 0) & np.isin(quarter % 4, (2, 3)) & sqfree[quarter]

    found = np.flatnonzero((odd | even) & (d > 1))
    return [FundamentalDiscriminant(int(v)) for v in found]


@dataclass(frozen=True)
class FamilySelector:
    """Which twists of a form belong to its family.

    `heart` picks the value of (D/M) for self-CM forms, `diamond` the residue D mod M for
    non-self-dual forms.
    """

    kind: FamilyKind
    heart: int = 1
    diamond: int = 1

    def validate(self, level: int):
        if self.kind is FamilyKind.SELF_CM and self.heart not in (-1, 1):
            raise ValueError(f"heart must be +1 or -1, got {self.heart}")
        if self.kind is FamilyKind.NON_SELF_DUAL and gcd(self.diamond % level, level) != 1:
            raise ValueError(f"diamond {self.diamond} is not a unit mod {level}")


def root_number_sign(form: Newform) -> int:
    """epsilon_f of a self-dual form as an exact +1 or -1."""
    eps = form.epsilon_f
    if eps is None:
        raise ValueError(f"{form.label}: root number not calibrated")
    sign = 1 if eps.real > 0 else -1
    if abs(eps - sign) > 1e-6:
        raise ValueError(f"{form.label}: root number {eps} is not real")
    return sign


def sign_of_functional_equation(form: Newform, d: int) -> complex:
    """Root number of the twist L(f, s, psi_D): epsilon_f * chi_f(D) * psi_D(-M)."""
    m = form.level
    if gcd(d, m) != 1:
        raise ValueError(f"chi_f({d}) undefined: gcd({d}, {m}) > 1")
    if form.epsilon_f is None:
        raise ValueError(f"{form.label}: root number not calibrated")
    return complex(form.epsilon_f) * complex(form.character(d)) * kronecker(d, -m)


def is_admissible(form: Newform, d: int, sel: FamilySelector) -> bool:
    m = form.level
    if gcd(d, m) != 1:
        return False
    if sel.kind is FamilyKind.PRINCIPAL:
        return kronecker(d, m) * root_number_sign(form) == 1
    if sel.kind is FamilyKind.SELF_CM:
        return kronecker(d, m) == sel.heart
    return d % m == sel.diamond % m


def admissible_discriminants(form: Newform, x: float, sel: FamilySelector) -> list[FundamentalDiscriminant]:
    sel.validate(form.level)
    family = [d for d in fundamental_discriminants(x) if is_admissible(form, d, sel)]
    logger.debug(f"{form.label}: {len(family)} admissible discriminants up to {x:g}")
    return family
