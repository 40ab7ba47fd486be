"""Newforms used by the twist experiments and the generators for their q-expansions."""

from __future__ import annotations

import cmath
import csv
import logging
import math
from dataclasses import dataclass, field
from math import gcd, isqrt
from typing import TYPE_CHECKING, Callable

import numpy as np
from modules.arith import kronecker
from modules.enums import FamilyKind, ProviderMode
from modules.errors import MissingDataError
from PyQt5.QtCore import QMutex, QMutexLocker
from scipy.signal import convolve

if TYPE_CHECKING:
    from pathlib import Path

logger = logging.getLogger(__name__)

# Series products are exact direct convolutions up to this length and blockwise FFT beyond it.
# Weight 8 coefficients up to here still fit int64 after scaling by the theta denominator.
EXACT_CONVOLUTION_LIMIT = 20_000

ZETA6 = cmath.exp(1j * math.pi / 3)


@dataclass(frozen=True)
class Character:
    """A Dirichlet character given by its values on residues mod `modulus`."""

    modulus: int
    values: tuple[complex, ...]

    def __call__(self, n: int) -> complex:
        return self.values[int(n) % self.modulus]

    @property
    def is_principal(self) -> bool:
        return all(v in (0, 1) for v in self.values)

    @property
    def is_real(self) -> bool:
        return all(abs(complex(v).imag) < 1e-12 for v in self.values)

    def conjugate(self) -> Character:
        return Character(self.modulus, tuple(complex(v).conjugate() for v in self.values))


def principal_character(modulus: int) -> Character:
    return Character(modulus, tuple(1 if gcd(n, modulus) == 1 else 0 for n in range(modulus)))


def kronecker_character(d: int, modulus: int) -> Character:
    return Character(modulus, tuple(kronecker(d, n) for n in range(modulus)))


def prime_power_character(p: int, generator: int, order: int, j: int) -> Character:
    """The character mod prime `p` sending `generator` to exp(2 pi i j / order)."""
    values = [0j] * p
    g = 1
    for i in range(p - 1):
        values[g] = cmath.exp(2j * math.pi * j * i / order)
        g = g * generator % p
    return Character(p, tuple(values))


# --- eta products ---


def pentagonal_terms(n_max: int) -> list[tuple[int, int]]:
    """Nonzero terms (exponent, sign) of prod_{n>=1} (1 - q^n) up to q^n_max."""
    terms = [(0, 1)]
    k = 1
    while True:
        e1 = k * (3 * k - 1) // 2
        if e1 > n_max:
            break
        sign = -1 if k % 2 else 1
        terms.append((e1, sign))
        e2 = k * (3 * k + 1) // 2
        if e2 <= n_max:
            terms.append((e2, sign))
        k += 1
    return terms


def _multiply_euler_factor(series: np.ndarray, d: int) -> np.ndarray:
    """series * prod_{n>=1} (1 - q^{dn}), truncated to the length of `series`."""
    n_max = len(series) - 1
    out = np.zeros_like(series)
    for exponent, sign in pentagonal_terms(n_max // d):
        shift = exponent * d
        if shift == 0:
            out += series
        else:
            out[shift:] += sign * series[:-shift]
    return out


def coeffs_eta_product(factors: list[tuple[int, int]], n_max: int) -> np.ndarray:
    """Coefficients a_0..a_n_max of prod eta(d tau)^e over `factors` = [(d, e), ...]."""
    if any(e < 0 for _, e in factors):
        raise ValueError("only eta products with non-negative exponents are supported")
    twenty_fourths = sum(d * e for d, e in factors)
    if twenty_fourths % 24 or twenty_fourths <= 0:
        raise ValueError(f"eta product has leading exponent {twenty_fourths}/24, expected a positive integer")
    lead = twenty_fourths // 24

    series = np.zeros(n_max + 1, dtype=np.int64)
    if lead > n_max:
        return series
    body = np.zeros(n_max - lead + 1, dtype=np.int64)
    body[0] = 1
    for d, e in factors:
        for _ in range(e):
            body = _multiply_euler_factor(body, d)
    series[lead:] = body
    return series


# --- theta series ---


@dataclass(frozen=True)
class BinaryForm:
    """Positive definite a x^2 + b xy + c y^2."""

    a: int
    b: int
    c: int

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def __call__(self, x, y):
        return self.a * x * x + self.b * x * y + self.c * y * y

    def points(self, n_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All (x, y) with value <= n_max, together with the values."""
        delta = -self.discriminant
        if delta <= 0 or self.a <= 0:
            raise ValueError(f"{self} is not positive definite")
        x_bound = isqrt(4 * self.c * n_max // delta) + 1
        y_bound = isqrt(4 * self.a * n_max // delta) + 1
        x, y = np.meshgrid(
            np.arange(-x_bound, x_bound + 1, dtype=np.int64),
            np.arange(-y_bound, y_bound + 1, dtype=np.int64),
            indexing="ij",
        )
        values = self(x, y)
        keep = values <= n_max
        return x[keep], y[keep], values[keep]


Polynomial = Callable[[np.ndarray, np.ndarray], np.ndarray]


def one(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.ones_like(x)


def theta_sum(form: BinaryForm, poly: Polynomial, n_max: int, exact: bool = True) -> np.ndarray:
    """Coefficients of sum_{(x, y)} poly(x, y) q^{form(x, y)} up to q^n_max; int64 when `exact`, else float64."""
    x, y, values = form.points(n_max)
    if exact:
        out = np.zeros(n_max + 1, dtype=np.int64)
        np.add.at(out, values, np.asarray(poly(x, y), dtype=np.int64))
        return out
    weights = np.asarray(poly(x.astype(np.float64), y.astype(np.float64)), dtype=np.float64)
    return np.bincount(values, weights=weights, minlength=n_max + 1)[: n_max + 1]


def series_product(a: np.ndarray, b: np.ndarray, n_max: int) -> np.ndarray:
    """(a * b) mod q^(n_max + 1): direct up to EXACT_CONVOLUTION_LIMIT, then FFT over dyadic blocks.

    Block [lo, hi) only sees inputs below hi, so the FFT round-off stays relative to coefficients of that size.
    """
    head = min(n_max, EXACT_CONVOLUTION_LIMIT)
    start = convolve(a[: head + 1], b[: head + 1], method="direct")[: head + 1]
    if n_max == head:
        return start
    out = np.empty(n_max + 1, dtype=np.result_type(start, np.float64))
    out[: head + 1] = start
    lo = head + 1
    while lo <= n_max:
        hi = min(2 * lo, n_max + 1)
        out[lo:hi] = convolve(a[:hi], b[:hi], method="fft")[lo:hi]
        lo = hi
    return out


@dataclass(frozen=True)
class ThetaConstruction:
    """f = sum_i S(left_i; Q') * S(right_i; Q') / denominator, with S(P; Q') = sum P(x, y) q^{Q'(x, y)}."""

    form: BinaryForm
    terms: tuple[tuple[Polynomial, Polynomial], ...]
    denominator: int

    def coefficients(self, n_max: int) -> np.ndarray:
        # exact int64 prefix; sums wrap mod 2**64 but the final values fit
        head = min(n_max, EXACT_CONVOLUTION_LIMIT)
        exact = np.zeros(head + 1, dtype=np.int64)
        for left, right in self.terms:
            exact += np.convolve(theta_sum(self.form, left, head), theta_sum(self.form, right, head))[: head + 1]
        if np.any(exact % self.denominator):
            bad = int(np.flatnonzero(exact % self.denominator)[0])
            raise ArithmeticError(f"theta sum at q^{bad} is not divisible by {self.denominator}")

        coeffs = np.empty(n_max + 1, dtype=np.float64)
        coeffs[: head + 1] = exact // self.denominator
        if n_max > head:
            total = np.zeros(n_max + 1, dtype=np.float64)
            for left, right in self.terms:
                total += series_product(
                    theta_sum(self.form, left, n_max, exact=False),
                    theta_sum(self.form, right, n_max, exact=False),
                    n_max,
                )
            coeffs[head + 1 :] = total[head + 1 :] / self.denominator
        return coeffs


def _p1_weight8(a, b):
    return (
        2 * a**6 - 6 * a**5 * b - 15 * a**4 * b**2 + 40 * a**3 * b**3 - 15 * a**2 * b**4 - 6 * a * b**5 + 2 * b**6
    )


Q7_PRIME = BinaryForm(1, 1, 2)
Q3_PRIME = BinaryForm(1, -1, 1)

THETA_CONSTRUCTIONS = {
    "7.4.a.a": ThetaConstruction(
        Q7_PRIME,
        ((lambda a, b: 2 * a * a + 2 * a * b - 3 * b * b, one),),
        denominator=4,
    ),
    "3.6.a.a": ThetaConstruction(
        Q3_PRIME,
        (
            (lambda a, b: a**4 - 2 * a**3 * b + 3 * a**2 * b**2 - 2 * a * b**3 + b**4, one),
            (lambda a, b: -2 * a * a + 4 * a * b - 4 * b * b, lambda c, d: c * c),
            (lambda a, b: -2 * a * b + 4 * b * b, lambda c, d: c * d),
            (lambda a, b: -2 * b * b, lambda c, d: d * d),
        ),
        denominator=6,
    ),
    # the four-variable sum over P1(a, b) + P1(c, d) counts every term twice
    "3.8.a.a": ThetaConstruction(Q3_PRIME, ((_p1_weight8, one),), denominator=12),
}


def coeffs_theta_series(label: str, n_max: int) -> np.ndarray:
    try:
        construction = THETA_CONSTRUCTIONS[label]
    except KeyError:
        raise MissingDataError(f"no theta construction for {label}") from None
    return construction.coefficients(n_max)


def coeffs_theta_7_4(n_max: int) -> np.ndarray:
    return coeffs_theta_series("7.4.a.a", n_max)


def coeffs_theta_3_6(n_max: int) -> np.ndarray:
    return coeffs_theta_series("3.6.a.a", n_max)


def coeffs_theta_3_8(n_max: int) -> np.ndarray:
    return coeffs_theta_series("3.8.a.a", n_max)


# --- weight 2 with character: 13.2.e.a ---

# a_1, a_2, a_3 of 13.2.e.a
_KNOWN_13_2_E = (1.0 + 0j, -1 - ZETA6, -2 + 2 * ZETA6)
# odd characters phi mod 13 with phi(2) = exp(2 pi i j / 12), listed as (j1, j2) with j1 + j2 = 2 mod 12
_WEIGHT_ONE_PAIRS = ((1, 1), (3, 11), (5, 9), (7, 7))


def _twisted_divisor_sum(n_max: int, inner: Character | None, outer: Character | None, power: int) -> np.ndarray:
    """sum_{d | n} outer(n / d) inner(d) d^power for n = 0..n_max; None stands for the character mod 1."""
    out = np.zeros(n_max + 1, dtype=np.complex128)
    outer_table = None if outer is None else np.array(outer.values, dtype=np.complex128)
    for d in range(1, n_max + 1):
        w = (1 if inner is None else inner(d)) * float(d) ** power
        if w == 0:
            continue
        if outer_table is None:
            out[d::d] += w
        else:
            m = np.arange(1, n_max // d + 1)
            out[d::d] += w * outer_table[m % outer.modulus]
    return out


def weight_one_eisenstein(phi: Character, n_max: int) -> np.ndarray:
    """E_1 for an odd primitive character phi: L(0, phi)/2 + sum_n (sum_{d|n} phi(d)) q^n."""
    m = phi.modulus
    bernoulli = sum(phi(a) * a for a in range(1, m)) / m
    series = _twisted_divisor_sum(n_max, phi, None, 0)
    series[0] = -bernoulli / 2
    return series


def _round_to_eisenstein_integers(z: np.ndarray) -> np.ndarray:
    v = np.rint(z.imag / ZETA6.imag)
    u = np.rint(z.real - v * ZETA6.real)
    return u + v * ZETA6


def _hecke_consistent(a: np.ndarray, eps: Character) -> bool:
    checks = (
        (a[4], a[2] ** 2 - eps(2) * 2),
        (a[9], a[3] ** 2 - eps(3) * 3),
        (a[6], a[2] * a[3]),
        (a[10], a[2] * a[5]),
        (a[15], a[3] * a[5]),
    )
    return all(abs(lhs - rhs) < 1e-6 for lhs, rhs in checks)


def coeffs_eisenstein_13_2_e(n_max: int) -> np.ndarray:
    """a_0..a_n_max of 13.2.e.a built in M_2(13, eps) from weight one Eisenstein series.

    The product of two weight one series lies in the three dimensional space spanned by the newform
    and the two weight two Eisenstein series, so the newform is recovered by solving against its first
    three coefficients.
    """
    size = max(n_max, 30)
    eps = prime_power_character(13, 2, 12, 2)
    e_first = _twisted_divisor_sum(size, eps, None, 1)
    e_second = _twisted_divisor_sum(size, None, eps, 1)

    for j1, j2 in _WEIGHT_ONE_PAIRS:
        g1 = weight_one_eisenstein(prime_power_character(13, 2, 12, j1), size)
        g2 = weight_one_eisenstein(prime_power_character(13, 2, 12, j2), size)
        product = series_product(g1, g2, size)

        system = np.array([[_KNOWN_13_2_E[n - 1], e_first[n], e_second[n]] for n in (1, 2, 3)])
        if abs(np.linalg.det(system)) < 1e-9:
            continue
        scale, alpha, beta = np.linalg.solve(system, product[1:4])
        if abs(scale) < 1e-9:
            logger.debug(f"13.2.e.a: pair {(j1, j2)} has no cuspidal part")
            continue

        raw = (product - alpha * e_first - beta * e_second) / scale
        raw[0] = 0
        a = _round_to_eisenstein_integers(raw)
        residual = float(np.max(np.abs(raw[1:] - a[1:])))
        if residual < 1e-4 and _hecke_consistent(a, eps):
            logger.debug(f"13.2.e.a: weight one pair {(j1, j2)}, rounding residual {residual:.2e}")
            return a[: n_max + 1]
        logger.debug(f"13.2.e.a: pair {(j1, j2)} rejected, residual {residual:.2e}")

    raise ArithmeticError("13.2.e.a could not be generated; supply a coefficient file")


# --- coefficient files ---


def load_coeffs_file(path: Path, n_max: int | None = None) -> np.ndarray:
    """Read `n,re,im` rows into a_0..a_n_max (a_0 = 0); `n_max=None` keeps every row of the file."""
    if not path.is_file():
        raise MissingDataError(f"coefficient file {path} not found")

    rows: dict[int, complex] = {}
    with path.open(encoding="utf-8", newline="") as f:
        for row in csv.reader(f):
            if not row or not row[0].strip().lstrip("-").isdigit():
                continue
            n = int(row[0])
            if n < 1:
                raise ValueError(f"{path}: index {n} out of range")
            rows[n] = complex(float(row[1]), float(row[2]) if len(row) > 2 else 0.0)

    if not rows:
        raise MissingDataError(f"{path} holds no coefficients")
    if n_max is None:
        n_max = max(rows)
    coeffs = np.zeros(n_max + 1, dtype=np.complex128)
    for n in range(1, n_max + 1):
        if n not in rows:
            raise MissingDataError(f"{path} holds fewer than {n_max} coefficients (first gap at n = {n})")
        coeffs[n] = rows[n]

    if abs(coeffs[1] - 1) > 1e-12:
        raise ValueError(f"{path}: a_1 = {coeffs[1]}, expected 1")
    return coeffs


def write_coeffs_file(path: Path, coeffs: np.ndarray):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["n", "re", "im"])
        for n in range(1, len(coeffs)):
            z = complex(coeffs[n])
            writer.writerow([n, repr(z.real), repr(z.imag)])


# --- newforms ---


@dataclass(frozen=True)
class CoefficientProvider:
    mode: ProviderMode
    eta_factors: tuple[tuple[int, int], ...] = ()
    path: Path | None = None

    def generate(self, label: str, n_max: int) -> np.ndarray:
        if self.mode is ProviderMode.ETA_PRODUCT:
            return coeffs_eta_product(list(self.eta_factors), n_max).astype(np.float64)
        if self.mode is ProviderMode.THETA_SERIES:
            return coeffs_theta_series(label, n_max)
        if self.mode is ProviderMode.EISENSTEIN_PRODUCT:
            return coeffs_eisenstein_13_2_e(n_max)
        if self.path is None:
            raise MissingDataError(
                f"{label}: no coefficient file configured; pass --coefficients or set coefficients/{label}"
            )
        return load_coeffs_file(self.path)


@dataclass
class Newform:
    label: str
    weight: int
    level: int
    kind: FamilyKind
    character: Character
    provider: CoefficientProvider
    epsilon_f: complex | None = None
    _coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    _mutex: QMutex = field(default_factory=QMutex, repr=False, compare=False)

    @property
    def mu(self) -> float:
        return (self.weight - 1) / 2

    @property
    def is_self_dual(self) -> bool:
        return self.kind is not FamilyKind.NON_SELF_DUAL

    def seed_coefficients(self, coeffs: np.ndarray):
        with QMutexLocker(self._mutex):
            if len(coeffs) > len(self._coeffs):
                self._coeffs = coeffs

    def coefficients(self, n_max: int) -> np.ndarray:
        """a_0..a_n_max, generated on first use and extended on demand."""
        with QMutexLocker(self._mutex):
            if len(self._coeffs) <= n_max:
                # grow geometrically
                size = max(n_max, 2 * (len(self._coeffs) - 1), 64)
                logger.debug(f"{self.label}: generating {size} coefficients ({self.provider.mode.value})")
                self._coeffs = self.provider.generate(self.label, size)
                if len(self._coeffs) <= n_max:
                    raise MissingDataError(f"{self.label}: only {len(self._coeffs) - 1} coefficients available")
            return self._coeffs[: n_max + 1]

    def normalized(self, n_max: int) -> np.ndarray:
        """lambda_n = a_n / n^((k-1)/2) for n = 1..n_max (index 0 holds n = 1)."""
        a = self.coefficients(n_max)[1:]
        n = np.arange(1, n_max + 1, dtype=np.float64)
        return a / n**self.mu


def normalized_coeffs(a: np.ndarray, k: int) -> np.ndarray:
    """lambda_n = a_n / n^((k-1)/2) for an array a_0..a_n; index 0 stays 0."""
    a = np.asarray(a)
    n = np.arange(len(a), dtype=np.float64)
    n[0] = 1.0
    out = a / n ** ((k - 1) / 2)
    out[0] = 0
    return out


def _eta(*factors: tuple[int, int]) -> CoefficientProvider:
    return CoefficientProvider(ProviderMode.ETA_PRODUCT, eta_factors=factors)


def _theta() -> CoefficientProvider:
    return CoefficientProvider(ProviderMode.THETA_SERIES)


_REGISTRY: dict[str, Callable[[], Newform]] = {
    "11.2.a.a": lambda: Newform(
        "11.2.a.a", 2, 11, FamilyKind.PRINCIPAL, principal_character(11), _eta((1, 2), (11, 2))
    ),
    "7.4.a.a": lambda: Newform("7.4.a.a", 4, 7, FamilyKind.PRINCIPAL, principal_character(7), _theta()),
    "3.6.a.a": lambda: Newform("3.6.a.a", 6, 3, FamilyKind.PRINCIPAL, principal_character(3), _theta()),
    "3.8.a.a": lambda: Newform("3.8.a.a", 8, 3, FamilyKind.PRINCIPAL, principal_character(3), _theta()),
    "7.3.b.a": lambda: Newform(
        "7.3.b.a", 3, 7, FamilyKind.SELF_CM, kronecker_character(-7, 7), _eta((1, 3), (7, 3))
    ),
    "13.2.e.a": lambda: Newform(
        "13.2.e.a",
        2,
        13,
        FamilyKind.NON_SELF_DUAL,
        prime_power_character(13, 2, 12, 2),
        CoefficientProvider(ProviderMode.EISENSTEIN_PRODUCT),
    ),
}

LABELS = tuple(_REGISTRY)


def get_newform(label: str, coefficient_file: Path | None = None, derive: bool = True) -> Newform:
    """A fresh `Newform` for `label`; `coefficient_file` replaces its generator with a `n,re,im` file.

    Without `derive` an Eisenstein series generator is dropped, so the form needs a coefficient file.
    """
    try:
        form = _REGISTRY[label]()
    except KeyError:
        raise MissingDataError(f"unknown newform label {label!r} (known: {', '.join(LABELS)})") from None
    if coefficient_file is not None:
        form.provider = CoefficientProvider(ProviderMode.FILE, path=coefficient_file)
    elif not derive and form.provider.mode is ProviderMode.EISENSTEIN_PRODUCT:
        form.provider = CoefficientProvider(ProviderMode.FILE)
    return form
