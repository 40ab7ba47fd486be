"""Half-integral weight lifts g of the principal-character forms and the central values they give.

For an admissible fundamental discriminant D, L(f, 1/2, psi_D) = kappa_f c_D(g)^2 / D^((k-1)/2).
The coefficients c_D(g) come from ternary theta series on the trace zero lattice of the maximal order
ramified at the level, weighted by a harmonic polynomial and the genus character chi_{-ell} of an
auxiliary prime ell, and read at q^(Q/ell). Indices divisible by ell are taken from the next
auxiliary prime, rescaled on the indices both series share.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cache
from math import gcd, lcm
from typing import TYPE_CHECKING, Callable

import numpy as np
from modules.arith import kronecker
from modules.errors import MissingDataError
from modules.lfunc import central_value, twisted_l_function
from modules.newforms import BinaryForm, series_product

if TYPE_CHECKING:
    from modules.newforms import Newform

logger = logging.getLogger(__name__)

# the fast path must reproduce the lattice enumeration up to here
FAST_PATH_CHECK = 200
# twisted series are always built at least this far so fallback primes find shared indices
OVERLAP_WINDOW = 200

XYPart = Callable[[np.ndarray, np.ndarray], np.ndarray]
ZPart = Callable[[np.ndarray], np.ndarray]


@cache
def legendre_table(p: int) -> np.ndarray:
    return np.array([kronecker(r, p) for r in range(p)], dtype=np.int64)


_LEG3 = legendre_table(3)


def w3(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Character at the ramified prime 3: the sign of a square root of Q mod 3."""
    return _LEG3[np.mod(2 * x + y, 3)]


@dataclass(frozen=True)
class GenusCharacter:
    """chi_{-ell} on lattice vectors whose norm ell divides, for ell = 3 mod 4.

    Mod ell such a vector is isotropic. With e1, e2 the two isotropic lines of the binary part,
    chi(v) = (L1(v) / ell) off the line of e1 and sign * (L2(v) / ell) on it, where Li = 2 B(., ei).
    sign makes the branches agree: L1 L2 is a constant square class on the cone.
    """

    ell: int
    first: tuple[int, int]
    second: tuple[int, int]
    sign: int

    @classmethod
    def of(cls, binary: BinaryForm, z_coeff: int, ell: int) -> GenusCharacter:
        if ell % 4 != 3:
            raise ValueError(f"chi_-{ell} needs ell = 3 mod 4")
        roots = [t for t in range(ell) if binary(t, 1) % ell == 0]
        if len(roots) != 2:
            raise ValueError(f"{binary} has no pair of isotropic lines mod {ell}")

        def functional(t: int) -> tuple[int, int]:
            return (2 * binary.a * t + binary.b) % ell, (binary.b * t + 2 * binary.c) % ell

        first, second = functional(roots[0]), functional(roots[1])
        # any cone point with z = 1 lies off both lines
        x0, y0 = next(
            (x, y) for x in range(ell) for y in range(ell) if (binary(x, y) + z_coeff) % ell == 0
        )
        product = (first[0] * x0 + first[1] * y0) * (second[0] * x0 + second[1] * y0)
        return cls(ell, first, second, kronecker(product % ell, ell))

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        table = legendre_table(self.ell)
        u = np.mod(self.first[0] * x + self.first[1] * y, self.ell)
        v = np.mod(self.second[0] * x + self.second[1] * y, self.ell)
        return np.where(u != 0, table[u], self.sign * table[v])


@cache
def genus_character(binary: BinaryForm, z_coeff: int, ell: int) -> GenusCharacter:
    return GenusCharacter.of(binary, z_coeff, ell)


def _z_one(z):
    return np.ones_like(z)


@dataclass(frozen=True)
class TernaryTheta:
    """sum_{(x, y, z)} chi_{-ell}(x, y) ramified(x, y) P(x, y, z) q^{(Q'(x, y) + z_coeff z^2) / ell}.

    P is the harmonic polynomial sum of xy_part(x, y) z_part(z) over `parts`. Only vectors with
    ell | Q contribute, so only exponents divisible by ell are kept.
    """

    binary: BinaryForm
    z_coeff: int
    parts: tuple[tuple[XYPart, ZPart], ...]
    auxiliary: tuple[int, ...]
    ramified: XYPart | None = None

    def _xy_weight(self, ell: int, part: XYPart) -> XYPart:
        chi = genus_character(self.binary, self.z_coeff, ell)

        def weight(x, y):
            out = part(x, y) * chi(x, y)
            return out if self.ramified is None else out * self.ramified(x, y)

        return weight

    def lattice_sum(self, ell: int, d_max: int) -> np.ndarray:
        """Reference path: enumerate every lattice point with Q <= ell * d_max."""
        bound = ell * d_max
        total = np.zeros(d_max + 1, dtype=np.int64)
        weights = [(self._xy_weight(ell, xy_part), z_part) for xy_part, z_part in self.parts]
        z_bound = int(np.sqrt(bound / self.z_coeff)) + 1
        for z in range(-z_bound, z_bound + 1):
            rest = bound - self.z_coeff * z * z
            if rest < 0:
                continue
            x, y, values = self.binary.points(rest)
            q = values + self.z_coeff * z * z
            keep = q % ell == 0
            if not keep.any():
                continue
            x, y, q = x[keep], y[keep], q[keep]
            zz = np.full_like(x, z)
            summand = sum(xy_weight(x, y) * z_part(zz) for xy_weight, z_part in weights)
            total += np.bincount(q // ell, weights=summand, minlength=d_max + 1)[: d_max + 1].astype(np.int64)
        return total

    def factored_sum(self, ell: int, d_max: int) -> np.ndarray:
        """Fast path: products of a two-variable series and a one-variable theta series."""
        bound = ell * d_max
        x, y, values = self.binary.points(bound)
        z_bound = int(np.sqrt(bound / self.z_coeff)) + 1
        z = np.arange(-z_bound, z_bound + 1)
        z_values = self.z_coeff * z * z
        z, z_values = z[z_values <= bound], z_values[z_values <= bound]

        total = np.zeros(bound + 1, dtype=np.float64)
        for xy_part, z_part in self.parts:
            xy_weight = self._xy_weight(ell, xy_part)
            xy_series = np.bincount(values, weights=xy_weight(x, y).astype(np.float64), minlength=bound + 1)
            z_series = np.bincount(z_values, weights=z_part(z).astype(np.float64), minlength=bound + 1)
            total += series_product(xy_series, z_series, bound)
        return np.rint(total[::ell][: d_max + 1]).astype(np.int64)

    def twisted_sum(self, ell: int, d_max: int, exhaustive: bool = False) -> np.ndarray:
        if exhaustive:
            return self.lattice_sum(ell, d_max)
        check = min(d_max, FAST_PATH_CHECK)
        reference = self.lattice_sum(ell, check)
        if not np.array_equal(self.factored_sum(ell, check), reference):
            logger.info(f"factored theta series for ell={ell} disagrees with the lattice sum, using the lattice sum")
            return self.lattice_sum(ell, d_max) if d_max > check else reference
        return self.factored_sum(ell, d_max) if d_max > check else reference

    def coefficients(self, d_max: int, exhaustive: bool = False) -> np.ndarray:
        """Primitive integer c(0..d_max), up to a common sign."""
        window = max(d_max, OVERLAP_WINDOW)
        primary, *fallbacks = self.auxiliary
        base = self.twisted_sum(primary, window, exhaustive)
        values = [Fraction(int(v)) for v in base[: d_max + 1]]
        pending = [n for n in range(1, d_max + 1) if n % primary == 0]
        for ell in fallbacks:
            if not pending:
                break
            series = self.twisted_sum(ell, window, exhaustive)
            scale = _shared_scale(base, primary, series, ell)
            if scale is None:
                logger.warning(f"chi_-{ell} series shares no nonzero index with chi_-{primary}, skipping it")
                continue
            for n in pending:
                if n % ell:
                    values[n] = scale * int(series[n])
            pending = [n for n in pending if n % ell == 0]
        if pending:
            raise MissingDataError(f"no auxiliary prime in {self.auxiliary} covers D={pending[0]}")
        return _primitive(values)


def _shared_scale(base: np.ndarray, primary: int, series: np.ndarray, ell: int) -> Fraction | None:
    """base / series on the indices prime to both auxiliary primes; None when none is nonzero."""
    shared = [n for n in range(1, len(base)) if n % primary and n % ell and base[n] and series[n]]
    if not shared:
        return None
    scale = Fraction(int(base[shared[0]]), int(series[shared[0]]))
    drift = [n for n in shared if Fraction(int(base[n]), int(series[n])) != scale]
    if drift:
        logger.warning(f"chi_-{ell} series is not proportional to chi_-{primary} at n={drift[0]}")
    return scale


def _primitive(values: list[Fraction]) -> np.ndarray:
    denominator = lcm(*(v.denominator for v in values))
    integers = [int(v * denominator) for v in values]
    divisor = gcd(*integers) or 1
    return np.array([v // divisor for v in integers], dtype=np.int64)


LIFT_7_4 = TernaryTheta(
    binary=BinaryForm(4, 4, 8),
    z_coeff=7,
    parts=((lambda x, y: x, _z_one),),
    auxiliary=(11, 23, 43, 67),
)

LIFT_3_6 = TernaryTheta(
    binary=BinaryForm(4, 4, 4),
    z_coeff=3,
    parts=(
        (lambda x, y: 2 * x * x + 2 * x * y + 2 * y * y, _z_one),
        (lambda x, y: -3 * np.ones_like(x), lambda z: z * z),
    ),
    auxiliary=(7, 19, 31, 43),
    ramified=w3,
)

LIFT_3_8 = TernaryTheta(
    binary=BinaryForm(4, 4, 4),
    z_coeff=3,
    parts=((lambda x, y: 2 * x**3 + 3 * x * x * y - 3 * x * y * y - 2 * y**3, _z_one),),
    auxiliary=(7, 19, 31, 43),
)

LIFTS = {"7.4.a.a": LIFT_7_4, "3.6.a.a": LIFT_3_6, "3.8.a.a": LIFT_3_8}


def gplus_coeffs_7_4(d_max: int) -> np.ndarray:
    """c_+(0..d_max) of the weight 5/2 lift of 7.4.a.a."""
    return LIFT_7_4.coefficients(d_max)


def gplus_coeffs_3_6(d_max: int) -> np.ndarray:
    """c(0..d_max) of the weight 7/2 lift of 3.6.a.a."""
    return LIFT_3_6.coefficients(d_max)


def gplus_coeffs_3_8(d_max: int) -> np.ndarray:
    """c(0..d_max) of the weight 9/2 lift of 3.8.a.a."""
    return LIFT_3_8.coefficients(d_max)


@dataclass
class HalfIntegralLift:
    form: Newform
    coefficients: np.ndarray | None
    kappa: float | None = None
    reference_d: int | None = None

    @property
    def form_label(self) -> str:
        return self.form.label

    @property
    def weight_half(self) -> float:
        return (self.form.weight + 1) / 2

    @property
    def d_max(self) -> int:
        return -1 if self.coefficients is None else len(self.coefficients) - 1

    def c(self, d: int) -> int:
        if self.coefficients is None or d > self.d_max:
            raise MissingDataError(f"{self.form_label}: no lift coefficient c_{d}")
        return int(self.coefficients[d])


def build_lift(form: Newform, d_max: int) -> HalfIntegralLift:
    try:
        lift = LIFTS[form.label]
    except KeyError:
        raise MissingDataError(f"{form.label}: no half-integral weight lift available") from None
    logger.debug(f"{form.label}: building lift up to D={d_max}")
    return HalfIntegralLift(form, lift.coefficients(d_max))


def _power_of_d(lift: HalfIntegralLift, d: int) -> float:
    return float(d) ** ((lift.form.weight - 1) / 2)


def calibrate_kappa(lift: HalfIntegralLift, reference_d: int) -> float:
    """kappa_f = L(f, 1/2, psi_D) D^((k-1)/2) / c_D^2 at one admissible D with c_D != 0."""
    c = lift.c(reference_d)
    if c == 0:
        raise ValueError(f"{lift.form_label}: c_{reference_d} = 0 cannot calibrate kappa")
    value = central_value(twisted_l_function(lift.form, reference_d)).real
    kappa = value * _power_of_d(lift, reference_d) / (c * c)
    if kappa <= 0:
        raise ValueError(f"{lift.form_label}: non-positive kappa {kappa} at D={reference_d}")
    lift.kappa, lift.reference_d = kappa, reference_d
    logger.info(f"{lift.form_label}: kappa = {kappa:.12g} from D={reference_d}")
    return kappa


def default_reference_d(lift: HalfIntegralLift, family: list[int]) -> int:
    for d in family:
        if d <= lift.d_max and lift.c(d) != 0:
            return d
    raise MissingDataError(f"{lift.form_label}: no admissible D with c_D != 0")


def central_value_kz(lift: HalfIntegralLift, d: int) -> float:
    if lift.kappa is None:
        raise MissingDataError(f"{lift.form_label}: kappa not calibrated")
    c = lift.c(d)
    return lift.kappa * c * c / _power_of_d(lift, d)


def discretization_threshold(lift: HalfIntegralLift, d: int) -> float:
    """Smallest nonzero central value possible at D; anything below it vanishes."""
    if lift.kappa is None:
        raise MissingDataError(f"{lift.form_label}: kappa not calibrated")
    return lift.kappa / _power_of_d(lift, d)


def empirical_lift(form: Newform, values: dict[int, float]) -> HalfIntegralLift:
    """Weight 2: kappa taken as the smallest nonzero L(1/2) D^((k-1)/2) over computed central values."""
    scaled = {d: v * float(d) ** ((form.weight - 1) / 2) for d, v in values.items() if abs(v) > 1e-10}
    if not scaled:
        raise MissingDataError(f"{form.label}: no nonvanishing central values to fit kappa")
    reference_d = min(scaled, key=scaled.get)
    logger.info(f"{form.label}: empirical kappa {scaled[reference_d]:.6g} from D={reference_d}")
    return HalfIntegralLift(form, None, kappa=scaled[reference_d], reference_d=reference_d)


def is_vanishing(value: float, lift: HalfIntegralLift | None, d: int) -> bool:
    threshold = 1e-10 if lift is None or lift.kappa is None else max(1e-10, discretization_threshold(lift, d) / 2)
    return abs(value) < threshold
