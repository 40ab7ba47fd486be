"""Twisted L-functions L(f, s, psi_D) through the incomplete-gamma approximate functional equation.

Everything here uses the analytic normalization: lambda_n = a_n / n^((k-1)/2), gamma factor Gamma(s + mu)
with mu = (k-1)/2 and Q = D sqrt(M) / (2 pi), so that

    Lambda(s) = Q^(s+mu) Gamma(s+mu) L(s) = sign * conj(Lambda(conj(1-s))).

For a split parameter `split` the completed function is A(s, split) + sign * B(s, split) with

    A = Q^(s+mu)   sum b_n n^-s       Gamma(s+mu,   split * n / Q)
    B = Q^(1-s+mu) sum conj(b_n) n^(s-1) Gamma(1-s+mu, n / (split * Q))

Any split gives the same value when the sign is right, which is what calibration and the
functional-equation residual rely on.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from math import gcd

import numpy as np
from modules.arith import kronecker_table, sign_of_functional_equation
from modules.errors import ConvergenceError
from modules.newforms import Newform
from scipy.optimize import brentq
from scipy.special import gamma

logger = logging.getLogger(__name__)

AFE_TOLERANCE = 1e-12
ZERO_TOLERANCE = 1e-8
Z_IMAG_TOLERANCE = 1e-6
MAX_TERMS = 4_000_000

FE_TEST_POINTS = (0.6 + 0.3j, 0.7 + 0.1j, 0.55 + 0.8j)
ALTERNATE_SPLIT = 1.25

_TINY = 1e-300
_MAX_ITERATIONS = 2000


def _gamma_series(w: complex, x: np.ndarray) -> np.ndarray:
    """Gamma(w) - gamma(w, x) with gamma(w, x) = x^w e^-x sum_k x^k / (w (w+1) ... (w+k))."""
    g = complex(gamma(w))
    if not cmath.isfinite(g):
        raise ValueError(f"upper incomplete gamma series undefined at pole w = {w}")
    term = np.full(x.shape, 1 / w, dtype=np.complex128)
    total = term.copy()
    for k in range(1, _MAX_ITERATIONS):
        term = term * x / (w + k)
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    else:
        raise ConvergenceError(f"incomplete gamma series did not converge for w = {w}")
    return g - np.exp(w * np.log(x) - x) * total


def _gamma_continued_fraction(w: complex, x: np.ndarray) -> np.ndarray:
    """Gamma(w, x) by the modified Lentz continued fraction, valid for x > |w| + 1."""
    b = (x + 1 - w).astype(np.complex128)
    c = np.full(x.shape, 1 / _TINY, dtype=np.complex128)
    d = 1 / b
    h = d.copy()
    active = np.arange(x.size)
    for i in range(1, _MAX_ITERATIONS):
        an = -i * (i - w)
        b[active] += 2
        dd = an * d[active] + b[active]
        dd[np.abs(dd) < _TINY] = _TINY
        cc = b[active] + an / c[active]
        cc[np.abs(cc) < _TINY] = _TINY
        dd = 1 / dd
        delta = dd * cc
        d[active] = dd
        c[active] = cc
        h[active] *= delta
        active = active[np.abs(delta - 1) > 1e-15]
        if active.size == 0:
            break
    else:
        raise ConvergenceError(f"incomplete gamma continued fraction did not converge for w = {w}")
    return np.exp(w * np.log(x) - x) * h


def upper_incomplete_gamma(w: complex, x) -> np.ndarray:
    """Gamma(w, x) for complex w and an array of positive real x."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(x <= 0):
        raise ValueError("incomplete gamma needs x > 0")
    w = complex(w)
    out = np.empty(x.shape, dtype=np.complex128)
    small = x < abs(w) + 1.0
    if small.any():
        out[small] = _gamma_series(w, x[small])
    if not small.all():
        out[~small] = _gamma_continued_fraction(w, x[~small])
    return out


def kernel_cutoff(a: float, tolerance: float) -> float:
    """Smallest x (on a unit grid) where the kernel tail x^(a-1) e^-x drops below `tolerance`."""
    x = max(a, 1.0) + 1.0
    log_tolerance = math.log(tolerance)
    while (a - 1) * math.log(x) - x > log_tolerance:
        x += 1.0
    return x


@dataclass
class ZeroList:
    label: str
    d: int
    ordinates: tuple[float, ...]
    central_vanishing: bool = False

    @property
    def lowest(self) -> float:
        return self.ordinates[0]


@dataclass
class TwistedLFunction:
    form: Newform
    d: int
    sign: complex
    afe_tolerance: float = AFE_TOLERANCE
    max_terms: int = MAX_TERMS
    _b: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.complex128), repr=False)
    _branch: complex | None = field(default=None, repr=False)

    def __post_init__(self):
        if gcd(self.d, self.form.level) != 1:
            raise ValueError(f"gcd({self.d}, {self.form.level}) > 1")
        if abs(abs(self.sign) - 1) > 1e-10:
            raise ValueError(f"sign {self.sign} does not have modulus one")

    @property
    def label(self) -> str:
        return self.form.label

    @property
    def conductor(self) -> int:
        return self.form.level * self.d * self.d

    @property
    def mu(self) -> float:
        return self.form.mu

    @property
    def q(self) -> float:
        return self.d * math.sqrt(self.form.level) / (2 * math.pi)

    def twisted_coefficients(self, n_terms: int) -> np.ndarray:
        """b_n = lambda_n psi_D(n) for n = 1..n_terms."""
        if len(self._b) < n_terms:
            size = max(n_terms, 2 * len(self._b))
            psi = kronecker_table(self.d, size)[1:]
            self._b = self.form.normalized(size).astype(np.complex128) * psi
        return self._b[:n_terms]

    def terms_needed(self, s: complex, split: float = 1.0) -> tuple[int, int]:
        w = s + self.mu
        w_dual = 1 - s + self.mu
        n_first = math.ceil(kernel_cutoff(w.real, self.afe_tolerance) * self.q / split)
        n_second = math.ceil(kernel_cutoff(w_dual.real, self.afe_tolerance) * self.q * split)
        n_first, n_second = max(n_first, 1), max(n_second, 1)
        if max(n_first, n_second) > self.max_terms:
            raise ConvergenceError(
                f"{self.label}, D={self.d}: kernel tail needs {max(n_first, n_second)} terms (cap {self.max_terms})"
            )
        return n_first, n_second

    def afe_parts(self, s: complex, split: float = 1.0, n_terms: int | None = None) -> tuple[complex, complex]:
        """(A, B) with Lambda(s) = A + sign * B."""
        s = complex(s)
        if n_terms is None:
            n_first, n_second = self.terms_needed(s, split)
        else:
            n_first = n_second = n_terms
        b = self.twisted_coefficients(max(n_first, n_second))
        log_q = math.log(self.q)

        w = s + self.mu
        n = np.arange(1, n_first + 1, dtype=np.float64)
        kernel = upper_incomplete_gamma(w, split * n / self.q)
        first = np.exp(w * log_q) * np.sum(b[:n_first] * np.exp(-s * np.log(n)) * kernel)

        w_dual = 1 - s + self.mu
        n = np.arange(1, n_second + 1, dtype=np.float64)
        kernel = upper_incomplete_gamma(w_dual, n / (split * self.q))
        second = np.exp(w_dual * log_q) * np.sum(np.conj(b[:n_second]) * np.exp((s - 1) * np.log(n)) * kernel)
        return complex(first), complex(second)

    def completed(self, s: complex, split: float = 1.0, n_terms: int | None = None) -> complex:
        first, second = self.afe_parts(s, split, n_terms)
        return first + self.sign * second

    def gamma_factor(self, s: complex) -> complex:
        w = complex(s) + self.mu
        return cmath.exp(w * math.log(self.q)) * complex(gamma(w))

    def value(self, s: complex) -> complex:
        """L(f, s, psi_D)."""
        return self.completed(s) / self.gamma_factor(s)

    def dirichlet_series(self, s: complex, n_terms: int) -> complex:
        """Direct sum of b_n n^-s; only meaningful where the series converges absolutely."""
        b = self.twisted_coefficients(n_terms)
        n = np.arange(1, n_terms + 1, dtype=np.float64)
        return complex(np.sum(b * np.exp(-complex(s) * np.log(n))))

    def branch(self) -> complex:
        """sqrt(sign), with the branch chosen once so that Z(0) >= 0."""
        if self._branch is None:
            root = cmath.sqrt(self.sign)
            if (self.completed(0.5) / root).real < 0:
                root = -root
            self._branch = root
        return self._branch

    def z_scale(self, t: float) -> float:
        return abs(self.gamma_factor(0.5 + 1j * t))


def twisted_l_function(form: Newform, d: int, **kwargs) -> TwistedLFunction:
    """L(f, s, psi_D) with its sign; d = 1 gives the untwisted L-function of a calibrated form."""
    if d == 1:
        if form.epsilon_f is None:
            raise ValueError(f"{form.label}: root number not calibrated")
        sign = complex(form.epsilon_f)
    else:
        sign = sign_of_functional_equation(form, d)
    return TwistedLFunction(form, d, sign, **kwargs)


def completed_lambda(L: TwistedLFunction, s: complex, n_terms: int | None = None) -> complex:
    return L.completed(s, n_terms=n_terms)


def verify_functional_equation(L: TwistedLFunction, test_points=FE_TEST_POINTS, split=ALTERNATE_SPLIT) -> float:
    """max_j |Lambda(s_j) - sign * conj(Lambda(conj(1 - s_j)))| / |Lambda(s_j)|.

    The right-hand side is evaluated with a different split so that a wrong sign shows up as a residual.
    """
    residual = 0.0
    for s in test_points:
        lhs = L.completed(s)
        rhs = L.sign * np.conj(L.completed(np.conj(1 - s), split=split))
        if abs(lhs) < 1e-12:
            raise ValueError(f"|Lambda({s})| too small to serve as a test point")
        residual = max(residual, abs(lhs - rhs) / abs(lhs))
    logger.debug(f"{L.label}, D={L.d}: functional equation residual {residual:.2e}")
    return residual


def calibrate_epsilon(form: Newform, test_points=FE_TEST_POINTS, split=ALTERNATE_SPLIT) -> complex:
    """Solve A1 + eps B1 = A2 + eps B2 on the untwisted L-function for two splits and store eps on `form`."""
    L = TwistedLFunction(form, 1, 1.0)
    estimates = []
    for s in test_points:
        a1, b1 = L.afe_parts(s)
        a2, b2 = L.afe_parts(s, split=split)
        if abs(b1 - b2) < 1e-12 * max(abs(a1), 1.0):
            logger.debug(f"{form.label}: test point {s} does not separate the two splits")
            continue
        estimates.append((a2 - a1) / (b1 - b2))
    if not estimates:
        raise ConvergenceError(f"{form.label}: no usable test point for root number calibration")

    eps = complex(np.mean(estimates))
    spread = max(abs(e - eps) for e in estimates)
    if abs(abs(eps) - 1) > 1e-6 or spread > 1e-6:
        raise ConvergenceError(f"{form.label}: root number estimate {eps} (spread {spread:.1e}) is not unimodular")
    if form.is_self_dual:
        # real coefficients and a real character leave only +1 or -1
        eps = complex(1.0 if eps.real > 0 else -1.0)
    else:
        eps /= abs(eps)
    logger.info(f"{form.label}: root number {eps.real:+.12f}{eps.imag:+.12f}i")
    form.epsilon_f = eps
    return eps


def ensure_epsilon(form: Newform) -> complex:
    if form.epsilon_f is None:
        return calibrate_epsilon(form)
    return form.epsilon_f


def hardy_z(L: TwistedLFunction, t: float, imag_tolerance: float = Z_IMAG_TOLERANCE) -> float:
    z = L.completed(0.5 + 1j * t) / L.branch()
    scale = L.z_scale(t)
    if abs(z.imag) > imag_tolerance * scale:
        raise ConvergenceError(
            f"{L.label}, D={L.d}: Z({t}) has imaginary part {z.imag:.3e} against scale {scale:.3e}"
        )
    return z.real


def central_value(L: TwistedLFunction) -> complex:
    return L.completed(0.5) / L.gamma_factor(0.5)


def is_central_vanishing(value: complex, threshold: float | None = None) -> bool:
    limit = 1e-10 if threshold is None else max(1e-10, threshold / 2)
    return abs(value) < limit


def default_grid_step(L: TwistedLFunction) -> float:
    return 0.1 / math.log(max(L.conductor, 3))


def lowest_zeros(
    L: TwistedLFunction,
    count: int = 1,
    t_max: float = 20.0,
    grid_step: float | None = None,
    zero_tolerance: float = ZERO_TOLERANCE,
    imag_tolerance: float = Z_IMAG_TOLERANCE,
    vanishing_threshold: float | None = None,
) -> ZeroList:
    """The first `count` zeros 1/2 + it with t > 0, found by sign changes of Z on a grid and refined by brentq.

    A zero at the central point is flagged on the result and never listed as an ordinate.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    step = grid_step or default_grid_step(L)

    def z(t: float) -> float:
        return hardy_z(L, t, imag_tolerance)

    central = is_central_vanishing(central_value(L), vanishing_threshold)
    t_prev = step / 4 if central else 0.0
    z_prev = z(t_prev)

    ordinates: list[float] = []
    t = t_prev
    while len(ordinates) < count:
        t += step
        if t > t_max:
            raise ConvergenceError(
                f"{L.label}, D={L.d}: found {len(ordinates)} of {count} zeros below t = {t_max}"
            )
        z_next = z(t)
        if z_next == 0.0:
            ordinates.append(t)
        elif z_prev != 0.0 and (z_prev < 0) != (z_next < 0):
            root = brentq(z, t_prev, t, xtol=1e-12, rtol=4 * np.finfo(float).eps)
            if abs(z(root)) > zero_tolerance * L.z_scale(root):
                raise ConvergenceError(f"{L.label}, D={L.d}: |Z({root})| above zero tolerance")
            ordinates.append(float(root))
        t_prev, z_prev = t, z_next

    return ZeroList(L.label, L.d, tuple(ordinates), central_vanishing=central)


def collinearity_deviation(values) -> float:
    """Largest angular distance, modulo pi, between the arguments of the nonzero values."""
    v = np.asarray(list(values), dtype=np.complex128)
    v = v[np.abs(v) > 1e-12]
    if v.size == 0:
        raise ValueError("no nonzero central values")
    angles = np.mod(np.angle(v), np.pi)
    diff = np.abs(angles[:, None] - angles[None, :])
    return float(np.max(np.minimum(diff, np.pi - diff)))
