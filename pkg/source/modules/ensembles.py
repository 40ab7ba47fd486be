"""Haar random matrices from U(N), SO(2N) and USp(2N), their eigenphases and |Lambda_A(1, N)|.

Every draw is reproducible from (seed, draw index): the generator for a draw is PCG64 seeded by
SeedSequence(seed, spawn_key=(draw,)), so results do not depend on which worker made the draw.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from modules.enums import Group
from modules.errors import ConvergenceError

logger = logging.getLogger(__name__)


RNG_DESCRIPTION = "numpy PCG64 seeded by SeedSequence(seed, spawn_key=(draw,)); ziggurat normals"

MODULUS_TOLERANCE = 1e-9
CHARPOLY_TOLERANCE = 1e-8


def rng_for(seed: int, draw: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(draw,))))


@dataclass
class EnsembleSample:
    group: Group
    n: int
    eigenphases: np.ndarray
    lambda_at_one: float
    seed: int | None = None
    draw: int | None = None
    attempts: int = 1

    def lowest_phase(self, absolute: bool = False) -> float:
        """Smallest positive eigenphase, or smallest |phase| with `absolute`."""
        if absolute:
            return float(np.min(np.abs(self.eigenphases)))
        positive = self.eigenphases[self.eigenphases > 0]
        if positive.size == 0:
            return math.pi
        return float(positive[0])


@dataclass(frozen=True)
class ExcisedConfig:
    c_std: float
    k: int
    n_std: int

    @property
    def cutoff(self) -> float:
        return self.c_std * math.exp((1 - self.k) * self.n_std / 2)

    def __post_init__(self):
        if self.c_std < 0:
            raise ValueError(f"c_std must be non-negative, got {self.c_std}")


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ValueError(f"matrix size must be positive, got {n}")
    while True:
        q, r = np.linalg.qr(_complex_gaussian(rng, (n, n)))
        diagonal = np.diagonal(r)
        if np.all(diagonal != 0):
            break
    # Q-R is not unique; fix it by making the diagonal of R positive
    return q * (diagonal / np.abs(diagonal))


def haar_special_orthogonal(n_even: int, rng: np.random.Generator) -> np.ndarray:
    if n_even < 2 or n_even % 2:
        raise ValueError(f"SO(2N) needs an even size >= 2, got {n_even}")
    while True:
        q, r = np.linalg.qr(rng.standard_normal((n_even, n_even)))
        diagonal = np.diagonal(r)
        if np.all(diagonal != 0):
            break
    q = q * np.sign(diagonal)
    if np.linalg.det(q) < 0:
        # a fixed reflection maps the det = -1 coset onto SO(n)
        q[:, 0] = -q[:, 0]
    return q


def symplectic_partner(v: np.ndarray) -> np.ndarray:
    """The second column of the 2x2 quaternion block whose first column is `v` (pairs interleaved)."""
    w = np.empty_like(v)
    w[0::2] = -np.conj(v[1::2])
    w[1::2] = np.conj(v[0::2])
    return w


def symplectic_form(n_even: int) -> np.ndarray:
    """J preserved by the interleaved quaternion embedding: A^T J A = J."""
    return np.kron(np.eye(n_even // 2), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def haar_unitary_symplectic(n_even: int, rng: np.random.Generator) -> np.ndarray:
    """Quaternion Gram-Schmidt on a quaternion Ginibre matrix, embedded as 2x2 complex blocks.

    Column j of the quaternion matrix is the complex column pair (g_j, K g_j); orthogonalizing g_j
    against all earlier pairs and normalizing leaves a real positive quaternion diagonal in R.
    """
    if n_even < 2 or n_even % 2:
        raise ValueError(f"USp(2N) needs an even size >= 2, got {n_even}")
    g = _complex_gaussian(rng, (n_even, n_even // 2))
    basis = np.zeros((n_even, n_even), dtype=np.complex128)
    for j in range(n_even // 2):
        v = g[:, j]
        done = basis[:, : 2 * j]
        for _ in range(2):
            v = v - done @ (done.conj().T @ v)
        v = v / np.linalg.norm(v)
        basis[:, 2 * j] = v
        basis[:, 2 * j + 1] = symplectic_partner(v)
    return basis


def eigenphases(matrix: np.ndarray) -> np.ndarray:
    values = np.linalg.eigvals(matrix)
    moduli = np.abs(values)
    if np.max(np.abs(moduli - 1), initial=0.0) > MODULUS_TOLERANCE:
        raise ConvergenceError(f"eigenvalue modulus off the unit circle by {np.max(np.abs(moduli - 1)):.2e}")
    return np.sort(np.angle(values))


def char_poly_at_one(matrix: np.ndarray, phases: np.ndarray | None = None) -> float:
    """|det(I - A)|, cross-checked against prod |1 - e^{i theta_j}|."""
    direct = float(abs(np.linalg.det(np.eye(len(matrix)) - matrix)))
    if phases is None:
        phases = eigenphases(matrix)
    product = float(np.prod(np.abs(1 - np.exp(1j * phases))))
    if not math.isclose(direct, product, rel_tol=CHARPOLY_TOLERANCE, abs_tol=1e-12):
        raise ConvergenceError(f"|det(I - A)| = {direct!r} but the eigenvalue product gives {product!r}")
    return direct


_SAMPLERS = {
    Group.U: haar_unitary,
    Group.SO_EVEN: haar_special_orthogonal,
    Group.USP: haar_unitary_symplectic,
}


def _sample(group: Group, n: int, rng: np.random.Generator, seed=None, draw=None) -> EnsembleSample:
    matrix = _SAMPLERS[group](n, rng)
    phases = eigenphases(matrix)
    return EnsembleSample(group, n, phases, char_poly_at_one(matrix, phases), seed=seed, draw=draw)


def sample_unitary(n: int, rng: np.random.Generator) -> EnsembleSample:
    return _sample(Group.U, n, rng)


def sample_special_orthogonal(n_even: int, rng: np.random.Generator) -> EnsembleSample:
    return _sample(Group.SO_EVEN, n_even, rng)


def sample_unitary_symplectic(n_even: int, rng: np.random.Generator) -> EnsembleSample:
    return _sample(Group.USP, n_even, rng)


def draw(group: Group, n: int, seed: int, draw_index: int) -> EnsembleSample:
    """The draw_index-th sample of the stream identified by `seed`."""
    return _sample(group, n, rng_for(seed, draw_index), seed=seed, draw=draw_index)


def draw_pool(group: Group, n: int, seed: int, count: int, start: int = 0) -> list[EnsembleSample]:
    return [draw(group, n, seed, i) for i in range(start, start + count)]


class ExcisionExhausted(ConvergenceError):
    def __init__(self, cutoff: float, attempts: int, accepted: int, needed: int = 1):
        super().__init__(
            f"{accepted} of {attempts} SO samples have |Lambda_A(1)| >= {cutoff:.6g}, {needed} needed "
            f"(acceptance rate {accepted / attempts:.3g})"
        )
        self.cutoff = cutoff
        self.attempts = attempts
        self.accepted = accepted
        self.needed = needed

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.attempts


def sample_excised(n_even: int, cfg: ExcisedConfig, rng: np.random.Generator, max_attempts: int) -> EnsembleSample:
    """Rejection-sample SO(n_even) until |Lambda_A(1, N)| >= cfg.cutoff."""
    cutoff = cfg.cutoff
    for attempt in range(1, max_attempts + 1):
        sample = sample_special_orthogonal(n_even, rng)
        if sample.lambda_at_one >= cutoff:
            sample.attempts = attempt
            return sample
    raise ExcisionExhausted(cutoff, max_attempts, 0)


def acceptance_rate(samples: list[EnsembleSample], cutoff: float) -> float:
    if not samples:
        return 0.0
    return sum(s.lambda_at_one >= cutoff for s in samples) / len(samples)
