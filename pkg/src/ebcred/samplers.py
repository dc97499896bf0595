"""Random draws: seeded generators, Gaussian sequences, and recentred radii.

All randomness flows through numpy Generator objects built from a
SeedSequence with an explicit spawn key, so independent substreams are
reproducible from (seed, stream) pairs alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sequence_model import CoefficientSequence, PosteriorSpec

__all__ = [
    "RngSeed",
    "ProposalExhausted",
    "make_rng",
    "draw_gaussian_sequence",
    "draw_posterior",
    "recentered_radii",
    "lawmu_scales",
    "draw_lawmu",
]

# Draw matrices are streamed in blocks of roughly this many bytes so the
# peak footprint stays flat no matter how many radii are requested.
_BLOCK_BYTES = 1 << 26


class ProposalExhausted(RuntimeError):
    """Rejection sampler hit its attempt budget without one acceptance."""

    def __init__(self, attempts: int):
        super().__init__(
            f"no proposal accepted within {attempts} attempts; "
            "the ball is too small for this proposal scale"
        )
        self.attempts = attempts


@dataclass(frozen=True)
class RngSeed:
    """Reproducible generator address: one integer seed plus a stream index."""

    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.stream < 0:
            raise ValueError("stream must be nonnegative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))


def make_rng(seed, stream: int = 0) -> np.random.Generator:
    """Coerce an int, RngSeed, or Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, RngSeed):
        return seed.generator()
    return RngSeed(int(seed), stream).generator()


def draw_gaussian_sequence(means, variances, rng) -> CoefficientSequence:
    """One draw from the independent Gaussian product law N(means, variances)."""
    means = np.asarray(means, dtype=np.float64)
    variances = np.asarray(variances, dtype=np.float64)
    if means.shape != variances.shape or means.ndim != 1:
        raise ValueError("means and variances must be 1-d arrays of equal length")
    if np.any(variances < 0):
        raise ValueError("variances must be nonnegative")
    rng = make_rng(rng)
    z = rng.standard_normal(means.size)
    return CoefficientSequence(means + np.sqrt(variances) * z)


def draw_posterior(post: PosteriorSpec, rng) -> CoefficientSequence:
    """One draw from a diagonal Gaussian posterior."""
    return draw_gaussian_sequence(post.mean, post.var, rng)


def recentered_radii(variances, m: int, rng, *, block_bytes: int = _BLOCK_BYTES) -> np.ndarray:
    """Norms of m independent draws from the centred law  ⊗_i N(0, var_i).

    Returns a float64 vector of the m Euclidean norms.  Draws are generated
    blockwise in float32 and reduced with a single-threaded einsum, which
    keeps the result independent of BLAS threading and the memory footprint
    bounded by block_bytes regardless of m.  The float32 accumulation is
    accurate to a relative 1e-6 on the squared norms, far below the Monte
    Carlo noise of any quantile taken from them.
    """
    variances = np.asarray(variances, dtype=np.float64)
    if variances.ndim != 1 or variances.size == 0:
        raise ValueError("variances must be a nonempty 1-d array")
    if np.any(variances < 0) or not np.all(np.isfinite(variances)):
        raise ValueError("variances must be finite and nonnegative")
    if m < 1:
        raise ValueError("m must be at least 1")
    rng = make_rng(rng)

    k = variances.size
    w = variances.astype(np.float32)
    block = max(1, block_bytes // (k * 4))
    out = np.empty(m, dtype=np.float64)
    done = 0
    while done < m:
        b = min(block, m - done)
        z = rng.standard_normal((b, k), dtype=np.float32)
        np.multiply(z, z, out=z)
        out[done:done + b] = np.einsum("ij,j->i", z, w, dtype=np.float32)
        done += b
    return np.sqrt(out)


def lawmu_scales(i_max: int) -> np.ndarray:
    """Coordinate decay (k * log(k+1)**2)**(-1/2) of the recentring proposal.

    The log argument is shifted by one so the k = 1 coordinate is finite;
    the resulting sequence is square-summable, so proposals stay in ell_2.
    """
    if i_max < 1:
        raise ValueError("i_max must be at least 1")
    k = np.arange(1, i_max + 1, dtype=np.float64)
    return 1.0 / np.sqrt(k * np.log(k + 1.0) ** 2)


def draw_lawmu(
    center: CoefficientSequence,
    a: float,
    ball,
    rng,
    max_attempts: int = 10_000,
) -> CoefficientSequence:
    """Rejection draw of a recentring point conditioned to lie in a ball.

    Proposes mu_k = center_k + a * xi_k * (k log(k+1)**2)**(-1/2) with
    xi iid standard normal and accepts the first proposal the ball
    contains.  Raises ProposalExhausted when max_attempts proposals all
    land outside, which signals that a is too large relative to the ball
    radius.
    """
    from .credible_set import contains

    if a <= 0:
        raise ValueError("a must be positive")
    if max_attempts < 1:
        raise ValueError("max_attempts must be at least 1")
    rng = make_rng(rng)
    decay = a * lawmu_scales(center.i_max)
    for _ in range(max_attempts):
        xi = rng.standard_normal(center.i_max)
        mu = CoefficientSequence(center.values + decay * xi)
        if contains(ball, mu):
            return mu
    raise ProposalExhausted(max_attempts)
