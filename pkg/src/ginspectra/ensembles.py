"""Gaussian random-matrix ensembles and the Poisson-to-GinUE crossover models.

Every sampler draws from an :class:`RngStream`, a (master seed, stream index)
pair mapped to an independent PCG64 generator. Realization ``i`` of an
ensemble always uses stream ``i``, so results do not depend on which worker
computed them or in what order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

CROSSOVER_MODELS = ("MM1", "MM2")


def splitmix64(z: int) -> int:
    """SplitMix64 output finalizer (a bijection on 64-bit integers)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, stream_index: int) -> int:
    return splitmix64((master_seed & _MASK64) ^ ((stream_index * GOLDEN_GAMMA) & _MASK64))


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 0 or v > _MASK64:
                raise ValidationError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    @property
    def seed(self) -> int:
        return derive_seed(self.master_seed, self.stream_index)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed))


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def _check_n(N):
    if isinstance(N, bool) or not isinstance(N, (int, np.integer)) or N < 2:
        raise ValidationError(f"matrix dimension must be an integer >= 2, got {N!r}")


def sample_ginue(N: int, rng) -> np.ndarray:
    """N x N matrix with iid entries a + ib, a and b standard normal."""
    _check_n(N)
    g = _gen(rng)
    out = g.standard_normal((N, N)).astype(complex)
    out.imag = g.standard_normal((N, N))
    return out


def sample_ginoe(N: int, rng) -> np.ndarray:
    """N x N matrix with iid real standard normal entries (complex dtype, zero imaginary part)."""
    _check_n(N)
    return _gen(rng).standard_normal((N, N)).astype(complex)


def sample_poisson_diagonal(N: int, kind: str, rng) -> np.ndarray:
    """Diagonal matrix of uncorrelated levels.

    ``kind="real1D"`` puts real standard normals on the diagonal (1D Poisson),
    ``kind="complex2D"`` puts complex ones with independent real and imaginary
    parts (2D Poisson).
    """
    _check_n(N)
    g = _gen(rng)
    if kind == "real1D":
        diag = g.standard_normal(N).astype(complex)
    elif kind == "complex2D":
        diag = g.standard_normal(N).astype(complex)
        diag.imag = g.standard_normal(N)
    else:
        raise ValidationError(f"unknown Poisson kind {kind!r}")
    return np.diag(diag)


@dataclass(frozen=True)
class CrossoverSpec:
    """``H = (H0 + alpha V) / sqrt(1 + alpha^2)`` with V from GinUE.

    MM1 takes H0 real diagonal (1D Poisson), MM2 complex diagonal (2D Poisson).
    """

    model: str
    alpha: float
    N: int

    def __post_init__(self):
        if self.model not in CROSSOVER_MODELS:
            raise ValidationError(f"unknown crossover model {self.model!r}")
        if isinstance(self.alpha, bool) or not isinstance(self.alpha, (int, float)):
            raise ValidationError(f"alpha must be a number, got {self.alpha!r}")
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise ValidationError(f"alpha must be finite and non-negative, got {self.alpha!r}")
        object.__setattr__(self, "alpha", float(self.alpha))
        _check_n(self.N)

    @property
    def initial_kind(self) -> str:
        return "real1D" if self.model == "MM1" else "complex2D"


def sample_crossover(spec: CrossoverSpec, rng) -> np.ndarray:
    g = _gen(rng)
    h0 = sample_poisson_diagonal(spec.N, spec.initial_kind, g)
    if spec.alpha == 0:
        # V would be multiplied by zero; skipping the draw leaves the output unchanged
        return h0
    v = sample_ginue(spec.N, g)
    return (h0 + spec.alpha * v) / math.sqrt(1.0 + spec.alpha**2)
