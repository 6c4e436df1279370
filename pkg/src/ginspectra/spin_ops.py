"""Dense spin-chain Hamiltonians with complex couplings and their RT symmetry.

All operators live on the 2**L dimensional Hilbert space of a periodic chain of
L spin-1/2 sites. Site 1 is the leftmost Kronecker factor. Every Hamiltonian is
a sum of nontrivial Pauli strings, so its trace vanishes identically.

Models
------
``H0``   (1/2) sum_j (X_j X_{j+1} + Y_j Y_{j+1} + 2 lam_j Z_j)
``H1``   sum_j ((1 + i g_j)/2 X_j X_{j+1} + (1 - i g_j)/2 Y_j Y_{j+1} + lam_j Z_j)
``H2``   H1 + sum_j lam1_j X_j
``H3``   H2 with the z-field made imaginary, lam_j -> i lam_j
``Him``  (i/2) sum_j g_j (X_j X_{j+1} - Y_j Y_{j+1})

``g_j`` lives on the bond (j, j+1); fields live on sites. With ``disorder="uniform"``
all entries of a parameter are equal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from .errors import ValidationError

if TYPE_CHECKING:
    from .eig import Spectrum

MAX_SITES = 12

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# parameters each model actually reads; anything else supplied is rejected
MODEL_PARAMS = {
    "H0": ("lambda",),
    "H1": ("gamma", "lambda"),
    "H2": ("gamma", "lambda", "lambda1"),
    "H3": ("gamma", "lambda", "lambda1"),
    "Him": ("gamma",),
}
PARAM_NAMES = ("gamma", "lambda", "lambda1")

DEFAULT_SYMMETRY_TOL = 1e-10
DEFAULT_PAIRING_TOL = 1e-8


class Disorder(str, Enum):
    SITE = "site"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class ParamSource:
    """Either a fixed value or a standard normal draw (zero mean, unit variance)."""

    kind: str
    value: float | None = None

    def __post_init__(self):
        if self.kind == "fixed":
            if self.value is None or not math.isfinite(self.value):
                raise ValidationError(f"fixed parameter needs a finite value, got {self.value!r}")
        elif self.kind == "gaussian":
            if self.value is not None:
                raise ValidationError("gaussian parameter takes no value")
        else:
            raise ValidationError(f"unknown parameter kind {self.kind!r}")

    @classmethod
    def fixed(cls, value: float) -> "ParamSource":
        return cls("fixed", float(value))

    @classmethod
    def gaussian(cls) -> "ParamSource":
        return cls("gaussian")

    @classmethod
    def parse(cls, raw) -> "ParamSource":
        """Accept a number or the string ``"gaussian"`` (config-file form)."""
        if isinstance(raw, ParamSource):
            return raw
        if isinstance(raw, str):
            if raw.lower() == "gaussian":
                return cls.gaussian()
            raise ValidationError(f"parameter must be a number or 'gaussian', got {raw!r}")
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ValidationError(f"parameter must be a number or 'gaussian', got {raw!r}")
        return cls.fixed(raw)

    @property
    def is_random(self) -> bool:
        return self.kind == "gaussian"

    def to_json(self):
        return "gaussian" if self.is_random else self.value


@dataclass(frozen=True)
class SpinChainSpec:
    model: str
    L: int
    gamma: ParamSource | None = None
    lam: ParamSource | None = None
    lambda1: ParamSource | None = None
    disorder: Disorder = Disorder.SITE

    def __post_init__(self):
        if self.model not in MODEL_PARAMS:
            raise ValidationError(f"unknown spin-chain model {self.model!r}")
        if isinstance(self.L, bool) or not isinstance(self.L, int) or not 2 <= self.L <= MAX_SITES:
            raise ValidationError(f"chain length L must be an integer in [2, {MAX_SITES}], got {self.L!r}")
        object.__setattr__(self, "disorder", Disorder(self.disorder))
        used = MODEL_PARAMS[self.model]
        for name in PARAM_NAMES:
            src = self.source(name)
            if name in used and src is None:
                raise ValidationError(f"model {self.model} requires parameter {name!r}")
            if name not in used and src is not None:
                raise ValidationError(f"model {self.model} does not use parameter {name!r}")

    def source(self, name: str) -> ParamSource | None:
        return {"gamma": self.gamma, "lambda": self.lam, "lambda1": self.lambda1}[name]

    @property
    def dim(self) -> int:
        return 2**self.L


@dataclass(frozen=True)
class RealizedParams:
    """One disorder realization: per-bond ``gamma`` and per-site fields.

    Parameters a model does not use are stored as all-zero tuples.
    """

    gamma: tuple[float, ...]
    lam: tuple[float, ...]
    lambda1: tuple[float, ...]
    seed_used: int = field(default=0, compare=False)

    def __post_init__(self):
        n = len(self.gamma)
        if len(self.lam) != n or len(self.lambda1) != n:
            raise ValidationError("realized parameters must all have one entry per site")
        if not all(math.isfinite(v) for v in (*self.gamma, *self.lam, *self.lambda1)):
            raise ValidationError("realized parameters must be finite")

    @classmethod
    def uniform(cls, L: int, gamma: float = 0.0, lam: float = 0.0, lambda1: float = 0.0, seed_used: int = 0):
        return cls((float(gamma),) * L, (float(lam),) * L, (float(lambda1),) * L, seed_used)

    def to_json(self) -> dict:
        return {"gamma": list(self.gamma), "lambda": list(self.lam), "lambda1": list(self.lambda1),
                "seed": self.seed_used}


def _check_L(L):
    if isinstance(L, bool) or not isinstance(L, (int, np.integer)) or L < 1 or L > MAX_SITES:
        raise ValidationError(f"chain length must be in [1, {MAX_SITES}], got {L!r}")


def pauli_string(L: int, ops: dict[int, str]) -> np.ndarray:
    """Kronecker product with ``ops[j]`` at 1-based site j and identity elsewhere."""
    out = np.ones((1, 1), dtype=complex)
    for j in range(1, L + 1):
        out = np.kron(out, PAULI[ops.get(j, "i")])
    return out


def site_operator(L: int, j: int, axis: str) -> np.ndarray:
    """Pauli matrix ``axis`` acting on site ``j`` (1-based) of an L-site chain."""
    _check_L(L)
    if axis not in ("x", "y", "z"):
        raise ValidationError(f"axis must be 'x', 'y' or 'z', got {axis!r}")
    if not 1 <= j <= L:
        raise ValidationError(f"site index {j} outside 1..{L}")
    return pauli_string(L, {j: axis})


# per-site row values of each Pauli matrix: row b has its nonzero in column b ^ flip
_ROW_VALUES = {
    "i": (np.array([1, 1], dtype=complex), 0),
    "x": (np.array([1, 1], dtype=complex), 1),
    "y": (np.array([-1j, 1j]), 1),
    "z": (np.array([1, -1], dtype=complex), 0),
}


def pauli_monomial(L: int, ops: dict[int, str]) -> tuple[np.ndarray, np.ndarray]:
    """Sparse form of a Pauli string: row b has value ``phases[b]`` in column ``cols[b]``.

    Equal to ``pauli_string(L, ops)`` but built in O(2**L).
    """
    phases = np.ones(1, dtype=complex)
    mask = 0
    for j in range(1, L + 1):
        vals, flip = _ROW_VALUES[ops.get(j, "i")]
        phases = np.kron(phases, vals)
        mask |= flip << (L - j)
    cols = np.arange(2**L) ^ mask
    return cols, phases


def _add_term(H, L, ops, coeff):
    cols, phases = pauli_monomial(L, ops)
    H[np.arange(H.shape[0]), cols] += coeff * phases


def build_hamiltonian(spec: SpinChainSpec, params: RealizedParams) -> np.ndarray:
    L = spec.L
    if len(params.gamma) != L:
        raise ValidationError(f"realized parameters have {len(params.gamma)} sites, spec has {L}")
    model = spec.model
    H = np.zeros((spec.dim, spec.dim), dtype=complex)

    for j in range(1, L + 1):
        # periodic: site L couples back to site 1; for L=2 both terms join sites 1-2
        k = j % L + 1
        gj, lj, l1j = params.gamma[j - 1], params.lam[j - 1], params.lambda1[j - 1]
        if model == "H0":
            cxx = cyy = 0.5
        elif model == "Him":
            cxx, cyy = 0.5j * gj, -0.5j * gj
        else:
            cxx, cyy = (1 + 1j * gj) / 2, (1 - 1j * gj) / 2
        _add_term(H, L, {j: "x", k: "x"}, cxx)
        _add_term(H, L, {j: "y", k: "y"}, cyy)
        if model == "Him":
            continue
        _add_term(H, L, {j: "z"}, 1j * lj if model == "H3" else lj)
        if model in ("H2", "H3"):
            _add_term(H, L, {j: "x"}, l1j)
    return H


def rotation_operator(L: int) -> np.ndarray:
    """Rotation of every spin by pi/2 about z: prod_j (I - i Z_j)/sqrt(2).

    The operator is diagonal; entry for basis state b is prod_j (1 -/+ i)/sqrt(2)
    with the sign set by the j-th bit (0 -> spin up -> 1 - i).
    """
    _check_L(L)
    single = np.array([1 - 1j, 1 + 1j]) / math.sqrt(2)
    diag = np.ones(1, dtype=complex)
    for _ in range(L):
        diag = np.kron(diag, single)
    return np.diag(diag)


@dataclass(frozen=True)
class SymmetryCheck:
    passed: bool
    defect: float

    def __bool__(self):
        return self.passed


def rt_symmetry_check(H: np.ndarray, L: int, tol: float = DEFAULT_SYMMETRY_TOL) -> SymmetryCheck:
    """Relative Frobenius defect of R conj(H) R^-1 against H."""
    H = np.asarray(H)
    _check_L(L)
    if H.shape != (2**L, 2**L):
        raise ValidationError(f"matrix of shape {H.shape} does not act on {L} sites")
    r = np.diag(rotation_operator(L))
    # R diagonal and unitary, so R^-1 = conj(R)
    transformed = r[:, None] * H.conj() * r.conj()[None, :]
    norm = np.linalg.norm(H)
    defect = float(np.linalg.norm(transformed - H) / norm) if norm > 0 else 0.0
    return SymmetryCheck(defect <= tol, defect)


@dataclass(frozen=True)
class PairingCheck:
    passed: bool
    unmatched: int

    def __bool__(self):
        return self.passed


def _values(spectrum) -> np.ndarray:
    vals = getattr(spectrum, "eigenvalues", spectrum)
    return np.asarray(vals, dtype=complex).ravel()


def conjugation_pairing_check(spectrum: "Spectrum | np.ndarray", tol: float | None = None) -> PairingCheck:
    """Check that non-real eigenvalues come in complex-conjugate pairs.

    ``tol`` is absolute; the default is ``1e-8`` times the spectral radius.
    Each eigenvalue with ``|Im| > tol`` is greedily matched to the closest
    unmatched eigenvalue within ``tol`` of its conjugate.
    """
    vals = _values(spectrum)
    if vals.size == 0:
        raise ValidationError("pairing check needs a nonempty spectrum")
    if tol is None:
        tol = DEFAULT_PAIRING_TOL * float(np.max(np.abs(vals)))
    order = np.lexsort((vals.imag, vals.real))
    vals = vals[order]
    matched = np.abs(vals.imag) <= tol
    unmatched = 0
    for i in range(vals.size):
        if matched[i]:
            continue
        dist = np.abs(vals - vals[i].conjugate())
        dist[matched] = np.inf
        dist[i] = np.inf
        j = int(np.argmin(dist))
        if dist[j] <= tol:
            matched[i] = matched[j] = True
        else:
            matched[i] = True
            unmatched += 1
    return PairingCheck(unmatched == 0, unmatched)


def reflection_pair_fraction(spectrum: "Spectrum | np.ndarray", tol: float | None = None) -> float:
    """Fraction of eigenvalues x whose negative -x is also in the spectrum.

    Diagnostic only: H1 spectra often show +/- x structure, but it is not a
    guaranteed symmetry.
    """
    vals = _values(spectrum)
    if vals.size == 0:
        return 0.0
    if tol is None:
        tol = DEFAULT_PAIRING_TOL * max(float(np.max(np.abs(vals))), 1e-300)
    used = np.zeros(vals.size, dtype=bool)
    paired = 0
    for i in range(vals.size):
        if used[i]:
            continue
        dist = np.abs(vals + vals[i])
        dist[used] = np.inf
        dist[i] = np.inf if abs(vals[i]) > tol else dist[i]
        j = int(np.argmin(dist))
        if dist[j] <= tol:
            used[i] = used[j] = True
            paired += 2 if i != j else 1
    return paired / vals.size
