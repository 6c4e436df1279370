"""Eigenvalues of dense complex matrices with a Schur backward-error certificate.

Every spectrum carries ``residual_bound = ||Q T Q^H - A||_F / ||A||_F`` computed
from the accumulated Schur factorization (with the balancing undone), so a
caller can refuse spectra that were not computed stably.

Two backends share this contract: ``"lapack"`` (scipy's ``zgees`` after
``gebal`` scaling, the default) and ``"native"`` (the numba kernels in
:mod:`ginspectra._qr`).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from . import _qr
from .errors import ConvergenceError, ValidationError

CERTIFICATION_THRESHOLD = 1e-10
BACKENDS = ("lapack", "native")


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    residual_bound: float
    provenance: dict = field(default_factory=dict)
    method: str = "schur"

    def __post_init__(self):
        vals = np.asarray(self.eigenvalues, dtype=complex).ravel()
        if not np.all(np.isfinite(vals)):
            raise ValidationError("spectrum contains non-finite eigenvalues")
        object.__setattr__(self, "eigenvalues", vals)

    def __len__(self):
        return self.eigenvalues.size

    @property
    def certified(self) -> bool:
        return self.residual_bound <= CERTIFICATION_THRESHOLD

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.eigenvalues))) if len(self) else 0.0

    def __eq__(self, other):
        if not isinstance(other, Spectrum):
            return NotImplemented
        return (np.array_equal(self.eigenvalues, other.eigenvalues)
                and self.residual_bound == other.residual_bound
                and self.provenance == other.provenance
                and self.method == other.method)


def _as_square(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] < 1:
        raise ValidationError("matrix must have dimension >= 1")
    A = A.astype(complex, copy=False)
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix has non-finite entries")
    return A


def _relative_residual(A, T, Q, d) -> float:
    recon = (Q @ T) @ Q.conj().T
    if d is not None:
        recon *= d[:, None] / d[None, :]
    norm = np.linalg.norm(A)
    if norm == 0:
        return float(np.linalg.norm(recon))
    return float(np.linalg.norm(recon - A) / norm)


def schur(A, *, balance: bool = True, backend: str = "lapack", provenance: dict | None = None):
    """Complex Schur factorization ``A = D Q T Q^H D^-1``.

    Returns ``(T, Q, d)`` where ``d`` is the balancing scale vector (ones when
    ``balance`` is off).
    """
    A = _as_square(A)
    n = A.shape[0]
    if not np.any(np.tril(A, -1)):
        # already triangular, hence its own Schur form
        return A.copy(), np.eye(n, dtype=complex), np.ones(n)
    if backend == "lapack":
        if balance:
            B, (d, _) = scipy.linalg.matrix_balance(A, permute=False, separate=True)
        else:
            B, d = A, np.ones(n)
        try:
            T, Q = scipy.linalg.schur(B, output="complex")
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"LAPACK Schur iteration failed for {n}x{n} matrix: {exc}",
                                   provenance) from exc
        return T, Q, np.asarray(d, dtype=float)
    if backend == "native":
        T, Q, d, status = _qr.native_schur(A, balance=balance)
        if status != _qr.STATUS_OK:
            raise ConvergenceError(
                f"QR iteration did not converge within {_qr.SWEEPS_PER_DIM * n} sweeps for {n}x{n} matrix",
                provenance)
        return T, Q, d
    raise ValidationError(f"unknown eigensolver backend {backend!r}; choose from {BACKENDS}")


def eigenvalues(A, *, balance: bool = True, backend: str = "lapack", provenance: dict | None = None) -> Spectrum:
    """All eigenvalues of ``A`` with the Schur reconstruction defect attached.

    Raises :class:`ConvergenceError` (never returns NaN) when the QR iteration
    fails; the message names ``provenance``.
    """
    A = _as_square(A)
    T, Q, d = schur(A, balance=balance, backend=backend, provenance=provenance)
    vals = np.diag(T).copy()
    if not np.all(np.isfinite(vals)):
        raise ConvergenceError("eigensolver produced non-finite eigenvalues", provenance)
    res = _relative_residual(A, T, Q, d)
    return Spectrum(vals, res, dict(provenance or {}), method=f"schur-{backend}")


def hermitian_fastpath(A, tol: float = 1e-10, provenance: dict | None = None) -> Spectrum | None:
    """Spectrum via Hermitian tridiagonalization, or ``None`` if ``A`` is not Hermitian.

    ``A`` counts as Hermitian when ``||A - A^H||_F <= tol ||A||_F``. The returned
    eigenvalues have imaginary part exactly zero.
    """
    A = _as_square(A)
    norm = np.linalg.norm(A)
    if np.linalg.norm(A - A.conj().T) > tol * norm:
        return None
    Ah = 0.5 * (A + A.conj().T)
    try:
        w, V = scipy.linalg.eigh(Ah)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"Hermitian eigensolver failed: {exc}", provenance) from exc
    recon = (V * w) @ V.conj().T
    res = float(np.linalg.norm(recon - A) / norm) if norm > 0 else 0.0
    return Spectrum(w.astype(complex), res, dict(provenance or {}), method="hermitian")


def sort_spectrum(s: Spectrum) -> Spectrum:
    """Ascending real part, ties broken by ascending imaginary part (stable)."""
    vals = s.eigenvalues
    order = np.lexsort((vals.imag, vals.real))
    return replace(s, eigenvalues=vals[order])


def sort_values(vals) -> np.ndarray:
    vals = np.asarray(vals, dtype=complex).ravel()
    return vals[np.lexsort((vals.imag, vals.real))]


def diagonalize(A, *, backend: str = "lapack", provenance: dict | None = None) -> Spectrum:
    """Pick the cheapest exact route: triangular input, exactly Hermitian input, general Schur."""
    A = _as_square(A)
    if np.any(np.tril(A, -1)):
        herm = hermitian_fastpath(A, tol=0.0, provenance=provenance)
        if herm is not None:
            return herm
    return eigenvalues(A, backend=backend, provenance=provenance)
