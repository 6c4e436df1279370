"""Complex spacing ratio statistics of non-Hermitian spin chains and random matrices."""

from .csr_stats import (CsrSet, Signatures, complex_spacing_ratios, density2d, ginue_reference,
                        marginals, poisson_reference, real_fraction, signatures)
from .eig import Spectrum, diagonalize, eigenvalues, hermitian_fastpath, schur, sort_spectrum
from .ensembles import (CrossoverSpec, RngStream, sample_crossover, sample_ginoe, sample_ginue,
                        sample_poisson_diagonal)
from .errors import ConvergenceError, GinspectraError, SpectrumFormatError, ValidationError
from .spin_ops import (Disorder, ParamSource, RealizedParams, SpinChainSpec, build_hamiltonian,
                       conjugation_pairing_check, rotation_operator, rt_symmetry_check)

__version__ = "0.1.0"

__all__ = [
    "CsrSet", "Signatures", "complex_spacing_ratios", "density2d", "ginue_reference", "marginals",
    "poisson_reference", "real_fraction", "signatures",
    "Spectrum", "diagonalize", "eigenvalues", "hermitian_fastpath", "schur", "sort_spectrum",
    "CrossoverSpec", "RngStream", "sample_crossover", "sample_ginoe", "sample_ginue",
    "sample_poisson_diagonal",
    "ConvergenceError", "GinspectraError", "SpectrumFormatError", "ValidationError",
    "Disorder", "ParamSource", "RealizedParams", "SpinChainSpec", "build_hamiltonian",
    "conjugation_pairing_check", "rotation_operator", "rt_symmetry_check",
]
