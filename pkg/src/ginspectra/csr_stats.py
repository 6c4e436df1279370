"""Complex spacing ratios (CSR) and their statistics.

For every eigenvalue x_k, with NN and NNN its nearest and next-nearest
neighbours in the complex plane,

    z_k = (x_NN - x_k) / (x_NNN - x_k),    |z_k| <= 1.

Neighbours are found by an all-pairs search over the spectrum sorted by
(real, imag); equidistant candidates go to the one earlier in that order. When
NN and NNN are equidistant this choice only flips the sign of arg z. Squared
distances are compared in floating point, and rows with near ties are
re-ranked in exact rational arithmetic, so ties are decided by true distance.

An exactly degenerate pair gives z = 0 and is kept. When the NNN distance is
also zero (three or more coincident levels) the ratio is undefined; it is
skipped and counted in ``CsrSet.skipped_degenerate``.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .eig import Spectrum, eigenvalues, sort_values
from .ensembles import RngStream, sample_ginue
from .errors import ConvergenceError, ValidationError

DEFAULT_BINS_R = 50
DEFAULT_BINS_THETA = 50
DEFAULT_GRID = 101

GINUE_REF_N = 2000
GINUE_REF_COUNT = 50
GINUE_REF_SEED = 20240101

# rows of the all-pairs distance matrix held in memory at once
_CHUNK = 512
# squared distances closer than this (relative) are re-ranked in exact arithmetic
_NEAR_TIE = 1e-12
# below this, squared distances may have lost precision to underflow
_TINY = 1e-280


@dataclass(frozen=True, eq=False)
class CsrSet:
    ratios: np.ndarray
    skipped_degenerate: int = 0
    source_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ratios", np.asarray(self.ratios, dtype=complex).ravel())
        if self.source_count == 0:
            object.__setattr__(self, "source_count", self.ratios.size + self.skipped_degenerate)
        if self.ratios.size + self.skipped_degenerate != self.source_count:
            raise ValidationError("ratio count plus skipped count must equal the number of eigenvalues")

    def __len__(self):
        return self.ratios.size

    @property
    def r(self) -> np.ndarray:
        return np.abs(self.ratios)

    @property
    def theta(self) -> np.ndarray:
        """arg z folded into [-pi, pi)."""
        th = np.angle(self.ratios)
        th[th >= math.pi] = -math.pi
        return th

    @classmethod
    def pool(cls, sets) -> "CsrSet":
        sets = list(sets)
        if not sets:
            return cls(np.empty(0, dtype=complex), 0, 0)
        return cls(np.concatenate([s.ratios for s in sets]),
                   sum(s.skipped_degenerate for s in sets),
                   sum(s.source_count for s in sets))


def _exact_sq(d: complex) -> Fraction:
    return Fraction(d.real) ** 2 + Fraction(d.imag) ** 2


def _exact_neighbours(vals, k, dist_row, d2):
    """NN and NNN of ``vals[k]`` by exact rational distances.

    Only candidates whose rounded squared distance is within rounding of the
    second smallest can be among the true two nearest.
    """
    limit = max(d2 * (1 + _NEAR_TIE), _TINY)
    cand = np.flatnonzero(dist_row <= limit)
    ranked = sorted((_exact_sq(complex(vals[j] - vals[k])), int(j)) for j in cand)
    (e1, j1), (e2, j2) = ranked[0], ranked[1]
    return j1, j2, e2 == 0


def complex_spacing_ratios(spectrum: Spectrum | np.ndarray) -> CsrSet:
    vals = sort_values(getattr(spectrum, "eigenvalues", spectrum))
    n = vals.size
    if n < 3:
        raise ValidationError(f"complex spacing ratios need at least 3 eigenvalues, got {n}")
    top = float(np.max(np.maximum(np.abs(vals.real), np.abs(vals.imag))))
    if top > 0:
        # power-of-two rescaling is exact and leaves every ratio unchanged; it keeps
        # squared distances clear of overflow
        e = -math.frexp(top)[1]
        vals = np.ldexp(vals.real, e) + 1j * np.ldexp(vals.imag, e)
    ratios = np.empty(n, dtype=complex)
    keep = np.ones(n, dtype=bool)
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        rows = np.arange(start, stop)
        local = rows - start
        diff = vals[None, :] - vals[rows, None]
        # squared distances: exact for small Gaussian-integer spectra, so true ties stay ties
        dist = diff.real**2 + diff.imag**2
        dist[local, rows] = np.inf
        kth = min(2, n - 2)
        smallest = np.sort(np.partition(dist, kth, axis=1)[:, :kth + 1], axis=1)
        # argmin returns the first minimum, i.e. the earliest in sort order
        nn = np.argmin(dist, axis=1)
        masked = dist.copy()
        masked[local, nn] = np.inf
        nnn = np.argmin(masked, axis=1)
        d1, d2 = smallest[:, 0], smallest[:, 1]
        close = (d2 - d1 <= _NEAR_TIE * d2) | (d2 < _TINY)
        if kth == 2:
            d3 = smallest[:, 2]
            close |= d3 - d2 <= _NEAR_TIE * d3
        skip = np.zeros(rows.size, dtype=bool)
        for i in np.flatnonzero(close):
            nn[i], nnn[i], skip[i] = _exact_neighbours(vals, rows[i], dist[i], d2[i])

        num = vals[nn] - vals[rows]
        den = vals[nnn] - vals[rows]
        block = np.zeros(rows.size, dtype=complex)
        ok = ~skip & (den != 0)
        nz = ok & (num != 0)
        block[nz] = num[nz] / den[nz]
        ratios[start:stop] = block
        keep[start:stop] = ok
    return CsrSet(ratios[keep], int(n - keep.sum()), n)


@dataclass(frozen=True, eq=False)
class Histogram1D:
    lower: float
    upper: float
    density: np.ndarray
    count: int

    @property
    def bins(self) -> int:
        return self.density.size

    @property
    def width(self) -> float:
        return (self.upper - self.lower) / self.bins

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, self.bins + 1)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])

    @property
    def mass(self) -> float:
        return float(np.sum(self.density) * self.width)

    def __eq__(self, other):
        if not isinstance(other, Histogram1D):
            return NotImplemented
        return (self.lower == other.lower and self.upper == other.upper
                and self.count == other.count and np.array_equal(self.density, other.density))


@dataclass(frozen=True, eq=False)
class Histogram2D:
    """Density on a square grid over [-1, 1]^2; ``density[ix, iy]``."""

    density: np.ndarray
    count: int

    @property
    def grid_n(self) -> int:
        return self.density.shape[0]

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.grid_n + 1)

    @property
    def cell_area(self) -> float:
        return (2.0 / self.grid_n) ** 2

    @property
    def mass(self) -> float:
        return float(np.sum(self.density) * self.cell_area)


def _histogram(values, bins, lo, hi, clip=True):
    if isinstance(bins, bool) or not isinstance(bins, (int, np.integer)) or bins < 1:
        raise ValidationError(f"bin count must be a positive integer, got {bins!r}")
    if clip:
        values = np.clip(values, lo, hi)
    counts, _ = np.histogram(values, bins=bins, range=(lo, hi))
    width = (hi - lo) / bins
    n = values.size
    density = counts / (n * width) if n else np.zeros(bins)
    return Histogram1D(lo, hi, density, int(n))


def _require(csr: CsrSet):
    if len(csr) == 0:
        raise ValidationError("no spacing ratios to summarize")


def marginals(csr: CsrSet, bins_r: int = DEFAULT_BINS_R,
              bins_theta: int = DEFAULT_BINS_THETA) -> tuple[Histogram1D, Histogram1D]:
    """Histogram estimates of the radial P_r on [0, 1] and angular P_theta on [-pi, pi).

    Sampling |z| and arg z directly already carries the Jacobian r, so plain
    normalized histograms estimate the marginals.
    """
    _require(csr)
    # |z| may exceed 1 by an ulp from rounding in the division
    h_r = _histogram(csr.r, bins_r, 0.0, 1.0)
    h_t = _histogram(csr.theta, bins_theta, -math.pi, math.pi)
    return h_r, h_t


def density2d(csr: CsrSet, grid_n: int = DEFAULT_GRID) -> Histogram2D:
    _require(csr)
    if isinstance(grid_n, bool) or not isinstance(grid_n, (int, np.integer)) or grid_n < 1:
        raise ValidationError(f"grid size must be a positive integer, got {grid_n!r}")
    x = np.clip(csr.ratios.real, -1.0, 1.0)
    y = np.clip(csr.ratios.imag, -1.0, 1.0)
    counts, _, _ = np.histogram2d(x, y, bins=grid_n, range=[[-1.0, 1.0], [-1.0, 1.0]])
    area = (2.0 / grid_n) ** 2
    return Histogram2D(counts / (len(csr) * area), len(csr))


@dataclass(frozen=True)
class Signatures:
    mean_r: float
    mean_cos_theta: float
    stderr_r: float
    stderr_cos_theta: float
    count: int

    @property
    def neg_mean_cos_theta(self) -> float:
        return -self.mean_cos_theta

    def to_json(self) -> dict:
        d = asdict(self)
        d["neg_mean_cos_theta"] = self.neg_mean_cos_theta
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Signatures":
        return cls(float(d["mean_r"]), float(d["mean_cos_theta"]), float(d["stderr_r"]),
                   float(d["stderr_cos_theta"]), int(d["count"]))


def _stderr(x):
    return float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0


def signatures(csr: CsrSet) -> Signatures:
    """Mean |z| and mean cos(arg z); arg 0 is taken as 0."""
    _require(csr)
    r = csr.r
    c = np.cos(np.angle(csr.ratios))
    return Signatures(float(np.mean(r)), float(np.mean(c)), _stderr(r), _stderr(c), len(csr))


def real_fraction(spectrum: Spectrum | np.ndarray, eps: float = 1e-10) -> float:
    """Fraction of eigenvalues with |Im| < eps * spectral radius."""
    vals = np.asarray(getattr(spectrum, "eigenvalues", spectrum), dtype=complex).ravel()
    if vals.size == 0:
        raise ValidationError("real_fraction needs a nonempty spectrum")
    radius = float(np.max(np.abs(vals)))
    if radius == 0.0:
        return 1.0
    return float(np.mean(np.abs(vals.imag) < eps * radius))


@dataclass(frozen=True, eq=False)
class ReferenceCurves:
    """Reference marginals evaluated on the same bins as the data histograms."""

    r: Histogram1D
    theta: Histogram1D
    signatures: Signatures | None = None
    from_cache: bool = False


def poisson_reference(bins: int = DEFAULT_BINS_R, bins_theta: int | None = None) -> ReferenceCurves:
    """2D Poisson marginals P_r = 2r and P_theta = 1/(2 pi) at the bin centres."""
    bins_theta = bins if bins_theta is None else bins_theta
    for b in (bins, bins_theta):
        if isinstance(b, bool) or not isinstance(b, (int, np.integer)) or b < 1:
            raise ValidationError(f"bin count must be a positive integer, got {b!r}")
    edges = np.linspace(0.0, 1.0, bins + 1)
    p_r = edges[:-1] + edges[1:]  # 2 * centre
    p_t = np.full(bins_theta, 1.0 / (2.0 * math.pi))
    sig = Signatures(2.0 / 3.0, 0.0, 0.0, 0.0, 0)
    return ReferenceCurves(Histogram1D(0.0, 1.0, p_r, 0), Histogram1D(-math.pi, math.pi, p_t, 0), sig)


# --- histogram CSV I/O (shared with the experiment outputs) -----------------

def write_marginal_csv(path, hist: Histogram1D, extra: dict[str, np.ndarray] | None = None):
    extra = extra or {}
    e = hist.edges
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_lo", "bin_hi", "density", *extra])
        for i in range(hist.bins):
            w.writerow([_fmt(e[i]), _fmt(e[i + 1]), _fmt(hist.density[i]),
                        *(_fmt(col[i]) for col in extra.values())])


def read_marginal_csv(path, count: int = 0) -> Histogram1D:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or rows[0][:3] != ["bin_lo", "bin_hi", "density"]:
        raise ValidationError(f"{path}: not a marginal CSV")
    body = np.array([[float(x) for x in row[:3]] for row in rows[1:]])
    return Histogram1D(float(body[0, 0]), float(body[-1, 1]), body[:, 2].copy(), count)


def write_density2d_csv(path, hist: Histogram2D):
    e = hist.edges
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_lo", "x_hi", "y_lo", "y_hi", "density"])
        for ix in range(hist.grid_n):
            for iy in range(hist.grid_n):
                w.writerow([_fmt(e[ix]), _fmt(e[ix + 1]), _fmt(e[iy]), _fmt(e[iy + 1]),
                            _fmt(hist.density[ix, iy])])


def _fmt(x) -> str:
    return format(float(x), ".17g")


# --- simulated GinUE reference ----------------------------------------------

def default_cache_dir() -> Path:
    env = os.environ.get("GINSPECTRA_CACHE")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "ginspectra"


def ginue_reference(N: int = GINUE_REF_N, count: int = GINUE_REF_COUNT,
                    rng: RngStream | int = GINUE_REF_SEED, *,
                    bins_r: int = DEFAULT_BINS_R, bins_theta: int = DEFAULT_BINS_THETA,
                    cache_dir=None, use_cache: bool = True, backend: str = "lapack",
                    progress=None) -> ReferenceCurves:
    """Pooled CSR marginals and signatures of ``count`` GinUE matrices of size N.

    Sample i (1-based) is drawn from stream ``(master_seed, i)``. Results are
    cached under ``cache_dir`` keyed by (N, count, master seed, binning).
    """
    if isinstance(N, bool) or not isinstance(N, (int, np.integer)) or N < 100:
        raise ValidationError(f"GinUE reference needs N >= 100, got {N!r}")
    if isinstance(count, bool) or not isinstance(count, (int, np.integer)) or count < 1:
        raise ValidationError(f"GinUE reference needs count >= 1, got {count!r}")
    master = rng.master_seed if isinstance(rng, RngStream) else int(rng)

    target = None
    if use_cache:
        root = Path(cache_dir) if cache_dir is not None else default_cache_dir()
        target = root / f"ginue_N{N}_count{count}_seed{master}_r{bins_r}_t{bins_theta}"
        cached = _load_reference(target)
        if cached is not None:
            return cached

    sets = []
    for i in range(1, count + 1):
        stream = RngStream(master, i)
        prov = {"model": "GinUE", "N": N, "master_seed": master, "index": i}
        spec = eigenvalues(sample_ginue(N, stream), backend=backend, provenance=prov)
        if not spec.certified:
            raise ConvergenceError(f"GinUE sample {i} failed residual certification ({spec.residual_bound:.3e})",
                                   prov)
        sets.append(complex_spacing_ratios(spec))
        if progress is not None:
            progress(i, count)
    pooled = CsrSet.pool(sets)
    h_r, h_t = marginals(pooled, bins_r, bins_theta)
    ref = ReferenceCurves(h_r, h_t, signatures(pooled))
    if target is not None:
        _store_reference(target, ref, {"N": N, "count": count, "master_seed": master})
    return ref


def _store_reference(target: Path, ref: ReferenceCurves, key: dict):
    target.mkdir(parents=True, exist_ok=True)
    write_marginal_csv(target / "marginal_r.csv", ref.r)
    write_marginal_csv(target / "marginal_theta.csv", ref.theta)
    payload = {"key": key, "signatures": ref.signatures.to_json(), "ratio_count": ref.r.count}
    # summary last: its presence marks a complete entry
    tmp = target / "summary.json.tmp"
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    tmp.replace(target / "summary.json")


def _load_reference(target: Path) -> ReferenceCurves | None:
    summary = target / "summary.json"
    if not summary.exists():
        return None
    payload = json.loads(summary.read_text())
    n = int(payload["ratio_count"])
    return ReferenceCurves(read_marginal_csv(target / "marginal_r.csv", n),
                           read_marginal_csv(target / "marginal_theta.csv", n),
                           Signatures.from_json(payload["signatures"]), from_cache=True)
