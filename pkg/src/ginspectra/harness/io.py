"""Spectrum files and plot-ready experiment outputs.

Spectrum file layout::

    # model=H2
    # seed=1234
    # params={"gamma": [...], "lambda": [...], "lambda1": [...]}
    # residual=3.1e-15
    # method=schur-lapack
    # provenance={...}
    re,im
    -1.2345678901234567,0.5
    ...

Values are written with 17 significant digits so a read returns the exact
doubles that were written.
"""

from __future__ import annotations

import cmath
import json
from pathlib import Path

import numpy as np

from ..csr_stats import (Histogram2D, ReferenceCurves, write_density2d_csv, write_marginal_csv)
from ..eig import Spectrum
from ..errors import SpectrumFormatError


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_spectrum(s: Spectrum, path) -> None:
    prov = s.provenance or {}
    lines = [
        f"# model={prov.get('model', '')}",
        f"# seed={prov.get('seed', '')}",
        f"# params={json.dumps(prov.get('params'), sort_keys=True)}",
        f"# residual={_fmt(s.residual_bound)}",
        f"# method={s.method}",
        f"# provenance={json.dumps(prov, sort_keys=True)}",
        "re,im",
    ]
    lines.extend(f"{_fmt(z.real)},{_fmt(z.imag)}" for z in s.eigenvalues)
    Path(path).write_text("\n".join(lines) + "\n")


def read_spectrum(path) -> Spectrum:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpectrumFormatError(exc.strerror or str(exc), path) from exc
    header: dict[str, str] = {}
    values = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, val = line[1:].strip().partition("=")
            if not sep:
                raise SpectrumFormatError(f"malformed header {raw!r}", path, lineno)
            header[key.strip()] = val
            continue
        if line.replace(" ", "") == "re,im" and not values:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise SpectrumFormatError(f"expected 're,im', got {raw!r}", path, lineno)
        try:
            z = complex(float(parts[0]), float(parts[1]))
        except ValueError:
            raise SpectrumFormatError(f"non-numeric row {raw!r}", path, lineno) from None
        if not cmath.isfinite(z):
            raise SpectrumFormatError(f"non-finite eigenvalue {raw!r}", path, lineno)
        values.append(z)
    if not values:
        raise SpectrumFormatError("no eigenvalues in file", path)
    try:
        residual = float(header.get("residual", "nan"))
        prov = json.loads(header["provenance"]) if "provenance" in header else _legacy_provenance(header)
    except (ValueError, json.JSONDecodeError) as exc:
        raise SpectrumFormatError(f"bad header value: {exc}", path) from None
    return Spectrum(np.array(values), residual, prov, method=header.get("method", "schur"))


def _legacy_provenance(header):
    prov = {}
    if header.get("model"):
        prov["model"] = header["model"]
    if header.get("seed"):
        prov["seed"] = int(header["seed"])
    params = json.loads(header["params"]) if header.get("params") else None
    if params is not None:
        prov["params"] = params
    return prov


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def emit_plot_data(summary, reference: str = "none", out_dir=None, *, poisson: ReferenceCurves | None = None,
                   ginue: ReferenceCurves | None = None) -> dict[str, Path]:
    """Write marginals, 2D density and signature summary of an ensemble.

    Reference columns are appended to the marginal CSVs when requested:
    ``reference_poisson`` for ``poisson``/``both``, ``reference_ginue`` for
    ``ginue``/``both`` (the GinUE curves must be supplied on the same binning).
    """
    out = Path(out_dir if out_dir is not None else summary.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        extra_r: dict[str, np.ndarray] = {}
        extra_t: dict[str, np.ndarray] = {}
        ref_sigs = {}
        if reference in ("poisson", "both"):
            if poisson is None:
                from ..csr_stats import poisson_reference
                poisson = poisson_reference(summary.marginal_r.bins, summary.marginal_theta.bins)
            extra_r["reference_poisson"] = poisson.r.density
            extra_t["reference_poisson"] = poisson.theta.density
            ref_sigs["poisson"] = poisson.signatures.to_json()
        if reference in ("ginue", "both"):
            if ginue is None:
                raise ValueError("GinUE reference requested but no curves supplied")
            if ginue.r.bins != summary.marginal_r.bins or ginue.theta.bins != summary.marginal_theta.bins:
                raise ValueError("GinUE reference binning differs from the data binning")
            extra_r["reference_ginue"] = ginue.r.density
            extra_t["reference_ginue"] = ginue.theta.density
            ref_sigs["ginue"] = ginue.signatures.to_json()

        paths = {
            "marginal_r": out / "marginal_r.csv",
            "marginal_theta": out / "marginal_theta.csv",
            "density2d": out / "density2d.csv",
            "summary": out / "summary.json",
        }
        write_marginal_csv(paths["marginal_r"], summary.marginal_r, extra_r)
        write_marginal_csv(paths["marginal_theta"], summary.marginal_theta, extra_t)
        write_density2d_csv(paths["density2d"], summary.density)
        payload = summary.to_json()
        payload["reference"] = ref_sigs
        write_json(paths["summary"], payload)
    except OSError as exc:
        raise OSError(exc.errno, f"could not write plot data: {exc.strerror}", exc.filename) from exc
    return paths


def density_from_csv(path) -> Histogram2D:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n = int(round(np.sqrt(rows.shape[0])))
    return Histogram2D(rows[:, 4].reshape(n, n), 0)
