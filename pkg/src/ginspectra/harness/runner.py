"""Ensemble execution: realize, build, diagonalize, compute CSR, pool.

Realization ``i`` (1-based) owns random stream ``(master_seed, i)``. Workers
return results which are reduced strictly in index order, so every output byte
is a function of the config alone, whatever the worker count.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from ..csr_stats import (CsrSet, Histogram1D, Histogram2D, ReferenceCurves, Signatures,
                         complex_spacing_ratios, density2d, ginue_reference, marginals,
                         poisson_reference, read_marginal_csv, real_fraction, signatures)
from ..eig import diagonalize
from ..ensembles import RngStream, sample_crossover
from ..errors import ConvergenceError
from ..spin_ops import PARAM_NAMES, Disorder, RealizedParams, SpinChainSpec, build_hamiltonian
from .config import ExperimentConfig
from .io import density_from_csv, emit_plot_data, write_json, write_spectrum

log = logging.getLogger(__name__)

REAL_EPS = 1e-10


class NumericalFailure(ConvergenceError):
    """An ensemble aborted because one realization could not be diagonalized or certified."""

    def __init__(self, msg, index=None, seed=None, provenance=None):
        super().__init__(msg, provenance)
        self.index = index
        self.seed = seed


def realize_params(spec: SpinChainSpec, master_seed: int, index: int) -> RealizedParams:
    """Draw the random parameters of realization ``index``.

    Fixed parameters are copied to every site. Gaussian ones get an independent
    standard normal per bond (gamma) or per site (fields), or a single shared
    draw when ``spec.disorder`` is ``uniform``. Draw order is gamma, lambda, lambda1.
    """
    stream = RngStream(master_seed, index)
    gen = stream.generator()
    L = spec.L
    values = {}
    for name in PARAM_NAMES:
        src = spec.source(name)
        if src is None:
            values[name] = (0.0,) * L
        elif not src.is_random:
            values[name] = (float(src.value),) * L
        elif spec.disorder is Disorder.SITE:
            values[name] = tuple(float(v) for v in gen.standard_normal(L))
        else:
            values[name] = (float(gen.standard_normal()),) * L
    return RealizedParams(values["gamma"], values["lambda"], values["lambda1"], seed_used=stream.seed)


@dataclass
class RealizationResult:
    index: int
    seed: int
    spectrum: object
    csr: CsrSet
    real_fraction: float
    params: dict | None = None

    def record(self) -> dict:
        sig = signatures(self.csr) if len(self.csr) else None
        rec = {
            "index": self.index,
            "seed": self.seed,
            "eigenvalue_count": len(self.spectrum),
            "ratio_count": len(self.csr),
            "skipped_degenerate": self.csr.skipped_degenerate,
            "real_fraction": self.real_fraction,
            "residual_bound": self.spectrum.residual_bound,
            "method": self.spectrum.method,
            "mean_r": sig.mean_r if sig else None,
            "mean_cos_theta": sig.mean_cos_theta if sig else None,
        }
        if self.params is not None:
            rec["params"] = self.params
        return rec


def build_matrix(config: ExperimentConfig, index: int):
    """Matrix of realization ``index`` plus its provenance record."""
    t = config.target
    if isinstance(t, SpinChainSpec):
        params = realize_params(t, config.master_seed, index)
        prov = {"model": t.model, "L": t.L, "master_seed": config.master_seed, "index": index,
                "seed": params.seed_used, "params": params.to_json()}
        return build_hamiltonian(t, params), prov
    stream = RngStream(config.master_seed, index)
    prov = {"model": t.model, "N": t.N, "alpha": t.alpha, "master_seed": config.master_seed,
            "index": index, "seed": stream.seed}
    return sample_crossover(t, stream), prov


def run_realization(config: ExperimentConfig, index: int) -> RealizationResult:
    with threadpool_limits(limits=1):
        H, prov = build_matrix(config, index)
        try:
            spec = diagonalize(H, provenance=prov)
        except ConvergenceError as exc:
            raise NumericalFailure(str(exc), index, prov["seed"], prov) from exc
        if not spec.certified:
            raise NumericalFailure(f"residual {spec.residual_bound:.3e} above certification threshold",
                                   index, prov["seed"], prov)
        csr = complex_spacing_ratios(spec)
    return RealizationResult(index, prov["seed"], spec, csr, real_fraction(spec, REAL_EPS),
                             prov.get("params"))


class _Task:
    # picklable callable for the process pool
    def __init__(self, config):
        self.config = config

    def __call__(self, index):
        return run_realization(self.config, index)


@dataclass(eq=False)
class EnsembleSummary:
    config: ExperimentConfig
    config_hash: str
    signatures: Signatures
    marginal_r: Histogram1D
    marginal_theta: Histogram1D
    density: Histogram2D
    realizations: list[dict]
    skipped_degenerate: int
    eigenvalue_count: int
    complete: bool = True
    output_dir: Path | None = None
    reference: dict = field(default_factory=dict)
    ratios: np.ndarray | None = None

    @property
    def ratio_count(self) -> int:
        return self.signatures.count

    def diagnostics(self) -> dict:
        rf = [r["real_fraction"] for r in self.realizations]
        res = [r["residual_bound"] for r in self.realizations]
        mr = [r["mean_r"] for r in self.realizations if r["mean_r"] is not None]
        mc = [r["mean_cos_theta"] for r in self.realizations if r["mean_cos_theta"] is not None]
        return {
            "real_fraction_mean": float(np.mean(rf)) if rf else None,
            "residual_bound_max": float(np.max(res)) if res else None,
            "per_realization_mean_r_std": float(np.std(mr, ddof=1)) if len(mr) > 1 else None,
            "per_realization_mean_cos_theta_std": float(np.std(mc, ddof=1)) if len(mc) > 1 else None,
        }

    def to_json(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "config": self.config.content_dict(),
            "complete": self.complete,
            "signatures": self.signatures.to_json(),
            "counts": {
                "realizations": len(self.realizations),
                "eigenvalues": self.eigenvalue_count,
                "ratios": self.ratio_count,
                "skipped_degenerate": self.skipped_degenerate,
            },
            "diagnostics": self.diagnostics(),
        }


def _output_dir(config: ExperimentConfig) -> Path | None:
    if config.outputs is None:
        return None
    return Path(config.outputs) / config.config_hash()


def load_summary(config: ExperimentConfig) -> EnsembleSummary | None:
    """Completed outputs of ``config``, or ``None`` if there are none."""
    out = _output_dir(config)
    if out is None or not (out / "summary.json").exists():
        return None
    payload = json.loads((out / "summary.json").read_text())
    if not payload.get("complete"):
        return None
    sig = Signatures.from_json(payload["signatures"])
    recs = [json.loads(line) for line in (out / "realizations.jsonl").read_text().splitlines() if line]
    counts = payload["counts"]
    return EnsembleSummary(config, payload["config_hash"], sig,
                           read_marginal_csv(out / "marginal_r.csv", sig.count),
                           read_marginal_csv(out / "marginal_theta.csv", sig.count),
                           density_from_csv(out / "density2d.csv"), recs,
                           counts["skipped_degenerate"], counts["eigenvalues"], True, out,
                           payload.get("reference", {}))


def _iter_results(config: ExperimentConfig, workers: int):
    indices = range(1, config.ensemble_size + 1)
    if workers <= 1:
        for i in indices:
            yield run_realization(config, i)
        return
    chunk = max(1, config.ensemble_size // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map yields in submission order regardless of completion order
        yield from pool.map(_Task(config), indices, chunksize=chunk)


def run_experiment(config: ExperimentConfig, *, force: bool = False, save_spectra: bool = True,
                   keep_ratios: bool = False, ginue_kwargs: dict | None = None,
                   progress=None) -> EnsembleSummary:
    """Run every realization of ``config`` and pool the ratios.

    With ``config.outputs`` set, results go to ``<outputs>/<config hash>/`` and a
    completed directory is reused unless ``force`` is true.
    """
    out = _output_dir(config)
    if out is not None and not force:
        done = load_summary(config)
        if done is not None:
            log.info("outputs for %s already complete; skipping", config.config_hash())
            return done

    spectra_dir = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "config.json", config.content_dict())
        if save_spectra:
            spectra_dir = out / "spectra"
            spectra_dir.mkdir(exist_ok=True)

    sets: list[CsrSet] = []
    records: list[dict] = []
    eig_count = 0
    try:
        for res in _iter_results(config, config.resolved_workers()):
            sets.append(res.csr)
            records.append(res.record())
            eig_count += len(res.spectrum)
            if spectra_dir is not None:
                write_spectrum(res.spectrum, spectra_dir / f"spectrum_{res.index:06d}.csv")
            if progress is not None:
                progress(res.index, config.ensemble_size)
    except NumericalFailure as exc:
        if out is not None:
            _write_records(out, records)
            write_json(out / "summary.json", {
                "config_hash": config.config_hash(), "config": config.content_dict(), "complete": False,
                "error": {"index": exc.index, "seed": exc.seed, "message": str(exc)},
                "counts": {"realizations": len(records)},
            })
        raise

    pooled = CsrSet.pool(sets)
    h_r, h_t = marginals(pooled, config.bins.r, config.bins.theta)
    summary = EnsembleSummary(config, config.config_hash(), signatures(pooled), h_r, h_t,
                              density2d(pooled, config.bins.grid), records, pooled.skipped_degenerate,
                              eig_count, True, out, ratios=pooled.ratios if keep_ratios else None)

    refs = resolve_references(config, ginue_kwargs)
    summary.reference = {k: v.signatures.to_json() for k, v in refs.items()}
    if out is not None:
        _write_records(out, records)
        emit_plot_data(summary, config.reference, out, poisson=refs.get("poisson"), ginue=refs.get("ginue"))
    return summary


def resolve_references(config: ExperimentConfig, ginue_kwargs: dict | None = None) -> dict[str, ReferenceCurves]:
    refs = {}
    if config.reference in ("poisson", "both"):
        refs["poisson"] = poisson_reference(config.bins.r, config.bins.theta)
    if config.reference in ("ginue", "both"):
        kw = dict(ginue_kwargs or {})
        kw.setdefault("bins_r", config.bins.r)
        kw.setdefault("bins_theta", config.bins.theta)
        refs["ginue"] = ginue_reference(**kw)
    return refs


def _write_records(out: Path, records: list[dict]):
    with open(out / "realizations.jsonl", "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")

