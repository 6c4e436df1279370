"""Tests for ensemble execution, persisted outputs and spectrum files."""

import json
import math

import numpy as np
import pytest

from ginspectra.csr_stats import complex_spacing_ratios, poisson_reference
from ginspectra.eig import Spectrum
from ginspectra.errors import SpectrumFormatError
from ginspectra.harness import io as hio
from ginspectra.harness import runner
from ginspectra.harness.config import Bins, ExperimentConfig
from ginspectra.harness.io import emit_plot_data, read_spectrum, write_spectrum
from ginspectra.harness.runner import (NumericalFailure, load_summary, realize_params, run_experiment,
                                       run_realization)
from ginspectra.spin_ops import ParamSource, SpinChainSpec

G = ParamSource.gaussian()


def spin_config(tmp_path=None, **kw):
    spec = kw.pop("spec", SpinChainSpec("H1", 4, gamma=ParamSource.fixed(0.3), lam=G))
    return ExperimentConfig(spec, kw.pop("ensemble_size", 6), kw.pop("master_seed", 17),
                            outputs=tmp_path, **kw)


def matrix_config(tmp_path=None, **kw):
    raw = {"model": "MM2", "N": 40, "alpha": 0.3, "ensemble_size": 5, "master_seed": 3, **kw}
    cfg = ExperimentConfig.from_dict(raw)
    if tmp_path is not None:
        cfg = ExperimentConfig(cfg.target, cfg.ensemble_size, cfg.master_seed, cfg.bins, tmp_path,
                               cfg.reference, cfg.workers)
    return cfg


class TestRealizeParams:
    def test_fixed_ignores_seed(self):
        spec = SpinChainSpec("H2", 5, gamma=ParamSource.fixed(1.0), lam=ParamSource.fixed(-0.5),
                             lambda1=ParamSource.fixed(2.0))
        a = realize_params(spec, 1, 1)
        b = realize_params(spec, 999, 42)
        assert a == b
        assert a.gamma == (1.0,) * 5 and a.lam == (-0.5,) * 5 and a.lambda1 == (2.0,) * 5

    def test_same_seed_same_draws(self):
        spec = SpinChainSpec("H3", 6, gamma=G, lam=G, lambda1=ParamSource.fixed(0.1))
        assert realize_params(spec, 7, 3) == realize_params(spec, 7, 3)
        assert realize_params(spec, 7, 3) != realize_params(spec, 7, 4)

    def test_unused_parameters_zero(self):
        p = realize_params(SpinChainSpec("Him", 4, gamma=G), 1, 1)
        assert p.lam == (0.0,) * 4 and p.lambda1 == (0.0,) * 4

    def test_site_draws_distribution(self):
        spec = SpinChainSpec("H1", 2, gamma=G, lam=ParamSource.fixed(0))
        draws = np.array([realize_params(spec, 11, i).gamma for i in range(1, 50_001)]).ravel()
        assert draws.size == 100_000
        assert abs(draws.mean()) < 0.01
        assert abs(draws.var() - 1) < 0.02

    def test_uniform_disorder_shares_one_draw(self):
        spec = SpinChainSpec("H2", 6, gamma=G, lam=G, lambda1=G, disorder="uniform")
        p = realize_params(spec, 5, 1)
        for vals in (p.gamma, p.lam, p.lambda1):
            assert len(set(vals)) == 1
        assert len({p.gamma[0], p.lam[0], p.lambda1[0]}) == 3

    def test_site_disorder_varies(self):
        p = realize_params(SpinChainSpec("H1", 6, gamma=G, lam=G), 5, 1)
        assert len(set(p.gamma)) == 6 and len(set(p.lam)) == 6

    def test_seed_recorded(self):
        from ginspectra.ensembles import derive_seed
        p = realize_params(SpinChainSpec("H1", 4, gamma=G, lam=G), 5, 9)
        assert p.seed_used == derive_seed(5, 9)


class TestRunExperiment:
    def test_conservation_and_certificates(self):
        summary = run_experiment(spin_config())
        recs = summary.realizations
        assert [r["index"] for r in recs] == list(range(1, 7))
        assert summary.ratio_count == sum(r["ratio_count"] for r in recs)
        assert summary.ratio_count == sum(r["eigenvalue_count"] - r["skipped_degenerate"] for r in recs)
        assert all(r["residual_bound"] <= 1e-10 for r in recs)
        assert summary.eigenvalue_count == 6 * 16

    def test_pooled_signatures_match_recomputation(self):
        cfg = matrix_config()
        summary = run_experiment(cfg, keep_ratios=True)
        pooled = []
        for i in range(1, cfg.ensemble_size + 1):
            pooled.append(complex_spacing_ratios(run_realization(cfg, i).spectrum).ratios)
        z = np.concatenate(pooled)
        np.testing.assert_array_equal(summary.ratios, z)
        assert summary.signatures.mean_r == pytest.approx(np.abs(z).mean(), abs=1e-15)

    def test_spectrum_provenance(self):
        res = run_realization(spin_config(), 2)
        prov = res.spectrum.provenance
        assert prov["index"] == 2 and prov["model"] == "H1" and prov["master_seed"] == 17
        assert len(prov["params"]["gamma"]) == 4

    def test_outputs_written(self, tmp_path):
        cfg = spin_config(tmp_path)
        summary = run_experiment(cfg)
        out = tmp_path / cfg.config_hash()
        assert summary.output_dir == out
        for name in ("config.json", "summary.json", "realizations.jsonl", "marginal_r.csv",
                     "marginal_theta.csv", "density2d.csv"):
            assert (out / name).exists(), name
        spectra = sorted((out / "spectra").iterdir())
        assert [p.name for p in spectra] == [f"spectrum_{i:06d}.csv" for i in range(1, 7)]
        payload = json.loads((out / "summary.json").read_text())
        assert payload["complete"] and payload["config_hash"] == cfg.config_hash()
        lines = (out / "realizations.jsonl").read_text().splitlines()
        assert len(lines) == 6 and json.loads(lines[0])["params"]["seed"] == json.loads(lines[0])["seed"]

    def test_stored_spectra_reproduce_summary(self, tmp_path):
        cfg = spin_config(tmp_path)
        summary = run_experiment(cfg)
        files = sorted((tmp_path / cfg.config_hash() / "spectra").iterdir())
        from ginspectra.csr_stats import CsrSet, signatures
        pooled = CsrSet.pool(complex_spacing_ratios(read_spectrum(p)) for p in files)
        assert signatures(pooled) == summary.signatures

    def test_no_spectra_option(self, tmp_path):
        cfg = spin_config(tmp_path)
        run_experiment(cfg, save_spectra=False)
        assert not (tmp_path / cfg.config_hash() / "spectra").exists()

    def test_resume_is_noop(self, tmp_path):
        cfg = spin_config(tmp_path)
        first = run_experiment(cfg)
        calls = []
        again = run_experiment(cfg, progress=lambda i, n: calls.append(i))
        assert calls == []
        assert again.signatures == first.signatures
        assert again.marginal_r == first.marginal_r
        assert again.realizations == first.realizations
        forced = run_experiment(cfg, force=True, progress=lambda i, n: calls.append(i))
        assert calls == list(range(1, 7))
        assert forced.signatures == first.signatures
        assert load_summary(cfg) is not None

    def test_failure_marks_incomplete(self, tmp_path, monkeypatch):
        cfg = spin_config(tmp_path)
        real = runner.diagonalize

        def flaky(H, provenance=None, **kw):
            s = real(H, provenance=provenance, **kw)
            if provenance["index"] == 4:
                return Spectrum(s.eigenvalues, 1e-3, s.provenance, s.method)
            return s
        monkeypatch.setattr(runner, "diagonalize", flaky)
        with pytest.raises(NumericalFailure) as info:
            run_experiment(cfg)
        assert info.value.index == 4
        assert info.value.seed == realize_params(cfg.target, cfg.master_seed, 4).seed_used
        payload = json.loads((tmp_path / cfg.config_hash() / "summary.json").read_text())
        assert payload["complete"] is False
        assert payload["error"]["index"] == 4
        assert payload["counts"]["realizations"] == 3
        assert load_summary(cfg) is None

    def test_worker_count_does_not_change_bytes(self, tmp_path):
        a = run_experiment(matrix_config(tmp_path / "a", workers=1))
        b = run_experiment(matrix_config(tmp_path / "b", workers=3))
        assert a.config_hash == b.config_hash
        for name in ("summary.json", "realizations.jsonl", "marginal_r.csv", "density2d.csv"):
            assert (a.output_dir / name).read_bytes() == (b.output_dir / name).read_bytes()

    def test_poisson_reference_columns(self, tmp_path):
        cfg = matrix_config(tmp_path, reference="poisson", bins={"r": 10, "theta": 12, "grid": 5})
        summary = run_experiment(cfg)
        rows = (summary.output_dir / "marginal_r.csv").read_text().splitlines()
        assert rows[0] == "bin_lo,bin_hi,density,reference_poisson"
        assert len(rows) == 11
        for row in rows[1:]:
            lo, hi, _, ref = map(float, row.split(","))
            assert ref == pytest.approx(lo + hi, rel=1e-15)
        payload = json.loads((summary.output_dir / "summary.json").read_text())
        assert payload["reference"]["poisson"]["mean_r"] == pytest.approx(2 / 3)

    def test_ginue_reference_columns(self, tmp_path):
        cfg = matrix_config(tmp_path, reference="both", bins={"r": 8, "theta": 8, "grid": 5})
        summary = run_experiment(cfg, ginue_kwargs={"N": 120, "count": 1, "cache_dir": tmp_path / "cache"})
        header = (summary.output_dir / "marginal_theta.csv").read_text().splitlines()[0]
        assert header == "bin_lo,bin_hi,density,reference_poisson,reference_ginue"
        assert set(summary.reference) == {"poisson", "ginue"}


class TestEmitPlotData:
    @pytest.fixture
    def summary(self):
        cfg = ExperimentConfig(SpinChainSpec("H1", 4, gamma=G, lam=G), 3, 1, Bins(20, 30, 7))
        return run_experiment(cfg)

    def test_schema(self, summary, tmp_path):
        paths = emit_plot_data(summary, "none", tmp_path)
        assert len(paths["marginal_r"].read_text().splitlines()) == 21
        assert len(paths["marginal_theta"].read_text().splitlines()) == 31
        dens = paths["density2d"].read_text().splitlines()
        assert dens[0] == "x_lo,x_hi,y_lo,y_hi,density" and len(dens) == 50
        payload = json.loads(paths["summary"].read_text())
        for key in ("mean_r", "mean_cos_theta", "neg_mean_cos_theta", "stderr_r", "stderr_cos_theta", "count"):
            assert key in payload["signatures"]
        assert {"counts", "diagnostics", "config_hash"} <= set(payload)

    def test_density_round_trip(self, summary, tmp_path):
        paths = emit_plot_data(summary, "none", tmp_path)
        np.testing.assert_array_equal(hio.density_from_csv(paths["density2d"]).density, summary.density.density)

    def test_ginue_requires_curves(self, summary, tmp_path):
        with pytest.raises(ValueError, match="GinUE"):
            emit_plot_data(summary, "ginue", tmp_path)

    def test_binning_mismatch(self, summary, tmp_path):
        ref = poisson_reference(10, 10)
        with pytest.raises(ValueError, match="binning"):
            emit_plot_data(summary, "ginue", tmp_path, ginue=ref)

    def test_io_error_names_path(self, summary, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(OSError) as info:
            emit_plot_data(summary, "none", blocker / "sub")
        assert "file" in str(info.value)


class TestSpectrumFiles:
    def test_round_trip_exact(self, tmp_path, rng):
        vals = rng.standard_normal(50) * 10.0 ** rng.integers(-5, 5, 50) + 1j * rng.standard_normal(50)
        prov = {"model": "H2", "seed": 123456789012345, "index": 3,
                "params": {"gamma": [0.1, 0.2], "lambda": [1.0, -1.0], "lambda1": [0.0, 0.0], "seed": 1}}
        s = Spectrum(vals, 3.3e-15, prov, "schur-lapack")
        write_spectrum(s, tmp_path / "s.csv")
        back = read_spectrum(tmp_path / "s.csv")
        assert back == s

    def test_header_layout(self, tmp_path):
        write_spectrum(Spectrum(np.array([1 + 2j]), 0.0, {"model": "MM1", "seed": 5}), tmp_path / "s.csv")
        lines = (tmp_path / "s.csv").read_text().splitlines()
        assert lines[0] == "# model=MM1" and lines[1] == "# seed=5"
        assert lines[2].startswith("# params=") and lines[3].startswith("# residual=")
        assert lines[-2] == "re,im" and lines[-1] == "1,2"

    def test_non_numeric_row(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("# residual=0\nre,im\n1,2\n3,abc\n")
        with pytest.raises(SpectrumFormatError, match="line 4") as info:
            read_spectrum(p)
        assert info.value.line == 4
        assert "3,abc" in str(info.value)

    def test_wrong_column_count(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("re,im\n1,2,3\n")
        with pytest.raises(SpectrumFormatError, match="line 2"):
            read_spectrum(p)

    def test_empty_section(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("# model=H1\nre,im\n")
        with pytest.raises(SpectrumFormatError, match="no eigenvalues"):
            read_spectrum(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SpectrumFormatError):
            read_spectrum(tmp_path / "absent.csv")

    def test_minimal_header(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("# model=H1\n# seed=9\n# params=null\n# residual=1e-15\nre,im\n1,0\n0,1\n")
        s = read_spectrum(p)
        assert s.provenance == {"model": "H1", "seed": 9}
        assert s.residual_bound == 1e-15 and len(s) == 2

    def test_non_finite_value(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("re,im\nnan,0\n")
        with pytest.raises(SpectrumFormatError, match="line 2"):
            read_spectrum(p)


def test_diagnostics_recorded():
    summary = run_experiment(spin_config())
    diag = summary.diagnostics()
    assert 0 <= diag["real_fraction_mean"] <= 1
    assert diag["residual_bound_max"] <= 1e-10
    assert diag["per_realization_mean_r_std"] >= 0
    assert math.isfinite(summary.signatures.stderr_r)
