"""End-to-end acceptance checks at full ensemble sizes.

Each test covers one criterion and records a single pass/fail line, shown in
the terminal summary. The whole module takes roughly half an hour on one core.
"""

import math

import numpy as np
import pytest

from ginspectra.csr_stats import complex_spacing_ratios, poisson_reference, real_fraction
from ginspectra.eig import diagonalize, eigenvalues
from ginspectra.ensembles import CrossoverSpec, sample_ginoe
from ginspectra.harness.config import Bins, ExperimentConfig
from ginspectra.harness.runner import realize_params, run_experiment
from ginspectra.harness.tables import find_row, reproduce_tables
from ginspectra.spin_ops import ParamSource, SpinChainSpec, build_hamiltonian, rt_symmetry_check
from oracles import brute_force_csr, charpoly_roots, multiset_distance

pytestmark = pytest.mark.slow

GINUE_R, GINUE_COS = 0.7381, -0.2405
G = ParamSource.gaussian()


def crossover(model, alpha, N, size, seed, **kw):
    return ExperimentConfig(CrossoverSpec(model, alpha, N), size, seed, **kw)


def test_poisson_baseline(acceptance):
    summary = run_experiment(crossover("MM2", 0.0, 2000, 250, 101, bins=Bins(20, 50, 101)))
    sig = summary.signatures
    dev = float(np.max(np.abs(summary.marginal_r.density - poisson_reference(20).r.density)))
    ok = abs(sig.mean_r - 2 / 3) <= 0.005 and abs(sig.mean_cos_theta) <= 0.01 and dev < 0.03
    assert acceptance(1, "2D Poisson baseline", ok,
                      f"<r>={sig.mean_r:.4f} <cos>={sig.mean_cos_theta:+.4f} max|P_r-2r|={dev:.4f}")


def test_ginue_signatures(acceptance, ginue_default):
    sig = ginue_default.signatures
    ok = abs(sig.mean_r - GINUE_R) <= 0.005 and abs(sig.mean_cos_theta - GINUE_COS) <= 0.01
    assert acceptance(2, "GinUE signatures", ok,
                      f"<r>={sig.mean_r:.4f} <cos>={sig.mean_cos_theta:+.4f} from {sig.count} ratios")


def test_crossover_shape(acceptance):
    near = run_experiment(crossover("MM1", 0.001, 256, 1500, 303), keep_ratios=True)
    frac = float(np.mean(np.abs(near.ratios.imag) < 0.05))
    far = run_experiment(crossover("MM1", 1.0, 256, 1500, 304)).signatures
    ok = (frac >= 0.5 and abs(far.mean_r - GINUE_R) <= 0.01
          and abs(far.mean_cos_theta - GINUE_COS) <= 0.01)
    assert acceptance(3, "MM1 crossover shape", ok,
                      f"alpha=0.001 |Im z|<0.05 fraction={frac:.3f}; "
                      f"alpha=1 <r>={far.mean_r:.4f} <cos>={far.mean_cos_theta:+.4f}")


def _table_check(number, title, rows, acceptance, check_cos):
    results = reproduce_tables(1.0, rows=rows)
    ok = all(r.status == "ok" and r.pass_r and (r.pass_cos or not c) for r, c in zip(results, check_cos))
    detail = "; ".join(f"{r.row.label}: <r>={r.mean_r:.4f} vs {r.row.mean_r}, "
                       f"-<cos>={r.neg_cos:.4f} vs {r.row.neg_cos}" for r in results if r.status == "ok")
    assert acceptance(number, title, ok, detail or "error")


def test_table_one_row(acceptance):
    _table_check(4, "H1 L=6 gamma=0.01", [find_row("I", "gamma", 0.01)], acceptance, [True])


def test_table_three_rows(acceptance):
    rows = [find_row("III", "gamma", 2.1), find_row("III", "lambda", 1.2)]
    _table_check(5, "H2 L=8 gamma=2.1 and lambda=1.2", rows, acceptance, [False, True])


def test_table_four_row(acceptance):
    _table_check(6, "H3 L=8 gamma=2.2", [find_row("IV", "gamma", 2.2)], acceptance, [True])


def test_ginoe_real_fraction(acceptance):
    g = np.random.default_rng(707)
    fracs = [real_fraction(diagonalize(sample_ginoe(256, g))) for _ in range(200)]
    want = math.sqrt(2 / (256 * math.pi))
    rel = abs(np.mean(fracs) - want) / want
    assert acceptance(7, "GinOE real fraction", rel <= 0.15,
                      f"mean={np.mean(fracs):.4f} vs {want:.4f}, relative gap {rel:.3f}")


def test_symmetry_suite(acceptance):
    worst_h1, best_h2, worst_im, worst_re = 0.0, math.inf, 0.0, 0.0
    for L in (4, 6):
        specs = {"H0": SpinChainSpec("H0", L, lam=G), "H1": SpinChainSpec("H1", L, gamma=G, lam=G),
                 "H2": SpinChainSpec("H2", L, gamma=G, lam=G, lambda1=G), "Him": SpinChainSpec("Him", L, gamma=G)}
        for i in range(1, 101):
            H = {m: build_hamiltonian(s, realize_params(s, 800 + L, i)) for m, s in specs.items()}
            worst_h1 = max(worst_h1, rt_symmetry_check(H["H1"], L).defect)
            h2 = rt_symmetry_check(H["H2"], L)
            best_h2 = min(best_h2, h2.defect if not h2.passed else 0.0)
            for m in ("H0", "Him"):
                vals = diagonalize(H[m]).eigenvalues
                part = vals.imag if m == "H0" else vals.real
                bound = 1e-10 * np.linalg.norm(H[m], 2)
                gap = float(np.max(np.abs(part)) / bound)
                if m == "H0":
                    worst_im = max(worst_im, gap)
                else:
                    worst_re = max(worst_re, gap)
    ok = worst_h1 < 1e-12 and best_h2 > 0 and worst_im < 1 and worst_re < 1
    assert acceptance(8, "symmetry suite", ok,
                      f"max H1 defect={worst_h1:.1e}, min H2 defect={best_h2:.1e}, "
                      f"H0 |Im| and Him |Re| at {worst_im:.1e} and {worst_re:.1e} of 1e-10 ||H||")


def test_eigensolver_suite(acceptance):
    g = np.random.default_rng(909)
    worst = 0.0
    for k in range(1000):
        n = (8, 64, 256)[k % 3]
        A = g.standard_normal((n, n)) + 1j * g.standard_normal((n, n))
        worst = max(worst, eigenvalues(A).residual_bound)
    oracle_gap = 0.0
    for k in range(60):
        n = 2 + k % 7
        A = g.standard_normal((n, n)) + 1j * g.standard_normal((n, n))
        want = charpoly_roots(A)
        for backend in ("lapack", "native"):
            oracle_gap = max(oracle_gap, multiset_distance(eigenvalues(A, backend=backend).eigenvalues, want))
    ok = worst <= 1e-10 and oracle_gap <= 1e-8
    assert acceptance(9, "eigensolver suite", ok,
                      f"max residual={worst:.1e} over 1000 matrices, charpoly gap={oracle_gap:.1e}")


def _random_spectrum(g, k):
    n = int(g.integers(3, 51))
    if k % 2:
        r = np.sqrt(g.random(n))
        return r * np.exp(2j * math.pi * g.random(n))
    # coarse dyadic lattice inside the unit disc: exact ties and repeated levels
    pts = (g.integers(-4, 5, n) + 1j * g.integers(-4, 5, n)) / 8
    return pts


def test_csr_oracle_suite(acceptance):
    g = np.random.default_rng(1010)
    mismatches, outside, variant = 0, 0, 0
    for k in range(500):
        vals = _random_spectrum(g, k)
        csr = complex_spacing_ratios(vals)
        want, skipped = brute_force_csr(vals)
        # the two complex divisions may differ in the last bit; a wrong neighbour would not
        if (csr.skipped_degenerate != skipped or csr.ratios.shape != want.shape
                or not np.allclose(csr.ratios, want, rtol=0, atol=1e-14)):
            mismatches += 1
        outside += int(np.sum(np.abs(csr.ratios) > 1))
        # power-of-two scaling is exact for any input; dyadic shifts only keep lattice points exact
        shift = complex(*g.integers(-8, 9, 2)) / 16 if k % 2 == 0 else 0
        moved = complex_spacing_ratios(2.0 ** int(g.integers(-30, 31)) * vals + shift)
        if not np.array_equal(moved.ratios, csr.ratios) or moved.skipped_degenerate != csr.skipped_degenerate:
            variant += 1
        if k % 2:
            a, b = complex(*g.uniform(-3, 3, 2)), complex(*g.uniform(-5, 5, 2))
            affine = complex_spacing_ratios(a * vals + b).ratios
            if not np.allclose(np.sort_complex(affine), np.sort_complex(csr.ratios), rtol=0, atol=1e-12):
                variant += 1
    ok = mismatches == 0 and outside == 0 and variant == 0
    assert acceptance(10, "CSR oracle suite", ok,
                      f"{mismatches} oracle mismatches, {outside} ratios outside the disc, "
                      f"{variant} spectra not invariant, over 500 spectra")


def test_determinism(acceptance, tmp_path):
    spec = SpinChainSpec("H2", 6, gamma=G, lam=G, lambda1=ParamSource.fixed(0.5))
    dirs = []
    for workers in (1, 8):
        cfg = ExperimentConfig(spec, 200, 1111, outputs=tmp_path / f"w{workers}", reference="poisson",
                               workers=workers)
        dirs.append(run_experiment(cfg).output_dir)
    files = sorted(p.relative_to(dirs[0]) for p in dirs[0].rglob("*") if p.is_file())
    other = sorted(p.relative_to(dirs[1]) for p in dirs[1].rglob("*") if p.is_file())
    differ = [str(p) for p in files if (dirs[0] / p).read_bytes() != (dirs[1] / p).read_bytes()]
    ok = files == other and not differ and len(files) > 200
    assert acceptance(11, "determinism across worker counts", ok,
                      f"{len(files)} files compared, {len(differ)} differ")
