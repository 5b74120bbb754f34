"""Acceptance criteria, each at its stated tolerance.

Every test records a single PASS/FAIL/SKIP line through the ``criterion``
fixture; the lines are printed in the terminal summary. Criterion 11 needs the
PF00014 seed alignment: set HOPGEN_PF00014 to its path or place it at
data/PF00014.sto.
"""
import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import spearmanr

from hopgen.alignment import Alignment, AMINO_ACIDS, clean_alignment, find_marker_column, make_split, \
    read_alignment
from hopgen.conditioning import analytic_beta_star, f_eff, find_beta_star, k_eff, multiplicity_vector, \
    rho_for_target
from hopgen.encoding import build_memory, decode_state, fit_pca, one_hot_encode, sequence_one_hot
from hopgen.experiments import ExperimentConfig, run_hard_curation, run_rho_sweep
from hopgen.metrics import fisher_separation, gap_decomposition, kl_divergence, pairwise_diversity, \
    permutation_test
from hopgen.sampler import MultiplicityVector, energy, score
from hopgen.synthetic import generate_synthetic_family

KUNITZ_K_DES, KUNITZ_K_BG = 32, 67
# rho -> published effective designated fraction for the Kunitz split
TABLE_F_EFF = {1: 0.323, 5: 0.705, 10: 0.827, 50: 0.962, 100: 0.980, 200: 0.990, 500: 0.996, 1000: 0.998}


def unit_memory(d, K, rng):
    X = rng.standard_normal((d, K))
    return X / np.linalg.norm(X, axis=0)


def desk_family(separation, seed=1):
    return generate_synthetic_family(0, 60, 20, 40, 3, seed=seed, separation=separation)


def desk_config(**kw):
    return ExperimentConfig(marker_position=3, marker_residues="K", **kw)


def test_criterion_01_gradient(criterion):
    with criterion(1, "score equals minus the finite-difference energy gradient") as note:
        rng = np.random.default_rng(2024)
        t0 = time.perf_counter()
        worst = 0.0
        for i in range(50):
            d, K = int(rng.integers(1, 11)), int(rng.integers(1, 21))
            X = unit_memory(d, K, rng)
            beta = (0.5, 5.0, 50.0)[i % 3]
            rho = (1.0, 50.0)[i % 2]
            r = multiplicity_vector(K, range(K // 2), rho)
            xi = rng.standard_normal(d) * 0.5
            h = 1e-5
            fd = np.array([(energy(xi + h * e, X, beta, r) - energy(xi - h * e, X, beta, r)) / (2 * h)
                           for e in np.eye(d)])
            worst = max(worst, float(np.abs(score(xi, X, beta, r) + fd).max()))
        elapsed = time.perf_counter() - t0
        note.append(f"max abs error {worst:.2e}, {elapsed:.2f} s")
        assert worst <= 1e-6
        assert elapsed < 1.0


def test_criterion_02_duplication(criterion):
    with criterion(2, "integer weights equal literal duplication") as note:
        rng = np.random.default_rng(7)
        t0 = time.perf_counter()
        worst = 0.0
        for _ in range(200):
            K, d = int(rng.integers(1, 11)), int(rng.integers(1, 9))
            X = unit_memory(d, K, rng)
            counts = rng.integers(1, 6, K)
            xi = rng.standard_normal(d)
            beta = float(rng.choice([0.5, 2.0, 10.0]))
            dup = np.repeat(X, counts, axis=1)
            a = score(xi, X, beta, MultiplicityVector(counts.astype(float)))
            b = score(xi, dup, beta, MultiplicityVector.uniform(dup.shape[1]))
            worst = max(worst, float(np.abs(a - b).max()))
        elapsed = time.perf_counter() - t0
        note.append(f"max abs difference {worst:.1e}, {elapsed:.2f} s")
        assert worst <= 1e-12
        assert elapsed < 1.0


def test_criterion_03_conditioning_algebra(criterion):
    with criterion(3, "f_eff table, rho round trip, K_eff") as note:
        trip = max(abs(rho_for_target(f_eff(KUNITZ_K_DES, KUNITZ_K_BG, rho), KUNITZ_K_DES, KUNITZ_K_BG) - rho) / rho
                   for rho in TABLE_F_EFF)
        ke = k_eff(multiplicity_vector(KUNITZ_K_DES + KUNITZ_K_BG, range(KUNITZ_K_DES), 1000))
        mismatched = {rho: round(f_eff(KUNITZ_K_DES, KUNITZ_K_BG, rho), 4) for rho, want in TABLE_F_EFF.items()
                      if abs(f_eff(KUNITZ_K_DES, KUNITZ_K_BG, rho) - want) > 5e-4}
        note.append(f"round trip rel err {trip:.1e}, K_eff {ke:.3f}, table rows off {mismatched or 'none'}")
        assert trip <= 1e-12
        assert abs(ke - 32.1) <= 0.05
        assert not mismatched, f"f_eff differs from the published column at rho {sorted(mismatched)}"


def test_criterion_04_attention_tracking(criterion):
    with criterion(4, "mean designated attention tracks f_eff") as note:
        t0 = time.perf_counter()
        rows = run_rho_sweep(desk_config(rho_list=[1, 10, 100]), desk_family(0.5), write=False).rows
        elapsed = time.perf_counter() - t0
        errs = {r["rho"]: abs(r["a_des"] - r["f_eff"]) for r in rows}
        note.append(f"d={rows[0]['d']}, |a_des - f_eff| " + ", ".join(f"rho {k:g}: {v:.4f}" for k, v in errs.items())
                    + f", {elapsed:.1f} s")
        assert 30 <= rows[0]["d"] <= 50
        assert max(errs.values()) <= 0.02
        assert elapsed < 30


def test_criterion_05_hard_curation_transfer(criterion):
    with criterion(5, "hard curation transfers the phenotype") as note:
        t0 = time.perf_counter()
        res = run_hard_curation(desk_config(mode="hard_curated_designated"), desk_family(0.5), write=False)
        elapsed = time.perf_counter() - t0
        n, f_obs = len(res.sequences[0]), res.rows[0]["f_obs"]
        note.append(f"{n} sequences, f_obs {f_obs}, {elapsed:.1f} s")
        assert n >= 500
        assert f_obs == 1.0
        assert elapsed < 30


def test_criterion_06_phase_transition(criterion):
    with criterion(6, "beta* follows 1.57 + 0.28 sqrt(d) and rises with rho") as note:
        t0 = time.perf_counter()
        rng = np.random.default_rng(6)
        law_err, not_monotone = {}, {}
        for d in (16, 36, 64, 100):
            X = unit_memory(d, 50, rng)
            stars = [find_beta_star(X, multiplicity_vector(50, range(17), rho)).beta_star for rho in (1, 10, 100, 1000)]
            if np.any(np.diff(stars) < 0):
                not_monotone[d] = [round(b, 2) for b in stars]
            law_err[d] = (stars[0], stars[0] / analytic_beta_star(d) - 1)
        elapsed = time.perf_counter() - t0
        note.append("beta*(rho=1) " + ", ".join(f"d={d}: {b:.2f} ({e:+.0%})" for d, (b, e) in law_err.items())
                    + f"; decreasing in rho at {not_monotone or 'no d'}; {elapsed:.1f} s")
        assert elapsed < 60
        assert not not_monotone, f"beta* decreases in rho at d = {sorted(not_monotone)}"
        off = [d for d, (_, e) in law_err.items() if abs(e) > 0.25]
        assert not off, f"beta* outside +-25% of the law at d = {off}"


def test_criterion_07_gap_identity(criterion):
    with criterion(7, "gap decomposition telescopes; published row gives 0.39") as note:
        rng = np.random.default_rng(7)
        exact = all(g.delta_attn + g.delta_pca + g.delta_argmax == g.delta_total
                    for g in (gap_decomposition(*rng.random(4)) for _ in range(10_000)))
        g = gap_decomposition(0.979, 0.981, 0.6, 0.587)  # f_soft cancels out of the total
        note.append(f"delta {g.delta_total:.4f}")
        assert exact
        assert abs(g.delta_total - 0.39) <= 0.005


def test_criterion_08_metric_oracles(criterion):
    with criterion(8, "diversity, KL and permutation test oracles") as note:
        from itertools import combinations

        rng = np.random.default_rng(8)
        div_ok = True
        for n in range(2, 7):
            seqs = ["".join(rng.choice(list("ACDEG"), 15)) for _ in range(n)]
            oracle = 1 - np.mean([np.mean([x == y for x, y in zip(a, b)]) for a, b in combinations(seqs, 2)])
            div_ok &= pairwise_diversity(seqs) == oracle
        P = rng.dirichlet(np.ones(20), size=1000)
        Q = rng.dirichlet(np.ones(20), size=1000)
        kl_self = max(abs(kl_divergence(p, p)) for p in P)
        kl_min = min(kl_divergence(p, q) for p, q in zip(P, Q))
        p = permutation_test([0, 0], [1, 1])
        note.append(f"|KL(p,p)| <= {kl_self:.1e}, min KL {kl_min:.3f}, p {p!r}")
        assert div_ok
        assert kl_self <= 1e-9 and kl_min >= 0
        assert p == 1 / 3


def test_criterion_09_lossless_round_trip(criterion):
    with criterion(9, "full-rank decode reproduces stored sequences") as note:
        rng = np.random.default_rng(9)
        # residues only: the argmax decoder never emits a gap
        rows = tuple("".join(rng.choice(list(AMINO_ACIDS), 10)) for _ in range(12))
        aln = Alignment(tuple(f"s{i}" for i in range(12)), rows)
        model = fit_pca(one_hot_encode(aln), variance_target=1.0)
        decoded = [decode_state(model, model.project(sequence_one_hot(s)))[0] for s in rows]
        note.append(f"d={model.d}, exact {sum(a == b for a, b in zip(decoded, rows))}/12")
        assert decoded == list(rows)


def test_criterion_10_separation_gap_trend(criterion):
    with criterion(10, "gap at rho=500 falls as separation rises") as note:
        t0 = time.perf_counter()
        S, gap = [], []
        for knob in (0.0, 0.8, 0.9, 0.95, 1.0):
            aln = desk_family(knob)
            model = fit_pca(one_hot_encode(aln))
            S.append(fisher_separation(build_memory(aln, model), make_split(aln, 3, "K")).s_index)
            gap.append(run_rho_sweep(desk_config(rho_list=[500]), aln, write=False).rows[0]["delta"])
        elapsed = time.perf_counter() - t0
        rho_s = spearmanr(S, gap).statistic
        note.append("S " + ", ".join(f"{s:.2f}" for s in S) + "; delta " + ", ".join(f"{g:.3f}" for g in gap)
                    + f"; spearman {rho_s:.2f}; {elapsed:.0f} s")
        assert rho_s <= -0.8
        assert elapsed < 300


def _pf00014_path():
    env = os.environ.get("HOPGEN_PF00014")
    candidates = [Path(env)] if env else []
    candidates.append(Path(__file__).resolve().parents[1] / "data" / "PF00014.sto")
    return next((p for p in candidates if p.is_file()), None)


def test_criterion_11_kunitz(criterion):
    with criterion(11, "Kunitz PF00014 reproduction") as note:
        path = _pf00014_path()
        if path is None:
            pytest.skip("PF00014 seed alignment not available (set HOPGEN_PF00014)")
        t0 = time.perf_counter()
        aln = clean_alignment(read_alignment(path))
        pos = find_marker_column(aln, "K")
        split = make_split(aln, pos, "KR")
        model = fit_pca(one_hot_encode(aln))
        X = build_memory(aln, model)
        S = fisher_separation(X, split).s_index
        b1 = find_beta_star(X, multiplicity_vector(aln.K, split.designated, 1)).beta_star
        b1000 = find_beta_star(X, multiplicity_vector(aln.K, split.designated, 1000)).beta_star
        full = run_hard_curation(ExperimentConfig(mode="full", marker_position=pos, marker_residues="KR"), aln,
                                 write=False).rows[0]
        elapsed = time.perf_counter() - t0
        f_nat = split.K_des / aln.K
        note.append(f"K={aln.K} L={aln.L} d={model.d} f_nat={f_nat:.3f} f_obs={full['f_obs']:.3f} "
                    f"beta*={b1:.2f}/{b1000:.2f} S={S:.3f} {elapsed:.0f} s")
        assert (aln.K, aln.L, model.d) == (99, 53, 80)
        assert abs(f_nat - 0.32) <= 0.01
        assert abs(full["f_obs"] - 0.41) <= 0.05
        assert abs(b1 - 4.4) <= 1.0 and abs(b1000 - 9.3) <= 1.5
        assert abs(S - 0.20) <= 0.03
        assert elapsed < 600
