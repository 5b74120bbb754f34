"""Phenotype, attention, diversity, composition and separation diagnostics."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from itertools import combinations
from math import comb

import numpy as np

from .alignment import AMINO_ACIDS, GAP, FunctionalSplit

KL_PSEUDOCOUNT = 1e-6
_AA_INDEX = {a: i for i, a in enumerate(AMINO_ACIDS)}


@dataclass(frozen=True)
class GapDecomposition:
    f_eff: float
    a_des_mean: float
    f_soft_mean: float
    f_obs: float
    delta_attn: float
    delta_pca: float
    delta_argmax: float
    delta_total: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SeparationReport:
    s_index: float
    mean_within: float
    mean_between: float
    sd_within: float
    sd_between: float
    n_within_pairs: int
    n_between_pairs: int


def phenotype_fraction(seqs, marker_position: int, marker_residues) -> float:
    if len(seqs) == 0:
        raise ValueError("no sequences")
    col = marker_position - 1
    if any(len(s) <= col for s in seqs):
        raise ValueError("a sequence is shorter than the marker position")
    residues = set(marker_residues)
    return sum(s[col] in residues for s in seqs) / len(seqs)


def mean_designated_attention(traces, burn_in: int) -> float:
    """Mean designated attention mass over steps after ``burn_in`` across all chains."""
    if not traces:
        raise ValueError("no traces")
    return float(np.mean(np.concatenate([t.attention_designated[burn_in:] for t in traces])))


def _identity(a: str, b: str) -> float:
    return sum(x == y for x, y in zip(a, b)) / len(a)


def pairwise_diversity(seqs, n_pairs: int = 500, seed: int = 0) -> float:
    """One minus mean pairwise identity; exact over all pairs when there are few."""
    n = len(seqs)
    if n < 2:
        raise ValueError("diversity needs at least two sequences")
    if len({len(s) for s in seqs}) != 1:
        raise ValueError("sequences differ in length")
    if comb(n, 2) <= n_pairs:
        pairs = combinations(range(n), 2)
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(n, size=n_pairs)
        j = (i + rng.integers(1, n, size=n_pairs)) % n  # uniform over j != i
        pairs = zip(i.tolist(), j.tolist())
    ids = [_identity(seqs[a], seqs[b]) for a, b in pairs]
    return 1.0 - float(np.mean(ids))


def composition_frequencies(seqs) -> np.ndarray:
    """Pooled residue frequencies in the fixed channel order, gaps excluded."""
    if len(seqs) == 0:
        raise ValueError("no sequences")
    counts = np.zeros(len(AMINO_ACIDS))
    for s in seqs:
        for a in s:
            if a != GAP:
                counts[_AA_INDEX[a]] += 1
    total = counts.sum()
    if total == 0:
        raise ValueError("input contains only gaps")
    return counts / total


def kl_divergence(gen, ref, pseudocount: float = KL_PSEUDOCOUNT) -> float:
    p = np.asarray(gen, dtype=float) + pseudocount
    q = np.asarray(ref, dtype=float) + pseudocount
    p /= p.sum()
    q /= q.sum()
    return float(np.sum(p * np.log(p / q)))


def fisher_separation(memory, split: FunctionalSplit) -> SeparationReport:
    des, bg = list(split.designated), list(split.background)
    if len(des) < 2 or len(bg) < 2:
        raise ValueError("each group needs at least two members")
    M = memory / np.linalg.norm(memory, axis=0)
    C = M.T @ M
    iu_d = np.triu_indices(len(des), 1)
    iu_b = np.triu_indices(len(bg), 1)
    within = np.concatenate([C[np.ix_(des, des)][iu_d], C[np.ix_(bg, bg)][iu_b]])
    between = C[np.ix_(des, bg)].ravel()
    mw, mb = float(within.mean()), float(between.mean())
    sw, sb = float(within.std()), float(between.std())
    if sw + sb == 0.0:
        raise ValueError("zero pooled spread; separation index undefined")
    return SeparationReport((mw - mb) / (0.5 * (sw + sb)), mw, mb, sw, sb, within.size, between.size)


def gap_decomposition(f_eff: float, a_des_mean: float, f_soft_mean: float, f_obs: float) -> GapDecomposition:
    for v in (f_eff, a_des_mean, f_soft_mean, f_obs):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"fraction {v} outside [0, 1]")
    d_attn = f_eff - a_des_mean
    d_pca = a_des_mean - f_soft_mean
    d_argmax = f_soft_mean - f_obs
    # summing the parts (rather than f_eff - f_obs) keeps the telescoping identity exact in floats
    return GapDecomposition(f_eff, a_des_mean, f_soft_mean, f_obs, d_attn, d_pca, d_argmax,
                            d_attn + d_pca + d_argmax)


def permutation_test(group_a, group_b, max_exhaustive: int = 200_000, n_resamples: int = 100_000,
                     seed: int = 0) -> float:
    """Two-sided permutation p-value for a difference in group means.

    Enumerates every relabelling when there are at most ``max_exhaustive`` of
    them, otherwise draws ``n_resamples`` seeded random relabellings. The
    observed labelling always counts, so p > 0.
    """
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both groups must be nonempty")
    pooled = np.concatenate([a, b])
    n, na = pooled.size, a.size
    total = pooled.sum()
    observed = abs(a.mean() - b.mean())
    # relative slack so float noise does not split exact ties
    tol = 1e-12 * max(1.0, np.abs(pooled).max())

    def stat(sum_a):
        return np.abs(sum_a / na - (total - sum_a) / (n - na))

    if comb(n, na) <= max_exhaustive:
        sums = np.array([pooled[list(idx)].sum() for idx in combinations(range(n), na)])
        return float(np.mean(stat(sums) >= observed - tol))
    rng = np.random.default_rng(seed)
    sums = np.array([pooled[rng.permutation(n)[:na]].sum() for _ in range(n_resamples)])
    hits = np.sum(stat(sums) >= observed - tol)
    return float((hits + 1) / (n_resamples + 1))
