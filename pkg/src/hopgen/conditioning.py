"""Multiplicity algebra and the attention-entropy phase transition.

The entropy curve is evaluated with the stored patterns themselves as queries
(self-retrieval), so ``H(0)`` is exactly the Shannon entropy of ``r / sum(r)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax

from .sampler import MultiplicityVector

BETA_MIN, BETA_MAX, BETA_POINTS = 0.1, 500.0, 55


class FlatCurveError(RuntimeError):
    """The entropy curve shows no transition inside the grid."""


def f_eff(K_des: int, K_bg: int, rho: float) -> float:
    if K_des < 1 or K_bg < 0:
        raise ValueError("need K_des >= 1 and K_bg >= 0")
    return K_des * rho / (K_des * rho + K_bg)


def rho_for_target(f: float, K_des: int, K_bg: int) -> float:
    if not 0.0 < f < 1.0:
        raise ValueError(f"target fraction {f} outside (0, 1)")
    return f * K_bg / (K_des * (1.0 - f))


def k_eff(r) -> float:
    r = r.r if isinstance(r, MultiplicityVector) else np.asarray(r, dtype=float)
    return float(r.sum() ** 2 / np.sum(r**2))


def multiplicity_vector(K: int, designated, rho: float) -> MultiplicityVector:
    r = np.ones(K)
    r[list(designated)] = rho
    return MultiplicityVector(r)


def analytic_beta_star(d: int) -> float:
    """Published unweighted fit, 1.57 + 0.28 sqrt(d)."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return 1.57 + 0.28 * np.sqrt(d)


def beta_grid(n: int = BETA_POINTS, lo: float = BETA_MIN, hi: float = BETA_MAX) -> np.ndarray:
    if n < 3 or not 0 < lo < hi:
        raise ValueError("grid needs n >= 3 and 0 < lo < hi")
    return np.logspace(np.log10(lo), np.log10(hi), n)


def shannon_entropy_of_weights(r) -> float:
    r = r.r if isinstance(r, MultiplicityVector) else np.asarray(r, dtype=float)
    p = r / r.sum()
    return float(-np.sum(p * np.log(p)))


def per_query_entropy(memory, r: MultiplicityVector, beta: float, queries) -> np.ndarray:
    Q = np.asarray(queries, dtype=float)
    if Q.ndim == 1:
        Q = Q[:, None]
    logp = log_softmax(beta * (memory.T @ Q) + r.log_r[:, None], axis=0)
    return -np.sum(np.exp(logp) * logp, axis=0)


def attention_entropy(memory, r: MultiplicityVector, beta: float, queries) -> float:
    """Mean Shannon entropy of the weighted attention over the query columns."""
    Q = np.asarray(queries, dtype=float)
    if Q.size == 0:
        raise ValueError("no queries")
    return float(per_query_entropy(memory, r, beta, Q).mean())


@dataclass(frozen=True)
class EntropyCurve:
    beta: np.ndarray
    H: np.ndarray
    H0: float
    beta_star: float
    beta_star_refined: float
    K: int
    K_eff: float
    analytic_beta_star: float

    @property
    def H_norm(self) -> np.ndarray:
        return self.H / np.log(self.K)

    def to_tsv(self) -> str:
        log_k = float(np.log(self.K))
        meta = {
            "beta_star": self.beta_star,
            "beta_star_refined": self.beta_star_refined,
            "H0": self.H0,
            "H0_norm": self.H0 / log_k,
            "log_K_eff_norm": float(np.log(self.K_eff)) / log_k,
            "K_eff": self.K_eff,
            "analytic_beta_star": self.analytic_beta_star,
        }
        lines = [f"# {k}\t{float(v)!r}" for k, v in meta.items()]
        lines.append("beta\tH\tH_norm\tis_beta_star")
        for b, h in zip(self.beta.tolist(), self.H.tolist()):
            lines.append(f"{b!r}\t{h!r}\t{h / log_k!r}\t{int(b == self.beta_star)}")
        return "\n".join(lines) + "\n"


def _inflection(grid: np.ndarray, H: np.ndarray) -> tuple[int, float]:
    """Index of the steepest |dH/dlog beta| and a parabolic refinement of its location."""
    x = np.log(grid)
    slope = np.abs(np.gradient(H, x))  # central differences in the interior
    i = int(np.argmax(slope))  # first maximum, i.e. the smaller beta on ties
    refined = grid[i]
    if 0 < i < len(grid) - 1:
        y0, y1, y2 = slope[i - 1:i + 2]
        denom = y0 - 2 * y1 + y2
        if denom < 0:
            # vertex of the parabola through three points, assuming locally even log spacing
            shift = 0.5 * (y0 - y2) / denom
            refined = float(np.exp(x[i] + shift * 0.5 * (x[i + 1] - x[i - 1])))
    return i, float(refined)


def find_beta_star(memory, r: MultiplicityVector, grid=None, queries=None) -> EntropyCurve:
    grid = beta_grid() if grid is None else np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0) or grid[0] <= 0:
        raise ValueError("beta grid must be positive and strictly increasing")
    Q = memory if queries is None else queries
    H = np.array([attention_entropy(memory, r, b, Q) for b in grid])
    if np.ptp(H) <= 1e-12 * max(1.0, abs(H[0])):
        raise FlatCurveError("no transition in range")
    i, refined = _inflection(grid, H)
    d, K = memory.shape
    return EntropyCurve(
        beta=grid,
        H=H,
        H0=shannon_entropy_of_weights(r),
        beta_star=float(grid[i]),
        beta_star_refined=refined,
        K=K,
        K_eff=k_eff(r),
        analytic_beta_star=analytic_beta_star(d),
    )
