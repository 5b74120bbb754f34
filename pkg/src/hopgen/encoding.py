"""One-hot encoding, PCA memory construction and decoding of sampler states."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .alignment import AMINO_ACIDS, Alignment

N_AA = len(AMINO_ACIDS)
_AA_INDEX = {a: i for i, a in enumerate(AMINO_ACIDS)}
FORMAT_VERSION = 1
_RANK_RTOL = 1e-12


class EncodingError(ValueError):
    pass


def one_hot_encode(aln: Alignment) -> np.ndarray:
    """Return the 20L x K indicator matrix; gaps are all-zero blocks."""
    X = np.zeros((N_AA * aln.L, aln.K))
    for k, row in enumerate(aln.rows):
        for pos, a in enumerate(row):
            j = _AA_INDEX.get(a)
            if j is not None:
                X[N_AA * pos + j, k] = 1.0
    return X


def sequence_one_hot(seq: str) -> np.ndarray:
    x = np.zeros(N_AA * len(seq))
    for pos, a in enumerate(seq):
        j = _AA_INDEX.get(a)
        if j is not None:
            x[N_AA * pos + j] = 1.0
    return x


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray  # (20L,)
    basis: np.ndarray  # (20L, d), orthonormal columns
    singular_values: np.ndarray  # (r,) all nonzero singular values
    d: int
    variance_retained: float
    L: int
    K: int

    @property
    def rank(self) -> int:
        return len(self.singular_values)

    def project(self, x: np.ndarray) -> np.ndarray:
        """Unnormalized coordinates W_d^T (x - mean); x may be a vector or 20L x n."""
        centered = x - (self.mean if x.ndim == 1 else self.mean[:, None])
        return self.basis.T @ centered

    def save(self, path) -> None:
        """Write ``<path>.json`` (header) and ``<path>.bin`` (little-endian float64)."""
        path = Path(path)
        header = {
            "format_version": FORMAT_VERSION,
            "alphabet": AMINO_ACIDS,
            "L": self.L,
            "K": self.K,
            "d": self.d,
            "rank": self.rank,
            "variance_retained": self.variance_retained,
            "arrays": ["mean", "basis", "singular_values"],
        }
        path.with_suffix(".json").write_text(json.dumps(header, indent=2) + "\n")
        blob = np.concatenate([self.mean, self.basis.ravel(order="C"), self.singular_values])
        path.with_suffix(".bin").write_bytes(blob.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "PcaModel":
        path = Path(path)
        header = json.loads(path.with_suffix(".json").read_text())
        if header.get("format_version") != FORMAT_VERSION:
            raise EncodingError(f"unsupported model format {header.get('format_version')}")
        if header["alphabet"] != AMINO_ACIDS:
            raise EncodingError("model was written with a different channel order")
        L, d, r = header["L"], header["d"], header["rank"]
        n = N_AA * L
        blob = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<f8")
        if blob.size != n + n * d + r:
            raise EncodingError("model binary size does not match header")
        return cls(
            mean=blob[:n].copy(),
            basis=blob[n:n + n * d].reshape(n, d).copy(),
            singular_values=blob[n + n * d:].copy(),
            d=d,
            variance_retained=header["variance_retained"],
            L=L,
            K=header["K"],
        )


def retained_dimension(singular_values: np.ndarray, variance_target: float) -> int:
    """Smallest d whose leading squared singular values reach the target share."""
    energy = np.cumsum(singular_values**2)
    share = energy / energy[-1]
    # guard against the final cumulative share landing a hair under 1.0
    return int(min(np.searchsorted(share, variance_target - 1e-12) + 1, len(singular_values)))


def fit_pca(X: np.ndarray, variance_target: float = 0.95) -> PcaModel:
    n, K = X.shape
    if K < 2:
        raise EncodingError("PCA needs at least two sequences")
    if n % N_AA:
        raise EncodingError("row count is not a multiple of the alphabet size")
    mean = X.mean(axis=1)
    U, s, _ = np.linalg.svd(X - mean[:, None], full_matrices=False)
    if s[0] == 0.0:
        raise EncodingError("all sequences are identical; centered matrix has rank 0")
    r = int(np.sum(s > _RANK_RTOL * s[0]))
    s = s[:r]
    d = retained_dimension(s, variance_target)
    retained = float(np.sum(s[:d] ** 2) / np.sum(s**2))
    return PcaModel(mean, U[:, :d].copy(), s.copy(), d, retained, n // N_AA, K)


def encode_pattern(model: PcaModel, x: np.ndarray, name: str = "<query>") -> np.ndarray:
    z = model.project(x)
    norm = np.linalg.norm(z)
    if norm == 0.0:
        raise EncodingError(f"sequence {name!r} projects to zero (equals the mean profile)")
    return z / norm


def build_memory(aln: Alignment, model: PcaModel) -> np.ndarray:
    """d x K matrix of unit-norm encoded sequences, columns in alignment order."""
    Z = model.project(one_hot_encode(aln))
    norms = np.linalg.norm(Z, axis=0)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise EncodingError(f"sequence {aln.ids[zero[0]]!r} projects to zero (equals the mean profile)")
    return Z / norms


def reconstruct(model: PcaModel, xi: np.ndarray) -> np.ndarray:
    """Soft one-hot reconstruction mean + W_d xi (xi may be d or d x n)."""
    rec = model.basis @ xi
    return rec + (model.mean if rec.ndim == 1 else model.mean[:, None])


def argmax_decode(soft: np.ndarray) -> str:
    blocks = soft.reshape(-1, N_AA)
    return "".join(AMINO_ACIDS[j] for j in np.argmax(blocks, axis=1))


def decode_state(model: PcaModel, xi: np.ndarray) -> tuple[str, np.ndarray]:
    """Decode one state to (sequence, soft reconstruction); argmax ties go to the lower channel."""
    soft = reconstruct(model, np.asarray(xi, dtype=float))
    return argmax_decode(soft), soft


def soft_marker_probability(soft: np.ndarray, marker_position: int, marker_residues) -> float:
    start = N_AA * (marker_position - 1)
    block = np.clip(soft[start:start + N_AA], 0.0, None)
    total = block.sum()
    if total == 0.0:
        return 0.0
    idx = [_AA_INDEX[a] for a in marker_residues]
    return float(block[idx].sum() / total)
