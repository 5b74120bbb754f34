"""Desk-scale synthetic protein families with a tunable functional split.

Columns come in four kinds:

* scaffold: one conserved residue,
* marker: fixed by group membership (``marker_residue`` for designated rows,
  one of ``background_residues`` otherwise),
* group: each row carries its group's consensus residue with probability
  ``group_fidelity``, otherwise a draw from a shared column profile,
* variable: the column consensus, replaced by a draw from the shared profile
  with probability ``1 - separation``.

``separation`` trades shared covariation (variable columns mutating
independently of the split) against group-specific covariation. At 0 the
variable columns are fully random and swamp the split; at 1 they are
conserved and the only variation left is tied to group membership.
"""
from __future__ import annotations

import numpy as np

from .alignment import AMINO_ACIDS, Alignment

_NON_MARKER = [a for a in AMINO_ACIDS if a not in "KR"]


def generate_synthetic_family(d_signal: int, K: int, K_des: int, L: int, marker_position: int,
                              seed: int, separation: float = 0.5, marker_residue: str = "K",
                              background_residues: str = "GAS", n_scaffold: int | None = None,
                              group_fidelity: float = 0.9, letters_per_column: int = 4) -> Alignment:
    """Build a gap-free K x L alignment whose first ``K_des`` rows are designated.

    ``d_signal`` is the number of group columns. Every column that is not
    scaffold, marker or group is a variable column.
    """
    if not 0 < K_des < K:
        raise ValueError("need 0 < K_des < K")
    if not 1 <= marker_position <= L:
        raise ValueError("marker position outside the alignment")
    if not 0.0 <= separation <= 1.0 or not 0.0 <= group_fidelity <= 1.0:
        raise ValueError("separation and group_fidelity must lie in [0, 1]")
    if n_scaffold is None:
        n_scaffold = L // 4
    n_variable = L - 1 - n_scaffold - d_signal
    if d_signal < 0 or n_variable < 0:
        raise ValueError("L too small for the requested scaffold and signal columns")

    rng = np.random.default_rng(seed)
    kinds = ["scaffold"] * n_scaffold + ["group"] * d_signal + ["variable"] * n_variable
    rng.shuffle(kinds)
    kinds.insert(marker_position - 1, "marker")

    grid = np.empty((K, L), dtype=int)
    is_des = np.arange(K) < K_des
    aa = {a: i for i, a in enumerate(AMINO_ACIDS)}
    for col, kind in enumerate(kinds):
        if kind == "marker":
            grid[is_des, col] = aa[marker_residue]
            grid[~is_des, col] = [aa[a] for a in rng.choice(list(background_residues), size=K - K_des)]
            continue
        if kind == "scaffold":
            grid[:, col] = aa[_NON_MARKER[rng.integers(len(_NON_MARKER))]]
            continue
        letters = rng.choice(len(AMINO_ACIDS), size=letters_per_column, replace=False)
        weights = rng.dirichlet(np.full(letters_per_column, 2.0))
        shared = letters[rng.choice(letters_per_column, size=K, p=weights)]
        if kind == "group":
            cons_des, cons_bg = rng.choice(len(AMINO_ACIDS), size=2, replace=False)
            follow = rng.random(K) < group_fidelity
            grid[:, col] = np.where(follow, np.where(is_des, cons_des, cons_bg), shared)
        else:
            mutate = rng.random(K) >= separation
            grid[:, col] = np.where(mutate, shared, letters[np.argmax(weights)])

    ids = tuple(f"{'des' if k < K_des else 'bg'}_{k:04d}" for k in range(K))
    rows = tuple("".join(AMINO_ACIDS[j] for j in row) for row in grid)
    return Alignment(ids, rows)
