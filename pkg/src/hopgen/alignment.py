"""Alignment ingestion: Stockholm/FASTA parsing, gap cleaning, functional splits.

Residues are stored as uppercase characters; every gap (``-``, ``.``) and every
ambiguous code (B, J, O, U, X, Z) is stored as ``GAP``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

GAP = "-"
AMINO_ACIDS = "ARNDCQEGHILKMFPSTWYV"
AMBIGUOUS = frozenset("BJOUXZ")
_GAP_SYMBOLS = frozenset("-.")


class AlignmentError(ValueError):
    """Raised for malformed or unusable alignment input."""


def _normalize(seq: str, name: str) -> str:
    out = []
    for ch in seq.upper():
        if ch in _GAP_SYMBOLS or ch in AMBIGUOUS:
            out.append(GAP)
        elif ch in AMINO_ACIDS:
            out.append(ch)
        else:
            raise AlignmentError(f"sequence {name!r}: symbol {ch!r} is not in the residue alphabet")
    return "".join(out)


@dataclass(frozen=True)
class Alignment:
    ids: tuple[str, ...]
    rows: tuple[str, ...]

    def __post_init__(self):
        if len(self.rows) == 0:
            raise AlignmentError("alignment has no sequences")
        if len(self.ids) != len(self.rows):
            raise AlignmentError("ids and rows differ in length")
        if len(set(self.ids)) != len(self.ids):
            raise AlignmentError("duplicate sequence ids")
        lengths = {len(r) for r in self.rows}
        if len(lengths) != 1:
            raise AlignmentError(f"ragged alignment, row lengths {sorted(lengths)}")
        if lengths.pop() < 1:
            raise AlignmentError("alignment has zero columns")
        allowed = set(AMINO_ACIDS) | {GAP}
        for name, row in zip(self.ids, self.rows):
            bad = set(row) - allowed
            if bad:
                raise AlignmentError(f"sequence {name!r} has symbols {sorted(bad)}")

    @property
    def K(self) -> int:
        return len(self.rows)

    @property
    def L(self) -> int:
        return len(self.rows[0])

    def as_array(self) -> np.ndarray:
        """K x L array of single-character strings."""
        return np.array([list(r) for r in self.rows], dtype="<U1")

    def subset(self, indices) -> "Alignment":
        idx = list(indices)
        return Alignment(tuple(self.ids[i] for i in idx), tuple(self.rows[i] for i in idx))

    def to_fasta(self) -> str:
        return "".join(f">{name}\n{row}\n" for name, row in zip(self.ids, self.rows))


@dataclass(frozen=True)
class FunctionalSplit:
    """Binary designated/background partition defined by one marker column.

    ``marker_position`` is 1-based, matching how alignment columns are
    usually quoted.
    """

    marker_position: int
    marker_residues: frozenset[str]
    designated: tuple[int, ...]
    K: int
    background: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        des = set(self.designated)
        object.__setattr__(self, "background", tuple(i for i in range(self.K) if i not in des))

    @property
    def K_des(self) -> int:
        return len(self.designated)

    @property
    def K_bg(self) -> int:
        return self.K - self.K_des

    @property
    def usable(self) -> bool:
        """Both groups nonempty, as multiplicity conditioning needs."""
        return self.K_des >= 1 and self.K_bg >= 1

    def mask(self) -> np.ndarray:
        m = np.zeros(self.K, dtype=bool)
        m[list(self.designated)] = True
        return m


def parse_stockholm(text: str) -> Alignment:
    lines = text.splitlines()
    first = next((ln for ln in lines if ln.strip()), "")
    if not first.startswith("# STOCKHOLM"):
        raise AlignmentError("missing '# STOCKHOLM 1.0' header")

    seqs: dict[str, list[str]] = {}
    seen_in_block: set[str] = set()
    for ln in lines[1:]:
        s = ln.strip()
        if not s:
            seen_in_block = set()
            continue
        if s == "//":
            break
        if s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 2:
            raise AlignmentError(f"malformed sequence line: {ln!r}")
        name, chunk = parts
        if name in seen_in_block:
            # same id twice within one block: must carry identical residues
            if seqs[name][-1] != chunk:
                raise AlignmentError(f"duplicate id {name!r} with conflicting residues")
            continue
        seen_in_block.add(name)
        seqs.setdefault(name, []).append(chunk)

    if not seqs:
        raise AlignmentError("no sequences in Stockholm document")
    ids = tuple(seqs)
    rows = tuple(_normalize("".join(seqs[i]), i) for i in ids)
    return Alignment(ids, rows)


def parse_fasta(text: str) -> Alignment:
    ids: list[str] = []
    chunks: list[list[str]] = []
    for ln in text.splitlines():
        s = ln.strip()
        if not s:
            continue
        if s.startswith(">"):
            ids.append(s[1:].split()[0] if s[1:].strip() else f"seq{len(ids) + 1}")
            chunks.append([])
        else:
            if not chunks:
                raise AlignmentError("FASTA sequence data before the first header")
            chunks[-1].append(s)
    if not ids:
        raise AlignmentError("empty FASTA input")
    rows = tuple(_normalize("".join(c), name) for name, c in zip(ids, chunks))
    if len({len(r) for r in rows}) != 1:
        raise AlignmentError("FASTA records have unequal lengths")
    return Alignment(tuple(ids), rows)


def read_alignment(path, fmt: str | None = None) -> Alignment:
    path = Path(path)
    text = path.read_text()
    if fmt is None:
        fmt = "stockholm" if text.lstrip().startswith("# STOCKHOLM") else "fasta"
    if fmt in ("stockholm", "sto"):
        return parse_stockholm(text)
    if fmt in ("fasta", "fa"):
        return parse_fasta(text)
    raise AlignmentError(f"unknown alignment format {fmt!r}")


def write_fasta(aln: Alignment, path) -> None:
    Path(path).write_text(aln.to_fasta())


def clean_alignment(aln: Alignment, col_gap_max: float = 0.5, seq_gap_max: float = 0.3) -> Alignment:
    """Drop gappy columns, then gappy sequences (strict thresholds, order kept)."""
    gaps = aln.as_array() == GAP
    keep_cols = gaps.mean(axis=0) <= col_gap_max
    if not keep_cols.any():
        raise AlignmentError("column filter removed every column")
    keep_rows = gaps[:, keep_cols].mean(axis=1) <= seq_gap_max
    if not keep_rows.any():
        raise AlignmentError("sequence filter removed every sequence")
    cols = np.flatnonzero(keep_cols)
    ids = tuple(i for i, k in zip(aln.ids, keep_rows) if k)
    rows = tuple("".join(r[c] for c in cols) for r, k in zip(aln.rows, keep_rows) if k)
    return Alignment(ids, rows)


def make_split(aln: Alignment, marker_position: int, marker_residues) -> FunctionalSplit:
    residues = frozenset(str(a).upper() for a in marker_residues)
    if not residues:
        raise AlignmentError("marker residue set is empty")
    if not residues <= set(AMINO_ACIDS):
        raise AlignmentError(f"marker residues {sorted(residues - set(AMINO_ACIDS))} not amino acids")
    if not 1 <= marker_position <= aln.L:
        raise AlignmentError(f"marker position {marker_position} outside [1, {aln.L}]")
    col = marker_position - 1
    designated = tuple(k for k, row in enumerate(aln.rows) if row[col] in residues)
    return FunctionalSplit(marker_position, residues, designated, aln.K)


def find_marker_column(aln: Alignment, target_residue: str) -> int:
    """1-based column with the highest frequency of ``target_residue``."""
    freq = (aln.as_array() == target_residue.upper()).mean(axis=0)
    if not freq.any():
        raise AlignmentError(f"residue {target_residue!r} absent from every column")
    return int(np.argmax(freq)) + 1  # argmax returns the first maximum
