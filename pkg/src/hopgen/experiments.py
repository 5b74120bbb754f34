"""Experiment pipelines: hard curation, rho and beta sweeps, scaling study, entropy curves.

Every pipeline follows the same shape. Prepare the cleaned family and its
functional split, build a list of independent conditions, run them (optionally
over a process pool) and write the results in condition order. Output files
depend only on the config, never on timing or worker count.
"""
from __future__ import annotations

import json
import subprocess
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .alignment import Alignment, AlignmentError, FunctionalSplit, clean_alignment, find_marker_column, \
    make_split, read_alignment
from .conditioning import EntropyCurve, FlatCurveError, find_beta_star, k_eff
from .encoding import EncodingError, PcaModel, build_memory, decode_state, fit_pca, one_hot_encode, \
    soft_marker_probability
from .metrics import composition_frequencies, fisher_separation, gap_decomposition, kl_divergence, \
    mean_designated_attention, pairwise_diversity, phenotype_fraction
from .sampler import MultiplicityVector, SamplerConfig, pooled_samples, run_chains

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

MODES = ("full", "hard_curated_designated", "hard_curated_background", "multiplicity")
EXPERIMENTS = ("hard_curation", "rho_sweep", "beta_sweep", "scaling", "entropy_curves")
METRIC_COLUMNS = ("rho", "f_eff", "a_des", "f_soft", "f_obs", "delta_attn", "delta_pca", "delta_argmax",
                  "delta", "diversity", "kl", "beta_star", "k_eff")
CONDITION_COLUMNS = ("memory", "size", "replicate", "beta_mult", "beta", "K", "d", "seed")

# spawn-key tags keeping the subsample stream apart from sampler noise
_SAMPLER_STREAM, _SUBSAMPLE_STREAM = 1, 2


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


class DataError(ValueError):
    """Input data unusable for the requested experiment."""


class NumericalError(RuntimeError):
    """A run produced non-finite values or no detectable transition."""


@dataclass(frozen=True)
class ExperimentConfig:
    input_path: str | None = None
    format: str | None = None  # stockholm | fasta; None detects from content
    experiment: str | None = None  # None infers from mode
    mode: str = "multiplicity"
    marker_position: int | None = None  # 1-based; None picks the column richest in marker_residues[0]
    marker_residues: str = "KR"
    rho_list: tuple[float, ...] = (1.0,)
    beta_override: float | None = None
    beta_multipliers: tuple[float, ...] = (1.0,)
    alpha: float = 0.01
    steps: int = 5000
    burn_in: int = 2000
    thin: int = 100
    chains: int = 30
    seed: int = 0
    init_sigma: float = 0.1
    replicates: int = 1
    subsample_sizes: tuple[int, ...] = ()
    include_background: bool = False
    variance_target: float = 0.95
    col_gap_max: float = 0.5
    seq_gap_max: float = 0.3
    n_pairs: int = 500
    workers: int = 1
    write_sequences: bool = True
    output_dir: str = "hopgen_out"

    def __post_init__(self):
        for name in ("rho_list", "beta_multipliers", "subsample_sizes"):
            v = getattr(self, name)
            object.__setattr__(self, name, tuple(v) if isinstance(v, (list, tuple)) else (v,))
        if self.experiment is None:
            object.__setattr__(self, "experiment", self._inferred_experiment())
        self.validate()

    def _inferred_experiment(self) -> str:
        if self.mode == "multiplicity":
            return "rho_sweep" if self.beta_multipliers == (1.0,) else "beta_sweep"
        return "scaling" if self.subsample_sizes else "hard_curation"

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.format not in (None, "stockholm", "fasta"):
            raise ConfigError(f"unknown format {self.format!r}")
        if not self.rho_list or any(not rho >= 1 for rho in self.rho_list):
            raise ConfigError("rho_list must be nonempty with entries >= 1")
        if not self.beta_multipliers or any(not m > 0 for m in self.beta_multipliers):
            raise ConfigError("beta multipliers must be positive")
        if self.beta_override is not None and not self.beta_override > 0:
            raise ConfigError("beta_override must be positive")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.workers < 1 or self.n_pairs < 1:
            raise ConfigError("workers and n_pairs must be >= 1")
        if self.marker_position is not None and self.marker_position < 1:
            raise ConfigError("marker_position is 1-based")
        if not self.marker_residues:
            raise ConfigError("marker_residues is empty")
        if not 0 < self.variance_target <= 1:
            raise ConfigError("variance_target must lie in (0, 1]")
        if self.experiment in ("rho_sweep", "beta_sweep", "entropy_curves") and self.mode != "multiplicity":
            raise ConfigError(f"{self.experiment} needs mode = multiplicity")
        if self.experiment == "hard_curation" and self.mode == "multiplicity":
            raise ConfigError("hard_curation needs a full or hard_curated_* mode")
        if self.experiment == "scaling":
            if self.mode != "hard_curated_designated":
                raise ConfigError("scaling needs mode = hard_curated_designated")
            if not self.subsample_sizes or min(self.subsample_sizes) < 2:
                raise ConfigError("scaling needs subsample_sizes, each >= 2")
        try:
            self.sampler(1.0, 0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def sampler(self, beta: float, seed: int) -> SamplerConfig:
        return SamplerConfig(alpha=self.alpha, beta=beta, steps=self.steps, burn_in=self.burn_in, thin=self.thin,
                             chains=self.chains, seed=seed, init_sigma=self.init_sigma)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        """Read a flat TOML file, or the config snapshot inside a run manifest."""
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        try:
            data = json.loads(text)["config"] if path.suffix == ".json" else tomllib.loads(text)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from None
        cfg = cls.from_dict(data)
        if cfg.input_path and not Path(cfg.input_path).is_absolute():
            cfg = replace(cfg, input_path=str((path.parent / cfg.input_path).resolve()))
        return cfg


@dataclass
class RunManifest:
    config: dict
    version: str
    git_commit: str | None
    started: str
    finished: str | None = None
    seeds: dict = field(default_factory=dict)
    derived: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    @classmethod
    def start(cls, config: ExperimentConfig) -> "RunManifest":
        return cls(config.to_dict(), __version__, _git_commit(), _now())

    def write(self, out_dir: Path) -> None:
        (out_dir / "manifest.json").write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _git_commit() -> str | None:
    try:
        res = subprocess.run(["git", "rev-parse", "HEAD"], cwd=Path(__file__).parent, capture_output=True,
                             text=True, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return None
    return res.stdout.strip() or None


def stream_seed(seed: int, *key: int) -> int:
    """Derive an integer seed for one named stream (sampler replicate, subsample draw, ...)."""
    return int(np.random.SeedSequence(entropy=seed, spawn_key=key).generate_state(1)[0])


def subsample_indices(seed: int, designated, size: int, replicate: int) -> np.ndarray:
    """Seeded subset of the designated indices, drawn from its own stream.

    The draw depends only on (seed, size, replicate), so changing the chain
    count or step budget never changes subset membership.
    """
    designated = np.asarray(designated)
    if size > designated.size:
        raise DataError(f"subsample size {size} exceeds K_des = {designated.size}")
    rng = np.random.default_rng(stream_seed(seed, _SUBSAMPLE_STREAM, size, replicate))
    return np.sort(rng.choice(designated, size=size, replace=False))


def replicate_seed(seed: int, replicate: int) -> int:
    # replicate 0 keeps the master seed so single-replicate runs match direct sampler calls
    return seed if replicate == 0 else stream_seed(seed, _SAMPLER_STREAM, replicate)


# data preparation

@dataclass(frozen=True)
class Family:
    """Cleaned alignment with its split and the full-family reference composition."""

    alignment: Alignment
    split: FunctionalSplit
    ref_freq: np.ndarray


def prepare_family(config: ExperimentConfig, alignment: Alignment | None = None) -> Family:
    try:
        if alignment is None:
            if not config.input_path:
                raise ConfigError("input_path is required")
            alignment = read_alignment(config.input_path, config.format)
        aln = clean_alignment(alignment, config.col_gap_max, config.seq_gap_max)
        pos = config.marker_position or find_marker_column(aln, config.marker_residues[0])
        if pos > aln.L:
            raise DataError(f"marker position {pos} beyond cleaned length {aln.L}")
        split = make_split(aln, pos, config.marker_residues)
    except (AlignmentError, OSError) as exc:
        raise DataError(str(exc)) from None
    return Family(aln, split, composition_frequencies(aln.rows))


@dataclass(frozen=True)
class Condition:
    """One independent generation job; everything a worker process needs."""

    memory_label: str
    rows: tuple[str, ...]  # stored sequences of this memory
    mask: tuple[bool, ...]  # designated membership within ``rows``
    rho: float
    beta_mult: float
    seed: int
    size: int = 0
    replicate: int = 0


def _fit(rows, variance_target) -> tuple[PcaModel, np.ndarray]:
    aln = Alignment(tuple(f"p{i}" for i in range(len(rows))), tuple(rows))
    try:
        model = fit_pca(one_hot_encode(aln), variance_target)
        return model, build_memory(aln, model)
    except EncodingError as exc:
        raise DataError(str(exc)) from None


def _run_condition(job: Condition, config: ExperimentConfig, marker_position: int, ref_freq: np.ndarray):
    model, memory = _fit(job.rows, config.variance_target)
    mask = np.array(job.mask, dtype=bool)
    r = MultiplicityVector(np.where(mask, job.rho, 1.0))
    try:
        curve = find_beta_star(memory, r)
    except FlatCurveError as exc:
        raise NumericalError(f"{job.memory_label}, rho={job.rho:g}: {exc}") from None
    beta = config.beta_override if config.beta_override is not None else job.beta_mult * curve.beta_star
    traces = run_chains(memory, mask, config.sampler(beta, job.seed), r)
    samples = pooled_samples(traces)
    if not np.all(np.isfinite(samples)):
        raise NumericalError(f"{job.memory_label}, rho={job.rho:g}: non-finite sampler state")

    seqs, soft_p = [], []
    for xi in samples:
        seq, soft = decode_state(model, xi)
        seqs.append(seq)
        soft_p.append(soft_marker_probability(soft, marker_position, config.marker_residues))
    f_eff_r = float(r.r[mask].sum() / r.r.sum())
    gap = gap_decomposition(f_eff_r, mean_designated_attention(traces, config.burn_in), float(np.mean(soft_p)),
                            phenotype_fraction(seqs, marker_position, config.marker_residues))
    row = {
        "memory": job.memory_label, "size": job.size, "replicate": job.replicate, "beta_mult": job.beta_mult,
        "beta": float(beta), "K": memory.shape[1], "d": memory.shape[0], "seed": job.seed,
        "rho": job.rho, "f_eff": gap.f_eff, "a_des": gap.a_des_mean, "f_soft": gap.f_soft_mean, "f_obs": gap.f_obs,
        "delta_attn": gap.delta_attn, "delta_pca": gap.delta_pca, "delta_argmax": gap.delta_argmax,
        "delta": gap.delta_total,
        "diversity": pairwise_diversity(seqs, config.n_pairs, job.seed),
        "kl": kl_divergence(composition_frequencies(seqs), ref_freq),
        "beta_star": curve.beta_star, "k_eff": k_eff(r),
    }
    return row, seqs


def _run_all(jobs: list[Condition], config: ExperimentConfig, family: Family):
    args = (config, family.split.marker_position, family.ref_freq)
    if config.workers <= 1 or len(jobs) <= 1:
        return [_run_condition(j, *args) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(config.workers, len(jobs))) as pool:
        # map keeps submission order, so output does not depend on scheduling
        return list(pool.map(_run_condition, jobs, *([a] * len(jobs) for a in args)))


def _group_rows(family: Family, group: str) -> tuple[tuple[str, ...], tuple[bool, ...]]:
    rows = family.alignment.rows
    des = set(family.split.designated)
    if group == "full":
        idx = range(len(rows))
    elif group == "designated":
        idx = family.split.designated
    else:
        idx = family.split.background
    picked = tuple(rows[i] for i in idx)
    if len(picked) < 2:
        raise DataError(f"{group} subset has {len(picked)} sequences; PCA needs at least 2")
    return picked, tuple(i in des for i in idx)


# output

def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_tsv(rows: list[dict]) -> str:
    cols = CONDITION_COLUMNS + METRIC_COLUMNS
    lines = ["\t".join(cols)]
    lines += ["\t".join(_fmt(row[c]) for c in cols) for row in rows]
    return "\n".join(lines) + "\n"


@dataclass
class ExperimentResult:
    rows: list[dict]
    manifest: RunManifest
    output_dir: Path | None
    sequences: list[list[str]] = field(default_factory=list)


def _derived(family: Family, config: ExperimentConfig) -> dict:
    aln, split = family.alignment, family.split
    out = {"K": aln.K, "L": aln.L, "K_des": split.K_des, "K_bg": split.K_bg,
           "marker_position": split.marker_position, "f_nat": split.K_des / aln.K}
    try:
        model, memory = _fit(aln.rows, config.variance_target)
    except DataError:
        return out
    out["d"] = model.d
    out["variance_retained"] = model.variance_retained
    if split.K_des >= 2 and split.K_bg >= 2:
        try:
            out["S"] = fisher_separation(memory, split).s_index
        except ValueError:
            pass
    try:
        out["beta_star_uniform"] = find_beta_star(memory, MultiplicityVector.uniform(aln.K)).beta_star
    except FlatCurveError:
        pass
    return out


def _execute(config: ExperimentConfig, alignment: Alignment | None, build_jobs, name: str,
             write: bool) -> ExperimentResult:
    out_dir = Path(config.output_dir) if write else None
    manifest = RunManifest.start(config)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        manifest.write(out_dir)
    family = prepare_family(config, alignment)
    jobs = build_jobs(family)
    manifest.seeds = {"master": config.seed, "conditions": [j.seed for j in jobs]}
    results = _run_all(jobs, config, family)
    rows = [r for r, _ in results]
    seqs = [s for _, s in results]
    manifest.derived = _derived(family, config)
    if out_dir is not None:
        outputs = [f"{name}.tsv", "results.json"]
        (out_dir / outputs[0]).write_text(rows_to_tsv(rows))
        (out_dir / outputs[1]).write_text(json.dumps({"experiment": name, "derived": manifest.derived,
                                                      "rows": rows}, indent=2, sort_keys=True) + "\n")
        if config.write_sequences:
            for i, (row, s) in enumerate(zip(rows, seqs)):
                fname = f"sequences_{i:03d}_{row['memory']}.fasta"
                body = "".join(f">gen_{j:05d} rho={row['rho']:g} seed={row['seed']}\n{q}\n" for j, q in enumerate(s))
                (out_dir / fname).write_text(body)
                outputs.append(fname)
        manifest.outputs = outputs
        manifest.finished = _now()
        manifest.write(out_dir)
    return ExperimentResult(rows, manifest, out_dir, seqs)


# pipelines

def run_hard_curation(config: ExperimentConfig, alignment: Alignment | None = None,
                      write: bool = True) -> ExperimentResult:
    """Generate from memories built on one group only (or the whole family in ``full`` mode)."""
    if config.mode == "multiplicity":
        raise ConfigError("hard curation needs a full or hard_curated_* mode")

    def jobs(family):
        groups = {"full": ["full"], "hard_curated_designated": ["designated"],
                  "hard_curated_background": ["background"]}[config.mode]
        if config.include_background and config.mode == "hard_curated_designated":
            groups.append("background")
        out = []
        for g in groups:
            rows, mask = _group_rows(family, g)
            for k in range(config.replicates):
                out.append(Condition(g, rows, mask, 1.0, config.beta_multipliers[0],
                                     replicate_seed(config.seed, k), len(rows), k))
        return out

    return _execute(config, alignment, jobs, "hard_curation", write)


def run_rho_sweep(config: ExperimentConfig, alignment: Alignment | None = None,
                  write: bool = True) -> ExperimentResult:
    """One full-family run per multiplicity ratio, each at its own beta*(r)."""
    if config.mode != "multiplicity":
        raise ConfigError("rho sweep needs mode = multiplicity")

    def jobs(family):
        rows, mask = _group_rows(family, "full")
        return [Condition("full", rows, mask, float(rho), 1.0, replicate_seed(config.seed, k), len(rows), k)
                for rho in config.rho_list for k in range(config.replicates)]

    return _execute(config, alignment, jobs, "rho_sweep", write)


def run_beta_sweep(config: ExperimentConfig, alignment: Alignment | None = None,
                   write: bool = True) -> ExperimentResult:
    """Runs at beta = multiplier * beta*(r) for every (rho, multiplier) pair."""
    if config.mode != "multiplicity":
        raise ConfigError("beta sweep needs mode = multiplicity")

    def jobs(family):
        rows, mask = _group_rows(family, "full")
        return [Condition("full", rows, mask, float(rho), float(m), replicate_seed(config.seed, k), len(rows), k)
                for rho in config.rho_list for m in config.beta_multipliers for k in range(config.replicates)]

    return _execute(config, alignment, jobs, "beta_sweep", write)


def run_scaling_study(config: ExperimentConfig, alignment: Alignment | None = None,
                      write: bool = True) -> ExperimentResult:
    """Hard curation on seeded random subsets of the designated group."""
    if config.mode != "hard_curated_designated" or not config.subsample_sizes:
        raise ConfigError("scaling study needs mode = hard_curated_designated and subsample_sizes")

    def jobs(family):
        des = np.array(family.split.designated)
        if max(config.subsample_sizes) > des.size:
            raise DataError(f"subsample size {max(config.subsample_sizes)} exceeds K_des = {des.size}")
        out = []
        for size in config.subsample_sizes:
            for k in range(config.replicates):
                idx = subsample_indices(config.seed, des, size, k)
                rows = tuple(family.alignment.rows[i] for i in idx)
                out.append(Condition("designated", rows, (True,) * size, 1.0, config.beta_multipliers[0],
                                     replicate_seed(config.seed, k), size, k))
        return out

    return _execute(config, alignment, jobs, "scaling", write)


def export_entropy_curves(config: ExperimentConfig, alignment: Alignment | None = None,
                          write: bool = True) -> dict[float, EntropyCurve]:
    """Entropy curve on the full-family memory for each rho; one TSV per rho."""
    out_dir = Path(config.output_dir) if write else None
    manifest = RunManifest.start(config)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        manifest.write(out_dir)
    family = prepare_family(config, alignment)
    _, memory = _fit(family.alignment.rows, config.variance_target)
    mask = family.split.mask()
    curves = {}
    for rho in config.rho_list:
        try:
            curves[float(rho)] = find_beta_star(memory, MultiplicityVector(np.where(mask, float(rho), 1.0)))
        except FlatCurveError as exc:
            raise NumericalError(f"rho={rho:g}: {exc}") from None
    if out_dir is not None:
        names = []
        for rho, curve in curves.items():
            names.append(f"entropy_rho{rho:g}.tsv")
            (out_dir / names[-1]).write_text(curve.to_tsv())
        manifest.derived = _derived(family, config)
        manifest.derived["beta_star"] = {f"{rho:g}": c.beta_star for rho, c in curves.items()}
        manifest.outputs = names
        manifest.finished = _now()
        manifest.write(out_dir)
    return curves


PIPELINES = {
    "hard_curation": run_hard_curation,
    "rho_sweep": run_rho_sweep,
    "beta_sweep": run_beta_sweep,
    "scaling": run_scaling_study,
    "entropy_curves": export_entropy_curves,
}


def run_experiment(config: ExperimentConfig, alignment: Alignment | None = None, write: bool = True):
    return PIPELINES[config.experiment](config, alignment, write)
