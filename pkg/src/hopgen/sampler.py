"""Multiplicity-weighted Hopfield energy, its score, and unadjusted Langevin chains.

The memory ``X`` is a d x K array with unit-norm columns. Multiplicities enter
only as additive ``log r`` biases on the attention logits.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class MultiplicityVector:
    r: np.ndarray
    log_r: np.ndarray = field(init=False, repr=False)
    bias: np.ndarray | None = field(init=False, repr=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r.ndim != 1 or r.size == 0:
            raise ValueError("multiplicities must be a nonempty 1-d vector")
        if not np.all(r > 0) or not np.all(np.isfinite(r)):
            raise ValueError("multiplicities must be positive and finite")
        object.__setattr__(self, "r", r)
        log_r = np.log(r)
        object.__setattr__(self, "log_r", log_r)
        # a constant bias cancels in the softmax; skipping it keeps uniform-r runs
        # bitwise identical to unweighted ones
        object.__setattr__(self, "bias", None if np.all(log_r == log_r[0]) else log_r)

    @classmethod
    def uniform(cls, K: int, value: float = 1.0) -> "MultiplicityVector":
        return cls(np.full(K, float(value)))

    def __len__(self):
        return self.r.size


def _logits(xi, memory, beta, r: MultiplicityVector) -> np.ndarray:
    logits = beta * (memory.T @ xi)
    bias = r.bias
    if bias is not None:
        logits = logits + (bias if logits.ndim == 1 else bias[:, None])
    return logits


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=0))
    return e / e.sum(axis=0)


def attention(xi, memory, beta, r: MultiplicityVector) -> np.ndarray:
    """softmax(beta X^T xi + log r); xi may be d or d x n (one column per query)."""
    return _softmax(_logits(xi, memory, beta, r))


def energy(xi, memory, beta, r: MultiplicityVector) -> float:
    """E_r(xi) = |xi|^2 / 2 - logsumexp(beta X^T xi + log r) / beta."""
    z = beta * (memory.T @ xi) + r.log_r
    m = z.max()
    return float(0.5 * xi @ xi - (m + np.log(np.exp(z - m).sum())) / beta)


def score(xi, memory, beta, r: MultiplicityVector) -> np.ndarray:
    """Gradient of log density, X softmax(beta X^T xi + log r) - xi."""
    return memory @ attention(xi, memory, beta, r) - xi


def ula_step(xi, memory, beta, r: MultiplicityVector, alpha, noise) -> np.ndarray:
    drift = memory @ attention(xi, memory, beta, r)
    return (1.0 - alpha) * xi + alpha * drift + np.sqrt(2.0 * alpha / beta) * noise


@dataclass(frozen=True)
class SamplerConfig:
    alpha: float = 0.01
    beta: float = 1.0
    steps: int = 5000
    burn_in: int = 2000
    thin: int = 100
    chains: int = 30
    seed: int = 0
    init_sigma: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.beta > 0.0:
            raise ValueError("beta must be positive")
        if not 0 <= self.burn_in < self.steps:
            raise ValueError("burn_in must satisfy 0 <= burn_in < steps")
        if self.thin < 1 or self.chains < 1:
            raise ValueError("thin and chains must be >= 1")
        if self.init_sigma < 0:
            raise ValueError("init_sigma must be nonnegative")

    @property
    def samples_per_chain(self) -> int:
        # states after updates burn_in, burn_in + thin, ..., <= steps
        return (self.steps - self.burn_in) // self.thin + 1


@dataclass
class ChainTrace:
    chain_id: int
    seed_used: tuple[int, int]
    samples: np.ndarray  # (n_samples, d)
    sample_steps: np.ndarray
    attention_designated: np.ndarray  # (steps,) mass on designated patterns at each update
    energies: np.ndarray | None = None


def chain_seed(seed: int, chain_id: int) -> np.random.SeedSequence:
    """Independent, individually reproducible stream for one chain."""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(int(chain_id),))


def run_chain(memory, designated_mask, config: SamplerConfig, r: MultiplicityVector,
              chain_id: int, record_energy: bool = False) -> ChainTrace:
    """Run one chain.

    Step t (1-based) applies one update to the current state; the attention
    recorded for step t is the one used in that update. States after update
    ``burn_in + j*thin`` are emitted, so the state at the burn-in boundary is
    included.
    """
    d, K = memory.shape
    rng = np.random.default_rng(chain_seed(config.seed, chain_id))
    start = int(rng.integers(K))
    xi = memory[:, start] + config.init_sigma * rng.standard_normal(d)

    mask = np.asarray(designated_mask, dtype=bool).astype(float)
    noise_scale = np.sqrt(2.0 * config.alpha / config.beta)
    # one block draw consumes the stream exactly like per-step draws would
    noise = noise_scale * rng.standard_normal((config.steps, d))
    alpha = config.alpha
    att_des = np.empty(config.steps)
    energies = np.empty(config.steps + 1) if record_energy else None
    samples, sample_steps = [], []
    if record_energy:
        energies[0] = energy(xi, memory, config.beta, r)

    for t in range(1, config.steps + 1):
        a = _softmax(_logits(xi, memory, config.beta, r))
        att_des[t - 1] = a @ mask
        xi = (1.0 - alpha) * xi + alpha * (memory @ a) + noise[t - 1]
        if record_energy:
            energies[t] = energy(xi, memory, config.beta, r)
        if t >= config.burn_in and (t - config.burn_in) % config.thin == 0:
            samples.append(xi.copy())
            sample_steps.append(t)

    return ChainTrace(
        chain_id=chain_id,
        seed_used=(int(config.seed), int(chain_id)),
        samples=np.array(samples).reshape(len(samples), d),
        sample_steps=np.array(sample_steps, dtype=int),
        attention_designated=att_des,
        energies=energies,
    )


def run_chains(memory, designated_mask, config: SamplerConfig, r: MultiplicityVector,
               workers: int = 1, record_energy: bool = False) -> list[ChainTrace]:
    """Run ``config.chains`` independent chains; output order is by chain id."""
    if len(r) != memory.shape[1]:
        raise ValueError("multiplicity vector length does not match memory size")

    def one(c):
        return run_chain(memory, designated_mask, config, r, c, record_energy)

    if workers <= 1:
        return [one(c) for c in range(config.chains)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(config.chains)))


def pooled_samples(traces: list[ChainTrace]) -> np.ndarray:
    return np.concatenate([t.samples for t in traces], axis=0)


def write_trace_tsv(trace: ChainTrace, path) -> None:
    """Per-step dump: step, energy (blank if not recorded), designated attention mass."""
    with open(path, "w") as fh:
        fh.write("step\tenergy\tattention_designated\n")
        for t, a in enumerate(trace.attention_designated, start=1):
            e = "" if trace.energies is None else repr(float(trace.energies[t]))
            fh.write(f"{t}\t{e}\t{float(a)!r}\n")
