"""Figures from the TSV outputs (needs matplotlib; the engine itself never plots).

    python scripts/plot_results.py results/desk figures/
"""
import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_tsv(path):
    with open(path) as fh:
        rows = csv.DictReader((ln for ln in fh if not ln.startswith("#")), delimiter="\t")
        return [{k: _num(v) for k, v in r.items()} for r in rows]


def _num(v):
    try:
        return float(v)
    except ValueError:
        return v


def plot_rho_sweep(rows, out):
    rho = [r["rho"] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for col, label in (("f_eff", "f_eff"), ("a_des", "mean designated attention"), ("f_soft", "soft marker"),
                       ("f_obs", "decoded phenotype")):
        ax.plot(rho, [r[col] for r in rows], marker="o", label=label)
    ax.set_xscale("log")
    ax.set_xlabel("multiplicity ratio rho")
    ax.set_ylabel("designated fraction")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def plot_entropy(directory, out):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for path in sorted(directory.glob("entropy_rho*.tsv"), key=lambda p: float(p.stem[len("entropy_rho"):])):
        rows = read_tsv(path)
        ax.plot([r["beta"] for r in rows], [r["H_norm"] for r in rows], label=path.stem[len("entropy_"):])
        star = [r for r in rows if r["is_beta_star"] == 1]
        ax.plot([s["beta"] for s in star], [s["H_norm"] for s in star], "k|", markersize=12)
    ax.set_xscale("log")
    ax.set_xlabel("beta")
    ax.set_ylabel("H / log K")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def plot_scaling(rows, out):
    sizes = sorted({r["size"] for r in rows})
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for col in ("diversity", "kl", "f_obs"):
        ax.plot(sizes, [sum(r[col] for r in rows if r["size"] == s) / sum(r["size"] == s for r in rows)
                        for s in sizes], marker="o", label=col)
    ax.set_xlabel("designated subset size")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("results")
    p.add_argument("figures")
    a = p.parse_args()
    res, figs = Path(a.results), Path(a.figures)
    figs.mkdir(parents=True, exist_ok=True)
    if (res / "rho_sweep" / "rho_sweep.tsv").exists():
        plot_rho_sweep(read_tsv(res / "rho_sweep" / "rho_sweep.tsv"), figs / "rho_sweep.png")
    if (res / "entropy_curves").is_dir():
        plot_entropy(res / "entropy_curves", figs / "entropy_curves.png")
    if (res / "scaling" / "scaling.tsv").exists():
        plot_scaling(read_tsv(res / "scaling" / "scaling.tsv"), figs / "scaling.png")
    print(f"figures in {figs}")


if __name__ == "__main__":
    main()
