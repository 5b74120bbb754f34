"""Run every pipeline on one alignment (a synthetic family by default).

Outputs land in one subdirectory per pipeline under OUT. Pass --input to use a
real alignment, together with --marker-pos/--marker-res.

    python scripts/run_desk_suite.py results/desk --workers 4
"""
import argparse
from dataclasses import replace
from pathlib import Path

from hopgen.experiments import ExperimentConfig, run_experiment
from hopgen.synthetic import generate_synthetic_family


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("out")
    p.add_argument("--input")
    p.add_argument("--marker-pos", type=int, default=3)
    p.add_argument("--marker-res", default="K")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    a = p.parse_args()
    out = Path(a.out)
    aln = None if a.input else generate_synthetic_family(0, 60, 20, 40, 3, seed=1, separation=0.5)
    base = ExperimentConfig(input_path=a.input, marker_position=a.marker_pos, marker_residues=a.marker_res,
                            seed=a.seed, workers=a.workers)
    suite = {
        "rho_sweep": dict(rho_list=(1, 2, 5, 10, 20, 50, 100, 200, 500, 1000)),
        "beta_sweep": dict(rho_list=(10, 100, 200), beta_multipliers=(0.5, 1.0, 1.5, 2.0, 3.0)),
        "entropy_curves": dict(experiment="entropy_curves", rho_list=(1, 5, 20, 100, 1000)),
        "hard_curation": dict(mode="hard_curated_designated", include_background=True),
        "scaling": dict(mode="hard_curated_designated", subsample_sizes=(3, 5, 8, 10, 15, 20), replicates=3),
    }
    for name, changes in suite.items():
        cfg = replace(base, experiment=changes.pop("experiment", name), output_dir=str(out / name), **changes)
        print(f"running {name} -> {cfg.output_dir}")
        run_experiment(cfg, aln)


if __name__ == "__main__":
    main()
