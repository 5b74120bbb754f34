"""Write a synthetic family with a known functional split to FASTA.

    python scripts/make_synthetic.py out.fasta --separation 0.9 --seed 1
"""
import argparse

from hopgen.alignment import write_fasta
from hopgen.synthetic import generate_synthetic_family


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("out")
    p.add_argument("--K", type=int, default=60)
    p.add_argument("--K-des", type=int, default=20)
    p.add_argument("--L", type=int, default=40)
    p.add_argument("--d-signal", type=int, default=0)
    p.add_argument("--marker-pos", type=int, default=3)
    p.add_argument("--separation", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=1)
    a = p.parse_args()
    aln = generate_synthetic_family(a.d_signal, a.K, a.K_des, a.L, a.marker_pos, seed=a.seed,
                                    separation=a.separation)
    write_fasta(aln, a.out)
    print(f"wrote {aln.K} x {aln.L} family to {a.out}; designated rows carry K at column {a.marker_pos}")


if __name__ == "__main__":
    main()
