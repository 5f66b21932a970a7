"""Finite-quotient slopes of G_0(lam, lam^(1+zeta)) on growing Heisenberg quotients."""
import argparse

from tpnsi import lattice as lt


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[12, 16, 20, 24, 32, 40])
    ap.add_argument("--zeta", type=float, nargs="+", default=[0.0, 0.25, 0.5])
    ap.add_argument("--c1", type=float, default=lt.WINDOW_C1)
    ap.add_argument("--c2", type=float, default=lt.WINDOW_C2)
    args = ap.parse_args()
    print("zeta,n,slope,target,abs_dev,points_used")
    for z in args.zeta:
        rep = lt.lattice_alpha_along_path(args.n, z, c1=args.c1, c2=args.c2)
        for p, dev in zip(rep.per_n, rep.deviations):
            used = sum(c > 1 for c in p.counts)
            print(f"{z:g},{p.n},{p.slope:.4f},{4 + 2 * z:g},{dev:.4f},{used}")
        print(f"{z:g},inf,{rep.extrapolated:.4f},{4 + 2 * z:g},{abs(rep.extrapolated - 4 - 2 * z):.4f},")


if __name__ == "__main__":
    main()
