"""Table of 2 Psi_t(u*^m, u^m) against Phi_F on the circle for a range of cutoffs t."""

import argparse

from twistlab import characters as ch
from twistlab.homology import pairing


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=4096)
    ap.add_argument("--m", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--kmax", type=int, default=11)
    args = ap.parse_args()
    t, fm = ch.circle_untwisted_triple(args.N)
    g = ch.CutoffFunction()
    ts = ch.usable_schedule(t.D, tuple(2.0**-k for k in range(3, args.kmax + 1)))
    print("m,t,2Psi_t,Phi_F")
    for m in args.m:
        c = ch.circle_cycle(fm, m)
        phi = pairing(ch.chern_F(t, 1), c).real
        for tv in ts:
            print(f"{m},{tv:.6g},{2 * pairing(ch.psi_t(t, 1, g, tv), c).real:.10g},{phi:.10g}")


if __name__ == "__main__":
    main()
