"""Twisted vs untwisted commutator norms on the crossed circle across truncations."""

import argparse

from twistlab.suites import default_config, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", default="64,128,256,512,1024")
    ap.add_argument("--beta", type=float, default=0.3)
    args = ap.parse_args()
    cfg = default_config("twisted_boundedness", beta=args.beta)
    Ns = [int(v) for v in args.N.split(",")]
    for metric in ("twisted_norm", "untwisted_norm"):
        print(sweep(cfg, "N", Ns, metric))


if __name__ == "__main__":
    main()
