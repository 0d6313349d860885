"""Optimal rate and coding gain as the block length grows."""
import argparse

from aoi_mds.analysis import coding_gain
from aoi_mds.channel import BASELINE_CHANNEL
from aoi_mds.io import csv_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--K", type=int, default=10000)
    ap.add_argument("--ns", type=int, nargs="+", default=[3, 10, 50, 100, 200, 300, 500, 1000, 2000])
    args = ap.parse_args()
    p = BASELINE_CHANNEL.erasure_prob
    rows = []
    for n in args.ns:
        g = coding_gain(n, BASELINE_CHANNEL, args.K)
        rows.append([n, g.k_star, g.k_star / n, n * (1 - p), g.aoi_coded, g.gain, g.ceiling])
    print(csv_table(["n", "k_star", "rate", "n_times_1_minus_P", "aoi", "gain", "ceiling"], rows), end="")


if __name__ == "__main__":
    main()
