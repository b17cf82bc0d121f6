#!/usr/bin/env python3
"""Print the numeric and closed-form cloning statistics for one teleported photon.

    python3 scripts/reproduce_table.py --v-q 0.25 --n-max 8
"""

import argparse

from teleclone import cloning_analysis as ca
from teleclone import epr_teleport as et
from teleclone.cli import format_summary, parse_polarization


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--v-q", type=float, default=0.25)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--nodes", type=int, default=24)
    p.add_argument("--polarization", default="h")
    args = p.parse_args()

    q = et.SqueezingParam.from_v(args.v_q)
    cfg = et.IntegrationConfig(nodes_per_axis=args.nodes)
    report = ca.full_report(parse_polarization(args.polarization), q, cfg, n_max=args.n_max)
    print(format_summary(report))
    dev = ca.max_deviations(report)
    print("max |num - ana|: " + ", ".join(f"{k}={v:.2e}" for k, v in dev.items()))


if __name__ == "__main__":
    main()
