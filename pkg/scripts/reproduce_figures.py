#!/usr/bin/env python3
"""Write fig2/fig3/fig4 CSVs over the default V_q grid and, if matplotlib is present, PNGs.

    python3 scripts/reproduce_figures.py --out figures
"""

import argparse
import csv
import sys
from pathlib import Path

from teleclone import cli

PLOTS = {
    "fig2": ("P", "P_N", (2, 3, 4)),
    "fig3": ("eta", "eta_N", (2, 3, 4, 100)),
    "fig4": ("F", "F_N", (2, 3, 4, 100)),
}


def plot(out: Path) -> None:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; CSVs only")
        return
    for name, (prefix, ylabel, ns) in PLOTS.items():
        with open(out / f"{name}.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        v = [float(r["V_q"]) for r in rows]
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        for n in ns:
            ax.plot(v, [float(r[f"{prefix}{n}_ana"]) for r in rows], label=f"N={n}")
            num = [(x, r.get(f"{prefix}{n}_num")) for x, r in zip(v, rows)]
            num = [(x, float(y)) for x, y in num if y]
            if num:
                ax.plot(*zip(*num), "o", ms=3, color=ax.lines[-1].get_color())
        ax.set_xlabel("V_q")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(out / f"{name}.png", dpi=150)
        plt.close(fig)


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("figures"))
    p.add_argument("--analytic-only", action="store_true")
    args = p.parse_args()
    code = cli.main(["figures" if args.analytic_only else "sweep", "--out", str(args.out)])
    if code == cli.EXIT_OK:
        plot(args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
