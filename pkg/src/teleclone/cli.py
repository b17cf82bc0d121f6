"""Command-line front end: ``teleclone {simulate,sweep,figures,verify}``.

Exit codes: 0 pass, 1 tolerance failure, 2 usage error, 3 runtime error.
Every number written here comes from the library modules.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytic_formulas as af
from . import cloning_analysis as ca
from . import epr_teleport as et
from . import fock_core as fc
from .errors import InvalidArgumentError, OutOfRangeError

log = logging.getLogger("teleclone")

EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3
FIG_NS = (2, 3, 4)
FIG_LARGE_N = 100


@dataclass
class RunConfig:
    subcommand: str
    q: float | None = None
    v_q: float | None = None
    polarization: fc.JonesVector = field(default_factory=lambda: fc.POLARIZATIONS["h"])
    n_max: int = 8
    integration: et.IntegrationConfig = field(default_factory=et.IntegrationConfig)
    output_dir: Path = Path("teleclone_out")
    format: str = "json"
    tolerance: float | None = None

    def squeezing(self) -> et.SqueezingParam:
        if (self.q is None) == (self.v_q is None):
            raise InvalidArgumentError("supply exactly one of q / v_q")
        if self.q is not None:
            return et.SqueezingParam(self.q)
        return et.SqueezingParam.from_v(self.v_q)

    def resolved_tolerance(self) -> float:
        if self.tolerance is not None:
            return self.tolerance
        if self.integration.method == "quadrature":
            return 5e-3
        return max(5e-3, 3.0 / math.sqrt(self.integration.sample_count))


def parse_polarization(text: str) -> fc.JonesVector:
    """h|v|d|a|r|l or custom:re,im,re,im (custom vectors are normalized)."""
    key = text.strip().lower()
    if key in fc.POLARIZATIONS:
        return fc.POLARIZATIONS[key]
    if key.startswith("custom"):
        body = key[len("custom"):].strip(":()")
        parts = [float(p) for p in body.split(",")]
        if len(parts) != 4:
            raise argparse.ArgumentTypeError("custom polarization needs c_H re,im,c_V re,im")
        try:
            return fc.JonesVector(complex(parts[0], parts[1]), complex(parts[2], parts[3])).normalized()
        except InvalidArgumentError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    raise argparse.ArgumentTypeError(f"unknown polarization {text!r}")


def parse_grid(text: str) -> list[float]:
    """'start:stop:step' (inclusive) or a comma-separated list."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise argparse.ArgumentTypeError("grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        grid = [round(start + i * step, 12) for i in range(count)]
    else:
        grid = [float(x) for x in text.split(",") if x.strip()]
    if len(grid) < 2:
        raise argparse.ArgumentTypeError("grid needs at least two points")
    if any(not 0.0 <= v <= 1.0 for v in grid):
        raise argparse.ArgumentTypeError("grid values must lie in [0, 1]")
    return grid


def _add_common(p: argparse.ArgumentParser, need_q: bool) -> None:
    g = p.add_mutually_exclusive_group(required=need_q)
    g.add_argument("--q", type=float, help="squeezing parameter q in [0, 1)")
    g.add_argument("--v-q", type=float, dest="v_q", help="noise variance V_q in (0, 1]")
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--method", choices=et.METHODS, default="quadrature")
    p.add_argument("--nodes", type=int, default=24, help="Gauss-Hermite nodes per real axis")
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=None, help="MC proposal std per real quadrature")
    p.add_argument("--chunk-size", type=int, default=8192)
    p.add_argument("--polarization", type=parse_polarization, default=fc.POLARIZATIONS["h"])
    p.add_argument("--out", type=Path, default=Path("teleclone_out"))
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--tolerance", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="teleclone", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", help="teleport one photon and compare with closed forms")
    _add_common(p, need_q=True)
    p.add_argument("--dump-density", action="store_true", help="also write rho_out.json")

    p = sub.add_parser("sweep", help="numeric + analytic figure data over a V_q grid")
    _add_common(p, need_q=False)
    p.add_argument("--grid", type=parse_grid, default=parse_grid("0.05:1.0:0.05"))

    p = sub.add_parser("figures", help="analytic-only figure data over a V_q grid")
    _add_common(p, need_q=False)
    p.add_argument("--grid", type=parse_grid, default=parse_grid("0.05:1.0:0.05"))

    p = sub.add_parser("verify", help="run the invariant suite")
    _add_common(p, need_q=False)
    p.add_argument("--quick", action="store_true", help="n_max=4, oracle and identity checks only")
    p.add_argument("--with-mc", action="store_true", help="include the Monte-Carlo agreement check")
    p.add_argument("--corrupt-prefactor", type=float, default=1.0, help=argparse.SUPPRESS)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    integ = et.IntegrationConfig(
        method=args.method,
        nodes_per_axis=args.nodes,
        sample_count=args.samples,
        proposal_sigma=args.sigma,
        rng_seed=args.seed,
        chunk_size=args.chunk_size,
    )
    return RunConfig(
        subcommand=args.subcommand,
        q=args.q,
        v_q=args.v_q,
        polarization=args.polarization,
        n_max=args.n_max,
        integration=integ,
        output_dir=args.out,
        format=args.format,
        tolerance=args.tolerance,
    )


def _write_run_metadata(cfg: RunConfig, argv: list[str]) -> None:
    meta = {"argv": argv, "created_unix": time.time()}
    (cfg.output_dir / "run.json").write_text(json.dumps(meta, indent=2) + "\n")


# ------------------------------------------------------------ simulate --


def _compare(report: ca.CloningReport, tol: float) -> tuple[bool, dict[str, float]]:
    dev = ca.max_deviations(report)
    ok = (
        dev["p_n"] <= tol
        and dev["fidelity_n"] <= tol
        and dev["eta_n"] <= 2 * tol
        and dev["residual_norm"] <= max(1e-3, 3 * tol)
    )
    return ok, dev


def format_summary(report: ca.CloningReport) -> str:
    head = f"{'N':>3} {'P num':>10} {'P ana':>10} {'eta num':>9} {'eta ana':>9} {'F num':>8} {'F ana':>8} {'resid':>9}"
    lines = [f"V_q={report.v_q:.6g} q={report.q:.6g} n_max={report.n_max} method={report.method}", head]

    def cell(x, w, spec):
        return f"{'-':>{w}}" if x is None else f"{x:>{w}{spec}}"

    for row in report.rows():
        lines.append(" ".join([
            f"{row['N']:>3}",
            cell(row["p_num"], 10, ".6f"),
            cell(row["p_ana"], 10, ".6f"),
            cell(row["eta_num"], 9, ".5f"),
            cell(row["eta_ana"], 9, ".5f"),
            cell(row["F_num"], 8, ".5f"),
            cell(row["F_ana"], 8, ".5f"),
            cell(row["residual"], 9, ".2e"),
        ]))
    lines.append(
        f"mean photons {report.mean_photon_number:.6f} (closed form "
        f"{af.mean_photon_number(report.v_q):.6f}), trace captured {report.trace_captured:.8f}"
    )
    return "\n".join(lines)


def run_simulate(cfg: RunConfig, dump_density: bool = False) -> int:
    q = cfg.squeezing()
    pol = cfg.polarization
    psi = fc.single_photon_state(pol, cfg.n_max)
    result = et.teleport_channel(psi, q, cfg.integration, cfg.n_max)
    report = ca.report_from_channel(result.rho_out, pol, q, result.trace_captured,
                                    result.method, result.diagnostics)
    if cfg.format == "json":
        (cfg.output_dir / "report.json").write_text(report.to_json() + "\n")
    else:
        (cfg.output_dir / "report.csv").write_text(report.to_csv())
    if dump_density:
        (cfg.output_dir / "rho_out.json").write_text(json.dumps(result.to_dict()))
    tol = cfg.resolved_tolerance()
    ok, dev = _compare(report, tol)
    print(format_summary(report))
    print("max |num - ana|: " + ", ".join(f"{k}={v:.3e}" for k, v in dev.items())
          + f" (tolerance {tol:g}) -> {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_TOLERANCE


# --------------------------------------------------------------- sweep --


def figure_rows(grid: list[float], reports: dict[float, ca.CloningReport] | None = None):
    """Rows for fig2 (P_N), fig3 (eta_N) and fig4 (F_N), analytic then numeric columns."""
    reports = reports or {}
    fig2, fig3, fig4 = [], [], []
    for v in grid:
        limit = 1 if v == 0.0 else 0
        rep = reports.get(v)
        probs = dict(rep.probabilities) if rep else {}
        dec = {d.N: d for d in rep.per_n} if rep else {}
        fig2.append([v, *(af.p_of_n(v, n) for n in FIG_NS),
                     *(probs.get(n) for n in FIG_NS), limit])
        fig3.append([v, *(af.eta_of_n(v, n) for n in (*FIG_NS, FIG_LARGE_N)),
                     *(dec[n].eta_n if n in dec else None for n in FIG_NS), limit])
        fig4.append([v, *(af.f_of_n(v, n) for n in (*FIG_NS, FIG_LARGE_N)),
                     *(dec[n].fidelity_n if n in dec else None for n in FIG_NS), limit])
    return fig2, fig3, fig4


FIG_HEADERS = {
    "fig2": ["V_q", "P2_ana", "P3_ana", "P4_ana", "P2_num", "P3_num", "P4_num", "limit"],
    "fig3": ["V_q", "eta2_ana", "eta3_ana", "eta4_ana", "eta100_ana",
             "eta2_num", "eta3_num", "eta4_num", "limit"],
    "fig4": ["V_q", "F2_ana", "F3_ana", "F4_ana", "F100_ana",
             "F2_num", "F3_num", "F4_num", "limit"],
}


def write_figures(out_dir: Path, rows: tuple[list, list, list], also_json: bool = False) -> None:
    """fig2.csv / fig3.csv / fig4.csv, plus one JSON record list per figure if asked."""
    for name, data in zip(("fig2", "fig3", "fig4"), rows):
        header = FIG_HEADERS[name]
        with open(out_dir / f"{name}.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in data:
                writer.writerow([ca.format_number(x) for x in row])
        if also_json:
            records = [dict(zip(header, row)) for row in data]
            (out_dir / f"{name}.json").write_text(json.dumps(records, indent=2) + "\n")


def figure_deviation(rows: tuple[list, list, list]) -> float:
    worst = 0.0
    for data, n_ana in zip(rows, (3, 4, 4)):
        for row in data:
            ana = row[1 : 1 + len(FIG_NS)]
            num = row[1 + n_ana : 1 + n_ana + len(FIG_NS)]
            for a, b in zip(ana, num):
                if b is not None:
                    worst = max(worst, abs(a - b))
    return worst


def run_sweep(cfg: RunConfig, grid: list[float], numeric: bool) -> int:
    reports = {}
    if numeric:
        psi = fc.single_photon_state(cfg.polarization, cfg.n_max)
        for v in grid:
            if v == 0.0:
                continue
            q = et.SqueezingParam.from_v(v)
            res = et.teleport_channel(psi, q, cfg.integration, cfg.n_max)
            reports[v] = ca.report_from_channel(res.rho_out, cfg.polarization, q,
                                                res.trace_captured, res.method)
            log.info("V_q=%g done", v)
    rows = figure_rows(grid, reports)
    write_figures(cfg.output_dir, rows, also_json=cfg.format == "json")
    if not numeric:
        print(f"wrote analytic figure data for {len(grid)} grid points to {cfg.output_dir}")
        return EXIT_OK
    worst = figure_deviation(rows)
    tol = cfg.resolved_tolerance()
    print(f"wrote figure data for {len(grid)} grid points to {cfg.output_dir}; "
          f"max |num - ana| = {worst:.3e} (tolerance {tol:g})")
    return EXIT_OK if worst <= tol else EXIT_TOLERANCE


# -------------------------------------------------------------- verify --


@dataclass
class Check:
    name: str
    deviation: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.deviation <= self.threshold)

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "deviation": self.deviation, "threshold": self.threshold}


def _random_jones(rng: np.random.Generator, scale: float = 1.0, normalize: bool = False):
    z = rng.normal(size=2) + 1j * rng.normal(size=2)
    z = z * scale
    if normalize:
        z = z / np.linalg.norm(z)
    return fc.JonesVector.from_array(z)


def oracle_agreement(n_max: int = 4, probes: int = 20, seed: int = 7) -> tuple[float, float]:
    """(max 1 - overlap, spread of the norm ratio) between oracle and transfer operator."""
    rng = np.random.default_rng(seed)
    worst, ratios = 0.0, []
    for _ in range(probes):
        beta = _random_jones(rng, 0.3)
        q = float(rng.uniform(0.0, 0.5))
        psi = np.zeros(fc.dim(n_max), dtype=complex)
        small = np.flatnonzero(fc.total_photon_numbers(n_max) <= 1)
        psi[small] = rng.normal(size=small.size) + 1j * rng.normal(size=small.size)
        psi /= np.linalg.norm(psi)
        a = et.bell_projection_oracle(beta, q, psi, n_max)
        b = et.transfer_operator(beta, q, n_max) @ psi
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        worst = max(worst, 1.0 - abs(np.vdot(a, b)) / (na * nb))
        ratios.append(na / nb)
    return worst, float(max(ratios) - min(ratios))


def identity_probe_deviation(n_max: int, probes: int = 20, seed: int = 11) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(probes):
        beta = _random_jones(rng, 0.5)
        q = float(rng.uniform(0.0, 0.95))
        pol = _random_jones(rng, normalize=True)
        worst = max(worst, et.commutation_identity_check(beta, q, n_max, pol))
    return worst


def run_checks(q: et.SqueezingParam, n_max: int, cfg: et.IntegrationConfig,
               quick: bool = False, with_mc: bool = False,
               prefactor_scale: float = 1.0) -> list[Check]:
    checks = []
    if quick:
        n_max = 4
    checks.append(Check("completeness", et.completeness_deviation(
        q, n_max, cfg.nodes_per_axis, prefactor_scale=prefactor_scale), 1e-3))
    checks.append(Check("operator_identities", identity_probe_deviation(n_max), 1e-8))
    overlap_gap, ratio_spread = oracle_agreement()
    checks.append(Check("oracle_overlap", overlap_gap, 1e-6))
    checks.append(Check("oracle_norm_ratio_spread", ratio_spread, 1e-6))
    if quick:
        return checks

    idx = fc.trusted_indices(n_max)
    quad = et.IntegrationConfig(nodes_per_axis=cfg.nodes_per_axis)
    vac = et.teleport_channel(fc.basis_state(0, 0, n_max), q, quad)
    thermal = et.vacuum_output_state(q, n_max)
    checks.append(Check("vacuum_thermal_trace_distance", fc.trace_distance(
        fc.restrict(vac.rho_out, idx), fc.restrict(thermal, idx)), 5e-3))
    per_mode = float(np.real(np.trace(fc.number_operator(n_max) @ vac.rho_out))) / 2
    checks.append(Check("vacuum_added_photons", abs(per_mode - q.v_q), 2e-3))

    pol = fc.POLARIZATIONS["h"]
    res = et.teleport_channel(fc.single_photon_state(pol, n_max), q, quad)
    report = ca.report_from_channel(res.rho_out, pol, q, res.trace_captured, res.method)
    dev = ca.max_deviations(report)
    checks.append(Check("block_residuals", dev["residual_norm"], 1e-3))
    mix = ca.photon_added_mixture(q, pol, n_max)
    checks.append(Check("photon_added_mixture", fc.trace_distance(
        fc.restrict(res.rho_out, idx), fc.restrict(mix, idx)), 5e-3))
    bound = max(
        [max(0.5 - d.fidelity_n, d.fidelity_n - af.f_opt(d.N) - 0.01) for d in report.per_n],
        default=-1.0,
    )
    checks.append(Check("no_cloning_bound", max(bound, 0.0), 0.0))

    theta, phi = 0.7, 1.3
    u = np.array([[np.cos(theta), -np.exp(-1j * phi) * np.sin(theta)],
                  [np.exp(1j * phi) * np.sin(theta), np.cos(theta)]])
    rot_pol = fc.JonesVector.from_array(u @ pol.as_array())
    rotated = et.teleport_channel(fc.single_photon_state(rot_pol, n_max), q, quad)
    expected = fc.rotate_polarization(res.rho_out, u)
    checks.append(Check("polarization_covariance", fc.trace_distance(
        fc.restrict(rotated.rho_out, idx), fc.restrict(expected, idx)), 5e-3))

    if with_mc:
        mc_cfg = et.IntegrationConfig(method="monte-carlo", sample_count=cfg.sample_count,
                                      proposal_sigma=cfg.proposal_sigma, rng_seed=cfg.rng_seed,
                                      chunk_size=cfg.chunk_size)
        mc = et.teleport_channel(fc.single_photon_state(pol, n_max), q, mc_cfg)
        checks.append(Check("monte_carlo_vs_quadrature", fc.trace_distance(mc.rho_out, res.rho_out),
                            max(5e-3, 3.0 / math.sqrt(cfg.sample_count))))
    return checks


def run_verify(cfg: RunConfig, quick: bool, with_mc: bool, prefactor_scale: float) -> int:
    q = cfg.squeezing() if (cfg.q is not None or cfg.v_q is not None) else et.SqueezingParam(0.5)
    checks = run_checks(q, cfg.n_max, cfg.integration, quick, with_mc, prefactor_scale)
    payload = {"q": q.q, "v_q": q.v_q, "n_max": 4 if quick else cfg.n_max,
               "checks": [c.as_dict() for c in checks],
               "passed": all(c.passed for c in checks)}
    (cfg.output_dir / "verify.json").write_text(json.dumps(payload, indent=2) + "\n")
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.deviation:.3e} (threshold {c.threshold:g})")
    return EXIT_OK if payload["passed"] else EXIT_TOLERANCE


# ---------------------------------------------------------------- main --


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        _write_run_metadata(cfg, argv)
        if args.subcommand == "simulate":
            return run_simulate(cfg, args.dump_density)
        if args.subcommand == "sweep":
            return run_sweep(cfg, args.grid, numeric=True)
        if args.subcommand == "figures":
            return run_sweep(cfg, args.grid, numeric=False)
        return run_verify(cfg, args.quick, args.with_mc, args.corrupt_prefactor)
    except (InvalidArgumentError, OutOfRangeError) as exc:
        print(f"teleclone: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - exit-code contract
        print(f"teleclone: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
