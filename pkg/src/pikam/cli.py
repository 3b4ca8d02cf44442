"""Command line entry point: ``pikam <command> ...``.

Exit codes: 0 success, 1 runtime failure (message on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .analysis import (
    DiophantineParams,
    ScanGrid,
    diophantine_check,
    frequency_map,
    summarize,
)
from .config import ConfigError, SystemConfig, parse_config, write_config
from .dynamics import HamiltonianSpec
from .errors import PikamError
from .geometry import SymplecticFormSpec, validate_form
from .integrate import atomic_write_text, integrate_omega, integrate_w
from .reduction import Section, reduce
from .state import PhasePoint


def _floats(text: str) -> list[float]:
    text = text.strip()
    return [float(v) for v in text.split(",")] if text else []


def parse_ic(text: str, k: int, m: int) -> PhasePoint:
    """``"I_1,..;z_1,..;phi_1,.."``; with no z coordinates ``"I;phi"`` is accepted."""
    groups = text.split(";")
    if len(groups) == 2 and m == 0:
        groups = [groups[0], "", groups[1]]
    if len(groups) != 3:
        raise ValueError(f"--ic needs three ';'-separated groups (I; z; phi), got {text!r}")
    I, z, phi = (_floats(g) for g in groups)
    if (len(I), len(z), len(phi)) != (k, m, k):
        raise ValueError(f"--ic has group sizes ({len(I)}, {len(z)}, {len(phi)}), "
                         f"expected ({k}, {m}, {k})")
    return PhasePoint(I, z, phi)


def parse_grid(text: str, k: int) -> tuple[int, ...]:
    counts = tuple(int(v) for v in text.lower().split("x"))
    if len(counts) != k or any(c < 1 for c in counts):
        raise ValueError(f"--grid needs {k} positive counts like 50x50, got {text!r}")
    return counts


def _scan_grid(cfg: SystemConfig, args) -> ScanGrid:
    chart = cfg.chart
    phi0 = _floats(args.phi0) if args.phi0 is not None else [0.0] * chart.k
    if args.z0 is not None:
        z0 = _floats(args.z0)
    else:
        z0 = [0.5 * (lo + hi) for lo, hi in chart.w_box]
    if len(phi0) != chart.k or len(z0) != chart.m:
        raise ValueError(f"--phi0 needs {chart.k} values and --z0 needs {chart.m}")
    Section(z0).check(chart)
    return ScanGrid(chart.v_box, parse_grid(args.grid, chart.k), phi0, z0)


def _point(x) -> str:
    return "(" + ", ".join(f"{v:.6g}" for v in x) + ")"


def cmd_validate(cfg: SystemConfig, args) -> int:
    seed = cfg.seed if args.seed is None else args.seed
    report = validate_form(cfg.form, args.samples, seed)
    H = cfg.hamiltonian
    print(f"chart: k={cfg.chart.k} n={cfg.chart.n} (z coordinates: {cfg.chart.m})")
    print(f"form closed:        {report.closed} (max cyclic residual "
          f"{report.max_closure_residual:.3e} at x={_point(report.worst_closure_point)})")
    print(f"form nondegenerate: {report.nondegenerate} (min |det| {report.min_abs_det:.3e} "
          f"at x={_point(report.worst_det_point)})")
    print(f"Iz block present:   {cfg.form.has_iz()}")
    print(f"hamiltonian: {len(H.base.terms)} base terms, {len(H.perturbation.terms)} "
          f"perturbation terms, epsilon={H.epsilon}, separable={H.is_separable()}")
    return 0 if report.ok else 1


def cmd_flow(cfg: SystemConfig, args) -> int:
    x0 = parse_ic(args.ic, cfg.chart.k, cfg.chart.m)
    integ = cfg.integrator if args.steps is None else replace(cfg.integrator, steps=args.steps)
    if args.structure == "w":
        traj = integrate_w(cfg.hamiltonian, x0, integ)
    else:
        traj = integrate_omega(cfg.hamiltonian, cfg.form, x0, replace(integ, method="midpoint"))
    traj.write_csv(args.out)
    drift = float(np.max(traj.energy_error()))
    print(f"wrote {len(traj)} rows to {args.out}; max |H'(t) - H'(0)| = {drift:.3e}")
    return 0


def cmd_reduce(cfg: SystemConfig, args) -> int:
    section = Section(_floats(args.section))
    red = reduce(cfg.hamiltonian, section, cfg.chart)
    out = SystemConfig(red.chart, SymplecticFormSpec(red.chart), red.hamiltonian,
                       cfg.integrator, cfg.analysis, cfg.seed)
    write_config(out, args.out)
    print(f"wrote reduced system (k=n={red.chart.k}) to {args.out}")
    return 0


def _hamiltonian_for(cfg: SystemConfig, eps) -> HamiltonianSpec:
    return cfg.hamiltonian if eps is None else cfg.hamiltonian.with_epsilon(eps)


def cmd_freqmap(cfg: SystemConfig, args) -> int:
    grid = _scan_grid(cfg, args)
    H = _hamiltonian_for(cfg, args.eps)
    results = frequency_map(H, grid, cfg.integrator, cfg.analysis, args.jobs)
    k = cfg.chart.k
    header = ([f"I_{i + 1}" for i in range(k)] + [f"phi_{i + 1}" for i in range(k)]
              + [f"omega_{i + 1}" for i in range(k)] + ["diffusion", "verdict"])
    lines = [",".join(header)]
    for I0, r in zip(grid.actions(), results):
        nums = list(I0) + list(grid.phi0) + list(r.omega_first_half) + [r.diffusion]
        lines.append(",".join(f"{v:.17g}" for v in nums) + "," + r.verdict)
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    summary = summarize(H.epsilon, results)
    print(f"wrote {len(results)} orbits to {args.out}: torus {summary.fraction_torus:.4f}, "
          f"resonant {summary.fraction_resonant:.4f}, non_torus {summary.fraction_non_torus:.4f}")
    return 0


def companion_path(out: str) -> str:
    root, _ = os.path.splitext(out)
    return root + ".dat"


def cmd_scan(cfg: SystemConfig, args) -> int:
    grid = _scan_grid(cfg, args)
    eps_values = _floats(args.eps)
    if not eps_values:
        raise ValueError("--eps needs at least one value")
    records = []
    for eps in eps_values:
        H = cfg.hamiltonian.with_epsilon(eps)
        res = summarize(eps, frequency_map(H, grid, cfg.integrator, cfg.analysis, args.jobs))
        records.append(res)
        print(f"eps={eps:g}: torus {res.fraction_torus:.4f}, resonant "
              f"{res.fraction_resonant:.4f}, non_torus {res.fraction_non_torus:.4f}", flush=True)
    atomic_write_text(args.out, json.dumps([r.to_dict() for r in records], indent=2) + "\n")
    dat = ["# eps fraction_non_torus"]
    dat.extend(f"{r.epsilon:.17g} {r.fraction_non_torus:.17g}" for r in records)
    atomic_write_text(companion_path(args.out), "\n".join(dat) + "\n")
    print(f"wrote {args.out} and {companion_path(args.out)}")
    return 0


def cmd_diophantine(args) -> int:
    omega = np.array(_floats(args.omega))
    if omega.size == 0:
        raise ValueError("--omega needs at least one value")
    defaults = DiophantineParams.default_for(omega, args.kmax)
    params = DiophantineParams(
        args.gamma if args.gamma is not None else defaults.gamma,
        args.tau if args.tau is not None else defaults.tau,
        args.kmax,
    )
    res = diophantine_check(omega, params)
    print(f"omega={omega.tolist()} gamma={params.gamma:g} tau={params.tau:g} "
          f"K_max={params.K_max}")
    print(f"{'pass' if res.passed else 'fail'}: worst m={list(res.worst_m)} "
          f"|<m,omega>| |m|^tau = {res.worst_ratio:.17g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pikam",
        description="Partially integrable Hamiltonian systems: flows, reduction, KAM scans.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed for randomized checks")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for grid scans")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("validate", help="check closedness/nondegeneracy of the form")
    p.add_argument("config")
    p.add_argument("--samples", type=int, default=200)

    p = sub.add_parser("flow", help="integrate one orbit and write a CSV trajectory")
    p.add_argument("config")
    p.add_argument("--structure", choices=("w", "omega"), default="w")
    p.add_argument("--ic", required=True, help='initial condition "I..;z..;phi.."')
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("reduce", help="emit the reduced system at a constant-z section")
    p.add_argument("config")
    p.add_argument("--section", required=True, help="comma-separated z values")
    p.add_argument("--out", required=True)

    for name, helptext in (("freqmap", "classify a grid of orbits and write a CSV map"),
                           ("scan", "surviving-torus fractions over a list of eps")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config")
        p.add_argument("--grid", required=True, help="counts per action, e.g. 50x50")
        p.add_argument("--phi0", default=None, help="fixed initial angles (default zeros)")
        p.add_argument("--z0", default=None, help="fixed z (default W_box centre)")
        p.add_argument("--out", required=True)
        if name == "scan":
            p.add_argument("--eps", required=True, help="comma-separated eps values")
        else:
            p.add_argument("--eps", type=float, default=None, help="override epsilon")
        p.add_argument("--jobs", type=int, default=argparse.SUPPRESS)

    p = sub.add_parser("diophantine", help="check a frequency vector for small divisors")
    p.add_argument("--omega", required=True)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--kmax", type=int, default=10)
    return parser


COMMANDS = {
    "validate": cmd_validate,
    "flow": cmd_flow,
    "reduce": cmd_reduce,
    "freqmap": cmd_freqmap,
    "scan": cmd_scan,
}


def run_command(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "diophantine":
            return cmd_diophantine(args)
        cfg = parse_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except (PikamError, ConfigError, ValueError, OverflowError, OSError) as exc:
        print(f"pikam {args.command}: error: {exc}", file=sys.stderr)
        return 1


def main(argv=None):
    sys.exit(run_command(argv))


if __name__ == "__main__":
    main()
