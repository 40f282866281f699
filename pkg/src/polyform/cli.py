"""Command-line front end.

Commands:
    analyze    spectral verdict for a shape target
    simulate   run a scenario file; writes CSV, report JSON, and SVG
    sweep      stability region over (n, theta*) grids, spectral + empirical
    verify     run the acceptance suite

Exit codes follow the sysexits ranges where applicable:
    analyze:   0 stable, 2 marginal, 3 unstable
    simulate:  0 converged, 1 not converged, 3 diverged
    any:       64 usage error, 65 invalid scenario, 66 unreadable input,
               74 output I/O failure
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .acceptance import run_all
from .control import ControlLaw
from .errors import ScenarioError
from .geometry import ShapeSpec
from .output import build_report, write_csv, write_svg
from .scenario import bundled_scenario_path, load_scenario
from .simulator import DEFAULT_TOL, Scenario, SeededBox, convergence_time, run
from .stability import classify, regular_polygon_angle

EX_USAGE = 64
EX_DATAERR = 65
EX_NOINPUT = 66
EX_IOERR = 74


class UsageError(Exception):
    pass


def _parse_theta_arg(text: str, n: int) -> np.ndarray:
    if text == "regular":
        return np.full(n - 2, regular_polygon_angle(n))
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"malformed --theta value {text!r}") from exc
    if len(values) == 1:
        return np.full(n - 2, values[0])
    if len(values) != n - 2:
        raise UsageError(f"--theta needs 1 or {n - 2} values for n={n}, got {len(values)}")
    return np.asarray(values)


def _parse_ratios_arg(text: str, n: int) -> np.ndarray:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"malformed --ratios value {text!r}") from exc
    if len(values) == 1:
        values = values * (n - 1)
    if len(values) != n - 1:
        raise UsageError(f"--ratios needs 1 or {n - 1} values for n={n}, got {len(values)}")
    return np.asarray(values)


def cmd_analyze(args) -> int:
    theta = _parse_theta_arg(args.theta, args.n)
    ratios = _parse_ratios_arg(args.ratios, args.n) if args.ratios else None
    try:
        spec = ShapeSpec(theta=theta, ratios=ratios)
        report = classify(spec, args.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(json.dumps(report.to_dict(), indent=2))
    return {"stable": 0, "marginal": 2, "unstable": 3}[report.verdict]


def _load(path: str) -> Scenario:
    p = Path(path)
    if not p.is_file():
        print(f"error: cannot read scenario file {path!r}", file=sys.stderr)
        raise SystemExit(EX_NOINPUT)
    try:
        return load_scenario(p)
    except ScenarioError as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        raise SystemExit(EX_DATAERR)


def cmd_simulate(args) -> int:
    scenario = _load(args.scenario)
    if args.dt is not None or args.t_end is not None:
        scenario = replace(
            scenario,
            dt=args.dt if args.dt is not None else scenario.dt,
            t_end=args.t_end if args.t_end is not None else scenario.t_end,
        )
    if args.seed is not None:
        if not isinstance(scenario.initial, SeededBox):
            raise UsageError("--seed only applies to scenarios with seeded placement")
        scenario = replace(scenario, initial=replace(scenario.initial, seed=args.seed))

    traj = run(scenario)
    prefix = args.out if args.out else Path(args.scenario).stem
    report = build_report(traj, scenario, tol=args.tol)
    try:
        write_csv(traj, Path(f"{prefix}.csv"))
        Path(f"{prefix}.report.json").write_text(
            json.dumps(report, indent=2) + "\n", encoding="utf-8")
        write_svg(traj, Path(f"{prefix}.svg"))
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EX_IOERR
    print(json.dumps(report, indent=2))
    if traj.diverged:
        return 3
    return 0 if report["converged"] else 1


def _parse_n_grid(text: str) -> list[int]:
    try:
        if ":" in text:
            lo, hi = (int(v) for v in text.split(":"))
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"malformed --n grid {text!r} (use lo:hi or a comma list)") from exc


def _parse_theta_grid(text: str) -> np.ndarray:
    try:
        if ":" in text:
            lo, hi, count = text.split(":")
            return np.linspace(float(lo), float(hi), int(count))
        return np.asarray([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"malformed --theta grid {text!r} (use lo:hi:count or a comma list)") from exc


def _sweep_cell(n: int, theta: float) -> tuple:
    from .simulator import perturbed_chain

    spec = ShapeSpec(theta=np.full(n - 2, theta))
    report = classify(spec, n)
    lam_max = float(np.max(report.eigenvalues.real))
    dt = 2.5 / max(lam_max, 1e-3)
    rate = abs(report.min_real)
    t_end = min(40.0 / max(rate, 0.05), 2000.0 * dt)
    scenario = Scenario(
        n=n,
        initial=perturbed_chain(n, theta, seed=11 * n + 1, error_norm=1.0),
        law=ControlLaw(mode="polygon", c=1.0, spec=spec),
        t_end=t_end,
        dt=dt,
        record_every=max(1, int(round(t_end / dt))),
    )
    traj = run(scenario)
    settled = bool(not traj.diverged and traj.e_theta_norm[-1] < 1e-3)
    return n, theta, report.min_real, report.verdict, settled


def cmd_sweep(args) -> int:
    ns = _parse_n_grid(args.n)
    thetas = _parse_theta_grid(args.theta)
    if any(n < 3 for n in ns):
        raise UsageError("sweep needs n >= 3")
    bad = [t for t in thetas if not -np.pi < t <= np.pi]
    if bad:
        raise UsageError(f"theta grid must stay in (-pi, pi], got {bad[0]:g}")
    cells = [(n, float(t)) for n in ns for t in thetas]
    threads = os.environ.get("POLYFORM_THREADS", "")
    workers = int(threads) if threads.isdigit() else (os.cpu_count() or 1)
    if workers <= 1:
        rows = [_sweep_cell(n, t) for n, t in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda c: _sweep_cell(*c), cells))
    rows.sort(key=lambda r: (r[0], r[1]))
    lines = ["n,theta_star,min_real,verdict,empirical_converged"]
    lines += [f"{n},{t:.17g},{m:.17g},{v},{str(s).lower()}" for n, t, m, v, s in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot write {args.out!r}: {exc}", file=sys.stderr)
            return EX_IOERR
    else:
        print(text, end="")
    return 0


def cmd_verify(args) -> int:
    if not bundled_scenario_path("hexagon.json").is_file():
        print("error: bundled scenario fixtures missing", file=sys.stderr)
        return EX_NOINPUT
    results = run_all()
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} acceptance criteria passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyform",
        description="Daisy-chain polygonal formation control toolbox.",
        epilog=("exit codes: analyze 0=stable 2=marginal 3=unstable; "
                "simulate 0=converged 1=not-converged 3=diverged; "
                "64 usage, 65 invalid scenario, 66 missing input, 74 output I/O"),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="spectral stability verdict for a shape target")
    p.add_argument("--n", type=int, required=True, help="agent count (>= 3)")
    p.add_argument("--theta", required=True,
                   help="'regular', one angle, or a comma list of n-2 angles (radians)")
    p.add_argument("--ratios", default=None, help="one ratio or a comma list of n-1 ratios")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="run a scenario file and write csv/report/svg")
    p.add_argument("scenario", help="scenario JSON path")
    p.add_argument("--out", default=None, help="output prefix (default: scenario stem)")
    p.add_argument("--dt", type=float, default=None, help="override integrator step")
    p.add_argument("--t-end", dest="t_end", type=float, default=None, help="override horizon")
    p.add_argument("--seed", type=int, default=None, help="override placement seed")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="convergence tolerance")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="stability region over (n, theta*) grids")
    p.add_argument("--n", required=True, help="agent counts: lo:hi or comma list")
    p.add_argument("--theta", required=True, help="angle grid: lo:hi:count or comma list")
    p.add_argument("--out", default=None, help="CSV output path (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EX_USAGE
    except ScenarioError as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return EX_DATAERR


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
