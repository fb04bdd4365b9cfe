"""Command-line entry point: ``volterra-iso {chi,critical-points,flow,verify}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import combinatorics as comb
from .errors import NotConverged, SpectrumError, VolterraError
from .flow import DEFAULT_ABS_TOL, DEFAULT_REL_TOL, flow_to_equilibrium, integrate, volterra_field
from .jacobi import FLOW_TOL, SpectrumSpec, sample_manifold_point
from .morse import critical_point_census, index_combinatorial
from .verify import LEVELS, run_checks

SCHEMA = "1"


def _scalar(value: Any) -> str:
    if value is None:
        return "skipped"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return " ".join(_scalar(v) for v in value)
    return str(value)


def render(report: dict, fmt: str) -> str:
    """Serialize a report; ``rows`` become the CSV/text table."""
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    rows = report.get("rows", [])
    columns = list(rows[0]) if rows else []
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_scalar(row[c]) for c in columns])
        return buf.getvalue()
    table = [columns] + [[_scalar(row[c]) for c in columns] for row in rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(columns))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in table]
    for key, value in report.get("footer", {}).items():
        lines.append(f"{key}: {_scalar(value)}")
    return "\n".join(lines) + "\n"


def _emit(report: dict, fmt: str, out: str | None) -> None:
    text = render(report, fmt)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _spectrum(source: str | None, l: int) -> SpectrumSpec:
    if source is None:
        return SpectrumSpec.default(l)
    spec = SpectrumSpec.from_source(source)
    if spec.l != l:
        raise SpectrumError(f"spectrum has {spec.l} values, expected l={l}")
    return spec


def parse_seeds(text: str) -> list[int]:
    """``"7"``, ``"1..100"`` or ``"1,5,9"``."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",")]


def chi_report(l_max: int, methods: Sequence[str]) -> tuple[dict, bool]:
    table = comb.chi_table(l_max, methods)
    rows = [{"l": r.l, **r.values, "agree": r.agree} for r in table]
    ok = all(r.agree for r in table)
    report = {
        "schema": SCHEMA,
        "command": "chi",
        "config": {"l_max": l_max, "methods": list(methods)},
        "rows": rows,
        "footer": {"all_agree": ok},
    }
    return report, ok


def critical_points_report(spec: SpectrumSpec) -> tuple[dict, bool]:
    records = critical_point_census(spec)
    rows = [r.as_dict() for r in records]
    ok = all(r.indices_agree for r in records)
    morse_sum = sum((-1) ** r.index for r in records)
    report = {
        "schema": SCHEMA,
        "command": "critical-points",
        "config": {"l": spec.l, "spectrum": list(spec.lambdas)},
        "rows": rows,
        "footer": {"count": len(rows), "sum_sign_index": morse_sum, "indices_agree": ok},
    }
    return report, ok


def flow_summary(
    spec: SpectrumSpec,
    k: int,
    seed: int,
    t_end: float,
    rel_tol: float,
    abs_tol: float,
    magnitude: float | None = None,
    t_max: float = 1000.0,
):
    """Run one seeded flow; returns ``(summary_row, trajectory)``."""
    c0 = sample_manifold_point(spec, k, seed, magnitude)
    traj = integrate(c0, t_end, rel_tol, abs_tol)
    row: dict[str, Any] = {
        "seed": seed,
        "converged": False,
        "j": None,
        "s": None,
        "pi": None,
        "index": None,
        "distance": None,
        "f_start": traj.f_values[0].item(),
        "f_end": traj.f_values[-1].item(),
        "f_limit": None,
        "max_drift": traj.max_drift,
        "max_f_increase": traj.max_f_increase(),
        "status": "ok",
    }
    field_tol = FLOW_TOL * (spec.lambdas[0] ** 2 if spec.l else 1.0)
    if k % 2:
        try:
            eq = flow_to_equilibrium(traj.final_state, spec, t_max=t_max, rel_tol=rel_tol, abs_tol=abs_tol)
        except NotConverged as exc:
            row["status"] = f"NotConverged: {exc}"
        else:
            row.update(
                converged=True,
                j=eq.triple.j,
                s=eq.triple.s_bits,
                pi=eq.triple.pi_str,
                index=index_combinatorial(eq.triple, spec.l),
                distance=eq.distance,
                f_limit=eq.f_limit,
            )
    else:
        final_field = float(np.max(np.abs(volterra_field(traj.final_state)), initial=0.0))
        row["converged"] = final_field <= field_tol
        row["f_limit"] = row["f_end"]
        if not row["converged"]:
            row["status"] = f"NotConverged: field {final_field:.3e} at t_end"
    if row["status"] == "ok" and row["max_drift"] > FLOW_TOL:
        row["status"] = "drift breach"
    return row, traj


def flow_report(
    spec: SpectrumSpec,
    k: int,
    seeds: Sequence[int],
    t_end: float,
    rel_tol: float,
    abs_tol: float,
    magnitude: float | None = None,
    trajectory_path: str | None = None,
) -> tuple[dict, bool]:
    rows = []
    for seed in seeds:
        row, traj = flow_summary(spec, k, seed, t_end, rel_tol, abs_tol, magnitude)
        rows.append(row)
        if trajectory_path:
            _write_trajectory(traj, trajectory_path, seed if len(seeds) > 1 else None)
    converged = sum(r["converged"] for r in rows)
    ok = all(r["status"] == "ok" for r in rows)
    report = {
        "schema": SCHEMA,
        "command": "flow",
        "config": {
            "k": k,
            "spectrum": list(spec.lambdas),
            "seeds": list(seeds),
            "t_end": t_end,
            "rel_tol": rel_tol,
            "abs_tol": abs_tol,
        },
        "rows": rows,
        "footer": {"converged": f"{converged}/{len(rows)}", "all_ok": ok},
    }
    return report, ok


def _write_trajectory(traj, path: str, seed: int | None) -> None:
    target = Path(path)
    if seed is not None:
        target = target.with_name(f"{target.stem}.seed{seed}{target.suffix}")
    with target.open("w", encoding="utf-8", newline="") as fh:
        if target.suffix == ".csv":
            traj.write_csv(fh)
        else:
            traj.write_jsonl(fh)


def verify_report(level: str, spectrum: str | None = None) -> tuple[dict, bool]:
    results = run_checks(level, spectrum)
    ok = all(r.passed for r in results)
    report = {
        "schema": SCHEMA,
        "command": "verify",
        "config": {"level": level, "spectrum": spectrum},
        "rows": [r.as_dict() for r in results],
        "footer": {"all_passed": ok},
    }
    return report, ok


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="volterra-iso", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--format", choices=("json", "csv", "text"), default="text")
        p.add_argument("--out", help="write the report here instead of stdout")

    p = sub.add_parser("chi", help="Euler characteristic by every route")
    p.add_argument("--l-max", type=int, required=True)
    p.add_argument("--methods", default="all", help="comma list of " + ",".join(comb.CHI_METHODS) + " or 'all'")
    common(p)

    p = sub.add_parser("critical-points", help="critical points of f with all Morse indices")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--spectrum", help="file (one value per line) or comma list")
    common(p)

    p = sub.add_parser("flow", help="seeded Volterra flows on M_k")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--spectrum")
    seeds = p.add_mutually_exclusive_group()
    seeds.add_argument("--seed", type=int, default=1)
    seeds.add_argument("--seeds", help="range a..b or comma list")
    p.add_argument("--t-end", type=float, default=50.0)
    p.add_argument("--rel-tol", type=float, default=DEFAULT_REL_TOL)
    p.add_argument("--abs-tol", type=float, default=DEFAULT_ABS_TOL)
    p.add_argument("--magnitude", type=float, help="tangent perturbation size (default 0.1 * lambda_l)")
    p.add_argument("--trajectory", help="export trajectories to this .csv or .jsonl path")
    common(p)

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--level", choices=tuple(LEVELS), default="quick")
    p.add_argument("--spectrum", help="additionally validate and check this spectrum")
    common(p)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "chi":
            methods = comb.CHI_METHODS if args.methods == "all" else tuple(m.strip() for m in args.methods.split(","))
            report, ok = chi_report(args.l_max, methods)
        elif args.command == "critical-points":
            report, ok = critical_points_report(_spectrum(args.spectrum, args.l))
        elif args.command == "flow":
            spec = _spectrum(args.spectrum, args.k // 2)
            seed_list = parse_seeds(args.seeds) if args.seeds else [args.seed]
            report, ok = flow_report(
                spec, args.k, seed_list, args.t_end, args.rel_tol, args.abs_tol, args.magnitude, args.trajectory
            )
        else:
            report, ok = verify_report(args.level, args.spectrum)
    except (VolterraError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(report, args.format, args.out)
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
