"""Command-line front end: ``md <run|table1|sweep> [flags]``.

Exit codes: 0 success, 1 configuration error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import re
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from lfmd.analysis import audit_trace, empirical_rate
from lfmd.errors import ConfigError, MirrorDescentError
from lfmd.geometry import EuclideanHalfSq, NegEntropy
from lfmd.problems import (
    EXAMPLE1_TABLE,
    TestProblem,
    get_problem,
    simulate_example1_nesterov,
)
from lfmd.schedule import Fixed, LipschitzFree, NesterovAdaptive, WeightScheme
from lfmd.solver import SolverConfig, composite_mirror_descent, mirror_descent

TRACE_HEADER = ["k", "gamma", "grad_dual_norm", "omega", "f_gap", "ergodic_gap"]
RULES = ("fixed", "nesterov", "lipschitz-free")
GEOMETRIES = {"euclidean": EuclideanHalfSq, "entropy": NegEntropy}
TABLE1_RTOL = 1e-12


def fmt(x) -> str:
    """Locale-independent, round-trip exact float formatting."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(float(x), ".17g")


@dataclass
class ExperimentSpec:
    problem: str
    rule: str = "lipschitz-free"
    a: float = 0.0
    R: float | None = None
    m: float = 0.0
    N: int = 100
    gamma0: float | None = None
    geometry: str | None = None
    eps_floor: float | None = None
    out: str | None = None
    format: str = "csv"
    seed: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def problem_name(self) -> str:
        name = self.problem
        if self.seed is not None and re.match(r"^(pwl-max|lasso-box)-", name) and not re.search(r"-s\d+$", name):
            name = f"{name}-s{self.seed}"
        return name

    def build(self):
        """Resolve the experiment into (problem, SolverConfig), raising ConfigError on bad combinations."""
        if self.rule not in RULES:
            raise ConfigError(f"unknown rule {self.rule!r}; choose from {', '.join(RULES)}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ConfigError("N must be a positive integer")
        try:
            problem = get_problem(self.problem_name(), floor=self.eps_floor)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
        if self.geometry is not None:
            if self.geometry not in GEOMETRIES:
                raise ConfigError(f"unknown geometry {self.geometry!r}")
            problem = problem.with_mirror(GEOMETRIES[self.geometry]())
        if problem.composite is not None and self.m > 0:
            raise ConfigError("composite problems require -1 <= m <= 0")
        try:
            weights = WeightScheme(self.m)
            if self.rule == "fixed":
                if self.gamma0 is None:
                    raise ConfigError("rule 'fixed' needs --gamma0")
                rule = Fixed(self.gamma0)
            elif self.rule == "nesterov":
                rule = NesterovAdaptive(problem.mirror.sigma)
            else:
                R = self.R if self.R is not None else problem.default_R()
                rule = LipschitzFree(self.a, R, problem.mirror.sigma)
        except MirrorDescentError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc
        cfg = SolverConfig(
            max_iters=int(self.N),
            rule=rule,
            mirror=problem.mirror,
            feasible=problem.feasible,
            weights=weights,
            record_ergodic=True,
        )
        return problem, cfg


def solve(problem: TestProblem, cfg: SolverConfig):
    if problem.composite is not None:
        return composite_mirror_descent(problem.objective, problem.composite, problem.x1, cfg)
    return mirror_descent(problem.objective, problem.x1, cfg)


def _status(trace) -> str:
    if trace.stop_k is None:
        return trace.status.value
    return f"{trace.status.value}({trace.stop_k})"


def report_record(spec: ExperimentSpec, problem: TestProblem, cfg: SolverConfig, trace, report) -> dict:
    rule = cfg.rule
    return {
        "problem": problem.name,
        "rule": rule.name,
        "a": getattr(rule, "a", None),
        "m": cfg.weights.m,
        "N": cfg.max_iters,
        "R": getattr(rule, "R", None),
        "sigma": problem.mirror.sigma,
        "max_grad_dual": report.max_grad_dual if report else trace.max_grad_dual,
        "observed_gap": report.observed_gap if report else None,
        "theorem_rhs": report.theorem_rhs if report else None,
        "corollary_rhs": report.corollary_rhs if report else None,
        "satisfied": report.satisfied if report else None,
        "status": _status(trace),
        "kind": report.kind.value if report else None,
        "n_completed": trace.n_completed,
        "certificate_violations": report.certificates.violations if report else None,
    }


def trace_rows(problem: TestProblem, trace):
    target = None
    if problem.known_opt is not None:
        opt = problem.known_opt
        target = opt.F_star if trace.composite else opt.f_star
    for i in range(trace.n_completed):
        fk = trace.f[i] + (trace.h[i] if trace.composite else 0.0)
        yield [
            str(int(trace.k[i])),
            fmt(trace.gamma[i]),
            fmt(trace.grad_dual_norm[i]),
            fmt(trace.omega[i]),
            fmt(fk - target) if target is not None else "",
            fmt(trace.ergodic[i] - target) if target is not None else "",
        ]


def _write_csv(path: Path | None, header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        path.write_text(text, encoding="utf-8")
    return text


def _fail(code: int, exc: Exception) -> int:
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def cmd_run(spec: ExperimentSpec) -> int:
    try:
        problem, cfg = spec.build()
        trace = solve(problem, cfg)
    except MirrorDescentError as exc:
        return _fail(1, exc)
    report = audit_trace(trace, problem) if problem.known_opt is not None else None
    record = report_record(spec, problem, cfg, trace, report)
    rows = list(trace_rows(problem, trace))

    if spec.out is None:
        print(json.dumps(record, indent=2))
    elif spec.format == "json":
        payload = {"report": record, "trace": [dict(zip(TRACE_HEADER, r)) for r in rows]}
        Path(spec.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    else:
        out = Path(spec.out)
        _write_csv(out, TRACE_HEADER, rows)
        out.with_suffix(".report.json").write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")

    if report is not None and not report.ok:
        print(f"error: bound audit failed: {record}", file=sys.stderr)
        return 2
    return 0


def cmd_table1(out: str | None = None) -> int:
    ks, xs, gammas = simulate_example1_nesterov(81)
    lines = ["k,x,gamma"]
    for k, x, g in zip(ks, xs, gammas):
        mark = "  *" if k in EXAMPLE1_TABLE else ""
        print(f"{k:3d}  {x: .15g}  {g:.15g}{mark}")
        lines.append(f"{k},{fmt(x)},{fmt(g)}")
    if out is not None:
        Path(out).write_text("\n".join(lines) + "\n", encoding="utf-8")

    for k, (x_ref, g_ref) in EXAMPLE1_TABLE.items():
        x, g = xs[k - 1], gammas[k - 1]
        if not (math.isclose(x, x_ref, rel_tol=TABLE1_RTOL) and math.isclose(g, g_ref, rel_tol=TABLE1_RTOL)):
            print(f"mismatch at k={k}: got x={x!r} gamma={g!r}, expected x={x_ref!r} gamma={g_ref!r}", file=sys.stderr)
            return 2
    rises = [k for k in range(1, len(gammas)) if gammas[k] > gammas[k - 1]]
    if not rises:
        print("no step-size increase found", file=sys.stderr)
        return 2
    print(f"all {len(EXAMPLE1_TABLE)} reference rows match; first step-size increase at k={rises[0] + 1}")
    return 0


SWEEP_HEADER = [
    "index", "problem", "rule", "a", "m", "N", "R",
    "observed_gap", "theorem_rhs", "satisfied", "status", "error",
]


def cmd_sweep(base: ExperimentSpec, rules, a_values, m_values, N_values, timing: bool = False) -> int:
    if not (rules and a_values and m_values and N_values):
        print("error: ConfigError: empty grid", file=sys.stderr)
        return 1
    cells = []
    for rule in rules:
        a_axis = a_values if rule == "lipschitz-free" else [None]
        for a, m, N in itertools.product(a_axis, m_values, N_values):
            cells.append((rule, a, m, N))

    rows, failed = [], False
    results: dict[tuple, list] = {}
    for index, (rule, a, m, N) in enumerate(cells):
        spec = ExperimentSpec.from_dict({**base.to_dict(), "rule": rule, "a": a if a is not None else 0.0, "m": m, "N": N})
        start = time.perf_counter()
        row = [str(index), spec.problem_name(), rule, fmt(a), fmt(m), str(N)]
        try:
            problem, cfg = spec.build()
            trace = solve(problem, cfg)
            report = audit_trace(trace, problem)
        except MirrorDescentError as exc:
            row += ["", "", "", "", "", f"{type(exc).__name__}: {exc}"]
        else:
            ok = report.ok
            failed |= not ok
            row += [
                fmt(getattr(cfg.rule, "R", None)),
                fmt(report.observed_gap),
                fmt(report.theorem_rhs),
                "" if report.satisfied is None else str(ok).lower(),
                _status(trace),
                "" if report.certificates.violations == 0 else f"{report.certificates.violations} certificate violations",
            ]
            results.setdefault((rule, a, m), []).append((N, report.observed_gap))
        if timing:
            row.append(fmt(time.perf_counter() - start))
        rows.append(row)

    header = SWEEP_HEADER + (["wall_time"] if timing else [])
    out = Path(base.out) if base.out else None
    text = _write_csv(out, header, rows)
    if out is None:
        print(text, end="")

    rate_rows = []
    for (rule, a, m), pts in results.items():
        try:
            slope, err = fmt(empirical_rate(sorted(pts))), ""
        except MirrorDescentError as exc:
            slope, err = "", f"{type(exc).__name__}: {exc}"
        rate_rows.append([rule, fmt(a), fmt(m), slope, err])
    rates_text = _write_csv(out.with_suffix(".rates.csv") if out else None, ["rule", "a", "m", "slope", "error"], rate_rows)
    if out is None:
        print(rates_text, end="")
    return 2 if failed else 0


# --------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(float(t)) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="md", description="Lipschitz-free mirror descent experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid: bool):
        p.add_argument("--problem", default="example1")
        p.add_argument("--rule", default="lipschitz-free")
        p.add_argument("--a", default="0" if grid else 0.0, type=str if grid else float)
        p.add_argument("--R", type=float)
        p.add_argument("--m", default="0" if grid else 0.0, type=str if grid else float)
        p.add_argument("--N", default="100" if grid else 100, type=str if grid else int)
        p.add_argument("--gamma0", type=float)
        p.add_argument("--geometry", choices=sorted(GEOMETRIES))
        p.add_argument("--eps-floor", type=float)
        p.add_argument("--out")
        p.add_argument("--format", default="csv", choices=["csv", "json"])
        p.add_argument("--seed", type=int)

    common(sub.add_parser("run", help="run one experiment and audit it"), grid=False)
    t = sub.add_parser("table1", help="reproduce the Nesterov step-size counterexample")
    t.add_argument("--out")
    s = sub.add_parser("sweep", help="grid over rules, a, m and N (comma-separated lists)")
    common(s, grid=True)
    s.add_argument("--timing", action="store_true", help="append a wall_time column")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "table1":
        return cmd_table1(args.out)

    if args.command == "run":
        spec = ExperimentSpec(
            problem=args.problem, rule=args.rule, a=args.a, R=args.R, m=args.m, N=args.N,
            gamma0=args.gamma0, geometry=args.geometry, eps_floor=args.eps_floor,
            out=args.out, format=args.format, seed=args.seed,
        )
        return cmd_run(spec)

    try:
        rules = [r.strip() for r in args.rule.split(",") if r.strip()]
        a_values, m_values, N_values = _floats(args.a), _floats(args.m), _ints(args.N)
    except ValueError as exc:
        return _fail(1, ConfigError(str(exc)))
    base = ExperimentSpec(
        problem=args.problem, R=args.R, gamma0=args.gamma0, geometry=args.geometry,
        eps_floor=args.eps_floor, out=args.out, format=args.format, seed=args.seed,
    )
    return cmd_sweep(base, rules, a_values, m_values, N_values, timing=args.timing)


if __name__ == "__main__":
    raise SystemExit(main())
