"""Command-line interface: gen, solve, bench, verify, round-sphere.

Exit codes: 0 found / verified, 2 not found / below threshold, 1 error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .amplifier import PLAN_KEYS, derive_plan, estimate_sizes
from .corevec import inner_product
from .detsolvers import solve_findcorr, solve_thm2, solve_thm3
from .errors import LightbulbError, UsageError
from .exact import ceil_times
from .instancegen import (
    KINDS,
    Instance,
    generate,
    instance_to_bytes,
    read_instance,
    vectors_from_text,
    vectors_to_text,
)
from .report import SolveReport
from .solver import solve
from .spherical import round_to_cube, sphere_from_text

EXIT_FOUND, EXIT_ERROR, EXIT_NOT_FOUND = 0, 1, 2

REPORT_CSV_COLUMNS = (
    "mode", "n", "d", "stage", "found_i", "found_j", "verified_inner_product",
    "success", "rounds", "t", "u", "muladds", "seed", "wall_ms_total",
)
BENCH_COLUMNS = (
    "mode", "n", "d", "rho", "m", "g", "k", "v", "r", "t", "u", "t_bound", "u_bound",
    "rounds", "trials", "successes", "success_rate", "wall_ms_mean", "muladds_mean",
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.replace(":", ",").split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"pair must look like 'i,j', got {text!r}") from None
    return a, b


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lightbulb", description="Correlated-pair search by group-score amplification.")
    p.add_argument("--threads", type=int, default=None, help="cap BLAS worker threads")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate an instance")
    g.add_argument("--kind", choices=KINDS, default="lightbulb")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--rho", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--w", type=float, default=3.0, help="promise width (promise kind)")
    g.add_argument("--tau", type=float, default=None, help="background bound (findcorr kind)")
    g.add_argument("--q", type=int, default=1, help="planted pairs (findcorr kind)")
    g.add_argument("--format", choices=("bin", "text"), default="bin")
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="find the correlated pair")
    s.add_argument("--instance", required=True)
    s.add_argument("--format", choices=("bin", "text"), default="bin")
    s.add_argument("--mode", choices=("thm1", "thm2", "thm3", "findcorr"), default="thm1")
    s.add_argument("--rho", type=float, default=None, help="defaults to the instance header")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--calibrate", action="store_true")
    s.add_argument("--fallback-quadratic", action="store_true")
    s.add_argument("--algorithm", choices=("auto", "classical", "strassen"), default="auto")
    for key in ("m", "v", "k", "r", "rounds"):
        s.add_argument(f"--{key}", type=int, default=None)
    s.add_argument("--tau", type=float, default=None,
                   help="plan tau override; for findcorr the background bound (default from header)")
    s.add_argument("--theta", type=float, default=None)
    s.add_argument("--rounds-factor", type=float, default=None)
    s.add_argument("--q-max", type=int, default=None)
    s.add_argument("--report-format", choices=("json", "csv"), default="json")
    s.add_argument("--no-timing", action="store_true", help="omit wall-clock fields")
    s.add_argument("--out", default=None)

    b = sub.add_parser("bench", help="sweep (n, rho) and tabulate")
    b.add_argument("--n", type=int, nargs="*", default=[1024, 2048, 4096, 8192])
    b.add_argument("--rho", type=float, nargs="*", default=[0.5])
    b.add_argument("--d", type=int, default=512)
    b.add_argument("--mode", choices=("thm1", "thm3"), default="thm1")
    b.add_argument("--trials", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--calibrate", action="store_true")
    b.add_argument("--plan-only", action="store_true", help="derive plans without solving")
    b.add_argument("--out", default=None)

    v = sub.add_parser("verify", help="check one pair against the threshold")
    v.add_argument("--instance", required=True)
    v.add_argument("--format", choices=("bin", "text"), default="bin")
    v.add_argument("--pair", type=_pair, required=True)
    v.add_argument("--rho", type=float, default=None)
    v.add_argument("--absolute", action="store_true", help="compare |<x, y>| (default for findcorr)")

    r = sub.add_parser("round-sphere", help="hyperplane-round unit vectors to sign vectors")
    r.add_argument("--input", required=True, help="text file: 'n D' header, then n rows")
    r.add_argument("--d-out", type=int, required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True, help="text sign-vector output")
    return p


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _load(path: str, fmt: str) -> Instance | None:
    """Binary instance, or a bare lightbulb instance (no header data) for text input."""
    if fmt == "bin":
        return read_instance(path)
    vs = vectors_from_text(Path(path).read_text())
    return Instance(vs, "lightbulb", float("nan"), [])


def cmd_gen(args) -> int:
    kw = dict(n=args.n, d=args.d, rho=args.rho, seed=args.seed, w=args.w, tau=args.tau, q=args.q)
    if args.kind == "findcorr" and args.tau is None:
        raise UsageError("--tau is required for findcorr instances")
    inst = generate(args.kind, **kw)
    if args.format == "bin":
        Path(args.out).write_bytes(instance_to_bytes(inst))
    else:
        Path(args.out).write_text(vectors_to_text(inst.vectors))
    print(inst.summary(), file=sys.stderr)
    return EXIT_FOUND


def _overrides(args) -> dict:
    out = {}
    for key in PLAN_KEYS:
        val = getattr(args, key, None)
        if val is not None and not (key == "tau" and args.mode == "findcorr"):
            out[key] = val
    return out


def run_solve(args) -> SolveReport:
    inst = _load(args.instance, args.format)
    rho = args.rho if args.rho is not None else inst.rho
    if rho is None or rho != rho:
        raise UsageError("--rho is required for text instances")
    vs = inst.vectors
    ov = _overrides(args)
    if args.mode == "thm1":
        plan = derive_plan(vs.n, vs.d, rho, "thm1", ov, calibrate=args.calibrate) if vs.n >= 4 else None
        rep = solve(vs, rho, plan, args.seed, fallback=args.fallback_quadratic, algorithm=args.algorithm)
    elif args.mode == "thm2":
        rep = solve_thm2(vs, rho, overrides=ov, calibrate=args.calibrate,
                         fallback=args.fallback_quadratic, algorithm=args.algorithm)
    elif args.mode == "thm3":
        rep = solve_thm3(vs, rho, overrides=ov, calibrate=args.calibrate, algorithm=args.algorithm)
    else:
        tau = args.tau if args.tau is not None else inst.tau
        if not tau:
            raise UsageError("findcorr needs --tau or a findcorr instance header")
        rep = solve_findcorr(vs, rho, tau, q_max=args.q_max, algorithm=args.algorithm)
    if inst.planted:
        rep.judge(inst.planted)
    return rep


def report_csv(rep: SolveReport, timing: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_CSV_COLUMNS)
    i, j = rep.found if rep.found is not None else ("", "")
    c = rep.counters
    w.writerow([
        rep.mode, rep.n, rep.d, rep.stage, i, j,
        "" if rep.verified_inner_product is None else rep.verified_inner_product,
        "" if rep.success is None else int(rep.success), len(rep.rounds),
        c.get("t", ""), c.get("u", ""), c.get("muladds", ""),
        "" if rep.seed is None else rep.seed,
        rep.wall_ms.get("total", "") if timing else "",
    ])
    return buf.getvalue()


def cmd_solve(args) -> int:
    rep = run_solve(args)
    timing = not args.no_timing
    text = rep.to_json(timing) + "\n" if args.report_format == "json" else report_csv(rep, timing)
    _emit(text, args.out)
    return EXIT_FOUND if rep.found is not None else EXIT_NOT_FOUND


def bench_rows(ns, rhos, d, *, mode="thm1", trials=3, seed=0, calibrate=False, plan_only=False):
    """One dict per (n, rho) cell with the BENCH_COLUMNS keys."""
    from .instancegen import gen_lightbulb, gen_promise

    rows = []
    for n in ns:
        for rho in rhos:
            plan = derive_plan(n, d, rho, mode, calibrate=calibrate)
            t_bound, u_bound = estimate_sizes(n, d, min(plan.r, d))
            done = 0 if plan_only else trials
            wins, walls, muls = 0, [], []
            for k in range(done):
                s = seed + k
                if mode == "thm1":
                    inst = gen_lightbulb(n, d, rho, s)
                    t0 = time.perf_counter()
                    rep = solve(inst.vectors, rho, plan, s)
                else:
                    inst = gen_promise(n, d, rho, 3.0, s)
                    t0 = time.perf_counter()
                    rep = solve_thm3(inst.vectors, rho, plan=plan)
                walls.append((time.perf_counter() - t0) * 1000)
                muls.append(rep.counters.get("muladds", 0))
                wins += bool(rep.judge(inst.planted))
            rows.append({
                "mode": mode, "n": n, "d": d, "rho": rho, "m": plan.m, "g": plan.g,
                "k": plan.k, "v": plan.v, "r": plan.r, "t": plan.t, "u": plan.u,
                "t_bound": f"{t_bound:.6g}", "u_bound": f"{u_bound:.6g}", "rounds": plan.rounds,
                "trials": done, "successes": wins,
                "success_rate": f"{wins / done:.4f}" if done else "",
                "wall_ms_mean": f"{np.mean(walls):.3f}" if walls else "",
                "muladds_mean": f"{np.mean(muls):.0f}" if muls else "",
            })
    return rows


def cmd_bench(args) -> int:
    rows = bench_rows(args.n, args.rho, args.d, mode=args.mode, trials=args.trials,
                      seed=args.seed, calibrate=args.calibrate, plan_only=args.plan_only)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    _emit(buf.getvalue(), args.out)
    return EXIT_FOUND


def cmd_verify(args) -> int:
    inst = _load(args.instance, args.format)
    rho = args.rho if args.rho is not None else inst.rho
    if rho is None or rho != rho:
        raise UsageError("--rho is required for text instances")
    a, b = args.pair
    vs = inst.vectors
    for idx in (a, b):
        vs.check_index(idx)
    if a == b:
        raise UsageError("pair indices must differ")
    ip = inner_product(vs, a, b)
    need = ceil_times(rho, vs.d)
    value = abs(ip) if (args.absolute or inst.kind == "findcorr") else ip
    print(json.dumps({"pair": [a, b], "inner_product": ip, "threshold": need, "ok": value >= need}))
    return EXIT_FOUND if value >= need else EXIT_NOT_FOUND


def cmd_round_sphere(args) -> int:
    points = sphere_from_text(Path(args.input).read_text())
    vs = round_to_cube(points, args.d_out, args.seed)
    Path(args.out).write_text(vectors_to_text(vs))
    return EXIT_FOUND


COMMANDS = {
    "gen": cmd_gen,
    "solve": cmd_solve,
    "bench": cmd_bench,
    "verify": cmd_verify,
    "round-sphere": cmd_round_sphere,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)
    try:
        with threadpool_limits(limits=args.threads):
            return COMMANDS[args.command](args)
    except (LightbulbError, ValueError, RuntimeError, OSError) as exc:
        print(f"lightbulb: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
