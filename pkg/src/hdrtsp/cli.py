"""``hdrtsp`` command line: solve, generate, validate, oracle, bench."""
from __future__ import annotations

import argparse
import logging
import os
import sys
import traceback
from pathlib import Path

from . import __version__
from .core import validate_tour
from .errors import (ContractViolation, MalformedFileError, SizeLimitError,
                     UnsupportedFormatError)
from .hierarchy import RepairConfig, SolverConfig, hdr_solve
from .init import InitConfig
from .io import generate_instance, parse_tour, parse_tsplib, write_tour, write_tsplib
from .repair import ENGINES, HELD_KARP_LIMIT, held_karp_tour
from .report import RunRecord, gap_percent, gap_ratio, report_results

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FILE = 3
EXIT_INVALID = 4
EXIT_SIZE = 5
EXIT_INTERNAL = 70

log = logging.getLogger("hdrtsp")


class _Usage(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("HDR_SEED")
    if raw is None or raw == "":
        return 1
    try:
        return int(raw)
    except ValueError:
        raise _Usage(f"HDR_SEED must be an integer, got {raw!r}") from None


def _solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--time-limit", type=float, default=None, metavar="SECONDS")
    g.add_argument("--m", type=int, default=500, help="edges deleted per destroy (default 500)")
    g.add_argument("--k", type=int, default=10, help="local optima per level (default 10)")
    g.add_argument("--l-divisor", type=float, default=90, help="rounds per run = n/L (default 90)")
    g.add_argument("--direct-threshold", type=int, default=500,
                   help="solve a level directly below this many vertices (default 500)")
    g.add_argument("--seed", type=int, default=None, help="default 1, or $HDR_SEED")
    g.add_argument("--threads", type=int, default=1)
    g.add_argument("--no-hierarchy", action="store_true", help="flat destroy-repair (HDR-V1)")
    g.add_argument("--repair-engine", default="ils", choices=sorted(ENGINES))
    g.add_argument("--repair-budget", type=int, default=40,
                   help="move evaluations per sub-problem vertex (default 40)")
    g.add_argument("--passes", type=int, default=None,
                   help="hierarchy passes; 0 repeats until the time limit (default 1)")
    g.add_argument("--init-samples-exponent", type=float, default=2 / 3)
    g.add_argument("--init-window-subpaths", type=int, default=3)
    g.add_argument("--figures", type=Path, default=None, metavar="DIR",
                   help="write tour and convergence plots into DIR")


def _config(a, seed=None, hierarchy=None, passes=None) -> SolverConfig:
    if a.seed is None:
        a.seed = _default_seed()
    if a.threads < 1:
        raise _Usage("--threads must be >= 1")
    if a.time_limit is not None and a.time_limit < 0:
        raise _Usage("--time-limit must be >= 0")
    if a.init_window_subpaths < 1 or not 0 < a.init_samples_exponent <= 1:
        raise _Usage("bad init settings")
    cfg = SolverConfig(
        m=a.m, k=a.k, l_divisor=a.l_divisor, direct_solve_threshold=a.direct_threshold,
        deadline=a.time_limit, seed=a.seed if seed is None else seed,
        hierarchy_enabled=not a.no_hierarchy if hierarchy is None else hierarchy,
        threads=min(a.threads, max(1, a.k)),
        max_passes=(a.passes if a.passes is not None else 1) if passes is None else passes,
        repair=RepairConfig(engine=a.repair_engine, budget_factor=a.repair_budget),
        init=InitConfig(samples_exponent=a.init_samples_exponent,
                        window_subpaths=a.init_window_subpaths),
    )
    try:
        return cfg.validate()
    except ContractViolation as exc:
        raise _Usage(str(exc)) from None


def _stats_text(stats, cost, reference=None) -> str:
    d = stats.as_dict()
    lines = []
    head = {k: d[k] for k in ("seed", "init_cost", "best_cost", "total_rounds", "improvements",
                              "passes", "num_levels", "timed_out", "saturated")}
    head["elapsed"] = f"{stats.elapsed:.3f}"
    if reference is not None:
        head["gap"] = f"{gap_percent(cost, reference):.4f}"
    lines.append("run " + " ".join(f"{k}={v}" for k, v in head.items()))
    for lv in stats.levels:
        lines.append(f"level pass={lv.pass_no} level={lv.level} n={lv.n} rounds={lv.rounds} "
                     f"improvements={lv.improvements} fixed_edges={lv.fixed_edges} "
                     f"best_cost={lv.best_cost} direct={lv.direct} elapsed={lv.elapsed:.3f}")
    for t, c in stats.trajectory:
        lines.append(f"trajectory seconds={t:.3f} cost={c}")
    return "\n".join(lines) + "\n"


def _figures(outdir: Path, inst, tour, records, reference=None, stem="solve"):
    from .plotting import plot_convergence, plot_tour
    outdir.mkdir(parents=True, exist_ok=True)
    a = plot_tour(inst, tour, outdir / f"{stem}_tour.png")
    b = plot_convergence(records, outdir / f"{stem}_convergence.png", reference)
    print(f"figures={a},{b}")


# ---------------------------------------------------------------- commands

def cmd_solve(a) -> int:
    cfg = _config(a)
    inst = parse_tsplib(a.instance)
    tour, stats = hdr_solve(inst, cfg)
    rep = validate_tour(inst, tour)
    if not rep.ok:
        print(f"internal error: solver produced an invalid tour: {rep}", file=sys.stderr)
        return EXIT_INTERNAL
    out = a.out or Path(a.instance).with_suffix(".tour")
    write_tour(out, tour, name=inst.name, comment=f"cost {tour.cost}")
    if a.stats:
        Path(a.stats).write_text(_stats_text(stats, tour.cost, a.reference))
    line = f"cost={tour.cost} rounds={stats.total_rounds} levels={stats.num_levels} " \
           f"seconds={stats.elapsed:.2f} timed_out={stats.timed_out}"
    if a.reference is not None:
        line += f" gap={gap_percent(tour.cost, a.reference):.4f}"
    print(line)
    if a.figures:
        _figures(a.figures, inst, tour, [RunRecord.from_stats(inst.name, tour.cost, stats)],
                 a.reference)
    return EXIT_OK


def cmd_generate(a) -> int:
    if a.n < 3:
        raise _Usage("--n must be >= 3")
    seed = _default_seed() if a.seed is None else a.seed
    inst = generate_instance(a.kind, a.n, a.square, seed)
    write_tsplib(a.out, inst, comment=f"{a.kind} n={a.n} square={a.square:g} seed={seed}")
    print(f"wrote {a.out} n={inst.n}")
    return EXIT_OK


def cmd_validate(a) -> int:
    inst = parse_tsplib(a.instance)
    tour = parse_tour(a.tour, inst)
    rep = validate_tour(inst, tour)
    print(f"cost={tour.cost} {rep}")
    return EXIT_OK if rep.ok else EXIT_INVALID


def cmd_oracle(a) -> int:
    inst = parse_tsplib(a.instance)
    if inst.n > HELD_KARP_LIMIT:
        raise SizeLimitError(f"exact solver supports at most {HELD_KARP_LIMIT} vertices, got {inst.n}")
    t = held_karp_tour(inst)
    print(t.cost)
    if a.out:
        write_tour(a.out, t, name=inst.name, comment=f"optimal cost {t.cost}")
    return EXIT_OK


def cmd_bench(a) -> int:
    if a.runs < 1:
        raise _Usage("--runs must be >= 1")
    if a.instance:
        inst = parse_tsplib(a.instance)
    elif a.generate_n:
        inst = generate_instance(a.kind, a.generate_n, 1_000_000, a.instance_seed)
    else:
        raise _Usage("bench needs --instance or --generate-n")
    base = _config(a)
    modes = [("hdr", True), ("v1", False)] if a.ablation else \
            [("v1" if a.no_hierarchy else "hdr", not a.no_hierarchy)]
    # equal-time comparison: keep the hierarchy busy for the whole budget
    passes = a.passes if a.passes is not None else (0 if a.ablation and a.time_limit else 1)
    records, best = [], {}
    for r in range(a.runs):
        for mode, hier in modes:
            cfg = _config(a, seed=base.seed + r, hierarchy=hier, passes=passes)
            tour, stats = hdr_solve(inst, cfg)
            if not validate_tour(inst, tour).ok:
                print("internal error: invalid tour in bench", file=sys.stderr)
                return EXIT_INTERNAL
            rec = RunRecord.from_stats(inst.name, tour.cost, stats, mode)
            records.append(rec)
            if mode not in best or tour.cost < best[mode].cost:
                best[mode] = tour
            log.info("%s seed=%d cost=%d", mode, cfg.seed, tour.cost)
    for mode, _ in modes:
        rep = report_results([r for r in records if r.mode == mode], a.reference)
        print(rep.to_records_text())
        print()
        print(rep.to_table())
        print()
    if a.ablation:
        hdr = [r.cost for r in records if r.mode == "hdr"]
        v1 = [r.cost for r in records if r.mode == "v1"]
        ref = a.reference if a.reference is not None else min(hdr + v1)
        print(f"ablation instance={inst.name} reference={ref} "
              f"hdr_average={sum(hdr) / len(hdr):.1f} v1_average={sum(v1) / len(v1):.1f} "
              f"gap_ratio={gap_ratio(v1, hdr, ref):.4f}")
    if a.report:
        full = report_results(records, a.reference)
        Path(a.report).write_text(full.to_records_text() + "\n\n" + full.to_table() + "\n")
    if a.figures:
        mode = "hdr" if "hdr" in best else modes[0][0]
        _figures(a.figures, inst, best[mode], records, a.reference, stem="bench")
    return EXIT_OK


# ---------------------------------------------------------------- entry

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hdrtsp", description="Hierarchical destroy-and-repair TSP solver")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve a TSPLIB instance")
    s.add_argument("--instance", required=True, type=Path)
    s.add_argument("--out", type=Path, default=None, help="tour file (default: <instance>.tour)")
    s.add_argument("--stats", type=Path, default=None, help="key=value run statistics")
    s.add_argument("--reference", type=float, default=None, metavar="COST")
    _solver_flags(s)
    s.set_defaults(func=cmd_solve)

    g = sub.add_parser("generate", help="write a random instance")
    g.add_argument("--kind", choices=("uniform", "clustered"), default="uniform")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--square", type=float, default=1_000_000)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", type=Path, required=True)
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("validate", help="check a tour against an instance")
    v.add_argument("--instance", required=True, type=Path)
    v.add_argument("--tour", required=True, type=Path)
    v.set_defaults(func=cmd_validate)

    o = sub.add_parser("oracle", help=f"exact optimum (n <= {HELD_KARP_LIMIT})")
    o.add_argument("--instance", required=True, type=Path)
    o.add_argument("--out", type=Path, default=None)
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bench", help="repeated seeded solves with a gap table")
    b.add_argument("--instance", type=Path, default=None)
    b.add_argument("--generate-n", type=int, default=None, help="bench a generated instance instead")
    b.add_argument("--kind", choices=("uniform", "clustered"), default="uniform")
    b.add_argument("--instance-seed", type=int, default=0)
    b.add_argument("--runs", type=int, default=10)
    b.add_argument("--ablation", action="store_true", help="pair every run with an HDR-V1 run")
    b.add_argument("--reference", type=float, default=None, metavar="COST")
    b.add_argument("--report", type=Path, default=None)
    _solver_flags(b)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return a.func(a)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, IsADirectoryError, PermissionError,
            MalformedFileError, UnsupportedFormatError) as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_FILE
    except SizeLimitError as exc:
        print(f"size limit: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except Exception:  # pragma: no cover - last resort
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
