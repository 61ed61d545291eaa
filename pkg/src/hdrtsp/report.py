"""Benchmark records and gap tables (best / average / time)."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class RunRecord:
    instance: str
    seed: int
    cost: int
    seconds: float
    rounds: int = 0
    levels: int = 0
    mode: str = "hdr"
    trajectory: list = field(default_factory=list)

    @classmethod
    def from_stats(cls, instance: str, cost: int, stats, mode: str = "hdr") -> "RunRecord":
        return cls(instance, stats.seed, int(cost), float(stats.elapsed), stats.total_rounds,
                   stats.num_levels, mode, list(stats.trajectory))


def gap_percent(value, reference) -> float:
    """Relative excess over ``reference`` in percent."""
    return (float(value) - float(reference)) / float(reference) * 100.0


@dataclass
class Report:
    runs: list
    reference: float | None
    best: int
    average: float
    seconds: float
    best_gap: float | None = None
    average_gap: float | None = None

    def records(self) -> list[dict]:
        out = []
        for r in self.runs:
            d = {"instance": r.instance, "mode": r.mode, "seed": r.seed, "cost": r.cost,
                 "seconds": f"{r.seconds:.2f}", "rounds": r.rounds, "levels": r.levels}
            if self.reference is not None:
                d["gap"] = f"{gap_percent(r.cost, self.reference):.4f}"
            out.append(d)
        return out

    def summary(self) -> dict:
        d = {"runs": len(self.runs), "best": self.best, "average": f"{self.average:.1f}",
             "seconds": f"{self.seconds:.2f}"}
        if self.reference is not None:
            d["reference"] = int(self.reference) if float(self.reference).is_integer() else self.reference
            d["best_gap"] = f"{self.best_gap:.4f}"
            d["average_gap"] = f"{self.average_gap:.4f}"
        return d

    def to_records_text(self) -> str:
        """One ``key=value`` line per run, then a summary line."""
        lines = ["record " + " ".join(f"{k}={v}" for k, v in rec.items()) for rec in self.records()]
        lines.append("summary " + " ".join(f"{k}={v}" for k, v in self.summary().items()))
        return "\n".join(lines)

    def to_table(self) -> str:
        cols = ["instance", "mode", "seed", "cost"]
        if self.reference is not None:
            cols.append("gap")
        cols += ["seconds", "rounds", "levels"]
        rows = [[str(rec[c]) for c in cols] for rec in self.records()]
        best = ["best", "", "", str(self.best)]
        avg = ["average", "", "", f"{self.average:.1f}"]
        if self.reference is not None:
            best.append(f"{self.best_gap:.4f}")
            avg.append(f"{self.average_gap:.4f}")
        best += [f"{self.seconds:.2f}", "", ""]
        avg += ["", "", ""]
        rows += [best, avg]
        width = [max(len(c), *(len(r[i]) for r in rows)) for i, c in enumerate(cols)]
        fmt = lambda r: "  ".join(v.rjust(w) if i >= 2 else v.ljust(w)
                                  for i, (v, w) in enumerate(zip(r, width)))
        sep = "  ".join("-" * w for w in width)
        body = [fmt(r) for r in rows]
        return "\n".join([fmt(cols), sep] + body[:-2] + [sep] + body[-2:])

    def __str__(self) -> str:
        return self.to_table()


def report_results(runs, reference=None) -> Report:
    """Best, average and accumulated time over ``runs`` (gaps in percent)."""
    runs = list(runs)
    if not runs:
        raise ValueError("need at least one run")
    costs = [r.cost for r in runs]
    best = min(costs)
    avg = sum(costs) / len(costs)
    rep = Report(runs, reference, best, avg, sum(r.seconds for r in runs))
    if reference is not None:
        rep.best_gap = gap_percent(best, reference)
        rep.average_gap = gap_percent(avg, reference)
    return rep


def gap_ratio(v1_costs, hdr_costs, reference=None) -> float:
    """Average flat-search gap over average hierarchical gap.

    The reference defaults to the best cost seen by either mode.
    """
    ref = reference if reference is not None else min(min(v1_costs), min(hdr_costs))
    g1 = sum(gap_percent(c, ref) for c in v1_costs) / len(v1_costs)
    gh = sum(gap_percent(c, ref) for c in hdr_costs) / len(hdr_costs)
    if gh == 0:
        return float("inf") if g1 > 0 else 1.0
    return g1 / gh
