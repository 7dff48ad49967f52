"""Report builders: term tables, history series (CSV/SVG), grouped statistics, indicator checks.

Every artifact is a pure function of store contents and config, so reruns are
byte-identical. Standard deviations are population deviations. A changeset's
maturity is the mean over its POU results that carry a metric-relevant change;
a changeset touching POUs on two levels counts in both level groups.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

from micose.catalog import CATEGORY_ORDER
from micose.maturity import MaturityResult
from micose.metrics import ClassicMetrics, format_percent, percent_change
from micose.store import ARCHITECTURAL_LEVELS, LIFECYCLE_PHASES, ChangesetRecord, PouHistory

HOLDS, VIOLATED, INSUFFICIENT = "HOLDS", "VIOLATED", "INSUFFICIENT-DATA"
GROUP_KEYS = ("category", "level", "phase", "change-number")

CATEGORY_COLORS = {"Functional": "#d62728", "Structural": "#ff7f0e", "Operator": "#1f77b4"}
LIGHT_COLORS = {"green": "#2ca02c", "yellow": "#e6b800", "red": "#d62728"}


def _fmt(x: float) -> str:
    return repr(float(x))


def mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def pstdev(values: Sequence[float]) -> float:
    mu = mean(values)
    return math.sqrt(math.fsum((v - mu) ** 2 for v in values) / len(values))


# ---- single analysis -------------------------------------------------------

TERM_COLUMNS = ("term", "category", "changed", "before", "ratio", "w", "delta")


def term_rows(result: MaturityResult) -> List[dict]:
    return [{"term": td.term_id, "category": td.category, "changed": td.changed,
             "before": td.before_total, "ratio": td.ratio, "w": td.w, "delta": td.delta}
            for td in result.term_deltas]


METRIC_NAMES = (("sloc", "LOC"), ("mccabe", "McCabe"), ("halstead_difficulty", "Halstead difficulty"),
                ("fan_in", "Fan-in"), ("fan_out", "Fan-out"))


def baseline_rows(before: ClassicMetrics, after: ClassicMetrics) -> List[dict]:
    rows = []
    for attr, label in METRIC_NAMES:
        b, a = getattr(before, attr), getattr(after, attr)
        pc = percent_change(b, a)
        rows.append({"metric": label, "before": b, "after": a, "percent_change": pc,
                     "display": format_percent(pc)})
    return rows


def render_analysis_text(result: MaturityResult, before: ClassicMetrics, after: ClassicMetrics,
                         pou_name: str, explain: bool = False) -> str:
    out = [f"POU {pou_name}"]
    if result.term_deltas:
        out.append(f"{'term':36} {'category':10} {'chg':>4} {'bef':>4} {'ratio':>6} {'w':>6} {'delta':>7}")
        for r in term_rows(result):
            out.append(f"{r['term']:36} {r['category']:10} {r['changed']:>4} {r['before']:>4} "
                       f"{r['ratio']:6.3f} {r['w']:6.3f} {r['delta']:7.4f}")
    else:
        out.append("no metric-relevant change")
    out.append("category sums: " + ", ".join(f"{c} {result.category_deltas.get(c, 0.0):.4f}"
                                              for c in CATEGORY_ORDER))
    sf = result.size_factors
    out.append(f"maturity {result.maturity:.3f} [{result.color}]  n={result.n}  "
               f"k_l={sf.k_l:.3f} k_e={sf.k_e:.3f} (SLOC {sf.sloc_basis})")
    if explain and result.term_deltas:
        total = math.fsum(td.delta for td in result.term_deltas)
        out.append("contributions to 1 - maturity:")
        for td in sorted(result.term_deltas, key=lambda t: (-t.delta, t.term_id)):
            share = td.delta / total if total else 0.0
            out.append(f"  {td.term_id:36} {td.delta / result.n:7.4f}  ({share:6.1%} of the change)")
    out.append("")
    out.append(f"{'metric':20} {'before':>10} {'after':>10}  change")
    for r in baseline_rows(before, after):
        out.append(f"{r['metric']:20} {r['before']:>10.6g} {r['after']:>10.6g}  {r['display']}")
    return "\n".join(out) + "\n"


# ---- history ---------------------------------------------------------------

HISTORY_COLUMNS = ("change_number", "changeset_id", "phase", "maturity", "color",
                   "delta_functional", "delta_structural", "delta_operator", "functional_share",
                   "changed_functional", "changed_structural", "changed_operator")


def history_rows(history: PouHistory) -> List[dict]:
    rows = []
    for e in history:
        mr = e.result.maturity
        cd, cc = mr.category_deltas, mr.category_changed
        total = math.fsum(cd.values())
        rows.append({
            "change_number": e.change_number, "changeset_id": e.record.changeset_id,
            "phase": e.record.lifecycle_phase or "", "maturity": mr.maturity, "color": mr.color,
            "delta_functional": cd.get("Functional", 0.0), "delta_structural": cd.get("Structural", 0.0),
            "delta_operator": cd.get("Operator", 0.0),
            "functional_share": cd.get("Functional", 0.0) / total if total else 0.0,
            "changed_functional": cc.get("Functional", 0), "changed_structural": cc.get("Structural", 0),
            "changed_operator": cc.get("Operator", 0), "n": mr.n,
        })
    return rows


def to_csv(rows: Iterable[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()


def history_svg(history: PouHistory, width: int = 720, height: int = 360) -> str:
    """Stacked per-category bars of each change's share of ``1 - maturity`` plus the maturity line."""
    rows = history_rows(history)
    left, right, top, bottom = 56, 150, 32, 44
    pw, ph = width - left - right, height - top - bottom
    slot = pw / max(len(rows), 1)
    bar = max(slot * 0.7, 1.0)
    y = lambda v: top + ph * (1.0 - v)  # noqa: E731
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f"<title>Maturity history of {escape(history.pou_name)}</title>",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{left}" y="18" font-size="13">Maturity history: {escape(history.pou_name)}</text>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(f'<line x1="{left}" y1="{y(tick):.2f}" x2="{left + pw}" y2="{y(tick):.2f}" '
                     f'stroke="#dddddd"/>')
        parts.append(f'<text x="{left - 6}" y="{y(tick) + 4:.2f}" text-anchor="end">{tick:.2f}</text>')
    points = []
    for i, r in enumerate(rows):
        x0 = left + i * slot + (slot - bar) / 2
        base = 0.0
        for cat, key in zip(CATEGORY_ORDER, ("delta_functional", "delta_structural", "delta_operator")):
            h = r[key] / r["n"] if r["n"] else 0.0
            if h > 0:
                parts.append(f'<rect x="{x0:.2f}" y="{y(base + h):.2f}" width="{bar:.2f}" '
                             f'height="{ph * h:.2f}" fill="{CATEGORY_COLORS[cat]}">'
                             f'<title>{escape(r["changeset_id"])} {cat}: {h:.4f}</title></rect>')
            base += h
        cx = left + (i + 0.5) * slot
        points.append((cx, y(r["maturity"]), r))
        if len(rows) <= 40 or i % max(len(rows) // 20, 1) == 0:
            parts.append(f'<text x="{cx:.2f}" y="{top + ph + 14}" text-anchor="middle">'
                         f'{r["change_number"]}</text>')
    if points:
        path = " ".join(f"{x:.2f},{yy:.2f}" for x, yy, _ in points)
        parts.append(f'<polyline points="{path}" fill="none" stroke="#333333" stroke-width="1.5"/>')
        for x, yy, r in points:
            parts.append(f'<circle cx="{x:.2f}" cy="{yy:.2f}" r="3.5" fill="{LIGHT_COLORS[r["color"]]}" '
                         f'stroke="#333333"><title>{escape(r["changeset_id"])}: maturity '
                         f'{r["maturity"]:.3f} ({r["color"]})</title></circle>')
    parts.append(f'<text x="{left + pw / 2:.2f}" y="{height - 8}" text-anchor="middle">change number</text>')
    lx = left + pw + 16
    legend = [(CATEGORY_COLORS[c], f"{c} delta / n") for c in CATEGORY_ORDER]
    legend += [(LIGHT_COLORS[c], f"maturity ({c})") for c in ("green", "yellow", "red")]
    for k, (color, label) in enumerate(legend):
        ly = top + 8 + k * 18
        parts.append(f'<rect x="{lx}" y="{ly}" width="12" height="12" fill="{color}"/>')
        parts.append(f'<text x="{lx + 18}" y="{ly + 10}">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---- grouped statistics ----------------------------------------------------

@dataclass(frozen=True)
class GroupStat:
    key: str
    count: int
    mean: float
    sigma: float


def changeset_maturity(record: ChangesetRecord, level: Optional[str] = None) -> Optional[float]:
    vals = [r.maturity.maturity for r in record.relevant_results(level).values()]
    return mean(vals) if vals else None


def _grouped(pairs: Iterable[Tuple[str, float]], order: Sequence[str]) -> List[GroupStat]:
    buckets: Dict[str, List[float]] = {}
    for key, v in pairs:
        buckets.setdefault(key, []).append(v)
    rank = {k: i for i, k in enumerate(order)}
    keys = sorted(buckets, key=lambda k: (rank.get(k, len(rank)), k))
    return [GroupStat(k, len(buckets[k]), mean(buckets[k]), pstdev(buckets[k])) for k in keys]


def scatter_points(histories: Iterable[PouHistory]) -> List[dict]:
    pts = []
    for h in histories:
        for e in h:
            pts.append({"pou": h.pou_name, "change_number": e.change_number,
                        "changeset_id": e.record.changeset_id, "maturity": e.result.maturity.maturity})
    pts.sort(key=lambda p: (p["change_number"], p["pou"].lower(), p["changeset_id"]))
    return pts


def split_halves(points: Sequence[dict]) -> Tuple[List[dict], List[dict]]:
    """First half: change numbers up to half the largest one; second half: the rest."""
    if not points:
        return [], []
    cut = max(p["change_number"] for p in points) / 2.0
    return ([p for p in points if p["change_number"] <= cut],
            [p for p in points if p["change_number"] > cut])


@dataclass
class StatsReport:
    group_by: str
    groups: List[GroupStat]
    scatter: List[dict] = field(default_factory=list)
    halves: Optional[Dict[str, Optional[float]]] = None


def group_stats(records: Sequence[ChangesetRecord], group_by: str,
                histories: Sequence[PouHistory] = ()) -> StatsReport:
    if group_by not in GROUP_KEYS:
        raise ValueError(f"unknown group key {group_by!r}; expected one of {', '.join(GROUP_KEYS)}")
    if group_by == "category":
        pairs = [(r.category, m) for r in records if (m := changeset_maturity(r)) is not None]
        return StatsReport(group_by, _grouped(pairs, ("Enhancement", "BugFix", "Feature", "Development", "Other")))
    if group_by == "phase":
        pairs = [(r.lifecycle_phase, m) for r in records
                 if r.lifecycle_phase and (m := changeset_maturity(r)) is not None]
        return StatsReport(group_by, _grouped(pairs, LIFECYCLE_PHASES))
    if group_by == "level":
        pairs = []
        for r in records:
            for level in r.levels:
                m = changeset_maturity(r, level)
                if m is not None:
                    pairs.append((level, m))
        return StatsReport(group_by, _grouped(pairs, ARCHITECTURAL_LEVELS))
    pts = scatter_points(histories)
    groups = _grouped(((str(p["change_number"]), p["maturity"]) for p in pts),
                      [str(n) for n in sorted({p["change_number"] for p in pts})])
    first, second = split_halves(pts)
    halves = {
        "first_count": len(first), "second_count": len(second),
        "first_variance": pstdev([p["maturity"] for p in first]) ** 2 if first else None,
        "second_variance": pstdev([p["maturity"] for p in second]) ** 2 if second else None,
    }
    return StatsReport(group_by, groups, pts, halves)


STATS_COLUMNS = ("group", "count", "mean", "sigma")
SCATTER_COLUMNS = ("pou", "change_number", "changeset_id", "maturity")


def stats_rows(report: StatsReport) -> List[dict]:
    return [{"group": g.key, "count": g.count, "mean": g.mean, "sigma": g.sigma} for g in report.groups]


def render_stats_text(report: StatsReport) -> str:
    out = [f"{report.group_by:16} {'count':>6} {'mean':>8} {'sigma':>8}"]
    for g in report.groups:
        out.append(f"{g.key:16} {g.count:>6} {g.mean:8.4f} {g.sigma:8.4f}")
    if report.halves is not None:
        h = report.halves
        fv = "n/a" if h["first_variance"] is None else f"{h['first_variance']:.6f}"
        sv = "n/a" if h["second_variance"] is None else f"{h['second_variance']:.6f}"
        out.append(f"variance first half {fv} (n={h['first_count']}), "
                   f"second half {sv} (n={h['second_count']})")
    return "\n".join(out) + "\n"


# ---- indicators ------------------------------------------------------------

@dataclass(frozen=True)
class IndicatorVerdict:
    name: str
    statement: str
    verdict: str
    values: Tuple[Tuple[str, float], ...] = ()

    def to_dict(self) -> dict:
        return {"indicator": self.name, "statement": self.statement, "verdict": self.verdict,
                "values": {k: v for k, v in self.values}}


def _strictly_decreasing(values: Sequence[float]) -> bool:
    return all(a > b for a, b in zip(values, values[1:]))


def _ordered_verdict(name, statement, means: Dict[str, float], order: Sequence[str]) -> IndicatorVerdict:
    present = [(k, means[k]) for k in order if k in means]
    if len(present) < 2:
        return IndicatorVerdict(name, statement, INSUFFICIENT, tuple(present))
    ok = _strictly_decreasing([v for _, v in present])
    return IndicatorVerdict(name, statement, HOLDS if ok else VIOLATED, tuple(present))


def check_indicators(records: Sequence[ChangesetRecord], histories: Sequence[PouHistory]) -> List[IndicatorVerdict]:
    """Empirical checks on the analysed corpus; verdicts describe the data, not the metric."""
    by_level: Dict[str, List[float]] = {}
    by_phase: Dict[str, List[float]] = {}
    by_cat: Dict[str, List[float]] = {}
    func_sum: Dict[str, List[float]] = {}
    all_sum: Dict[str, List[float]] = {}
    for rec in records:
        m = changeset_maturity(rec)
        if m is None:
            continue
        by_cat.setdefault(rec.category, []).append(1.0 - m)
        for level in rec.levels:
            lm = changeset_maturity(rec, level)
            if lm is not None:
                by_level.setdefault(level, []).append(1.0 - lm)
        if rec.lifecycle_phase:
            by_phase.setdefault(rec.lifecycle_phase, []).append(1.0 - m)
            for res in rec.relevant_results().values():
                cd = res.maturity.category_deltas
                func_sum.setdefault(rec.lifecycle_phase, []).append(cd.get("Functional", 0.0))
                all_sum.setdefault(rec.lifecycle_phase, []).append(math.fsum(cd.values()))
    verdicts = [
        _ordered_verdict("level", "mean change impact decreases from higher to lower architectural levels",
                         {k: mean(v) for k, v in by_level.items()}, ARCHITECTURAL_LEVELS),
        _ordered_verdict("phase", "mean change impact decreases over the lifecycle (Design > StartUp > Operation)",
                         {k: mean(v) for k, v in by_phase.items()}, LIFECYCLE_PHASES),
    ]
    cat_means = {k: mean(v) for k, v in by_cat.items() if k in ("BugFix", "Feature")}
    if len(cat_means) < 2:
        verdicts.append(IndicatorVerdict("category", "bug fixes have lower change impact than features",
                                         INSUFFICIENT, tuple(sorted(cat_means.items()))))
    else:
        ok = cat_means["BugFix"] < cat_means["Feature"]
        verdicts.append(IndicatorVerdict("category", "bug fixes have lower change impact than features",
                                         HOLDS if ok else VIOLATED,
                                         (("BugFix", cat_means["BugFix"]), ("Feature", cat_means["Feature"]))))
    first, second = split_halves(scatter_points(histories))
    stmt = "later changes of a POU have lower change impact than earlier ones"
    if not first or not second:
        verdicts.append(IndicatorVerdict("change-number", stmt, INSUFFICIENT))
    else:
        m1 = mean([1.0 - p["maturity"] for p in first])
        m2 = mean([1.0 - p["maturity"] for p in second])
        verdicts.append(IndicatorVerdict("change-number", stmt, HOLDS if m2 < m1 else VIOLATED,
                                         (("first-half", m1), ("second-half", m2))))
    shares = {}
    for ph in func_sum:
        denom = math.fsum(all_sum[ph])
        if denom > 0:
            shares[ph] = math.fsum(func_sum[ph]) / denom
    verdicts.append(_ordered_verdict("functional-share",
                                     "share of functional change impact decreases over the lifecycle",
                                     shares, LIFECYCLE_PHASES))
    return verdicts


def render_indicators_text(verdicts: Sequence[IndicatorVerdict]) -> str:
    out = []
    for v in verdicts:
        vals = ", ".join(f"{k} {x:.4f}" for k, x in v.values) or "no data"
        out.append(f"{v.name:16} {v.verdict:18} {vals}")
        out.append(f"{'':16} {v.statement}")
    return "\n".join(out) + "\n"

