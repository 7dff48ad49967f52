"""``micose`` command line: analyze, history, stats, check-indicators, backfill, hook.

Exit codes: 0 success, 1 (configurable) a red result under ``--fail-on-red``,
2 usage, parse or analysis errors, 3 history store locked.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

from micose.catalog import Catalog, dump_catalog, load_catalog
from micose.config import RunConfig, load_config
from micose.errors import MicoseError, ParseError, StoreLockedError
from micose.frontend import parse_pou, split_pous
from micose.maturity import RED
from micose.pipeline import EXIT_LOCKED, EXIT_OK, EXIT_USAGE, analyze_pair, backfill, hook_run
from micose.reports import (
    GROUP_KEYS, HISTORY_COLUMNS, SCATTER_COLUMNS, STATS_COLUMNS, TERM_COLUMNS, baseline_rows,
    check_indicators, group_stats, history_rows, history_svg, render_analysis_text,
    render_indicators_text, render_stats_text, stats_rows, term_rows, to_csv,
)
from micose.store import CHANGE_CATEGORIES, HistoryStore
from micose.vcs import decode_source, install_hook, open_source


def _global_options() -> argparse.ArgumentParser:
    # SUPPRESS lets the same flags appear before or after the subcommand
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--config", default=argparse.SUPPRESS, help="run config YAML (else $MICOSE_CONFIG)")
    g.add_argument("--catalog", default=argparse.SUPPRESS, help="change-term catalog YAML")
    g.add_argument("--store", default=argparse.SUPPRESS, help="history store (.micose/history.jsonl)")
    g.add_argument("--format", choices=("text", "csv", "json"), default=argparse.SUPPRESS)
    g.add_argument("--mode", choices=("enhanced", "legacy"), default=argparse.SUPPRESS)
    g.add_argument("--fail-on-red", action="store_true", default=argparse.SUPPRESS,
                   help="exit nonzero when any POU is red")
    return g


def build_parser() -> argparse.ArgumentParser:
    common = _global_options()
    parser = argparse.ArgumentParser(prog="micose", parents=[common],
                                     description="Criticality-aware maturity analysis for IEC 61131-3 ST.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="score one before/after file pair")
    p.add_argument("before")
    p.add_argument("after")
    p.add_argument("--pou", help="POU to analyse when the files hold several")
    p.add_argument("--explain", action="store_true", help="print per-term contributions")

    p = sub.add_parser("history", parents=[common], help="maturity series of one POU")
    p.add_argument("pou")
    p.add_argument("--csv", dest="csv_path", help="write the series CSV here")
    p.add_argument("--svg", dest="svg_path", help="write the standalone SVG chart here")

    p = sub.add_parser("stats", parents=[common], help="grouped maturity statistics")
    p.add_argument("--group-by", required=True, choices=GROUP_KEYS)
    p.add_argument("--scatter", dest="scatter_path", help="change-number mode: write scatter CSV")

    sub.add_parser("check-indicators", parents=[common], help="empirical indicator checks")

    p = sub.add_parser("backfill", parents=[common], help="analyse the whole history of a source")
    p.add_argument("source", nargs="?", default=".", help="git work tree or snapshot directory")
    p.add_argument("--path", help="restrict to one file path")

    p = sub.add_parser("hook", parents=[common], help="post-commit entry point")
    p.add_argument("--rev", default="HEAD")
    p.add_argument("--repo", default=".")
    p.add_argument("--category", choices=CHANGE_CATEGORIES, help="override the change category")
    p.add_argument("--install", action="store_true", help="install the post-commit hook and exit")

    sub.add_parser("catalog", parents=[common], help="print the effective change-term catalog as YAML")
    return parser


class _Context:
    def __init__(self, args):
        self.args = args
        cfg = load_config(getattr(args, "config", None))
        self.config: RunConfig = cfg.with_overrides(
            mode=getattr(args, "mode", None),
            fail_on_red=True if getattr(args, "fail_on_red", False) else None,
            store_path=getattr(args, "store", None),
        )
        self.format = getattr(args, "format", "text")

    @property
    def catalog(self) -> Catalog:
        path = getattr(self.args, "catalog", None)
        if path and not os.path.exists(path):
            raise MicoseError(f"catalog file not found: {path}")
        return load_catalog(path or self.config.catalog_path)

    @property
    def store(self) -> HistoryStore:
        return HistoryStore(self.config.store_path, self.config.lock_timeout_s)


def _read_units(path: str):
    with open(path, "rb") as fh:
        text, fallback = decode_source(fh.read(), path)
    if fallback:
        print(f"warning: {path}: not UTF-8, decoded as Windows-1252", file=sys.stderr)
    return {p.name.lower(): p for p in map(parse_pou, split_pous(text))}


def cmd_analyze(ctx: _Context) -> int:
    a = ctx.args
    before_units, after_units = _read_units(a.before), _read_units(a.after)
    failed = False
    for label, units in (("before", before_units), ("after", after_units)):
        for pou in units.values():
            for d in pou.diagnostics:
                failed = True
                print(f"{getattr(a, label)}:{d.line}: {d.message}", file=sys.stderr)
    if failed:
        return EXIT_USAGE
    if a.pou:
        names = [a.pou.lower()]
        missing = [n for n in names if n not in before_units or n not in after_units]
        if missing:
            print(f"error: POU {a.pou} not present in both files", file=sys.stderr)
            return EXIT_USAGE
    elif len(before_units) == 1 and len(after_units) == 1:
        names = list(after_units)
        if names != list(before_units):
            b, f = next(iter(before_units.values())), next(iter(after_units.values()))
            print(f"error: POU name mismatch: {b.name} vs {f.name}", file=sys.stderr)
            return EXIT_USAGE
    else:
        names = [n for n in after_units if n in before_units]
        if not names:
            print("error: the files share no POU", file=sys.stderr)
            return EXIT_USAGE
    catalog = ctx.catalog
    any_red = False
    payload, chunks = [], []
    for name in names:
        before, after = before_units[name], after_units[name]
        result, _ = analyze_pair(before, after, catalog, ctx.config,
                                 before_units.values(), after_units.values())
        mr = result.maturity
        any_red = any_red or mr.color == RED
        if ctx.format == "json":
            payload.append({"pou": after.name, "maturity_result": mr.to_dict(),
                            "metrics_before": result.metrics_before.to_dict(),
                            "metrics_after": result.metrics_after.to_dict(),
                            "baseline_comparison": baseline_rows(result.metrics_before, result.metrics_after)})
        elif ctx.format == "csv":
            chunks.append(to_csv(({**r, "pou": after.name} for r in term_rows(mr)), ("pou",) + TERM_COLUMNS))
        else:
            chunks.append(render_analysis_text(mr, result.metrics_before, result.metrics_after,
                                               after.name, explain=a.explain))
    if ctx.format == "json":
        sys.stdout.write(json.dumps(payload if len(payload) > 1 else payload[0], indent=2, sort_keys=True) + "\n")
    elif ctx.format == "csv":
        sys.stdout.write(chunks[0] + "".join(c.split("\n", 1)[1] for c in chunks[1:]))
    else:
        sys.stdout.write("\n".join(chunks))
    return ctx.config.red_exit_code if ctx.config.fail_on_red and any_red else EXIT_OK


def _write(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def cmd_history(ctx: _Context) -> int:
    a = ctx.args
    hist = ctx.store.history(a.pou)
    rows = history_rows(hist)
    csv_text = to_csv(rows, HISTORY_COLUMNS)
    if a.csv_path:
        _write(a.csv_path, csv_text)
    if a.svg_path:
        if rows:
            _write(a.svg_path, history_svg(hist))
        else:
            print(f"{a.pou}: empty history, no SVG written", file=sys.stderr)
    if ctx.format == "json":
        sys.stdout.write(json.dumps({"pou": a.pou, "series": rows}, indent=2, sort_keys=True) + "\n")
    elif ctx.format == "csv" or a.csv_path is None:
        if ctx.format == "text" and rows:
            for r in rows:
                print(f"{r['change_number']:>4} {r['changeset_id'][:12]:12} {r['maturity']:.3f} "
                      f"[{r['color']}] F={r['delta_functional']:.3f} S={r['delta_structural']:.3f} "
                      f"O={r['delta_operator']:.3f}")
        else:
            sys.stdout.write(csv_text)
    return EXIT_OK


def cmd_stats(ctx: _Context) -> int:
    a = ctx.args
    store = ctx.store
    histories = [store.history(n) for n in store.pou_names()] if a.group_by == "change-number" else []
    report = group_stats(store.records(), a.group_by, histories)
    if a.scatter_path:
        if a.group_by != "change-number":
            print("error: --scatter needs --group-by change-number", file=sys.stderr)
            return EXIT_USAGE
        _write(a.scatter_path, to_csv(report.scatter, SCATTER_COLUMNS))
    if ctx.format == "json":
        sys.stdout.write(json.dumps({"group_by": a.group_by, "groups": stats_rows(report),
                                     "halves": report.halves}, indent=2, sort_keys=True) + "\n")
    elif ctx.format == "csv":
        sys.stdout.write(to_csv(stats_rows(report), STATS_COLUMNS))
    else:
        sys.stdout.write(render_stats_text(report))
    return EXIT_OK


def cmd_check_indicators(ctx: _Context) -> int:
    store = ctx.store
    verdicts = check_indicators(store.records(), [store.history(n) for n in store.pou_names()])
    if ctx.format == "json":
        sys.stdout.write(json.dumps([v.to_dict() for v in verdicts], indent=2, sort_keys=True) + "\n")
    elif ctx.format == "csv":
        rows = [{"indicator": v.name, "verdict": v.verdict,
                 "values": ";".join(f"{k}={x!r}" for k, x in v.values)} for v in verdicts]
        sys.stdout.write(to_csv(rows, ("indicator", "verdict", "values")))
    else:
        sys.stdout.write(render_indicators_text(verdicts))
    return EXIT_OK


def cmd_backfill(ctx: _Context) -> int:
    a = ctx.args
    source = open_source(a.source, ctx.config.file_pattern)
    report = backfill(source, ctx.store, ctx.catalog, ctx.config, a.path)
    summary = {"analyzed": report.analyzed, "baselines": report.baselines,
               "skipped": report.skipped, "failed": len(report.failures)}
    if ctx.format == "json":
        sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    else:
        print(", ".join(f"{k} {v}" for k, v in summary.items()))
    return EXIT_OK


def cmd_hook(ctx: _Context) -> int:
    a = ctx.args
    if a.install:
        print(install_hook(a.repo, gate=ctx.config.fail_on_red))
        return EXIT_OK
    source = open_source(a.repo, ctx.config.file_pattern)
    return hook_run(source, a.rev, ctx.store, ctx.catalog, ctx.config, a.category).exit_status


def cmd_catalog(ctx: _Context) -> int:
    sys.stdout.write(dump_catalog(ctx.catalog))
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze, "history": cmd_history, "stats": cmd_stats,
    "check-indicators": cmd_check_indicators, "backfill": cmd_backfill, "hook": cmd_hook,
    "catalog": cmd_catalog,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](_Context(args))
    except StoreLockedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LOCKED
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MicoseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
