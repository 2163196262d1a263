"""Command line entry point.

Exit codes: 0 success, 1 runtime failure, 2 invalid config or market data,
3 malformed blocks file given to ``evaluate``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import engine, metrics, report, stats
from .agents import build_population
from .config import MODES, ConfigError, load_config
from .market_data import DataError
from .synthetic import FIXTURE_SEED, write_fixture

log = logging.getLogger("styleswitch")

RUN_OUTPUTS = (report.TRADES_FILE, report.BLOCKS_FILE, report.SCORES_FILE,
               report.REPORT_JSON, report.REPORT_MD)
EVAL_OUTPUTS = (report.SCORES_FILE, report.REPORT_JSON, report.REPORT_MD)


def _fail(code: int, msg: str) -> int:
    print(msg.splitlines()[0] if msg else "error", file=sys.stderr)
    return code


def event_stream(run_log: engine.RunLog) -> list[dict]:
    """Snapshot lines for each day followed by that day's executions."""
    by_day: dict[str, list[dict]] = {}
    for line in run_log.snapshots:
        by_day.setdefault(line["day"], []).append(line)
    for line in run_log.trades:
        by_day.setdefault(line["day"], []).append(line)
    return [line for day in sorted(by_day) for line in by_day[day]]


def score_and_report(out: Path, blocks, population, figures: bool = True):
    scores = metrics.score_all(blocks)
    results = stats.run_battery({i: vars(r) for i, r in scores.items()}, population)
    report.write_scores(out / report.SCORES_FILE, scores)
    report.write_report_json(out / report.REPORT_JSON, results)
    report.write_report_md(out / report.REPORT_MD, results)
    if figures:
        report.render_figures(out, blocks, scores, population)
    return scores, results


def cmd_run(config: Path, out: Path, mode: Optional[str] = None, seed: Optional[int] = None,
            figures: bool = True) -> int:
    try:
        cfg = load_config(config, mode=mode, seed=seed)
        data = engine.load_market(cfg)
    except ConfigError as exc:
        return _fail(2, str(exc))
    except (DataError, OSError) as exc:
        return _fail(2, f"data: {exc}")

    population = build_population()
    try:
        run_log = engine.run(cfg, data, population)
    except DataError as exc:
        return _fail(2, f"data: {exc}")
    except metrics.RegressionError as exc:
        return _fail(1, f"regression: {exc}")

    out.mkdir(parents=True, exist_ok=True)
    report.write_jsonl(out / report.TRADES_FILE, event_stream(run_log))
    report.write_blocks(out / report.BLOCKS_FILE, run_log.blocks)
    score_and_report(out, run_log.blocks, population, figures)
    for msg in run_log.policy_failures:
        log.warning("%s", msg)

    inputs = {"config": config}
    for t in list(cfg.pool) + list(cfg.auxiliary.values()):
        inputs[f"{t.ticker}.prices"] = cfg.resolve(t.prices)
        inputs[f"{t.ticker}.reports"] = cfg.resolve(t.reports)
    report.write_manifest(out, command="run", inputs=inputs, outputs=RUN_OUTPUTS,
                          config_digest=cfg.digest(), seed=cfg.seed, mode=cfg.mode,
                          extra={"policy_failures": len(run_log.policy_failures)})
    print(f"wrote {out}")
    return 0


def cmd_evaluate(blocks_path: Path, out: Path, figures: bool = True) -> int:
    population = build_population()
    try:
        blocks = report.read_blocks(blocks_path, [a.id for a in population])
    except report.BlocksError as exc:
        return _fail(3, f"blocks: {exc}")
    except OSError as exc:
        return _fail(3, f"blocks: {exc}")
    out.mkdir(parents=True, exist_ok=True)
    score_and_report(out, blocks, population, figures)
    report.write_manifest(out, command="evaluate", inputs={"blocks": blocks_path}, outputs=EVAL_OUTPUTS)
    print(f"wrote {out}")
    return 0


def cmd_fixture(out: Path, seed: int, run_seed: int, mode: str) -> int:
    path = write_fixture(out, seed=seed, run_seed=run_seed, mode=mode)
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="styleswitch", description="Trait-driven style-switching simulation.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a year and write logs, scores and reports")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--out", required=True, type=Path)
    r.add_argument("--mode", choices=MODES)
    r.add_argument("--seed", type=int)
    r.add_argument("--no-figures", action="store_true", help="skip the matplotlib figures")

    e = sub.add_parser("evaluate", help="recompute scores and reports from a blocks.jsonl")
    e.add_argument("--blocks", required=True, type=Path)
    e.add_argument("--out", required=True, type=Path)
    e.add_argument("--no-figures", action="store_true")

    f = sub.add_parser("fixture", help="write the seeded synthetic market and a config")
    f.add_argument("--out", required=True, type=Path)
    f.add_argument("--data-seed", type=int, default=FIXTURE_SEED)
    f.add_argument("--seed", type=int, default=7, help="run seed stored in the config")
    f.add_argument("--mode", choices=MODES, default="rule")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return cmd_run(args.config, args.out, args.mode, args.seed, not args.no_figures)
    if args.command == "evaluate":
        return cmd_evaluate(args.blocks, args.out, not args.no_figures)
    return cmd_fixture(args.out, args.data_seed, args.seed, args.mode)


if __name__ == "__main__":
    sys.exit(main())
