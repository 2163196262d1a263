"""Output writers: JSONL logs, score CSV, test tables, figures and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from . import __version__
from .agents import DRIVERS, AgentSpec, cohorts
from .ledger import BlockRecord
from .metrics import SCORE_COLUMNS, AgentScoreRow
from .stats import DRIVER_LABELS, DRIVER_METRIC, TestResult

TRADES_FILE = "trades.jsonl"
BLOCKS_FILE = "blocks.jsonl"
SCORES_FILE = "scores.csv"
REPORT_JSON = "report.json"
REPORT_MD = "report.md"
MANIFEST_FILE = "manifest.json"
FIGURES_DIR = "figures"


def _dump(obj) -> str:
    # repr-exact floats and sorted keys keep the files byte-stable across runs
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_jsonl(path: Path, rows: Iterable[Mapping]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(_dump(row) + "\n")


def write_blocks(path: Path, blocks: Sequence[BlockRecord]) -> None:
    write_jsonl(path, (b.to_dict() for b in sorted(blocks, key=lambda r: (r.block_index, r.agent_id))))


def write_scores(path: Path, scores: Mapping[int, AgentScoreRow]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCORE_COLUMNS)
        for aid in sorted(scores):
            w.writerow(scores[aid].as_row())


def report_dict(results: Mapping[str, TestResult]) -> dict:
    return {d: results[d].to_dict() for d in DRIVERS}


def write_report_json(path: Path, results: Mapping[str, TestResult]) -> None:
    path.write_text(json.dumps(report_dict(results), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def format_p(p: float) -> str:
    """Two decimals for large p, three in [0.01, 0.1), one significant digit below."""
    if p >= 0.1:
        return f"{p:.2f}"
    if p >= 0.01:
        return f"{p:.3f}"
    if p < 1e-6:
        return "<0.000001"
    return f"{p:.{-math.floor(math.log10(p))}f}"


def report_markdown(results: Mapping[str, TestResult], title: str = "Behavioral driver tests") -> str:
    lines = [
        f"# {title}",
        "",
        "One-sided Mann-Whitney U, aligned cohort > non-aligned cohort (n = 16 each).",
        "",
        "| Behavioral Drivers | U | p | r_b | c_d | cles |",
        "|---|---:|---:|---:|---:|---:|",
    ]
    for d in DRIVERS:
        r = results[d]
        lines.append(
            f"| {DRIVER_LABELS[d]} | {r.U:.1f} | {format_p(r.p_one_sided)} | "
            f"{r.r_rb:.2f} | {r.cliff_delta:.2f} | {r.cles:.2f} |"
        )
    return "\n".join(lines) + "\n"


def write_report_md(path: Path, results: Mapping[str, TestResult], title: str = "Behavioral driver tests") -> None:
    path.write_text(report_markdown(results, title), encoding="utf-8")


def render_figures(out_dir: Path, blocks: Sequence[BlockRecord], scores: Mapping[int, AgentScoreRow],
                   population: Sequence[AgentSpec]) -> list[Path]:
    """Cohort score distributions and the Tech population share per block."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig_dir = out_dir / FIGURES_DIR
    fig_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    fig, axes = plt.subplots(2, 2, figsize=(9, 7))
    for ax, d in zip(axes.flat, DRIVERS):
        aligned, non_aligned = cohorts(list(population), d)
        metric = DRIVER_METRIC[d]
        data = [[getattr(scores[i], metric) for i in aligned], [getattr(scores[i], metric) for i in non_aligned]]
        ax.boxplot(data, showmeans=True)
        ax.set_xticks([1, 2], ["aligned", "non-aligned"])
        for k, vals in enumerate(data, start=1):
            ax.scatter([k] * len(vals), vals, s=10, alpha=0.6)
        ax.set_title(f"{DRIVER_LABELS[d]} ({metric.upper()})")
    fig.tight_layout()
    paths.append(fig_dir / "cohort_scores.png")
    fig.savefig(paths[-1], dpi=100, metadata={"Software": None})
    plt.close(fig)

    by_block: dict[int, list[BlockRecord]] = {}
    for r in blocks:
        by_block.setdefault(r.block_index, []).append(r)
    idx = sorted(by_block)
    tech = [sum(1 for r in by_block[b] if r.style == "Tech") for b in idx]
    switches = [sum(1 for r in by_block[b] if r.switch) for b in idx]
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.step(idx, tech, where="mid", label="Tech agents during block")
    ax.bar(idx, switches, alpha=0.4, label="switches at block end")
    ax.set_xlabel("block")
    ax.set_ylabel("agents")
    ax.legend(loc="upper right")
    fig.tight_layout()
    paths.append(fig_dir / "style_share.png")
    fig.savefig(paths[-1], dpi=100, metadata={"Software": None})
    plt.close(fig)
    return paths


def file_digest(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: Path, *, command: str, inputs: Mapping[str, Path], outputs: Sequence[str],
                   config_digest: Optional[str] = None, seed: Optional[int] = None,
                   mode: Optional[str] = None, extra: Optional[Mapping] = None) -> Path:
    manifest = {
        "command": command,
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config_digest": config_digest,
        "seed": seed,
        "mode": mode,
        "inputs": {name: {"path": str(p), "sha256": file_digest(p)} for name, p in sorted(inputs.items())},
        "outputs": {name: file_digest(out_dir / name) for name in outputs},
    }
    if extra:
        manifest.update(extra)
    path = out_dir / MANIFEST_FILE
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


class BlocksError(ValueError):
    """blocks.jsonl is malformed, truncated or incomplete."""


_BLOCK_TYPES = {
    "agent_id": int, "block_index": int, "start_date": str, "end_date": str, "style": str,
    "actual_return": float, "counterfactual_return": float, "switch": bool,
    "population_share_other": float, "n_current": int, "n_opposite": int, "rationale": str,
    "wealth_end": float, "counterfactual_wealth_end": float, "mispricing_eval": (float, type(None)),
}


def _typed(value, want) -> bool:
    wants = want if isinstance(want, tuple) else (want,)
    if isinstance(value, bool):
        return bool in wants
    if float in wants and isinstance(value, int):
        return True
    return isinstance(value, wants)


def read_blocks(path: Path, agent_ids: Sequence[int]) -> list[BlockRecord]:
    """Parse and validate a blocks file: every line a complete record, every
    agent in ``agent_ids`` present with the same contiguous run of blocks."""
    text = path.read_text(encoding="utf-8")
    if not text:
        raise BlocksError(f"{path}: empty")
    if not text.endswith("\n"):
        raise BlocksError(f"{path}: truncated final line")
    records = []
    for n, line in enumerate(text.splitlines(), start=1):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BlocksError(f"{path}:{n}: invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict) or set(obj) != set(_BLOCK_TYPES):
            keys = set(obj) if isinstance(obj, dict) else set()
            missing, extra = sorted(set(_BLOCK_TYPES) - keys), sorted(keys - set(_BLOCK_TYPES))
            raise BlocksError(f"{path}:{n}: schema mismatch (missing {missing}, unexpected {extra})")
        for key, want in _BLOCK_TYPES.items():
            if not _typed(obj[key], want):
                raise BlocksError(f"{path}:{n}: field {key} has type {type(obj[key]).__name__}")
        if obj["style"] not in ("Tech", "Fund"):
            raise BlocksError(f"{path}:{n}: unknown style {obj['style']!r}")
        records.append(BlockRecord.from_dict(obj))

    by_agent: dict[int, list[int]] = {}
    for r in records:
        by_agent.setdefault(r.agent_id, []).append(r.block_index)
    if sorted(by_agent) != sorted(agent_ids):
        raise BlocksError(f"{path}: expected agents {min(agent_ids)}..{max(agent_ids)}, found {len(by_agent)} agents")
    spans = {tuple(sorted(v)) for v in by_agent.values()}
    if len(spans) != 1:
        raise BlocksError(f"{path}: agents have different block coverage (truncated file?)")
    span = spans.pop()
    if span != tuple(range(1, len(span) + 1)):
        raise BlocksError(f"{path}: block indices are not contiguous from 1")
    return records
