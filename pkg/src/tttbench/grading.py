"""Answer extraction and Pass@1 scoring.

Pass@1 for one question is the mean correctness over its k sampled
responses; a response is correct when its last boxed answer reduces to a
single letter that is one of the question's solutions. Task and verdict
scores are plain means over questions.
"""

from __future__ import annotations

import csv
import io
import json
import re
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Iterable, Mapping

import numpy as np

from .engine import VERDICTS
from .topology import GAME_IDS

_BOX = re.compile(r"\\boxed\s*\{")
_WRAPPER = re.compile(r"\\(?:text|textbf|textit|texttt|mathrm|mathbf|mathit|mathtt|operatorname|mbox)\s*\{([^{}]*)\}")
_NOISE = re.compile(r"[\s$.,;:!?'\"`()\[\]*_~]|\\[,;:! ]")
VALID_ANSWERS = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXY")

REFERENCE_BENCHMARKS = ("MATH500", "AIME2024")


class GradingError(ValueError):
    pass


def _box_contents(text: str, start: int) -> str | None:
    depth = 1
    for i in range(start, len(text)):
        ch = text[i]
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start:i]
    return None


def extract_answer(response: str | None) -> str | None:
    """The single position letter in the last well-formed ``\\boxed{...}``."""
    if not response:
        return None
    for m in reversed(list(_BOX.finditer(response))):
        inner = _box_contents(response, m.end())
        if inner is None:
            continue
        prev = None
        while prev != inner:
            prev, inner = inner, _WRAPPER.sub(r"\1", inner)
        inner = _NOISE.sub("", inner).upper()
        return inner if inner in VALID_ANSWERS else None
    return None


@dataclass
class EvalRecord:
    item_id: str
    sample_index: int
    raw_response: str
    extracted_answer: str | None = None
    correct: int = 0
    response_chars: int = 0
    response_tokens: int | None = None
    status: str = "done"

    def __post_init__(self):
        if not self.response_chars:
            self.response_chars = len(self.raw_response or "")


def grade_record(record: EvalRecord, solutions) -> EvalRecord:
    record.extracted_answer = extract_answer(record.raw_response)
    record.correct = int(record.extracted_answer is not None and record.extracted_answer in set(solutions))
    return record


def score_item(item, records: Iterable[EvalRecord]) -> float:
    """Mean correctness over the item's k records (any listed solution counts)."""
    records = list(records)
    if not records:
        raise GradingError(f"no records for item {item.item_id}")
    for r in records:
        if r.item_id != item.item_id:
            raise GradingError(f"record for {r.item_id} passed with item {item.item_id}")
        grade_record(r, item.solutions)
    return sum(r.correct for r in records) / len(records)


def _mean_std(values) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std())


@dataclass
class Report:
    model: str
    items: dict[str, float]
    tasks: dict[str, float]
    verdicts: dict[str, dict[str, float]]
    lengths: dict[str, dict[str, float | None]]
    samples_per_item: dict[str, int] = field(default_factory=dict)
    missing_items: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict) -> Report:
        return cls(**d)

    def table4_row(self) -> dict:
        """Task Pass@1 in percent, keyed like the per-task results table."""
        return {"model": self.model, **{g: _pct(self.tasks.get(g)) for g in GAME_IDS}}

    def table5_row(self) -> dict:
        row = {"model": self.model}
        for g in GAME_IDS:
            for v in VERDICTS:
                row[f"{g}/{v}"] = _pct(self.verdicts.get(g, {}).get(v))
        return row


def _pct(x):
    return None if x is None else round(100 * x, 2)


def aggregate(records: Iterable[EvalRecord], items, model: str = "model") -> Report:
    """Per-item, per-task and per-(task, verdict) Pass@1 plus length statistics."""
    by_id = {it.item_id: it for it in items}
    grouped: dict[str, list[EvalRecord]] = defaultdict(list)
    for r in records:
        if r.item_id not in by_id:
            raise GradingError(f"record references unknown item {r.item_id}")
        grouped[r.item_id].append(r)
    item_scores: dict[str, float] = {}
    for item_id in sorted(grouped):
        item_scores[item_id] = score_item(by_id[item_id], sorted(grouped[item_id], key=lambda r: r.sample_index))
    per_task: dict[str, list[float]] = defaultdict(list)
    per_verdict: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    chars: dict[str, list[int]] = defaultdict(list)
    tokens: dict[str, list[int]] = defaultdict(list)
    for item_id, score in item_scores.items():
        it = by_id[item_id]
        per_task[it.game_id].append(score)
        per_verdict[it.game_id][it.verdict].append(score)
        for r in grouped[item_id]:
            chars[it.game_id].append(r.response_chars)
            if r.response_tokens is not None:
                tokens[it.game_id].append(r.response_tokens)
    tasks = {g: float(np.mean(per_task[g])) for g in GAME_IDS if per_task[g]}
    verdicts = {
        g: {v: float(np.mean(per_verdict[g][v])) for v in VERDICTS if per_verdict[g][v]}
        for g in GAME_IDS
        if g in per_verdict
    }
    lengths = {}
    for g in tasks:
        cm, cs = _mean_std(chars[g])
        tm, ts = _mean_std(tokens[g])
        lengths[g] = {"chars_mean": cm, "chars_std": cs, "tokens_mean": tm, "tokens_std": ts}
    return Report(
        model=model,
        items=item_scores,
        tasks=tasks,
        verdicts=verdicts,
        lengths=lengths,
        samples_per_item={i: len(grouped[i]) for i in item_scores},
        missing_items=sorted(set(by_id) - set(grouped)),
    )


def delta_pass1(x_scores: Mapping, y_scores: Mapping, pairs=None) -> dict:
    """``x - y`` for each ``(x_key, y_key)`` pair; elementwise by key if ``pairs`` is None."""
    if pairs is None:
        pairs = [(k, k) for k in x_scores]
    out = {}
    for xk, yk in pairs:
        if xk not in x_scores:
            raise KeyError(f"missing score for {xk!r}")
        if yk not in y_scores:
            raise KeyError(f"missing reference score for {yk!r}")
        out[(xk, yk)] = x_scores[xk] - y_scores[yk]
    return out


def read_reference_scores(path=None) -> dict[str, dict[str, float]]:
    """``model,benchmark,pass1`` CSV (percent) as ``{model: {benchmark: score}}``.

    With no path, the bundled per-task results table is loaded.
    """
    if path is None:
        text = resources.files("tttbench.data").joinpath("table4_reference.csv").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    table: dict[str, dict[str, float]] = defaultdict(dict)
    for row in csv.DictReader(io.StringIO(text)):
        try:
            table[row["model"]][row["benchmark"]] = float(row["pass1"])
        except (KeyError, TypeError, ValueError) as exc:
            raise GradingError(f"bad reference row {row}: {exc}") from None
    return dict(table)


def delta_rows(task_scores, reference, tasks=GAME_IDS, benchmarks=REFERENCE_BENCHMARKS) -> list[dict]:
    """Long-format ΔPass@1 rows for every model present in both tables (percent)."""
    rows = []
    for model in sorted(set(task_scores) & set(reference)):
        x, y = task_scores[model], reference[model]
        pairs = [(t, b) for t in tasks if t in x for b in benchmarks if b in y]
        for (t, b), d in delta_pass1(x, y, pairs).items():
            rows.append({
                "model": model, "task": t, "benchmark": b,
                "task_pass1": x[t], "reference_pass1": y[b], "delta": round(d, 4),
            })  # fmt: skip
    return rows


def to_csv(rows: list[dict], columns=None) -> str:
    if not rows:
        return ""
    columns = columns or list(rows[0])
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: "" if r.get(k) is None else r.get(k) for k in columns})
    return buf.getvalue()
