"""Sampling k responses per question from a chat-completions endpoint.

Progress lives in a :class:`RunLedger`: an append-only JSONL event log plus a
compacted snapshot, so a run can be interrupted at any point and resumed
without re-sending finished (item, sample) pairs.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import httpx

from .grading import EvalRecord

log = logging.getLogger(__name__)

PENDING, DONE, FAILED = "pending", "done", "failed"


class AuthenticationError(RuntimeError):
    pass


class EndpointError(RuntimeError):
    """A request failed in a way worth retrying (timeouts, 429, 5xx)."""


class MalformedResponse(RuntimeError):
    def __init__(self, msg: str, payload):
        super().__init__(msg)
        self.payload = payload


@dataclass(frozen=True)
class ModelEndpointConfig:
    base_url: str
    model_name: str
    api_key_env: str | None = "OPENAI_API_KEY"
    temperature: float = 0.6
    top_p: float = 0.95
    max_response_tokens: int = 28000
    samples_per_item: int = 16
    parallelism: int = 4
    max_attempts: int = 3
    backoff_base: float = 1.0
    timeout: float = 600.0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.samples_per_item < 1:
            raise ValueError("samples_per_item must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env) if self.api_key_env else None

    def request_body(self, question: str) -> dict:
        return {
            "model": self.model_name,
            "messages": [{"role": "user", "content": question}],
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_tokens": self.max_response_tokens,
        }


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


class RunLedger:
    """Durable record of (item_id, sample_index) outcomes.

    ``events.jsonl`` is appended under a lock, one line per finished request;
    ``snapshot.json`` is the compacted state written by :meth:`compact`.
    Done entries are never overwritten.
    """

    def __init__(self, directory, run_id: str = "run"):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.run_id = run_id
        self.events_path = self.dir / "events.jsonl"
        self.snapshot_path = self.dir / "snapshot.json"
        self.entries: dict[tuple[str, int], dict] = {}
        self._claimed: set[tuple[str, int]] = set()
        self._lock = threading.Lock()
        self._load()

    def _apply(self, entry: dict) -> None:
        key = (entry["item_id"], int(entry["sample_index"]))
        old = self.entries.get(key)
        if old is not None and old["status"] == DONE:
            return
        self.entries[key] = entry

    def _load(self) -> None:
        if self.snapshot_path.exists():
            snap = json.loads(self.snapshot_path.read_text(encoding="utf-8"))
            self.run_id = snap.get("run_id", self.run_id)
            for e in snap["entries"]:
                self._apply(e)
        if self.events_path.exists():
            with open(self.events_path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    try:
                        self._apply(json.loads(line))
                    except json.JSONDecodeError:
                        # a torn final line from an interrupted write
                        log.warning("skipping unreadable ledger line in %s", self.events_path)

    def status(self, item_id: str, sample_index: int) -> str:
        e = self.entries.get((item_id, sample_index))
        return e["status"] if e else PENDING

    def pending(self, items, k: int, retry_failed: bool = False) -> list[tuple[object, int]]:
        todo = []
        for item in items:
            for i in range(1, k + 1):
                st = self.status(item.item_id, i)
                if st == PENDING or (retry_failed and st == FAILED):
                    todo.append((item, i))
        return todo

    def claim(self, item_id: str, sample_index: int) -> bool:
        key = (item_id, sample_index)
        with self._lock:
            if key in self._claimed or self.status(*key) == DONE:
                return False
            self._claimed.add(key)
            return True

    def release(self, item_id: str, sample_index: int) -> None:
        with self._lock:
            self._claimed.discard((item_id, sample_index))

    def record(self, entry: dict) -> bool:
        key = (entry["item_id"], int(entry["sample_index"]))
        with self._lock:
            self._claimed.discard(key)
            if self.status(*key) == DONE:
                return False
            line = json.dumps(entry, ensure_ascii=False)
            with open(self.events_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
            self._apply(entry)
            return True

    def compact(self) -> None:
        with self._lock:
            snap = {"run_id": self.run_id, "entries": [self.entries[k] for k in sorted(self.entries)]}
            tmp = self.snapshot_path.with_suffix(".tmp")
            tmp.write_text(json.dumps(snap, ensure_ascii=False, indent=1), encoding="utf-8")
            os.replace(tmp, self.snapshot_path)
            self.events_path.write_text("", encoding="utf-8")

    def counts(self) -> dict[str, int]:
        out = {DONE: 0, FAILED: 0}
        for e in self.entries.values():
            out[e["status"]] += 1
        return out


def _parse_completion(payload) -> tuple[str, dict]:
    try:
        content = payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise MalformedResponse("response has no choices[0].message.content", payload) from None
    if not isinstance(content, str):
        raise MalformedResponse("message content is not text", payload)
    usage = payload.get("usage") or {}
    return content, {k: usage[k] for k in ("prompt_tokens", "completion_tokens", "total_tokens") if k in usage}


def _request(client: httpx.Client, config: ModelEndpointConfig, item, sample_index: int) -> tuple[str, dict]:
    headers = {"X-TTTBench-Item": item.item_id, "X-TTTBench-Sample": str(sample_index)}
    try:
        resp = client.post("/chat/completions", json=config.request_body(item.question), headers=headers)
    except httpx.TimeoutException as exc:
        raise EndpointError(f"timeout: {exc}") from exc
    except httpx.TransportError as exc:
        raise EndpointError(f"transport error: {exc}") from exc
    if resp.status_code in (401, 403):
        raise AuthenticationError(f"endpoint refused credentials (HTTP {resp.status_code})")
    if resp.status_code == 429 or resp.status_code >= 500:
        raise EndpointError(f"HTTP {resp.status_code}")
    if resp.status_code >= 400:
        raise MalformedResponse(f"HTTP {resp.status_code}", resp.text)
    try:
        payload = resp.json()
    except ValueError:
        raise MalformedResponse("response body is not JSON", resp.text) from None
    return _parse_completion(payload)


def collect(
    items,
    config: ModelEndpointConfig,
    ledger: RunLedger,
    *,
    transport: httpx.BaseTransport | None = None,
    max_requests: int | None = None,
    retry_failed: bool = False,
    sleep=time.sleep,
) -> RunLedger:
    """Request every pending (item, sample) pair and record the outcome.

    ``max_requests`` stops after that many pairs have been attempted, which
    is how tests simulate an interrupted run.
    """
    items = list(items)
    todo = ledger.pending(items, config.samples_per_item, retry_failed)
    if max_requests is not None:
        todo = todo[:max_requests]
    headers = {}
    key = config.api_key()
    if key:
        headers["Authorization"] = f"Bearer {key}"
    abort = threading.Event()
    auth_error: list[Exception] = []

    def work(client: httpx.Client, item, i: int) -> None:
        if abort.is_set() or not ledger.claim(item.item_id, i):
            return
        started = _now()
        entry = {"item_id": item.item_id, "sample_index": i, "started_at": started}
        for attempt in range(1, config.max_attempts + 1):
            try:
                content, usage = _request(client, config, item, i)
            except AuthenticationError as exc:
                auth_error.append(exc)
                abort.set()
                ledger.release(item.item_id, i)
                return
            except EndpointError as exc:
                entry.update(status=FAILED, error=str(exc), attempts=attempt)
                if attempt < config.max_attempts:
                    sleep(config.backoff_base * 2 ** (attempt - 1))
                    continue
            except MalformedResponse as exc:
                entry.update(status=FAILED, error=str(exc), payload=exc.payload, attempts=attempt)
            else:
                entry.update(status=DONE, response=content, usage=usage, attempts=attempt)
            break
        entry["finished_at"] = _now()
        ledger.record(entry)

    with httpx.Client(base_url=config.base_url, headers=headers, timeout=config.timeout, transport=transport) as client:
        if config.parallelism == 1:
            for item, i in todo:
                work(client, item, i)
        else:
            with ThreadPoolExecutor(max_workers=config.parallelism) as ex:
                for f in [ex.submit(work, client, item, i) for item, i in todo]:
                    f.result()
    if auth_error:
        raise auth_error[0]
    return ledger


def export_records(ledger: RunLedger) -> list[EvalRecord]:
    """Done and failed entries as grading records (failed ones have empty text)."""
    out = []
    for item_id, i in sorted(ledger.entries):
        e = ledger.entries[(item_id, i)]
        done = e["status"] == DONE
        text = e.get("response", "") if done else ""
        tokens = (e.get("usage") or {}).get("completion_tokens") if done else None
        out.append(EvalRecord(item_id, i, text, response_tokens=tokens, status=e["status"]))
    return out
