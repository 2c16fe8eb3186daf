"""``tttbench`` command line: generate, verify, render, evaluate, grade, report.

Option values are resolved as command-line flag, then ``--config`` file, then
``TTTBENCH_<OPTION>`` environment variable, then the built-in default. The
config file is plain ``key = value`` lines (``#`` starts a comment); keys are
option names with either dashes or underscores, e.g.::

    seed = 7
    per-game = 50
    games = oTTT, cTTT
    base_url = http://localhost:8000/v1

Every subcommand writes its outputs under ``--out`` together with
``manifest.json`` listing each artifact with its size and sha256.

Exit codes: 0 success, 1 verification failure, 2 usage or config error,
3 endpoint/network error, 4 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from collections import Counter
from contextlib import nullcontext
from pathlib import Path

from . import __version__
from .dataset import DatasetError, emit_dataset, load_dataset, make_item, render_board_text, render_question, validate_item
from .engine import DEFAULT_FORK_RULE, FORK_RULES, VERDICTS, GameState, get_solution
from .enumerator import EmptyPoolError, SamplingConfig, enumerate_pool, pool_report, sample_pool, symmetry_reduce
from .evalclient import AuthenticationError, EndpointError, ModelEndpointConfig, RunLedger, collect, export_records
from .grading import EvalRecord, GradingError, Report, aggregate, delta_rows, read_reference_scores, to_csv
from .oracle import DEFAULT_NODE_BUDGET, check_solution, solve_exact
from .templates import DEFAULT_SUFFIX, PREAMBLE_VARIANTS
from .topology import GAME_IDS, build_spec

log = logging.getLogger("tttbench")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NETWORK, EXIT_DATA = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def _games(text: str) -> list[str]:
    games = [g.strip() for g in str(text).replace(",", " ").split() if g.strip()]
    bad = [g for g in games if g not in GAME_IDS]
    if bad or not games:
        raise ValueError(f"games must be a subset of {', '.join(GAME_IDS)} (got {text!r})")
    return [g for g in GAME_IDS if g in games]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(*values):
    def conv(text):
        if text not in values:
            raise ValueError(f"expected one of {', '.join(values)} (got {text!r})")
        return text

    return conv


# dest -> (converter, default). Flags for these use default=None so that an
# unset flag falls through to the config file and the environment.
OPTIONS = {
    "seed": (int, 0),
    "games": (_games, list(GAME_IDS)),
    "per_game": (int, 103),
    "strategy": (_choice("stratified", "uniform"), "stratified"),
    "dedup": (_choice("by-occupancy", "none"), "by-occupancy"),
    "suffix": (str, DEFAULT_SUFFIX),
    "preamble": (_choice(*PREAMBLE_VARIANTS), "prompt"),
    "fork_rule": (_choice(*FORK_RULES), DEFAULT_FORK_RULE),
    "symmetry_reduce": (_bool, False),
    "jobs": (int, 1),
    "backend": (_choice("auto", "numba", "numpy"), "auto"),
    "ply_bound": (int, 3),
    "node_budget": (int, DEFAULT_NODE_BUDGET),
    "base_url": (str, None),
    "model": (str, None),
    "api_key_env": (str, "OPENAI_API_KEY"),
    "temperature": (float, 0.6),
    "top_p": (float, 0.95),
    "max_tokens": (int, 28000),
    "samples": (int, 16),
    "parallelism": (int, 4),
    "max_attempts": (int, 3),
    "backoff": (float, 1.0),
    "timeout": (float, 600.0),
    "reference_scores": (str, None),
}


def read_config(path) -> dict[str, str]:
    """Parse a ``key = value`` file into ``{dest: raw string}``."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        dest = key.replace("-", "_")
        if dest not in OPTIONS:
            raise UsageError(f"{path}:{n}: unknown option {key!r}")
        out[dest] = value
    return out


def resolve(args: argparse.Namespace, environ=None) -> argparse.Namespace:
    """Fill unset options from the config file, then the environment."""
    environ = os.environ if environ is None else environ
    config = read_config(args.config) if getattr(args, "config", None) else {}
    for dest, (conv, default) in OPTIONS.items():
        if not hasattr(args, dest) or getattr(args, dest) is not None:
            continue
        env_key = f"TTTBENCH_{dest.upper()}"
        for source, raw in ((f"config {dest}", config.get(dest)), (env_key, environ.get(env_key))):
            if raw is not None:
                try:
                    setattr(args, dest, conv(raw))
                except ValueError as exc:
                    raise UsageError(f"{source}: {exc}") from None
                break
        else:
            setattr(args, dest, default)
    return args


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out: Path, command: str, artifacts, settings: dict) -> Path:
    entries = []
    for p in artifacts:
        p = Path(p)
        entries.append({"path": p.relative_to(out).as_posix(), "bytes": p.stat().st_size, "sha256": _sha256(p)})
    manifest = {"tool": "tttbench", "version": __version__, "command": command, "settings": settings, "artifacts": entries}
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def _settings(args, keys) -> dict:
    return {k: getattr(args, k) for k in keys}


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _backend(args):
    return None if args.backend == "auto" else args.backend


def _suffix(args):
    return None if args.no_suffix else args.suffix


# -- generate -----------------------------------------------------------------


def cmd_generate(args) -> int:
    out = _out_dir(args)
    suffix = _suffix(args)
    config = SamplingConfig(args.seed, args.per_game, args.strategy, args.dedup)
    pools, items, checks = [], [], []
    for g in args.games:
        spec = build_spec(g)
        game_pools = []
        for n in spec.n_schedule:
            pool = enumerate_pool(spec, n, jobs=args.jobs, backend=_backend(args), fork_rule=args.fork_rule)
            if args.symmetry_reduce:
                pool = symmetry_reduce(pool)
            game_pools.append(pool)
        pools.extend(game_pools)
        # the salt ties each game's draw to its name, not to the --games subset
        samples = sample_pool(game_pools, config, salt=GAME_IDS.index(g))
        meta = {"seed": args.seed, "strategy": args.strategy}
        for j, s in enumerate(samples):
            state = s.pool.state(s.row)
            item = make_item(
                state, s.pool.solution(s.row), index=j, suffix=suffix, variant=args.preamble,
                fork_rule=args.fork_rule, metadata=meta,
            )  # fmt: skip
            res = check_solution(state, item.solutions, item.verdict, args.ply_bound, args.node_budget)
            checks.append({"item_id": item.item_id, "status": res["status"], "problems": res["problems"]})
            items.append(item)
        log.info("%s: %d items", g, len(samples))
    dataset = out / "dataset.jsonl"
    emit_dataset(items, dataset)
    sampled = {g: {v: 0 for v in VERDICTS} for g in args.games}
    multi = {g: {"single": 0, "multiple": 0} for g in args.games}
    for it in items:
        sampled[it.game_id][it.verdict] += 1
        multi[it.game_id]["multiple" if len(it.solutions) > 1 else "single"] += 1
    summary = {
        "pools": pool_report(pools),
        "dataset": {"total": len(items), "verdicts": sampled, "solution_counts": multi},
        "splits_examined": {f"{p.game_id}/N{p.n_moves}": p.splits_examined for p in pools},
    }
    summary_path = _write_json(out / "pool_summary.json", summary)
    tally = Counter(c["status"] for c in checks)
    verification = {"counts": {k: tally.get(k, 0) for k in ("pass", "fail", "inconclusive")},
                    "failures": [c for c in checks if c["status"] != "pass"]}  # fmt: skip
    ver_path = _write_json(out / "verification.json", verification)
    settings = _settings(args, ("seed", "games", "per_game", "strategy", "dedup", "preamble", "fork_rule",
                                "symmetry_reduce", "ply_bound", "node_budget"))  # fmt: skip
    settings["suffix"] = suffix
    write_manifest(out, "generate", [dataset, summary_path, ver_path], settings)
    print(f"wrote {len(items)} items to {dataset}; oracle: {verification['counts']}")
    return EXIT_VERIFY if tally.get("fail") else EXIT_OK


# -- verify -------------------------------------------------------------------


def audit_dataset(path, ply_bound: int = 3, node_budget: int = DEFAULT_NODE_BUDGET, solve: bool = False) -> dict:
    """Replay every item through the engine and the oracle."""
    items = load_dataset(path, validate=False)
    rows = []
    for item in items:
        row = {"item_id": item.item_id, "engine": "pass", "oracle": None, "problems": []}
        try:
            validate_item(item)
        except DatasetError as exc:
            row["engine"] = "fail"
            row["problems"].append(str(exc))
        try:
            state = item.state
            res = check_solution(state, item.solutions, item.verdict, ply_bound, node_budget)
            row["oracle"] = res["status"]
            row["problems"].extend(res["problems"])
            if solve:
                exact = solve_exact(state, node_budget)
                # informational: rule-based answers need not be the only optimal moves
                row["exact_value"] = exact.value
                row["exact_optimal_moves"] = sorted(exact.moves)
                row["solutions_optimal"] = set(item.solutions) <= set(exact.moves)
        except ValueError as exc:
            row["oracle"] = "fail"
            row["problems"].append(str(exc))
        rows.append(row)
    counts = {
        "items": len(rows),
        "engine": dict(Counter(r["engine"] for r in rows)),
        "oracle": dict(Counter(r["oracle"] for r in rows)),
    }
    return {"dataset": str(path), "counts": counts, "failures": [r for r in rows if r["problems"] or r["oracle"] != "pass"]}


def cmd_verify(args) -> int:
    report = audit_dataset(args.dataset, args.ply_bound, args.node_budget, args.solve)
    if args.out:
        out = _out_dir(args)
        path = _write_json(out / "audit.json", report)
        write_manifest(out, "verify", [path], _settings(args, ("ply_bound", "node_budget", "solve")))
    print(json.dumps(report["counts"]))
    for f in report["failures"]:
        print(f"FAIL {f['item_id']}: {'; '.join(f['problems']) or f['oracle']}")
    bad = any(f["engine"] == "fail" or f["oracle"] == "fail" for f in report["failures"])
    return EXIT_VERIFY if bad else EXIT_OK


# -- render -------------------------------------------------------------------


def cmd_render(args) -> int:
    if args.dataset:
        items = load_dataset(args.dataset)
        if args.item:
            items = [it for it in items if it.item_id in set(args.item)]
            if not items:
                raise DatasetError(f"no item with id {args.item}")
        for it in items:
            print(f"# {it.item_id}  {it.verdict}: {', '.join(it.solutions)}")
            print(render_board_text(it.state))
            print(it.question)
            print()
        return EXIT_OK
    if not args.game or args.moves is None:
        raise UsageError("render needs either --dataset or both --game and --moves")
    state = GameState(args.game, tuple(_labels_arg(args.moves)))
    sol = get_solution(state, args.fork_rule)
    print(render_board_text(state))
    print(render_question(state.spec, state.history, _suffix(args), args.preamble))
    if sol is not None:
        for move, why in sol.describe(state.spec).items():
            print(f"{move}: {why}")
    return EXIT_OK


def _labels_arg(values) -> list[str]:
    out = []
    for v in values:
        out.extend(x for x in v.replace(",", " ").split() if x)
    return out


# -- evaluate / grade / report ------------------------------------------------


def _endpoint(args, base_url: str) -> ModelEndpointConfig:
    if not args.model:
        raise UsageError("--model is required (or 'model' in the config file)")
    try:
        return ModelEndpointConfig(
            base_url=base_url, model_name=args.model, api_key_env=args.api_key_env or None,
            temperature=args.temperature, top_p=args.top_p, max_response_tokens=args.max_tokens,
            samples_per_item=args.samples, parallelism=args.parallelism, max_attempts=args.max_attempts,
            backoff_base=args.backoff, timeout=args.timeout,
        )  # fmt: skip
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def write_records(path: Path, records) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r.__dict__, ensure_ascii=False) + "\n")
    return path


def read_records(path) -> list[EvalRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if line.strip():
                try:
                    out.append(EvalRecord(**json.loads(line)))
                except (json.JSONDecodeError, TypeError) as exc:
                    raise GradingError(f"{path}:{n}: malformed record ({exc})") from None
    return out


def cmd_evaluate(args) -> int:
    if args.mock_script and args.base_url:
        raise UsageError("--mock-script starts a local endpoint; drop --base-url or --mock-script")
    if not args.mock_script and not args.base_url:
        raise UsageError("--base-url is required (or 'base_url' in the config file), or pass --mock-script")
    items = load_dataset(args.dataset)
    out = _out_dir(args)
    ledger = RunLedger(out / "ledger", run_id=args.model or "run")
    if args.mock_script:
        from .mockserver import serve

        try:
            script = json.loads(Path(args.mock_script).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read mock script {args.mock_script}: {exc}") from None
        ctx = serve(script)
    else:
        ctx = nullcontext()
    with ctx as server:
        config = _endpoint(args, server.url if server else args.base_url)
        try:
            collect(items, config, ledger, max_requests=args.max_requests, retry_failed=args.retry_failed)
        finally:
            ledger.compact()
    records = write_records(out / "records.jsonl", export_records(ledger))
    counts = ledger.counts()
    total = len(items) * config.samples_per_item
    pending = total - counts["done"] - counts["failed"]
    settings = _settings(args, ("model", "temperature", "top_p", "max_tokens", "samples"))
    write_manifest(out, "evaluate", [records, ledger.snapshot_path], settings)
    print(f"done {counts['done']}, failed {counts['failed']}, pending {pending} of {total}")
    return EXIT_NETWORK if counts["failed"] else EXIT_OK


def cmd_grade(args) -> int:
    items = load_dataset(args.dataset)
    if args.records:
        records = read_records(args.records)
    elif args.ledger:
        records = export_records(RunLedger(args.ledger))
    else:
        raise UsageError("grade needs --records or --ledger")
    report = aggregate(records, items, model=args.model or "model")
    out = _out_dir(args)
    rpath = out / "report.json"
    rpath.write_text(report.to_json() + "\n", encoding="utf-8")
    graded = write_records(out / "graded.jsonl", sorted(records, key=lambda r: (r.item_id, r.sample_index)))
    write_manifest(out, "grade", [rpath, graded], {"model": report.model})
    print(json.dumps({"model": report.model, "tasks": report.tasks}))
    return EXIT_OK


def cmd_report(args) -> int:
    reference = read_reference_scores(args.reference_scores)
    reports = []
    for path in args.reports:
        try:
            reports.append(Report.from_dict(json.loads(Path(path).read_text(encoding="utf-8"))))
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise GradingError(f"cannot read report {path}: {exc}") from None
    if reports:
        task_scores = {r.model: {g: 100 * s for g, s in r.tasks.items()} for r in reports}
    else:
        # no reports: compare the reference table's own task columns
        task_scores = {m: {g: v for g, v in s.items() if g in GAME_IDS} for m, s in reference.items()}
    out = _out_dir(args)
    rows = delta_rows(task_scores, reference)
    paths = [out / "delta.csv"]
    paths[0].write_text(to_csv(rows), encoding="utf-8")
    t4 = []
    for model in sorted(task_scores):
        row = {"model": model, **{g: _round(task_scores[model].get(g)) for g in GAME_IDS}}
        for b in ("AIME2024", "MATH500"):
            row[b] = reference.get(model, {}).get(b)
        t4.append(row)
    paths.append(out / "table4.csv")
    paths[-1].write_text(to_csv(t4, ["model", *GAME_IDS, "AIME2024", "MATH500"]), encoding="utf-8")
    if reports:
        paths.append(out / "table5.csv")
        paths[-1].write_text(to_csv([r.table5_row() for r in reports]), encoding="utf-8")
    write_manifest(out, "report", paths, {"reports": [str(p) for p in args.reports],
                                          "reference_scores": args.reference_scores})  # fmt: skip
    for r in rows:
        print(f"{r['model']}\t{r['task']} - {r['benchmark']}\t{r['delta']:+.2f}")
    return EXIT_OK


def _round(x):
    return None if x is None else round(x, 2)


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tttbench", description="Tic-Tac-Toe-style reasoning benchmark toolkit.")
    ap.add_argument("--version", action="version", version=f"tttbench {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", help="key = value options file")
        p.add_argument("--out", required=out_required, help="output directory")

    def content(p):
        p.add_argument("--preamble", default=None, help="rules wording: prompt (default) or reference")
        p.add_argument("--fork-rule", default=None, help="sets (default) or cells")
        g = p.add_mutually_exclusive_group()
        g.add_argument("--suffix", default=None, help="answer-format sentence appended to each question")
        g.add_argument("--no-suffix", action="store_true", help="omit the answer-format sentence")

    def oracle(p):
        p.add_argument("--ply-bound", type=int, default=None, help="plies searched after a fork move (>= 3)")
        p.add_argument("--node-budget", type=int, default=None, help="search nodes before 'inconclusive'")

    p = sub.add_parser("generate", help="enumerate pools, sample, verify and write a dataset")
    common(p)
    content(p)
    oracle(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--games", type=_games, default=None, help="comma-separated subset of oTTT,dTTT,cTTT,sTTT")
    p.add_argument("--per-game", type=int, default=None, help="items per game (default 103)")
    p.add_argument("--strategy", default=None, help="stratified (default) or uniform")
    p.add_argument("--dedup", default=None, help="by-occupancy (default) or none")
    p.add_argument("--symmetry-reduce", action="store_const", const=True, default=None,
                   help="drop positions equivalent under board symmetries")  # fmt: skip
    p.add_argument("--jobs", type=int, default=None, help="worker processes for enumeration")
    p.add_argument("--backend", default=None, help="auto, numba or numpy")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", help="replay a dataset through the engine and oracle")
    common(p, out_required=False)
    oracle(p)
    p.add_argument("dataset")
    p.add_argument("--solve", action="store_true", help="also run an exact game-tree search per item")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("render", help="print boards and questions")
    p.add_argument("--config")
    content(p)
    p.add_argument("--dataset")
    p.add_argument("--item", action="append", help="item id to show (repeatable)")
    p.add_argument("--game", choices=GAME_IDS)
    p.add_argument("--moves", nargs="*", help="labels in play order, e.g. A B H C")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("evaluate", help="sample k responses per item from a chat-completions endpoint")
    common(p)
    p.add_argument("dataset")
    p.add_argument("--base-url", default=None)
    p.add_argument("--mock-script", help="serve scripted completions locally instead of --base-url")
    p.add_argument("--model", default=None)
    p.add_argument("--api-key-env", default=None, help="environment variable holding the API key")
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--top-p", type=float, default=None)
    p.add_argument("--max-tokens", type=int, default=None)
    p.add_argument("--samples", type=int, default=None, help="responses per item (k, default 16)")
    p.add_argument("--parallelism", type=int, default=None)
    p.add_argument("--max-attempts", type=int, default=None)
    p.add_argument("--backoff", type=float, default=None, help="retry backoff base in seconds")
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--max-requests", type=int, help="stop after this many (item, sample) pairs")
    p.add_argument("--retry-failed", action="store_true", help="re-request pairs recorded as failed")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grade", help="extract answers and score Pass@1")
    common(p)
    p.add_argument("dataset")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--ledger", help="ledger directory written by evaluate")
    src.add_argument("--records", help="records.jsonl written by evaluate")
    p.add_argument("--model", default=None)
    p.set_defaults(func=cmd_grade)

    p = sub.add_parser("report", help="delta Pass@1 and results tables against reference scores")
    common(p)
    p.add_argument("reports", nargs="*", help="report.json files from grade")
    p.add_argument("--reference-scores", default=None, help="model,benchmark,pass1 CSV (default: bundled table)")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        resolve(args)
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits 2
    except (AuthenticationError, EndpointError) as exc:
        print(f"tttbench: endpoint error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except (DatasetError, GradingError, EmptyPoolError, FileNotFoundError) as exc:
        print(f"tttbench: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"tttbench: I/O error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
