"""Command-line interface: ``argrecon {reconstruct,evaluate,sweep,diagram}``.

Exit codes: 0 success, 1 some documents failed, 2 configuration or input
error, 3 external renderer missing.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import shutil
import subprocess
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .corpus import Document, load_graph, load_standoff_dir, load_textbook_corpus, save_graph
from .diagram import to_dot
from .errors import ArgReconError, ConfigError, PipelineError, SchemaViolation
from .evaluation import evaluate_corpus, threshold_sweep
from .graph import ArgumentGraph
from .llm import Backend, HttpBackend, RecordingBackend, ReplayBackend
from .pipeline import PipelineConfig, load_config_file, run_pipeline
from .validation import check_thresholds

logger = logging.getLogger("argrecon")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG, EXIT_TOOL = 0, 1, 2, 3

DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"
DEFAULT_KEY_ENV = "ARGRECON_API_KEY"
LIVE_JOBS_CAP = 8


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# reconstruct

def _safe_id(doc_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", doc_id).strip("._") or "doc"


def _read_inputs(paths: Sequence[str]) -> List[Document]:
    docs: List[Document] = []
    for raw in paths:
        path = Path(raw)
        if path.suffix == ".json":
            docs.extend(load_textbook_corpus(path))
        else:
            with open(path, encoding="utf-8", newline="") as fh:
                docs.append(Document(path.stem, fh.read(), None, {"source": str(path)}))
    ids = [_safe_id(d.id) for d in docs]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise UsageError(f"duplicate document ids: {dupes}")
    return docs


def _make_backend(mode: str, llm_block: dict, transcript: Optional[str]) -> Backend:
    if mode == "replay":
        if not transcript:
            raise UsageError("--backend replay needs --transcript")
        return ReplayBackend.from_file(transcript)
    key_env = llm_block.get("api_key_env", DEFAULT_KEY_ENV)
    key = os.environ.get(key_env, "")
    if not key:
        raise UsageError(f"live backend needs a credential in ${key_env}")
    live = HttpBackend(llm_block.get("endpoint", DEFAULT_ENDPOINT), key,
                       timeout=float(llm_block.get("timeout", 120)))
    return RecordingBackend(live) if mode == "record" else live


def cmd_reconstruct(args) -> int:
    raw_config = load_config_file(args.config) if args.config else {}
    config = PipelineConfig.from_mapping(raw_config)
    docs = _read_inputs(args.inputs)
    backend = _make_backend(args.backend, raw_config.get("llm") or {}, args.transcript)
    jobs = args.jobs or (os.cpu_count() or 1)
    if args.backend != "replay":
        jobs = min(jobs, LIVE_JOBS_CAP)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    status: Dict[str, dict] = {}
    lock = threading.Lock()

    def work(doc: Document) -> None:
        name = _safe_id(doc.id)
        try:
            graph, trace = run_pipeline(backend, doc.text, config)
        except (ArgReconError, ValueError) as exc:
            logger.error("%s: %s", doc.id, exc)
            entry = {"status": "failed", "error": f"{type(exc).__name__}: {exc}"}
        else:
            save_graph(graph, out_dir / f"{name}.graph.json")
            (out_dir / f"{name}.trace.json").write_text(trace.to_json(), encoding="utf-8")
            entry = {"status": "degraded" if trace.degraded else "ok",
                     "graph": f"{name}.graph.json", "trace": f"{name}.trace.json",
                     "llm_calls": len(trace.stage_records),
                     "timings": {k: round(v, 6) for k, v in trace.timings.items()}}
        with lock:
            status[doc.id] = entry

    with ThreadPoolExecutor(max(1, jobs)) as pool:
        list(pool.map(work, docs))

    if isinstance(backend, RecordingBackend):
        backend.transcript.meta["pipeline_config_digest"] = config.digest()
        backend.transcript.save(out_dir / "transcript.jsonl")

    manifest = {
        "created_at": datetime.now(timezone.utc).isoformat(),
        "inputs": list(args.inputs),
        "config": args.config,
        "backend": args.backend,
        "transcript": args.transcript,
        "out": str(out_dir),
        "jobs": jobs,
        "pipeline_config": config.to_dict(),
        "documents": {d.id: status[d.id] for d in docs},
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n",
                                           encoding="utf-8")
    failed = [d for d, s in status.items() if s["status"] == "failed"]
    print(f"{len(docs) - len(failed)}/{len(docs)} documents reconstructed into {out_dir}")
    return EXIT_PARTIAL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# evaluate / sweep

def _load_gold(path: str) -> List[Document]:
    p = Path(path)
    docs = load_standoff_dir(p) if p.is_dir() else load_textbook_corpus(p)
    return [d for d in docs if d.gold is not None]


def _load_predictions(pred_dir: str, docs: Sequence[Document]) -> Dict[str, Optional[ArgumentGraph]]:
    preds: Dict[str, Optional[ArgumentGraph]] = {}
    for d in docs:
        path = Path(pred_dir) / f"{_safe_id(d.id)}.graph.json"
        if path.exists():
            preds[d.id] = load_graph(path)
        else:
            logger.warning("no prediction for %s; scoring it as empty", d.id)
            preds[d.id] = None
    return preds


def cmd_evaluate(args) -> int:
    docs = _load_gold(args.gold)
    preds = _load_predictions(args.pred_dir, docs)
    report = evaluate_corpus(preds, docs, args.tasks)
    Path(args.out).write_text(report.to_json(), encoding="utf-8")
    width = max((len(k) for k, _ in report.summary_rows()), default=0)
    print(f"{args.tasks} evaluation over {len(docs)} documents")
    for key, value in report.summary_rows():
        print(f"  {key:<{width}}  {value}")
    return EXIT_OK


def _surface_texts(graph: Optional[ArgumentGraph]) -> List[str]:
    if graph is None:
        return []
    out = []
    for comp in graph.components():
        if comp.kind.value != "explicit":
            continue
        if comp.span is not None:
            out.append(graph.source_text[comp.span[0]:comp.span[1]])
        else:
            out.append(comp.text)
    return out


def cmd_sweep(args) -> int:
    thresholds = _parse_thresholds(args.thresholds)
    docs = _load_gold(args.gold)
    preds = _load_predictions(args.pred_dir, docs)
    pairs = [(_surface_texts(preds[d.id]), [c.text for c in d.gold.components]) for d in docs]
    curve = threshold_sweep(pairs, thresholds)
    csv_text = curve.to_csv()
    Path(args.out).write_text(csv_text, encoding="utf-8")
    sys.stdout.write(csv_text)
    return EXIT_OK


def _parse_thresholds(raw: str) -> List[float]:
    try:
        values = [float(x) for x in raw.split(",") if x.strip()]
        return check_thresholds(values)
    except ValueError as exc:
        raise UsageError(f"--thresholds: {exc}") from None


# ---------------------------------------------------------------------------
# diagram

def cmd_diagram(args) -> int:
    graph = load_graph(args.graph)
    dot = to_dot(graph)
    out = Path(args.out)
    if args.format == "dot":
        out.write_text(dot, encoding="utf-8")
        return EXIT_OK
    dot_path = out.with_suffix(".dot")
    dot_path.write_text(dot, encoding="utf-8")
    renderer = shutil.which(args.renderer)
    if renderer is None:
        print(f"renderer {args.renderer!r} not found; DOT written to {dot_path}. "
              f"Install Graphviz and run: dot -T{args.format} {dot_path} -o {out}", file=sys.stderr)
        return EXIT_TOOL
    proc = subprocess.run([renderer, f"-T{args.format}", str(dot_path), "-o", str(out)],
                          capture_output=True, text=True)
    if proc.returncode != 0:
        print(f"renderer failed: {proc.stderr.strip()}", file=sys.stderr)
        return EXIT_TOOL
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="argrecon", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reconstruct", help="build argument graphs from texts")
    p.add_argument("inputs", nargs="+", help="text files or corpus JSON files")
    p.add_argument("--config", help="pipeline config (YAML)")
    p.add_argument("--backend", choices=["live", "replay", "record"], required=True)
    p.add_argument("--transcript", help="transcript to replay")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=None, help="documents processed in parallel")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="score predicted graphs against gold annotations")
    p.add_argument("pred_dir")
    p.add_argument("gold", help="corpus JSON or directory of .txt/.ann pairs")
    p.add_argument("--tasks", choices=["internal", "external"], default="internal")
    p.add_argument("--out", required=True, help="report JSON path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="mean F1 over similarity thresholds")
    p.add_argument("pred_dir")
    p.add_argument("gold")
    p.add_argument("--thresholds", default=",".join(f"{i / 20:g}" for i in range(21)))
    p.add_argument("--out", required=True, help="CSV path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("diagram", help="render a graph as DOT (or an image via Graphviz)")
    p.add_argument("graph")
    p.add_argument("--out", required=True)
    p.add_argument("--format", default="dot", choices=["dot", "png", "svg", "pdf"])
    p.add_argument("--renderer", default="dot", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_diagram)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, SchemaViolation, PipelineError, ValueError, OSError) as exc:
        print(f"argrecon {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
