"""Command-line interface: corpus prep, indexing, chat, serving, dataset
building, statistics, and evaluation.

Exit codes: 0 success, 1 usage error, 2 data error, 3 provider error.
Output data goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import __version__, dataset_builder, evaluation, navigator, topics
from .corpus import (
    DEFAULT_MAX_FRAGMENT_TOKENS,
    compute_corpus_stats,
    ingest_documents,
    fragment_document,
    read_fragments,
    write_fragments,
)
from .engine import (
    COVERAGE_MESSAGE,
    Engine,
    LogicalClock,
    SessionConfig,
    turn_to_dict,
    write_transcript,
)
from .errors import LexGuideError, ProviderUnavailable
from .providers import ProviderConfig, make_chat_provider, make_embedding_provider
from .retrieval import build_index, load_index, save_index

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PROVIDER = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _provider_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--provider", choices=["stub", "http"], default="stub")
    parser.add_argument("--seed", type=int, default=0, help="stub determinism seed")
    parser.add_argument("--base-url", default=os.environ.get("LEXGUIDE_BASE_URL"))
    parser.add_argument("--embed-model", default="embed-default")
    parser.add_argument("--chat-model", default="chat-default")


def _provider_config(args, model_attr: str, key_env: str) -> ProviderConfig:
    if args.provider == "stub":
        return ProviderConfig(kind="stub", seed=args.seed)
    return ProviderConfig(
        kind="http",
        base_url=args.base_url,
        model_name=getattr(args, model_attr),
        api_key_env=key_env,
    )


def _session_config(args) -> SessionConfig:
    return SessionConfig(
        mode=args.mode,
        k_topic=args.k_topic,
        k_answer=args.k_answer,
        mmr_lambda=args.mmr_lambda,
        tau=args.tau,
        strategy=args.strategy,
        l_topic_words=args.topic_words,
        min_cluster_size=args.min_cluster_size,
        levels=args.levels,
    )


def _engine_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", default="lexguide",
                        choices=["lexguide", "rag-basic", "rag-mmr", "conv-rag"])
    parser.add_argument("--k-topic", dest="k_topic", type=int, default=500)
    parser.add_argument("--k-answer", dest="k_answer", type=int, default=10)
    parser.add_argument("--lambda", dest="mmr_lambda", type=float, default=0.6)
    parser.add_argument("--tau", type=float, default=0.5)
    parser.add_argument("--strategy", choices=["BFS", "DFS"], default="BFS")
    parser.add_argument("--topic-words", dest="topic_words", type=int, default=10)
    parser.add_argument("--min-cluster-size", dest="min_cluster_size", type=int, default=2)
    parser.add_argument("--levels", type=int, default=2)


def build_parser() -> _Parser:
    parser = _Parser(prog="lexguide", description=__doc__)
    parser.add_argument("--version", action="version", version=f"lexguide {__version__}")
    parser.add_argument("--config", help="key=value config file; flags override it")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("ingest", parents=[], help="corpus JSON -> fragment store JSONL")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--max-fragment-tokens", type=int, default=DEFAULT_MAX_FRAGMENT_TOKENS)

    p = sub.add_parser("index", help="fragment store -> embedded vector index")
    p.add_argument("--fragments", required=True)
    p.add_argument("--out", dest="output", required=True)
    _provider_args(p)

    p = sub.add_parser("chat", help="interactive proactive dialogue REPL")
    p.add_argument("--index", required=True)
    p.add_argument("--fragments", required=True)
    p.add_argument("--transcript", help="write the session transcript JSONL here")
    _provider_args(p)
    _engine_args(p)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--index", required=True)
    p.add_argument("--fragments", required=True)
    p.add_argument("--port", type=int, default=int(os.environ.get("LEXGUIDE_PORT", "8000")))
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--cors-origin", default=os.environ.get("LEXGUIDE_CORS_ORIGIN"))
    _provider_args(p)
    _engine_args(p)

    p = sub.add_parser("build-dataset", help="corpus JSON -> multi-turn dialogue JSON")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    _provider_args(p)

    p = sub.add_parser("stats", help="statistics for a corpus or dialogue file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--kind", choices=["auto", "corpus", "eudial"], default="auto")
    p.add_argument("--max-fragment-tokens", type=int, default=DEFAULT_MAX_FRAGMENT_TOKENS)

    p = sub.add_parser("eval", help="score transcripts against gold dialogues")
    p.add_argument("--gold", required=True)
    p.add_argument("--transcripts", required=True, help="directory of per-dialogue run outputs")
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--fragments", help="fragment store for groundedness")
    p.add_argument("--theta", type=float, default=evaluation.DEFAULT_THETA)
    p.add_argument("--tau-cov", dest="tau_cov", type=float, default=evaluation.DEFAULT_TAU_COV)
    p.add_argument("--csv", help="also write a one-row CSV table here")
    p.add_argument("--mode", default="lexguide")
    _provider_args(p)
    return parser


def _apply_config_file(argv: list[str]) -> list[str]:
    """Prepend key=value pairs from --config as defaults (flags still win)."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at + 1 >= len(argv):
        return argv
    path = Path(argv[at + 1])
    if not path.exists():
        raise LexGuideError(f"config file not found: {path}")
    injected: list[str] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("["):
            continue
        if "=" not in line:
            raise LexGuideError(f"bad config line: {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        injected.extend([f"--{key}", value])
    # command word stays first; config values go before explicit flags
    head = [a for a in argv[: at]]
    tail = argv[at + 2:]
    if head and not head[0].startswith("-"):
        return head[:1] + injected + head[1:] + tail
    return injected + head + tail


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(argv)
    except LexGuideError as exc:
        print(f"lexguide: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    handler = {
        "ingest": _cmd_ingest,
        "index": _cmd_index,
        "chat": _cmd_chat,
        "serve": _cmd_serve,
        "build-dataset": _cmd_build_dataset,
        "stats": _cmd_stats,
        "eval": _cmd_eval,
    }[args.command]
    try:
        return handler(args)
    except ProviderUnavailable as exc:
        print(f"lexguide: provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (LexGuideError, FileNotFoundError, ValueError) as exc:
        print(f"lexguide: {exc}", file=sys.stderr)
        return EXIT_DATA


def _cmd_ingest(args) -> int:
    docs = ingest_documents(args.input)
    fragments = [f for doc in docs for f in fragment_document(doc, args.max_fragment_tokens)]
    write_fragments(fragments, args.output)
    print(json.dumps({"documents": len(docs), "fragments": len(fragments)}))
    return EXIT_OK


def _cmd_index(args) -> int:
    fragments = read_fragments(args.fragments)
    if not fragments:
        print("lexguide: fragment store is empty", file=sys.stderr)
        return EXIT_DATA
    embedder = make_embedding_provider(_provider_config(args, "embed_model", "LEXGUIDE_EMBED_API_KEY"))
    vectors = embedder.embed_texts([f.text for f in fragments])
    index = build_index(fragments, vectors)
    save_index(index, args.output)
    print(json.dumps({"entries": index.size, "dim": index.dim}))
    return EXIT_OK


def _make_engine(args) -> Engine:
    index = load_index(args.index)
    fragments = read_fragments(args.fragments)
    embedder = make_embedding_provider(_provider_config(args, "embed_model", "LEXGUIDE_EMBED_API_KEY"))
    chatter = make_chat_provider(_provider_config(args, "chat_model", "LEXGUIDE_CHAT_API_KEY"))
    clock = LogicalClock() if args.provider == "stub" else None
    return Engine(index, fragments, embedder, chatter, clock=clock)


def _print_turn(session, turn) -> None:
    print(f"response: {turn.response}")
    if turn.followup:
        print(f"followup: {turn.followup}")
    print(f"node: {turn.node_id if turn.node_id else '-'}")
    breadcrumb = " > ".join(session.state.path) if session.state else "-"
    print(f"path: {breadcrumb}")


def _cmd_chat(args) -> int:
    engine = _make_engine(args)
    config = _session_config(args)
    session_id = f"chat-{args.seed:08d}" if args.provider == "stub" else None

    first = sys.stdin.readline()
    if not first:
        print("lexguide: no initial query on stdin", file=sys.stderr)
        return EXIT_DATA
    session = engine.start_session(first.strip(), config, session_id=session_id)
    _print_turn(session, session.transcript[-1])

    while session.active:
        line = sys.stdin.readline()
        if not line:
            engine.end_session(session, reason="abandoned")
            break
        line = line.strip()
        if not line:
            continue
        if line.startswith(":"):
            if not _meta_command(engine, session, line):
                break
            continue
        turn = engine.take_turn(session, line)
        _print_turn(session, turn)

    if session.termination_reason == "complete-coverage":
        print(COVERAGE_MESSAGE)
    if args.transcript:
        write_transcript(session, args.transcript)
    return EXIT_OK


def _meta_command(engine, session, line: str) -> bool:
    """Handle a :command; returns False when the REPL should stop."""
    parts = line.split()
    cmd = parts[0]
    try:
        if cmd == ":quit":
            engine.end_session(session, reason="user-satisfied")
            return False
        if cmd == ":ascend":
            engine.apply_navigation(session, "ascend")
        elif cmd == ":jump" and len(parts) > 1:
            engine.apply_navigation(session, "jump", target=parts[1])
        elif cmd == ":back" and len(parts) > 1:
            engine.apply_navigation(session, "backtrack", steps=int(parts[1]))
        else:
            print(f"unknown command: {line}", file=sys.stderr)
            return True
    except LexGuideError as exc:
        print(f"navigation error: {exc}", file=sys.stderr)
        return True
    breadcrumb = " > ".join(session.state.path)
    print(f"node: {session.state.current}")
    print(f"path: {breadcrumb}")
    return True


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    engine = _make_engine(args)
    app = create_app(
        engine,
        default_config=_session_config(args),
        cors_origin=args.cors_origin,
        version=__version__,
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def _cmd_build_dataset(args) -> int:
    docs = ingest_documents(args.input)
    chatter = make_chat_provider(_provider_config(args, "chat_model", "LEXGUIDE_CHAT_API_KEY"))
    dialogues = [dataset_builder.build_dialogue(doc, chatter) for doc in docs]
    dataset_builder.export_eudial(dialogues, args.output)
    stats = dataset_builder.compute_dataset_stats(dialogues)
    print(json.dumps(dataclasses.asdict(stats)))
    return EXIT_OK


def _detect_kind(path: str) -> str:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(raw, dict) and "dialogues" in raw:
        return "eudial"
    if isinstance(raw, list) and raw and isinstance(raw[0], dict) and "turns" in raw[0]:
        return "eudial"
    return "corpus"


def _cmd_stats(args) -> int:
    kind = args.kind if args.kind != "auto" else _detect_kind(args.input)
    if kind == "corpus":
        docs = ingest_documents(args.input)
        stats = compute_corpus_stats(docs, args.max_fragment_tokens)
    else:
        dialogues = dataset_builder.import_eudial(args.input)
        stats = dataset_builder.compute_dataset_stats(dialogues)
    print(json.dumps({"kind": kind, **dataclasses.asdict(stats)}, indent=2))
    return EXIT_OK


def _cmd_eval(args) -> int:
    gold = dataset_builder.import_eudial(args.gold)
    runs_dir = Path(args.transcripts)
    if not runs_dir.is_dir():
        raise LexGuideError(f"transcripts directory not found: {runs_dir}")
    fragments_by_id = {}
    fragments_path = args.fragments or (runs_dir / "fragments.jsonl")
    if Path(fragments_path).exists():
        fragments_by_id = {f.id: f for f in read_fragments(fragments_path)}
    embedder = make_embedding_provider(_provider_config(args, "embed_model", "LEXGUIDE_EMBED_API_KEY"))

    from .engine import read_transcript

    per_dialogue = []
    skipped = []
    for dialogue in gold:
        run_dir = runs_dir / dialogue.id
        transcript_path = run_dir / "transcript.jsonl"
        if not transcript_path.exists():
            skipped.append(dialogue.id)
            continue
        transcript = read_transcript(transcript_path)
        tree = None
        visited: list[str] = []
        tree_path = run_dir / "tree.json"
        state_path = run_dir / "state.json"
        if tree_path.exists():
            tree = topics.load_tree(tree_path)
        if state_path.exists():
            snapshot = json.loads(state_path.read_text(encoding="utf-8"))
            visited = list(snapshot.get("visited", []))
            current = snapshot.get("current")
            if current and current not in visited:
                visited.append(current)
        view = evaluation.SessionView(
            mode=args.mode,
            responses=[t.get("response", "") for t in transcript],
            followups=[t["followup"] for t in transcript if t.get("followup")],
            tree=tree,
            visited=visited,
        )
        per_dialogue.append(
            evaluation.evaluate_dialogue(
                dialogue, transcript, fragments_by_id, embedder, view,
                theta=args.theta, tau_cov=args.tau_cov,
            )
        )
    if skipped:
        print(f"lexguide: no runs for {len(skipped)} dialogues, skipped", file=sys.stderr)
    if not per_dialogue:
        raise LexGuideError("no evaluable runs found")
    report = evaluation.aggregate_reports(per_dialogue)
    config = {
        "mode": args.mode, "theta": args.theta, "tau_cov": args.tau_cov,
        "provider": args.provider, "seed": args.seed,
    }
    payload = evaluation.report_to_dict(report, config)
    Path(args.output).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    if args.csv:
        Path(args.csv).write_text(evaluation.report_to_csv(report, config), encoding="utf-8")
    print(json.dumps(payload["aggregates"]))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
