"""Command line entry points.

All subcommands are thin clients over the library: analyze renders a report
for a saved transcript, chat runs an interactive session in the terminal,
validate checks a content directory, and serve starts the HTTP service.

Exit codes: 0 success, 1 environment or usage failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import dataclasses
import socket
import sys
import time
from pathlib import Path

from sophie.config import ConfigError, resolve_config
from sophie.content import ContentError, collect_content_errors, load_content, load_lexicons
from sophie.dialogue import DialogueEngine, SessionStatus
from sophie.report import compute_report, render_text, report_to_json
from sophie.transcript import ParseError, ValidationError, parse_transcript, serialize_transcript


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument(
        "--config",
        type=Path,
        default=None,
        help="config file (falls back to $SOPHIE_CONFIG, then defaults)",
    )

    parser = argparse.ArgumentParser(prog="sophie", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_analyze = sub.add_parser(
        "analyze", parents=[shared], help="compute a feedback report for a transcript"
    )
    p_analyze.add_argument("input", type=Path, help="transcript JSON file")
    p_analyze.add_argument("--out", type=Path, default=None, help="write here instead of stdout")
    p_analyze.add_argument("--format", choices=("json", "text"), default="json")
    p_analyze.set_defaults(func=cmd_analyze)

    p_chat = sub.add_parser(
        "chat", parents=[shared], help="talk to the virtual patient in the terminal"
    )
    p_chat.add_argument("--schema", required=True, help="dialogue schema id to run")
    p_chat.add_argument("--record", type=Path, default=None, help="save the transcript here")
    p_chat.set_defaults(func=cmd_chat)

    p_validate = sub.add_parser(
        "validate", parents=[shared], help="check a content directory for errors"
    )
    p_validate.add_argument("content_dir", type=Path)
    p_validate.set_defaults(func=cmd_validate)

    p_serve = sub.add_parser("serve", parents=[shared], help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=None, help="0 picks a free port")
    p_serve.add_argument("--data-dir", type=Path, default=None)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        document = args.input.read_text(encoding="utf-8")
    except OSError as exc:
        return _fail(f"cannot read {args.input}: {exc.strerror or exc}", 1)

    try:
        transcript = parse_transcript(document)
    except ParseError as exc:
        return _fail(f"invalid transcript: {exc}", 2)
    except ValidationError as exc:
        for violation in exc.violations:
            print(f"error: {violation.message}", file=sys.stderr)
        return 2

    try:
        cfg = resolve_config(args.config)
        content = load_content(cfg.content_dir)
        lexicons = load_lexicons(cfg)
    except (ConfigError, ContentError) as exc:
        return _fail(str(exc), 1)

    report = compute_report(transcript, lexicons, content.trees, cfg)
    rendered = report_to_json(report) if args.format == "json" else render_text(report)
    if args.out is not None:
        args.out.write_text(rendered, encoding="utf-8")
    else:
        sys.stdout.write(rendered)
    return 0


def cmd_chat(args: argparse.Namespace) -> int:
    try:
        cfg = resolve_config(args.config)
        content = load_content(cfg.content_dir)
        lexicons = load_lexicons(cfg)
    except (ConfigError, ContentError) as exc:
        return _fail(str(exc), 1)

    engine = DialogueEngine(content.schemas, content.trees)
    if args.schema not in engine.schemas:
        known = ", ".join(sorted(engine.schemas))
        return _fail(f"unknown schema {args.schema!r} (have: {known})", 1)

    started = time.monotonic()

    def clock() -> int:
        return int((time.monotonic() - started) * 1000)

    state, emitted = engine.start_session(args.schema, clock=clock)
    for turn in emitted:
        print(f"Sophie: {turn.text}")

    prompt = "You: " if sys.stdin.isatty() else ""
    while state.status is SessionStatus.ACTIVE:
        start_ms = clock()
        try:
            line = input(prompt)
        except EOFError:
            break
        text = line.strip()
        if text == "/end":
            break
        if not text:
            continue
        end_ms = clock()
        emitted = engine.process_user_turn(state, text, start_ms=start_ms, end_ms=end_ms)
        for turn in emitted:
            print(f"Sophie: {turn.text}")

    transcript = engine.end_session(state)
    if args.record is not None:
        args.record.write_text(serialize_transcript(transcript), encoding="utf-8")

    report = compute_report(transcript, lexicons, content.trees, cfg)
    print()
    print(render_text(report), end="")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    content, errors = collect_content_errors(args.content_dir)
    if errors:
        for file, message in errors:
            print(f"{file}: {message}", file=sys.stderr)
        return 2
    print(f"ok: {len(content.trees)} rule trees, {len(content.schemas)} schemas")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from sophie.service import create_app

    try:
        cfg = resolve_config(args.config)
        overrides = {}
        if args.port is not None:
            overrides["port"] = args.port
        if args.data_dir is not None:
            overrides["data_dir"] = args.data_dir
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)
        app = create_app(cfg)
    except (ConfigError, ContentError) as exc:
        return _fail(str(exc), 1)

    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((args.host, cfg.port))
    except OSError as exc:
        sock.close()
        return _fail(f"cannot bind {args.host}:{cfg.port}: {exc.strerror or exc}", 1)
    bound_port = sock.getsockname()[1]
    print(f"listening on http://{args.host}:{bound_port}", flush=True)

    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    server.run(sockets=[sock])
    return 0


def main(argv: list | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
