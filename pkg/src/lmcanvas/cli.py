"""Headless driver for canvas documents.

Subcommands mirror the HTTP API one to one and operate directly on
.lmcanvas files, so scripted sessions against the service and scripted CLI
sessions produce identical documents. ``run`` prints line-delimited JSON,
one object per generation record, for shell tooling and golden files.

Exit codes: 0 success, 1 usage error, 2 document or integrity error,
3 provider error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from lmcanvas import engine, store
from lmcanvas.blocks import Geometry, ModelParams, Sink
from lmcanvas.document import CanvasDocument, new_document
from lmcanvas.errors import IoError, LmCanvasError, ProviderError
from lmcanvas.provider import provider_from_env
from lmcanvas.service import DEFAULT_PORT

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOCUMENT = 2
EXIT_PROVIDER = 3


def _add_geometry_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--x", type=float, default=0.0)
    parser.add_argument("--y", type=float, default=0.0)
    parser.add_argument("--width", type=float, default=240.0)
    parser.add_argument("--height", type=float, default=120.0)


def _geometry_from(args) -> Geometry:
    return Geometry(args.x, args.y, args.width, args.height)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lmcanvas", description="Canvas documents for LLM writing pipelines."
    )
    parser.add_argument("--json", action="store_true", help="machine-readable errors on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p_new = sub.add_parser("new", help="create an empty document file")
    p_new.add_argument("file")
    p_new.add_argument("--title", default="")
    p_new.add_argument("--id", dest="doc_id", default=None)
    p_new.set_defaults(func=cmd_new)

    p_show = sub.add_parser("show", help="print a document (or one block) as JSON")
    p_show.add_argument("file")
    p_show.add_argument("--block", default=None)
    p_show.set_defaults(func=cmd_show)

    p_edit = sub.add_parser("edit", help="replace a text block's content")
    p_edit.add_argument("file")
    p_edit.add_argument("block")
    p_edit.add_argument("--content", required=True)
    p_edit.set_defaults(func=cmd_edit)

    p_op = sub.add_parser("op", help="apply a structural operation")
    p_op.add_argument("file")
    op_sub = p_op.add_subparsers(dest="opname", required=True)

    p = op_sub.add_parser("create-text")
    p.add_argument("--content", default="")
    _add_geometry_flags(p)

    p = op_sub.add_parser("create-model")
    p.add_argument("--model-name", default="default")
    p.add_argument("--temperature", type=float, default=0.7)
    p.add_argument("--top-p", type=float, default=1.0)
    p.add_argument("--max-tokens", type=int, default=64)
    p.add_argument("--stop", action="append", default=[])
    p.add_argument("--presence-penalty", type=float, default=0.0)
    p.add_argument("--frequency-penalty", type=float, default=0.0)
    _add_geometry_flags(p)

    p = op_sub.add_parser("create-pipeline")
    p.add_argument("--text", required=True)
    p.add_argument("--model", required=True)
    _add_geometry_flags(p)

    p = op_sub.add_parser("concatenate")
    p.add_argument("--target", required=True)
    p.add_argument("--source", required=True)

    p = op_sub.add_parser("split")
    p.add_argument("--block", required=True)
    p.add_argument("--start", type=int, required=True)
    p.add_argument("--end", type=int, required=True)
    _add_geometry_flags(p)

    p = op_sub.add_parser("attach")
    p.add_argument("--host", required=True)
    p.add_argument("--prong-index", type=int, required=True)
    p.add_argument("--source", required=True)

    p = op_sub.add_parser("detach")
    p.add_argument("--host", required=True)
    p.add_argument("--prong-index", type=int, required=True)

    p = op_sub.add_parser("expand")
    p.add_argument("--pipeline", required=True)
    p.add_argument("--block", required=True)

    p = op_sub.add_parser("connect-output")
    p.add_argument("--pipeline", required=True)
    p.add_argument(
        "--sink",
        required=True,
        help="container | select | continuation:<block> | input-prong:<block>:<index>",
    )

    p = op_sub.add_parser("configure")
    p.add_argument("--block", required=True)
    p.add_argument(
        "--set",
        dest="updates",
        action="append",
        required=True,
        metavar="FIELD=VALUE",
    )

    p = op_sub.add_parser("set-geometry")
    p.add_argument("--block", required=True)
    _add_geometry_flags(p)

    p = op_sub.add_parser("select")
    p.add_argument("--block", required=True)
    p.add_argument("--start", type=int, required=True)
    p.add_argument("--end", type=int, required=True)

    op_sub.add_parser("clear-selection")

    p = op_sub.add_parser("delete")
    p.add_argument("--block", required=True)

    p_op.set_defaults(func=cmd_op)

    p_run = sub.add_parser("run", help="execute pipelines with the configured provider")
    p_run.add_argument("file")
    p_run.add_argument("--roots", required=True, help="comma-separated pipeline ids")
    p_run.add_argument("--provider", choices=["mock", "http"], default=None)
    p_run.add_argument("--max-inflight", type=int, default=4)
    p_run.set_defaults(func=cmd_run)

    p_hist = sub.add_parser("history", help="print (or revert) a block's history")
    p_hist.add_argument("file")
    p_hist.add_argument("block")
    p_hist.add_argument("--revert", type=int, default=None, metavar="SEQ")
    p_hist.set_defaults(func=cmd_history)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--port", type=int, default=DEFAULT_PORT)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--library", default=".")
    p_serve.add_argument("--provider", choices=["mock", "http"], default=None)
    p_serve.add_argument("--max-inflight", type=int, default=4)
    p_serve.set_defaults(func=cmd_serve)

    return parser


# -- commands -----------------------------------------------------------------


def _load(path: str) -> CanvasDocument:
    return store.load(path)


def _print_report(report) -> None:
    payload = {"ok": True}
    payload.update(report.to_dict())
    print(json.dumps(payload, ensure_ascii=False))


def cmd_new(args) -> int:
    if os.path.exists(args.file):
        raise IoError(f"{args.file} already exists")
    doc_id = args.doc_id
    if doc_id is None:
        stem = os.path.splitext(os.path.basename(args.file))[0]
        doc_id = stem or None
    document = new_document(args.title, doc_id=doc_id)
    store.save(document, args.file)
    print(json.dumps({"ok": True, "id": document.id, "file": args.file}))
    return EXIT_OK


def cmd_show(args) -> int:
    document = _load(args.file)
    if args.block is None:
        sys.stdout.write(store.dumps(document))
        return EXIT_OK
    block = document.require_block(args.block)
    print(json.dumps(store._block_to_dict(block), indent=2, ensure_ascii=False))
    return EXIT_OK


def cmd_edit(args) -> int:
    document = _load(args.file)
    report = document.edit_text(args.block, args.content)
    store.save(document, args.file)
    _print_report(report)
    return EXIT_OK


def _parse_sink_spec(spec: str) -> Sink:
    if spec == "container":
        return Sink.container()
    if spec == "select":
        return Sink.select()
    if spec.startswith("continuation:"):
        return Sink.continuation(spec.split(":", 1)[1])
    if spec.startswith("input-prong:"):
        parts = spec.split(":")
        if len(parts) == 3 and parts[2].isdigit():
            return Sink.input_prong(parts[1], int(parts[2]))
    raise argparse.ArgumentTypeError(f"bad sink spec {spec!r}")


def _parse_set_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def cmd_op(args) -> int:
    document = _load(args.file)
    op = args.opname
    if op == "create-text":
        report = document.create_text_block(args.content, _geometry_from(args))
    elif op == "create-model":
        params = ModelParams(
            model_name=args.model_name,
            temperature=args.temperature,
            top_p=args.top_p,
            max_tokens=args.max_tokens,
            stop_sequences=list(args.stop),
            presence_penalty=args.presence_penalty,
            frequency_penalty=args.frequency_penalty,
        )
        report = document.create_model_block(params, _geometry_from(args))
    elif op == "create-pipeline":
        report = document.create_pipeline(args.text, args.model, _geometry_from(args))
    elif op == "concatenate":
        report = document.concatenate(args.target, args.source)
    elif op == "split":
        report = document.split(args.block, args.start, args.end, _geometry_from(args))
    elif op == "attach":
        report = document.attach(args.host, args.prong_index, args.source)
    elif op == "detach":
        report = document.detach(args.host, args.prong_index)
    elif op == "expand":
        report = document.expand_pipeline(args.pipeline, args.block)
    elif op == "connect-output":
        report = document.connect_output(args.pipeline, _parse_sink_spec(args.sink))
    elif op == "configure":
        updates = {}
        for item in args.updates:
            if "=" not in item:
                raise argparse.ArgumentTypeError(f"--set expects FIELD=VALUE, got {item!r}")
            name, raw = item.split("=", 1)
            updates[name] = _parse_set_value(raw)
        report = document.configure_model_fields(args.block, updates)
    elif op == "set-geometry":
        report = document.set_geometry(args.block, _geometry_from(args))
    elif op == "select":
        report = document.set_selection(args.block, args.start, args.end)
    elif op == "clear-selection":
        report = document.clear_selection()
    elif op == "delete":
        report = document.delete_block(args.block)
    else:  # pragma: no cover - argparse restricts choices
        raise argparse.ArgumentTypeError(f"unknown op {op!r}")
    store.save(document, args.file)
    _print_report(report)
    return EXIT_OK


def cmd_run(args) -> int:
    document = _load(args.file)
    provider = provider_from_env(override=args.provider)
    roots = [root for root in args.roots.split(",") if root]
    result = engine.run(document, roots, provider, args.max_inflight)
    store.save(document, args.file)
    for record in result.records:
        print(
            json.dumps(
                {
                    "pipeline": record.pipeline,
                    "text_slot": record.text_slot,
                    "model_slot": record.model_slot,
                    "status": record.status,
                    "output_text": record.output_text,
                },
                ensure_ascii=False,
            )
        )
    if any(record.error_name == "ProviderError" for record in result.records):
        return EXIT_PROVIDER
    return EXIT_OK


def cmd_history(args) -> int:
    document = _load(args.file)
    if args.revert is not None:
        document.revert(args.block, args.revert)
        store.save(document, args.file)
    for entry in document.history_entries(args.block):
        print(json.dumps(store._entry_to_dict(entry), ensure_ascii=False))
    return EXIT_OK


def cmd_serve(args) -> int:
    from lmcanvas import service

    provider = provider_from_env(override=args.provider)
    service.serve(
        args.library,
        port=args.port,
        host=args.host,
        provider=provider,
        max_inflight=args.max_inflight,
    )
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE

    json_errors = getattr(args, "json", False)
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        _emit_error("UsageError", str(exc), json_errors)
        return EXIT_USAGE
    except ProviderError as exc:
        _emit_error(exc.name, str(exc), json_errors)
        return EXIT_PROVIDER
    except LmCanvasError as exc:
        _emit_error(exc.name, str(exc), json_errors)
        return EXIT_DOCUMENT


def _emit_error(name: str, message: str, as_json: bool) -> None:
    if as_json:
        print(json.dumps({"error": name, "message": message}), file=sys.stderr)
    else:
        print(f"error: {name}: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
