"""HTTP service: documents, mutations, runs and a server-sent event stream.

One in-memory session per document funnels all mutations through a lock
(the single writer), persists the file after every change, and broadcasts
one ApiEvent per mutation to subscribers in sequence order. Mutating
requests may carry an ``X-Revision`` header with the revision they were
based on; a mismatch yields 409 and the client refetches.
"""

from __future__ import annotations

import json
import os
import queue
import re
import threading
import uuid

from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from lmcanvas import engine, store
from lmcanvas.blocks import Geometry, ModelParams, Sink
from lmcanvas.document import CanvasDocument, OpReport, new_document
from lmcanvas.errors import (
    IntegrityError,
    LmCanvasError,
    ProviderError,
    StaleRevision,
    UnknownBlock,
    UnknownDocument,
    UnknownRecord,
    UnknownSeq,
)
from lmcanvas.provider import provider_from_env

DEFAULT_PORT = 7130

_STATUS_BY_ERROR = {
    UnknownDocument: 404,
    UnknownBlock: 404,
    UnknownSeq: 404,
    UnknownRecord: 404,
    StaleRevision: 409,
    ProviderError: 502,
}

_DOC_ID_RE = re.compile(r"[A-Za-z0-9._-]{1,64}")


def _error_status(exc: LmCanvasError) -> int:
    for klass, status in _STATUS_BY_ERROR.items():
        if isinstance(exc, klass):
            return status
    return 400


class DocumentSession:
    """One open document: its lock, revision counter and event subscribers."""

    def __init__(self, document: CanvasDocument, path: str):
        self.document = document
        self.path = path
        self.lock = threading.RLock()
        self.revision = 0
        self.events: list[dict] = []
        self.subscribers: list[queue.SimpleQueue] = []
        self.run_counter = 0

    def emit(self, kind: str, payload: dict) -> dict:
        self.revision += 1
        event = {"seq": self.revision, "kind": kind, "payload": payload}
        self.events.append(event)
        for subscriber in list(self.subscribers):
            subscriber.put(event)
        return event

    def subscribe(self, since: int) -> queue.SimpleQueue:
        with self.lock:
            subscriber: queue.SimpleQueue = queue.SimpleQueue()
            for event in self.events:
                if event["seq"] > since:
                    subscriber.put(event)
            self.subscribers.append(subscriber)
            return subscriber

    def unsubscribe(self, subscriber: queue.SimpleQueue) -> None:
        with self.lock:
            if subscriber in self.subscribers:
                self.subscribers.remove(subscriber)

    def save(self) -> None:
        store.save(self.document, self.path)


class ServiceState:
    def __init__(self, library_path: str, provider, max_inflight: int):
        self.library_path = library_path
        self.provider = provider
        self.max_inflight = max_inflight
        self.sessions: dict[str, DocumentSession] = {}
        self.registry_lock = threading.Lock()

    def path_for(self, doc_id: str) -> str:
        return os.path.join(self.library_path, doc_id + store.FILE_EXTENSION)

    def session(self, doc_id: str) -> DocumentSession:
        with self.registry_lock:
            session = self.sessions.get(doc_id)
            if session is not None:
                return session
            path = self.path_for(doc_id)
            if not _DOC_ID_RE.fullmatch(doc_id) or not os.path.exists(path):
                raise UnknownDocument(f"no document {doc_id}")
            session = DocumentSession(store.load(path), path)
            self.sessions[doc_id] = session
            return session

    def create(self, doc_id: str | None, title: str) -> DocumentSession:
        with self.registry_lock:
            doc_id = doc_id or uuid.uuid4().hex
            if not _DOC_ID_RE.fullmatch(doc_id):
                raise IntegrityError(
                    "document id must match [A-Za-z0-9._-]{1,64}"
                )
            path = self.path_for(doc_id)
            if doc_id in self.sessions or os.path.exists(path):
                raise IntegrityError(f"document {doc_id} already exists")
            session = DocumentSession(new_document(title, doc_id=doc_id), path)
            session.save()
            self.sessions[doc_id] = session
            return session


def _check_revision(request: Request, session: DocumentSession) -> None:
    header = request.headers.get("x-revision")
    if header is None:
        return
    try:
        base = int(header)
    except ValueError:
        raise StaleRevision(f"X-Revision header {header!r} is not an integer")
    if base != session.revision:
        raise StaleRevision(
            f"request was based on revision {base}, document is at {session.revision}"
        )


def _parse_geometry(payload, default: Geometry | None = None) -> Geometry | None:
    if payload is None:
        return default
    if not isinstance(payload, dict) or set(payload) != {"x", "y", "width", "height"}:
        raise IntegrityError("geometry must be {x, y, width, height}")
    return Geometry(payload["x"], payload["y"], payload["width"], payload["height"])


def _parse_sink(payload) -> Sink:
    if not isinstance(payload, dict) or "kind" not in payload:
        raise IntegrityError("sink must be an object with a kind")
    extra = set(payload) - {"kind", "target", "prong_index"}
    if extra:
        raise IntegrityError(f"unknown sink fields: {sorted(extra)}")
    return Sink(
        kind=payload["kind"],
        target=payload.get("target"),
        prong_index=payload.get("prong_index"),
    )


def _record_json(record) -> dict:
    return store._record_to_dict(record)


def create_app(
    library_path: str,
    provider=None,
    max_inflight: int = 4,
    keepalive: float = 15.0,
) -> FastAPI:
    os.makedirs(library_path, exist_ok=True)
    state = ServiceState(library_path, provider or provider_from_env(), max_inflight)
    state.keepalive = keepalive
    app = FastAPI(title="lmcanvas", version="0.1.0")
    app.state.lmcanvas = state

    @app.exception_handler(LmCanvasError)
    def _handle_error(_request: Request, exc: LmCanvasError):
        body = {"error": exc.name, "message": str(exc)}
        if hasattr(exc, "cycle"):
            body["cycle"] = exc.cycle
        if hasattr(exc, "field"):
            body["field"] = exc.field
        return JSONResponse(status_code=_error_status(exc), content=body)

    # -- documents ------------------------------------------------------

    @app.get("/documents")
    def list_docs():
        entries, warnings = store.list_documents(state.library_path)
        return {
            "documents": [
                {
                    "id": info.id,
                    "title": info.title,
                    "modified_at": info.modified_at.isoformat(),
                }
                for info in entries
            ],
            "warnings": warnings,
        }

    @app.post("/documents", status_code=201)
    def create_doc(payload: dict = Body(default={})):
        session = state.create(payload.get("id"), payload.get("title", ""))
        with session.lock:
            session.emit("document_saved", {"document": session.document.id})
            return {
                "id": session.document.id,
                "revision": session.revision,
                "document": store.document_to_dict(session.document),
            }

    @app.get("/documents/{doc_id}")
    def get_doc(doc_id: str):
        session = state.session(doc_id)
        with session.lock:
            return {
                "revision": session.revision,
                "document": store.document_to_dict(session.document),
            }

    @app.put("/documents/{doc_id}")
    def put_doc(doc_id: str, request: Request, payload: dict = Body(...)):
        session = state.session(doc_id)
        with session.lock:
            _check_revision(request, session)
            document = store.document_from_dict(payload)
            if document.id != doc_id:
                raise IntegrityError(
                    f"document id {document.id} does not match path {doc_id}"
                )
            session.document = document
            session.save()
            session.emit("document_saved", {"document": doc_id})
            return {"revision": session.revision}

    # -- blocks ----------------------------------------------------------

    @app.post("/documents/{doc_id}/blocks", status_code=201)
    def create_block(doc_id: str, request: Request, payload: dict = Body(...)):
        session = state.session(doc_id)
        with session.lock:
            _check_revision(request, session)
            document = session.document
            kind = payload.get("kind")
            geometry = _parse_geometry(payload.get("geometry"))
            if kind == "text":
                report = document.create_text_block(payload.get("content", ""), geometry)
            elif kind == "model":
                params_payload = payload.get("params") or {}
                if not isinstance(params_payload, dict):
                    raise IntegrityError("params must be an object")
                params = ModelParams()
                for name, value in params_payload.items():
                    params.set_field(name, value)
                report = document.create_model_block(params, geometry)
            elif kind == "pipeline":
                report = document.create_pipeline(
                    payload.get("text"), payload.get("model"), geometry
                )
            else:
                raise IntegrityError(f"unknown block kind {kind!r}")
            session.save()
            session.emit(
                "block_changed",
                {"block": report.block_id, "change": "created", "report": report.to_dict()},
            )
            return {"block_id": report.block_id, "revision": session.revision}

    @app.patch("/documents/{doc_id}/blocks/{block_id}")
    def patch_block(doc_id: str, block_id: str, request: Request, payload: dict = Body(...)):
        session = state.session(doc_id)
        with session.lock:
            _check_revision(request, session)
            document = session.document
            allowed = {"content", "geometry", "params"}
            unknown = set(payload) - allowed
            if unknown:
                raise IntegrityError(f"unknown patch fields: {sorted(unknown)}")
            if not payload:
                raise IntegrityError("patch body is empty")
            # Validate the whole patch before touching the document so a
            # late rejection cannot leave a half-applied block.
            if "content" in payload:
                if not isinstance(payload["content"], str):
                    raise IntegrityError("content must be a string")
                document.require_text_block(block_id)
            if "params" in payload:
                if not isinstance(payload["params"], dict):
                    raise IntegrityError("params must be an object")
                document.require_model_block(block_id)
            geometry = None
            if "geometry" in payload:
                geometry = _parse_geometry(payload["geometry"])
                geometry.check()
                document.require_block(block_id)
            report = OpReport(block_id=block_id)
            if "content" in payload:
                report.merge(document.edit_text(block_id, payload["content"]))
            if geometry is not None:
                document.set_geometry(block_id, geometry)
            if "params" in payload:
                document.configure_model_fields(block_id, payload["params"])
            session.save()
            session.emit(
                "block_changed",
                {"block": block_id, "change": "updated", "report": report.to_dict()},
            )
            return {"revision": session.revision, "report": report.to_dict()}

    # -- structural operations ---------------------------------------------

    @app.post("/documents/{doc_id}/ops/{op_name}")
    def apply_op(doc_id: str, op_name: str, request: Request, payload: dict = Body(default={})):
        session = state.session(doc_id)
        with session.lock:
            _check_revision(request, session)
            document = session.document
            event_kind = "block_changed"
            if op_name == "concatenate":
                report = document.concatenate(payload.get("target"), payload.get("source"))
            elif op_name == "split":
                report = document.split(
                    payload.get("block"),
                    payload.get("start"),
                    payload.get("end"),
                    _parse_geometry(payload.get("geometry")),
                )
            elif op_name == "attach":
                if payload.get("source") is None:
                    report = document.detach(payload.get("host"), payload.get("prong_index"))
                else:
                    report = document.attach(
                        payload.get("host"), payload.get("prong_index"), payload.get("source")
                    )
            elif op_name == "expand":
                report = document.expand_pipeline(payload.get("pipeline"), payload.get("block"))
            elif op_name == "connect-output":
                report = document.connect_output(
                    payload.get("pipeline"), _parse_sink(payload.get("sink"))
                )
            elif op_name == "select":
                report = document.set_selection(
                    payload.get("block"), payload.get("start"), payload.get("end")
                )
                event_kind = "selection_changed"
            elif op_name == "clear-selection":
                report = document.clear_selection()
                event_kind = "selection_changed"
            elif op_name == "delete":
                report = document.delete_block(payload.get("block"))
                event_kind = "block_deleted"
            else:
                raise IntegrityError(f"unknown operation {op_name!r}")
            session.save()
            session.emit(
                event_kind,
                {"block": report.block_id, "op": op_name, "report": report.to_dict()},
            )
            return {
                "revision": session.revision,
                "block_id": report.block_id,
                "report": report.to_dict(),
            }

    # -- history -----------------------------------------------------------

    @app.get("/documents/{doc_id}/blocks/{block_id}/history")
    def get_history(doc_id: str, block_id: str):
        session = state.session(doc_id)
        with session.lock:
            entries = session.document.history_entries(block_id)
            return {"entries": [store._entry_to_dict(entry) for entry in entries]}

    @app.post("/documents/{doc_id}/blocks/{block_id}/history/revert")
    def revert_block(doc_id: str, block_id: str, request: Request, payload: dict = Body(...)):
        session = state.session(doc_id)
        with session.lock:
            _check_revision(request, session)
            report = session.document.revert(block_id, payload.get("to_seq"))
            session.save()
            session.emit(
                "block_changed",
                {"block": block_id, "change": "reverted", "report": report.to_dict()},
            )
            return {"revision": session.revision, "report": report.to_dict()}

    # -- generation ----------------------------------------------------------

    @app.post("/documents/{doc_id}/run")
    def run_pipelines(
        doc_id: str,
        request: Request,
        payload: dict = Body(...),
        wait: bool = False,
    ):
        session = state.session(doc_id)
        roots = payload.get("roots")
        if not isinstance(roots, list) or not all(isinstance(r, str) for r in roots):
            raise IntegrityError("run body must carry roots: [pipeline ids]")

        with session.lock:
            _check_revision(request, session)
            # Planning errors (cycles, unknown roots) surface before any
            # generation, for both sync and async runs.
            engine.plan(session.document, roots)
            session.run_counter += 1
            run_id = f"run{session.run_counter}"
            session.emit("generation_started", {"run": run_id, "roots": roots})
            if wait:
                result = engine.run(
                    session.document, roots, state.provider, state.max_inflight
                )
                session.save()
                session.emit(
                    "generation_finished",
                    {
                        "run": run_id,
                        "records": [record.id for record in result.records],
                        "report": result.report.to_dict(),
                    },
                )
                return {
                    "run_id": run_id,
                    "revision": session.revision,
                    "records": [_record_json(record) for record in result.records],
                    "report": result.report.to_dict(),
                }

        def _background():
            with session.lock:
                try:
                    result = engine.run(
                        session.document, roots, state.provider, state.max_inflight
                    )
                except LmCanvasError as exc:
                    session.emit(
                        "generation_finished",
                        {"run": run_id, "error": exc.name, "message": str(exc)},
                    )
                    return
                session.save()
                session.emit(
                    "generation_finished",
                    {
                        "run": run_id,
                        "records": [record.id for record in result.records],
                        "report": result.report.to_dict(),
                    },
                )

        threading.Thread(target=_background, name=run_id, daemon=True).start()
        return {"run_id": run_id}

    # -- events ----------------------------------------------------------------

    @app.get("/documents/{doc_id}/events")
    def events(doc_id: str, since: int = 0):
        session = state.session(doc_id)
        subscriber = session.subscribe(since)

        def stream():
            try:
                while True:
                    try:
                        event = subscriber.get(timeout=state.keepalive)
                    except queue.Empty:
                        yield ": keep-alive\n\n"
                        continue
                    yield f"id: {event['seq']}\ndata: {json.dumps(event)}\n\n"
            finally:
                session.unsubscribe(subscriber)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app


def serve(
    library_path: str,
    port: int = DEFAULT_PORT,
    host: str = "127.0.0.1",
    provider=None,
    max_inflight: int = 4,
) -> None:
    import uvicorn

    app = create_app(library_path, provider=provider, max_inflight=max_inflight)
    uvicorn.run(app, host=host, port=port, log_level="warning")
