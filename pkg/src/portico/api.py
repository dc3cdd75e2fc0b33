"""HTTP control plane: container state, lifecycle commands, impact queries,
and an ordered newline-delimited JSON event stream.

Conventions:

* Every payload is JSON; responses are serialized with :func:`to_json` so the
  CLI's JSON mode can pass bodies through byte-identically.
* Mutations run on the caller's thread under the container's lifecycle
  executor; the 202 response carries the seq of the first event the command
  produced, and completion is observable on ``/api/events``.
* Platform errors map to ``{"code", "message", "subject"}`` with 400 for
  validation, 404 for unknown ids, 409 for illegal states.
"""

from __future__ import annotations

import json
import socket
import threading
import time
from pathlib import Path
from typing import Any, Iterator

import uvicorn
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import StreamingResponse
from fastapi.staticfiles import StaticFiles

from .errors import BindFailure, MalformedModel, PorticoError
from .ism.certify import certify_report, scope_report
from .ism.model import ChangeContext, ModuleId, ServiceId, SystemModel, build_model
from .runtime.container import Container
from .runtime.packaging import parse_connection_config, parse_instance_config

_STATUS_BY_CODE = {
    "UnknownId": 404,
    "UnknownComponent": 404,
    "UnknownEndpoint": 404,
    "UnknownPort": 404,
    "DuplicateId": 409,
    "DuplicateInstanceId": 409,
    "IllegalTransition": 409,
    "RebindIncomplete": 409,
    "TargetDraining": 409,
    "CursorTooOld": 410,
}


def to_json(payload: Any) -> str:
    """The one JSON serialization used for every response body."""
    return json.dumps(payload, ensure_ascii=False, allow_nan=False,
                      separators=(",", ":"), sort_keys=False)


def _json_response(payload: Any, status_code: int = 200) -> Response:
    return Response(content=to_json(payload), status_code=status_code,
                    media_type="application/json")


def _error_response(exc: PorticoError) -> Response:
    status = _STATUS_BY_CODE.get(exc.code, 400)
    return _json_response(
        {"code": exc.code, "message": str(exc), "subject": exc.subject}, status
    )


def _events_payload(events) -> dict:
    return {
        "command": events[0].seq if events else None,
        "events": [e.to_obj() for e in events],
    }


def _load_model_arg(body: dict) -> SystemModel:
    spec = body.get("model")
    if not isinstance(spec, dict):
        raise MalformedModel("request body needs a 'model' object")
    return build_model(spec)


def create_app(container: Container, console_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="portico", docs_url=None, redoc_url=None)

    @app.exception_handler(PorticoError)
    async def portico_error_handler(_request: Request, exc: PorticoError):
        return _error_response(exc)

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(_request: Request, exc: RequestValidationError):
        return _json_response(
            {"code": "ConfigValidation", "message": str(exc.errors()[:1]), "subject": None},
            400,
        )

    # -------------------------------------------------------------- reads

    @app.get("/api/status")
    def status() -> Response:
        return _json_response(container.snapshot())

    @app.get("/api/components")
    def components() -> Response:
        return _json_response(container.snapshot()["components"])

    @app.get("/api/instances")
    def instances() -> Response:
        return _json_response(container.snapshot()["instances"])

    @app.get("/api/connections")
    def connections() -> Response:
        return _json_response(container.snapshot()["connections"])

    @app.get("/api/graph")
    def graph() -> Response:
        return _json_response(container.graph())

    @app.get("/api/events")
    def events(cursor: int = 0, follow: bool = False) -> Response:
        if not follow:
            try:
                batch = container.events.read_after(cursor)
            except PorticoError as e:
                return _error_response(e)
            return _json_response([e.to_obj() for e in batch])

        def ndjson() -> Iterator[bytes]:
            # short poll so disconnected subscribers release their thread
            # quickly; idle control records double as keep-alives
            for record in container.events.stream(cursor, poll_timeout=5.0):
                yield (to_json(record) + "\n").encode("utf-8")

        return StreamingResponse(ndjson(), media_type="application/x-ndjson")

    # ----------------------------------------------------------- mutations

    @app.post("/api/scan")
    async def scan(request: Request) -> Response:
        body = await _body(request)
        root = body.get("root")
        delta = container.scan(root)
        events = container.apply_delta(delta)
        payload = _events_payload(events)
        payload["delta"] = delta.to_obj()
        return _json_response(payload, 202)

    @app.post("/api/components")
    async def upload_component(request: Request) -> Response:
        data = await request.body()
        events = container.load_package_bytes(data)
        return _json_response(_events_payload(events), 202)

    @app.post("/api/instances")
    async def create_instance(request: Request) -> Response:
        body = await _body(request)
        cfg = parse_instance_config(body, "<request>")
        events = container.instantiate(cfg)
        return _json_response(_events_payload(events), 202)

    @app.delete("/api/instances/{instance_id}")
    def delete_instance(instance_id: str) -> Response:
        events = container.unload_instance(instance_id)
        return _json_response(_events_payload(events), 202)

    @app.post("/api/instances/{instance_id}/swap")
    async def swap_instance(instance_id: str, request: Request) -> Response:
        body = await _body(request)
        events = container.swap_instance(
            instance_id, str(body.get("component", "")),
            body.get("rebind"), body.get("parameters"),
        )
        return _json_response(_events_payload(events), 202)

    @app.post("/api/connections")
    async def create_connection(request: Request) -> Response:
        body = await _body(request)
        connection_id = body.get("connection")
        cfg = parse_connection_config(body, str(connection_id), "<request>")
        events = container.create_connection(cfg)
        return _json_response(_events_payload(events), 202)

    @app.put("/api/connections/{connection_id}")
    async def retarget_connection(connection_id: str, request: Request) -> Response:
        body = await _body(request)
        kwargs = {}
        if "adapter" in body:
            kwargs["adapter"] = body["adapter"]
        events = container.retarget_connection(connection_id, str(body.get("to", "")), **kwargs)
        return _json_response(_events_payload(events), 202)

    @app.delete("/api/connections/{connection_id}")
    def delete_connection(connection_id: str) -> Response:
        events = container.drop_connection(connection_id)
        return _json_response(_events_payload(events), 202)

    @app.put("/api/connections/{connection_id}/adapter")
    async def reload_adapter(connection_id: str, request: Request) -> Response:
        body = await _body(request)
        events = container.reload_adapter(connection_id, body.get("adapter"))
        return _json_response(_events_payload(events), 202)

    # -------------------------------------------------------- impact queries

    @app.post("/api/ism/model")
    async def ism_model(request: Request) -> Response:
        body = await _body(request)
        model = _load_model_arg(body)
        return _json_response({
            "applications": sorted(model.apps()),
            "modules": len(model.modules()),
            "services": len(model.services()),
            "contexts": sorted(c.value for c in model.rules.registered_contexts),
        })

    @app.post("/api/ism/scope")
    async def ism_scope(request: Request) -> Response:
        body = await _body(request)
        if body.get("model") is None:
            context = _one_context(body)
            model = container.export_ism_model(context)
            contexts = [context]
        else:
            model = _load_model_arg(body)
            contexts = _contexts(body)
        changes = [ServiceId.parse(str(s)) for s in body.get("change", [])]
        return _json_response(scope_report(model, contexts, changes))

    @app.post("/api/ism/certify")
    async def ism_certify(request: Request) -> Response:
        body = await _body(request)
        if body.get("model") is None:
            model = container.export_ism_model(_one_context(body))
        else:
            model = _load_model_arg(body)
        module = body.get("module")
        module_id = ModuleId.parse(str(module)) if module else None
        return _json_response(certify_report(model, module_id))

    if console_dir is not None and Path(console_dir).is_dir():
        app.mount("/console", StaticFiles(directory=str(console_dir), html=True),
                  name="console")

    return app


async def _body(request: Request) -> dict:
    raw = await request.body()
    if not raw:
        return {}
    try:
        body = json.loads(raw)
    except json.JSONDecodeError as e:
        raise MalformedModel(f"request body is not valid JSON: {e}") from None
    if not isinstance(body, dict):
        raise MalformedModel("request body must be a JSON object")
    return body


def _contexts(body: dict) -> list[ChangeContext]:
    raw = body.get("context", ["s"])
    if isinstance(raw, str):
        raw = [c for c in raw.split(",") if c]
    return [ChangeContext.parse(str(c)) for c in raw]


def _one_context(body: dict) -> ChangeContext:
    contexts = _contexts(body)
    return contexts[0] if contexts else ChangeContext.STATIC


class AdminServer:
    """uvicorn wrapped for embedding: background thread, resolved port."""

    def __init__(self, container: Container, host: str = "127.0.0.1", port: int = 0,
                 console_dir: str | Path | None = None):
        self.container = container
        self._config = uvicorn.Config(
            create_app(container, console_dir=console_dir),
            host=host, port=port, log_level="warning", lifespan="off",
            timeout_graceful_shutdown=1,
        )
        self._server = uvicorn.Server(self._config)
        self._thread: threading.Thread | None = None

    def start(self, timeout: float = 10.0) -> "AdminServer":
        def run():
            try:
                self._server.run()
            except SystemExit:
                pass  # bind failure; start() reports it as BindFailure

        self._thread = threading.Thread(target=run, name="portico-admin", daemon=True)
        self._thread.start()
        deadline = time.monotonic() + timeout
        while not self._server.started:
            if not self._thread.is_alive():
                raise BindFailure(
                    f"control plane failed to bind {self._config.host}:{self._config.port}"
                )
            if time.monotonic() > deadline:
                raise BindFailure("control plane did not start in time")
            time.sleep(0.01)
        return self

    @property
    def port(self) -> int:
        for server in self._server.servers:
            for sock in server.sockets:
                if sock.family in (socket.AF_INET, socket.AF_INET6):
                    return sock.getsockname()[1]
        return self._config.port

    @property
    def base_url(self) -> str:
        return f"http://{self._config.host}:{self.port}"

    def stop(self) -> None:
        self._server.should_exit = True
        if self._thread is not None:
            self._thread.join(timeout=10.0)
            self._thread = None


def serve(container: Container, host: str = "127.0.0.1", port: int = 8800,
          console_dir: str | Path | None = None) -> AdminServer:
    """Start the control plane; raises BindFailure when the address is taken."""
    return AdminServer(container, host=host, port=port, console_dir=console_dir).start()
