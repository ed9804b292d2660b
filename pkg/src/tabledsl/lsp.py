"""Language Server hub: local DSL completion plus optional proxying.

The hub speaks the LSP base protocol (``Content-Length`` framed JSON-RPC
over stdio) and sorts incoming traffic three ways: completion requests on
DSL-prefixed lines are answered locally, document-sync notifications are
applied to the local store *and* duplicated to the downstream server, and
everything else is forwarded verbatim to the downstream when one is
configured (method-not-found otherwise).

The request loop is single-threaded; only the relay that pumps downstream
output back to the client runs on its own thread, with a shared write lock
keeping client-bound frames intact.  The downstream child is spawned lazily
on the first request that needs it, so DSL-only sessions never pay its
startup cost.  If the child dies the hub logs a warning and degrades to
no-downstream mode instead of terminating.
"""

from __future__ import annotations

import json
import logging
import os
import shlex
import subprocess
import sys
import threading
from dataclasses import dataclass

from tabledsl.ast import Target, TargetOption
from tabledsl.codegen import GenContext
from tabledsl.completion import (
    KEYWORD_DOCS,
    KIND_IDENTIFIER,
    KIND_KEYWORD,
    KIND_PREVIEW,
    complete,
    document_identifiers,
)
from tabledsl.parser import analyze, detect_dsl_line

log = logging.getLogger("tabledsl.lsp")

# JSON-RPC error codes
INVALID_PARAMS = -32602
METHOD_NOT_FOUND = -32601
INTERNAL_ERROR = -32603

_LSP_ITEM_KINDS = {KIND_KEYWORD: 14, KIND_PREVIEW: 15, KIND_IDENTIFIER: 6}


class ProtocolError(Exception):
    """Broken base-protocol framing; the server cannot continue."""


@dataclass(frozen=True)
class HubConfig:
    dsl_prefix: str = "##"
    default_target: Target = Target.PANDAS
    downstream_cmd: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.dsl_prefix:
            raise ValueError("dsl_prefix must be non-empty")


def load_config(path: str | None = None) -> HubConfig:
    """Read a key=value config file (``--config`` or $TABLEDSL_CONFIG)."""
    if path is None:
        path = os.environ.get("TABLEDSL_CONFIG")
    if not path:
        return HubConfig()
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key=value")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    kwargs = {}
    for key, value in values.items():
        if key == "dsl_prefix":
            kwargs["dsl_prefix"] = value
        elif key == "default_target":
            kwargs["default_target"] = Target(value)
        elif key == "downstream_cmd":
            kwargs["downstream_cmd"] = tuple(shlex.split(value)) or None
        else:
            raise ValueError(f"{path}: unknown config key {key!r}")
    return HubConfig(**kwargs)


# ---------------------------------------------------------------------------
# Document store

@dataclass
class Document:
    version: int
    text: str

    @property
    def lines(self) -> list[str]:
        return [ln.rstrip("\r") for ln in self.text.split("\n")]


class DocumentStore:
    """Open documents by URI; versions strictly increase per URI."""

    def __init__(self):
        self.docs: dict[str, Document] = {}

    def open(self, uri: str, version: int, text: str) -> None:
        self.docs[uri] = Document(version, text)

    def change(self, uri: str, version: int, content_changes: list[dict]) -> None:
        doc = self.docs.get(uri)
        if doc is None:
            log.warning("didChange for unopened document %s", uri)
            return
        if version <= doc.version:
            log.warning("non-increasing version %s for %s", version, uri)
        text = doc.text
        for change in content_changes:
            if "range" in change and change["range"] is not None:
                text = _apply_range_edit(text, change["range"], change["text"])
            else:
                text = change["text"]
        self.docs[uri] = Document(version, text)

    def close(self, uri: str) -> None:
        self.docs.pop(uri, None)

    def get(self, uri: str) -> Document | None:
        return self.docs.get(uri)


def _apply_range_edit(text: str, rng: dict, new_text: str) -> str:
    lines = text.split("\n")
    start, end = rng["start"], rng["end"]

    def offset(pos):
        line = min(pos["line"], len(lines) - 1)
        base = sum(len(l) + 1 for l in lines[:line])
        return base + min(pos["character"], len(lines[line]))

    return text[:offset(start)] + new_text + text[offset(end):]


def nearest_target(lines, line_no: int, default: Target, prefix: str) -> Target:
    """Target set by the nearest preceding target_code line, else ``default``."""
    for text in reversed(lines[:max(0, min(line_no, len(lines)))]):
        detection = detect_dsl_line(text, prefix)
        if not detection.is_dsl:
            continue
        outcome = analyze(text[detection.payload_offset:])
        if outcome.line is not None and isinstance(outcome.line.chain[0], TargetOption):
            return outcome.line.chain[0].target
    return default


def target_state(store: DocumentStore, uri: str, line_no: int,
                 config: HubConfig) -> Target:
    """Target in effect for ``line_no`` of a stored document."""
    doc = store.get(uri)
    if doc is None:
        return config.default_target
    return nearest_target(doc.lines, line_no, config.default_target, config.dsl_prefix)


def dispatch(request: dict, store: DocumentStore, config: HubConfig) -> str:
    """Route a non-lifecycle message: local-dsl, downstream, both or unhandled.

    Lifecycle traffic (initialize/initialized/shutdown/exit) is resolved by
    the hub before this is consulted.  Raises ValueError for a completion
    position outside the document.
    """
    method = request.get("method", "")
    if method in ("textDocument/didOpen", "textDocument/didChange",
                  "textDocument/didClose"):
        return "both"
    if method == "textDocument/completion":
        params = request.get("params") or {}
        uri = (params.get("textDocument") or {}).get("uri")
        position = params.get("position") or {}
        doc = store.get(uri) if uri else None
        if doc is None:
            raise ValueError(f"unknown document {uri!r}")
        line_no = position.get("line", -1)
        if not isinstance(line_no, int) or not 0 <= line_no < len(doc.lines):
            raise ValueError(f"line {line_no} out of range")
        if detect_dsl_line(doc.lines[line_no], config.dsl_prefix).is_dsl:
            return "local-dsl"
        return "downstream" if config.downstream_cmd else "unhandled"
    return "downstream" if config.downstream_cmd else "unhandled"


# ---------------------------------------------------------------------------
# Base-protocol framing

def read_message(stream) -> dict | None:
    """Read one framed JSON-RPC message; None on clean EOF."""
    content_length = None
    line = stream.readline()
    if not line:
        return None
    while line not in (b"\r\n", b"\n"):
        try:
            name, _, value = line.decode("ascii").partition(":")
        except UnicodeDecodeError as exc:
            raise ProtocolError(f"undecodable header line {line!r}") from exc
        if not _:
            raise ProtocolError(f"malformed header line {line!r}")
        if name.strip().lower() == "content-length":
            content_length = int(value.strip())
        line = stream.readline()
        if not line:
            raise ProtocolError("EOF inside message headers")
    if content_length is None:
        raise ProtocolError("missing Content-Length header")
    body = stream.read(content_length)
    if len(body) != content_length:
        raise ProtocolError("EOF inside message body")
    try:
        message = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"undecodable message body: {exc}") from exc
    if not isinstance(message, dict):
        raise ProtocolError("message body is not a JSON object")
    return message


def write_message(stream, message: dict, lock: threading.Lock) -> None:
    body = json.dumps(message, ensure_ascii=False).encode("utf-8")
    with lock:
        stream.write(b"Content-Length: %d\r\n\r\n" % len(body))
        stream.write(body)
        stream.flush()


# ---------------------------------------------------------------------------
# Downstream proxy

class Downstream:
    """Child language server with an ordered relay back to the client."""

    def __init__(self, cmd: tuple[str, ...], hub: "Hub"):
        self.hub = hub
        self.proc = subprocess.Popen(
            cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
        )
        self.stdin_lock = threading.Lock()
        self.pending: dict[str, object] = {}  # child request id -> client id
        self.child_client_requests: set[object] = set()
        self.counter = 0
        self.alive = True
        self.reader: threading.Thread | None = None

    def handshake(self, initialize_params: dict | None, store: DocumentStore) -> None:
        init_id = self.next_id()
        self.send({"jsonrpc": "2.0", "id": init_id, "method": "initialize",
                   "params": initialize_params or {"capabilities": {}}})
        # Drain synchronously until the child answers initialize.
        while True:
            message = read_message(self.proc.stdout)
            if message is None:
                raise ProtocolError("downstream exited during initialize")
            if message.get("id") == init_id and "method" not in message:
                break
            log.debug("discarding pre-init downstream message: %s",
                      message.get("method"))
        self.send({"jsonrpc": "2.0", "method": "initialized", "params": {}})
        for uri, doc in store.docs.items():
            self.send({"jsonrpc": "2.0", "method": "textDocument/didOpen", "params": {
                "textDocument": {"uri": uri, "languageId": "python",
                                 "version": doc.version, "text": doc.text}}})
        self.reader = threading.Thread(target=self._relay_loop, daemon=True)
        self.reader.start()

    def next_id(self) -> str:
        self.counter += 1
        return f"tabledsl-hub-{self.counter}"

    def send(self, message: dict) -> None:
        write_message(self.proc.stdin, message, self.stdin_lock)

    def forward_request(self, request: dict) -> None:
        child_id = self.next_id()
        self.pending[child_id] = request.get("id")
        forwarded = dict(request)
        forwarded["id"] = child_id
        self.send(forwarded)

    def _relay_loop(self) -> None:
        try:
            while True:
                message = read_message(self.proc.stdout)
                if message is None:
                    break
                self._relay(message)
        except (ProtocolError, OSError) as exc:
            log.warning("downstream relay stopped: %s", exc)
        self.hub.downstream_died(self)

    def _relay(self, message: dict) -> None:
        if "method" not in message and "id" in message:
            client_id = self.pending.pop(message["id"], None)
            if client_id is None:
                return  # response to a hub-internal request
            relayed = dict(message)
            relayed["id"] = client_id
            self.hub.send(relayed)
            return
        if "id" in message:  # server-to-client request from the child
            self.child_client_requests.add(message["id"])
        self.hub.send(message)

    def owns_client_response(self, message: dict) -> bool:
        return message.get("id") in self.child_client_requests

    def forward_client_response(self, message: dict) -> None:
        self.child_client_requests.discard(message.get("id"))
        self.send(message)

    def stop(self) -> None:
        self.alive = False
        try:
            self.proc.terminate()
            self.proc.wait(timeout=2)
        except Exception:
            self.proc.kill()


# ---------------------------------------------------------------------------
# Hub

class Hub:
    """Single-threaded request loop over framed stdio."""

    def __init__(self, config: HubConfig, reader, writer):
        self.config = config
        self.reader = reader
        self.writer = writer
        self.write_lock = threading.Lock()
        self.store = DocumentStore()
        self.downstream: Downstream | None = None
        self.downstream_failed = False
        self.initialize_params: dict | None = None
        self.shutdown_received = False
        self.running = True
        self.exit_code = 1

    # -- plumbing ------------------------------------------------------------

    def send(self, message: dict) -> None:
        write_message(self.writer, message, self.write_lock)

    def respond(self, request_id, result) -> None:
        self.send({"jsonrpc": "2.0", "id": request_id, "result": result})

    def respond_error(self, request_id, code: int, message: str) -> None:
        self.send({"jsonrpc": "2.0", "id": request_id,
                   "error": {"code": code, "message": message}})

    def downstream_died(self, child: Downstream) -> None:
        if self.downstream is not child:
            return
        log.warning("downstream language server terminated; continuing without it")
        for client_id in child.pending.values():
            if client_id is not None:
                self.respond_error(client_id, INTERNAL_ERROR,
                                   "downstream language server terminated")
        child.pending.clear()
        self.downstream = None
        self.downstream_failed = True

    def _ensure_downstream(self) -> Downstream | None:
        if self.downstream is not None or self.downstream_failed:
            return self.downstream
        if not self.config.downstream_cmd:
            return None
        try:
            child = Downstream(self.config.downstream_cmd, self)
            child.handshake(self.initialize_params, self.store)
        except (OSError, ProtocolError) as exc:
            log.warning("could not start downstream %r: %s",
                        self.config.downstream_cmd, exc)
            self.downstream_failed = True
            return None
        self.downstream = child
        return child

    def _forward_notification(self, message: dict) -> None:
        if self.downstream is not None:
            try:
                self.downstream.send(message)
            except OSError:
                self.downstream_died(self.downstream)

    def _forward_request(self, message: dict) -> bool:
        child = self._ensure_downstream()
        if child is None:
            return False
        try:
            child.forward_request(message)
            return True
        except OSError:
            self.downstream_died(child)
            return False

    # -- main loop -----------------------------------------------------------

    def run(self) -> int:
        while self.running:
            try:
                message = read_message(self.reader)
            except ProtocolError as exc:
                log.error("protocol framing error: %s", exc)
                return 1
            if message is None:
                log.warning("client closed the stream without exit")
                return 1
            self.handle(message)
        return self.exit_code

    def handle(self, message: dict) -> None:
        if "method" not in message:
            # A response from the client; only child-initiated requests expect one.
            if self.downstream is not None and self.downstream.owns_client_response(message):
                self.downstream.forward_client_response(message)
            return
        method = message["method"]
        request_id = message.get("id")
        params = message.get("params") or {}
        handler = {
            "initialize": self._on_initialize,
            "initialized": self._on_initialized,
            "shutdown": self._on_shutdown,
            "exit": self._on_exit,
            "textDocument/didOpen": self._on_did_open,
            "textDocument/didChange": self._on_did_change,
            "textDocument/didClose": self._on_did_close,
            "textDocument/completion": self._on_completion,
        }.get(method)
        if handler is not None:
            handler(request_id, params, message)
            return
        if request_id is not None:
            if not self._forward_request(message):
                self.respond_error(request_id, METHOD_NOT_FOUND,
                                   f"method not handled: {method}")
        else:
            if method.startswith("$/"):
                return
            self._forward_notification(message)

    # -- lifecycle -----------------------------------------------------------

    def _on_initialize(self, request_id, params, message) -> None:
        self.initialize_params = params
        self.respond(request_id, {
            "capabilities": {
                "textDocumentSync": {"openClose": True, "change": 1},
                "completionProvider": {"triggerCharacters": [" ", ":"]},
            },
            "serverInfo": {"name": "tabledsl-hub", "version": "0.1.0"},
        })

    def _on_initialized(self, request_id, params, message) -> None:
        self._forward_notification(message)

    def _on_shutdown(self, request_id, params, message) -> None:
        self.shutdown_received = True
        if self.downstream is not None:
            try:
                self.downstream.forward_request(message)
            except OSError:
                self.downstream_died(self.downstream)
        self.respond(request_id, None)

    def _on_exit(self, request_id, params, message) -> None:
        child = self.downstream
        if child is not None:
            self._forward_notification(message)
            if child.reader is not None:
                # Drain responses the child already produced before it exits.
                child.reader.join(timeout=5)
            child.stop()
        self.running = False
        self.exit_code = 0 if self.shutdown_received else 1

    # -- document sync -------------------------------------------------------

    def _on_did_open(self, request_id, params, message) -> None:
        doc = params.get("textDocument") or {}
        uri = doc.get("uri")
        if uri is None:
            return
        self.store.open(uri, doc.get("version", 0), doc.get("text", ""))
        self._forward_notification(message)
        self._publish_diagnostics(uri)

    def _on_did_change(self, request_id, params, message) -> None:
        doc = params.get("textDocument") or {}
        uri = doc.get("uri")
        if uri is None:
            return
        self.store.change(uri, doc.get("version", 0), params.get("contentChanges") or [])
        self._forward_notification(message)
        self._publish_diagnostics(uri)

    def _on_did_close(self, request_id, params, message) -> None:
        doc = params.get("textDocument") or {}
        uri = doc.get("uri")
        if uri is None:
            return
        self.store.close(uri)
        self._forward_notification(message)
        self.send({"jsonrpc": "2.0", "method": "textDocument/publishDiagnostics",
                   "params": {"uri": uri, "diagnostics": []}})

    def _publish_diagnostics(self, uri: str) -> None:
        doc = self.store.get(uri)
        if doc is None:
            return
        diagnostics = []
        for line_no, text in enumerate(doc.lines):
            detection = detect_dsl_line(text, self.config.dsl_prefix)
            if not detection.is_dsl:
                continue
            outcome = analyze(text[detection.payload_offset:])
            if outcome.error is None:
                continue
            err = outcome.error
            start = detection.payload_offset + err.position
            end = start + max(1, len(err.found))
            diagnostics.append({
                "range": {"start": {"line": line_no, "character": start},
                          "end": {"line": line_no, "character": end}},
                "severity": 1,
                "source": "tabledsl",
                "message": f"expected {{{', '.join(sorted(err.expected))}}}",
            })
        self.send({"jsonrpc": "2.0", "method": "textDocument/publishDiagnostics",
                   "params": {"uri": uri, "diagnostics": diagnostics}})

    # -- completion ----------------------------------------------------------

    def _on_completion(self, request_id, params, message) -> None:
        try:
            route = dispatch(message, self.store, self.config)
        except ValueError as exc:
            self.respond_error(request_id, INVALID_PARAMS, str(exc))
            return
        if route == "downstream":
            if not self._forward_request(message):
                self.respond(request_id, {"isIncomplete": False, "items": []})
            return
        if route == "unhandled":
            self.respond(request_id, {"isIncomplete": False, "items": []})
            return
        uri = params["textDocument"]["uri"]
        position = params["position"]
        doc = self.store.get(uri)
        lines = doc.lines
        line_no = position["line"]
        character = position.get("character", 0)
        try:
            target = target_state(self.store, uri, line_no, self.config)
            idents = document_identifiers(lines, line_no, self.config.dsl_prefix)
            items = complete(lines[line_no], character, GenContext(target),
                             prefix=self.config.dsl_prefix, known_idents=idents)
        except Exception:
            # A bug in DSL handling must never take the server down.
            log.exception("completion failed on %s:%d", uri, line_no)
            items = []
        self.respond(request_id, {
            "isIncomplete": False,
            "items": [self._lsp_item(item) for item in items],
        })

    def _lsp_item(self, item) -> dict:
        lsp = {
            "label": item.label,
            "kind": _LSP_ITEM_KINDS[item.kind],
            "detail": item.detail,
            "insertText": item.insert_text,
            "sortText": f"{item.rank:04d}",
        }
        doc = KEYWORD_DOCS.get(item.label)
        if doc is not None and item.kind == KIND_KEYWORD:
            lsp["documentation"] = doc.example
        return lsp


def serve(config: HubConfig) -> int:
    """Run the hub over stdio until exit; returns the process exit code."""
    hub = Hub(config, sys.stdin.buffer, sys.stdout.buffer)
    return hub.run()
