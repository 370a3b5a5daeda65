"""HTTP front of the annotation service.

Endpoints (JSON unless noted):
    GET  /api/health                                -> {"status": "ok"}
    GET  /api/sessions                              -> {"sessions": [...]}
    GET  /api/session/<sid>[?annotator=a]           -> session info
    GET  /api/session/<sid>/next?annotator=a        -> task view or {"done": true}
    POST /api/session/<sid>/vote                    -> {"accepted": bool, "reason": str}
    GET  /api/session/<sid>/aggregate               -> aggregate result
    GET  /api/assets/<root>/<path>                  -> file bytes (png/json/...)
    GET  /<path>                                    -> static UI files, if configured

Task views never reveal model identity; videos are frame-sequence assets
(a directory with meta.json + frame_XXXX.png) the client plays itself.
"""

from __future__ import annotations

import json
import mimetypes
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from ..errors import ContractError
from .model import VoteRecord
from .service import AnnotationService


def _safe_join(root: Path, rel: str) -> Path:
    p = (root / rel).resolve()
    if not str(p).startswith(str(root.resolve())):
        raise ContractError("path escapes asset root")
    return p


class ServiceHandler(BaseHTTPRequestHandler):
    service: AnnotationService
    asset_roots: dict[str, Path]
    static_dir: Path | None
    quiet = True

    def log_message(self, fmt, *args):
        if not self.quiet:
            super().log_message(fmt, *args)

    # -- helpers -------------------------------------------------------------

    def _json(self, payload, status: int = 200) -> None:
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _file(self, path: Path) -> None:
        if not path.is_file():
            self._json({"error": "not found"}, 404)
            return
        ctype = mimetypes.guess_type(str(path))[0] or "application/octet-stream"
        data = path.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    # -- routing ---------------------------------------------------------------

    def do_GET(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        query = {k: v[0] for k, v in parse_qs(url.query).items()}
        try:
            if parts == ["api", "health"]:
                self._json({"status": "ok"})
            elif parts == ["api", "sessions"]:
                self._json({"sessions": self.service.session_ids()})
            elif len(parts) == 3 and parts[:2] == ["api", "session"]:
                self._json(self.service.session_info(parts[2],
                                                     query.get("annotator")))
            elif len(parts) == 4 and parts[:2] == ["api", "session"] \
                    and parts[3] == "next":
                annotator = query.get("annotator", "")
                task = self.service.next_task(parts[2], annotator)
                self._json({"done": True} if task is None else task.public_view())
            elif len(parts) == 4 and parts[:2] == ["api", "session"] \
                    and parts[3] == "aggregate":
                self._json(self.service.aggregate(parts[2]).to_dict())
            elif len(parts) >= 6 and parts[:2] == ["api", "session"] \
                    and parts[3] == "task" and parts[5] == "video":
                # /api/session/<sid>/task/<tid>/video/<side>[/sub/path]
                if len(parts) < 7:
                    self._json({"error": "need a side and file"}, 404)
                    return
                ref = self.service.resolve_video(parts[2], parts[4], parts[6])
                root_key, _, rel = ref.partition(":")
                root = self.asset_roots.get(root_key)
                if root is None:
                    self._json({"error": f"unknown asset root {root_key!r}"}, 404)
                else:
                    sub = "/".join(parts[7:]) or "meta.json"
                    self._file(_safe_join(root, f"{rel}/{sub}" if rel else sub))
            elif len(parts) >= 3 and parts[:2] == ["api", "assets"]:
                root = self.asset_roots.get(parts[2])
                if root is None:
                    self._json({"error": f"unknown asset root {parts[2]!r}"}, 404)
                else:
                    self._file(_safe_join(root, "/".join(parts[3:])))
            elif self.static_dir is not None:
                rel = "/".join(parts) or "index.html"
                self._file(_safe_join(self.static_dir, rel))
            else:
                self._json({"error": "not found"}, 404)
        except ContractError as e:
            self._json({"error": str(e)}, 400)

    def do_POST(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length) or b"{}")
            if len(parts) == 4 and parts[:2] == ["api", "session"] \
                    and parts[3] == "vote":
                vote = VoteRecord(
                    task_id=str(payload["task_id"]),
                    annotator_id=str(payload["annotator_id"]),
                    choice=str(payload["choice"]),
                    justifications=tuple(payload.get("justifications", [])),
                    watch_seconds=float(payload.get("watch_seconds", 0.0)))
                accepted, reason = self.service.submit_vote(parts[2], vote)
                self._json({"accepted": accepted, "reason": reason},
                           200 if accepted else 422)
            else:
                self._json({"error": "not found"}, 404)
        except (KeyError, ValueError, json.JSONDecodeError) as e:
            self._json({"error": f"bad request: {e}"}, 400)
        except ContractError as e:
            self._json({"error": str(e)}, 400)


def make_server(service: AnnotationService, port: int = 0,
                asset_roots: dict[str, Path] | None = None,
                static_dir: Path | None = None) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (ServiceHandler,), {
        "service": service,
        "asset_roots": {k: Path(v) for k, v in (asset_roots or {}).items()},
        "static_dir": Path(static_dir) if static_dir else None,
    })
    return ThreadingHTTPServer(("127.0.0.1", port), handler)
