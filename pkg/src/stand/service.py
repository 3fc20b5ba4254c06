"""HTTP/JSON teaching sessions over a live model.

Endpoints (all bodies JSON, errors as ``{"error": {"code", "message"}}``):

    POST /sessions                     create a session from a schema
    POST /sessions/{id}/labels         submit one labeled example
    POST /sessions/{id}/candidates     score a problem's candidate actions
    POST /sessions/{id}/suggest        pick + refresh the next pool problem
    GET  /sessions/{id}/state          ambiguity trace, tree export, summary

Sessions persist as append-only JSONL event logs (one file per session)
and are rebuilt by replay on restart; model updates within a session are
strictly serialized, distinct sessions run concurrently.  Single-user
desk tool: no authentication, binds localhost by default.
"""

from __future__ import annotations

import json
import random
import re
import threading
import uuid
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from . import teaching, tree as tree_mod, vspace
from .data import Dataset, DatasetError, Example, FeatureSchema, SchemaError
from .teaching import Problem


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


DEFAULT_POOL = {"n_problems": 8, "n_states": 1, "candidates_per_state": 4, "seed": 0}


class Session:
    def __init__(self, sid: str, schema: FeatureSchema, alpha: float, pool_config: dict):
        self.id = sid
        self.schema = schema
        self.alpha = alpha
        self.pool_config = dict(DEFAULT_POOL, **pool_config)
        self.tree: Optional[tree_mod.StandTree] = None
        self.labeled: list[Example] = []
        self.ambiguity_trace: list[dict] = []
        self.lock = threading.RLock()
        self._pool_draws = 0
        self.pool: list[Problem] = [
            self._random_problem() for _ in range(int(self.pool_config["n_problems"]))
        ]

    def _random_problem(self) -> Problem:
        self._pool_draws += 1
        rng = random.Random((int(self.pool_config["seed"]) * 1_000_003 + self._pool_draws))
        states = tuple(
            tuple(
                teaching._random_example(self.schema, rng)
                for _ in range(int(self.pool_config["candidates_per_state"]))
            )
            for _ in range(int(self.pool_config["n_states"]))
        )
        return Problem(states)

    def _example(self, values, label=None) -> Example:
        try:
            return self.schema.example([str(v) for v in values], label)
        except SchemaError as exc:
            raise ApiError(400, str(exc)) from exc

    def apply_label(self, values, label) -> dict:
        if label not in (0, 1):
            raise ApiError(400, "label must be 0 or 1")
        x = self._example(values, int(label))
        before_total = 0 if self.tree is None else vspace.ambiguity(self.tree).total
        old = self.tree
        if old is None:
            self.tree = tree_mod.fit(Dataset(self.schema, (x,)), self.alpha)
            changed = True
        else:
            self.tree = tree_mod.incremental_update(old, [x])
            changed = not tree_mod.unchanged_modulo_new(old, self.tree)
        self.labeled.append(x)
        after_total = vspace.ambiguity(self.tree).total
        self.ambiguity_trace.append(
            {"examples": len(self.labeled), "ambiguity": after_total}
        )
        return {
            "changed": changed,
            "ambiguity_before": before_total,
            "ambiguity_after": after_total,
            "examples": len(self.labeled),
            "leaves": len(self.tree.leaves()),
        }

    def score_candidates(self, candidates) -> dict:
        out = []
        for cand in candidates:
            x = self._example(cand["values"])
            if self.tree is None:
                out.append(
                    {
                        "values": list(cand["values"]),
                        "prediction": 0,
                        "signed_ic": 0.0,
                        "per_leaf": {},
                        "accepted_plus": [],
                        "accepted_minus": [],
                    }
                )
                continue
            report = vspace.instance_certainty(self.tree, x)
            body = report.to_json_obj()
            body["values"] = list(cand["values"])
            out.append(body)
        return {"candidates": out}

    def suggest(self) -> dict:
        learner = _SessionLearner(self)
        chosen, refreshed, score = teaching.active_select(
            learner, self.pool, regenerate=self._random_problem
        )
        self.pool = refreshed
        complete = score == 1.0
        return {
            "problem": _problem_to_json(chosen, self.schema),
            "score": score,
            "complete": complete,
            "pool_size": len(self.pool),
        }

    def state(self) -> dict:
        leaves = []
        if self.tree is not None:
            amb = vspace.ambiguity(self.tree)
            for node in self.tree.leaves():
                leaves.append(
                    {
                        "key": tree_mod._key_str(node.key),
                        "label": node.leaf_label,
                        "size": len(node.key),
                        "ambiguity": amb.per_leaf[node.key],
                    }
                )
        return {
            "id": self.id,
            "schema": self.schema.to_json_obj(),
            "training_count": len(self.labeled),
            "ambiguity_trace": self.ambiguity_trace,
            "leaves": leaves,
            "ambiguity": 0 if self.tree is None else vspace.ambiguity(self.tree).total,
            "tree": None if self.tree is None else self.tree.to_json_obj(),
        }


class _SessionLearner:
    """Adapter giving the pool selector batch scores from a session model."""

    def __init__(self, session: Session):
        self.session = session

    def batch_scores(self, examples):
        import numpy as np

        if self.session.tree is None:
            n = len(examples)
            return np.zeros(n, dtype=int), np.zeros(n)
        scores = vspace.certainty_batch(self.session.tree, examples)
        return scores["prediction"], scores["signed_ic"]


def _problem_to_json(problem: Problem, schema: FeatureSchema) -> dict:
    return {
        "states": [
            [{"values": list(schema.decode(x))} for x in state]
            for state in problem.states
        ]
    }


class SessionStore:
    def __init__(self, state_dir: Optional[str] = None):
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()
        self.state_dir = Path(state_dir) if state_dir else None
        if self.state_dir:
            self.state_dir.mkdir(parents=True, exist_ok=True)
            self._replay_all()

    def _log_path(self, sid: str) -> Optional[Path]:
        return self.state_dir / f"{sid}.jsonl" if self.state_dir else None

    def _append_event(self, sid: str, event: dict) -> None:
        path = self._log_path(sid)
        if path:
            with path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")

    def _replay_all(self) -> None:
        for path in sorted(self.state_dir.glob("*.jsonl")):
            sid = path.stem
            session = None
            with path.open(encoding="utf-8") as fh:
                for line in fh:
                    event = json.loads(line)
                    if event["op"] == "create":
                        session = Session(
                            sid,
                            FeatureSchema.from_json_obj(event["schema"]),
                            float(event["alpha"]),
                            event.get("pool", {}),
                        )
                    elif session is not None and event["op"] == "label":
                        session.apply_label(event["values"], event["label"])
                    elif session is not None and event["op"] == "suggest":
                        session.suggest()
            if session is not None:
                self.sessions[sid] = session

    def create(self, payload: dict) -> dict:
        try:
            if "schema" in payload:
                schema = FeatureSchema.from_json_obj(payload["schema"])
                initial: tuple[Example, ...] = ()
            elif "dataset" in payload:
                dataset = Dataset.from_json_obj(payload["dataset"])
                schema = dataset.schema
                initial = dataset.examples
            else:
                raise ApiError(400, "body must carry 'schema' or 'dataset'")
        except (SchemaError, DatasetError, KeyError, TypeError) as exc:
            raise ApiError(400, f"invalid schema: {exc}") from exc
        alpha = float(payload.get("alpha", 1.0))
        sid = uuid.uuid4().hex
        session = Session(sid, schema, alpha, payload.get("pool", {}))
        with self.lock:
            self.sessions[sid] = session
        self._append_event(
            sid,
            {
                "op": "create",
                "schema": schema.to_json_obj(),
                "alpha": alpha,
                "pool": session.pool_config,
            },
        )
        for x in initial:
            if x.label is not None:
                self.label(sid, {"values": list(schema.decode(x)), "label": x.label})
        return {"id": sid}

    def _get(self, sid: str) -> Session:
        session = self.sessions.get(sid)
        if session is None:
            raise ApiError(404, f"unknown session {sid!r}")
        return session

    def label(self, sid: str, payload: dict) -> dict:
        session = self._get(sid)
        if "values" not in payload or "label" not in payload:
            raise ApiError(400, "body must carry 'values' and 'label'")
        with session.lock:
            result = session.apply_label(payload["values"], payload["label"])
            self._append_event(
                sid, {"op": "label", "values": [str(v) for v in payload["values"]], "label": payload["label"]}
            )
        return result

    def candidates(self, sid: str, payload: dict) -> dict:
        session = self._get(sid)
        cands = payload.get("candidates")
        if not isinstance(cands, list):
            raise ApiError(400, "body must carry a 'candidates' list")
        with session.lock:
            return session.score_candidates(cands)

    def suggest(self, sid: str) -> dict:
        session = self._get(sid)
        with session.lock:
            result = session.suggest()
            self._append_event(sid, {"op": "suggest"})
        return result

    def state(self, sid: str) -> dict:
        session = self._get(sid)
        with session.lock:
            return session.state()


_ROUTES = [
    ("POST", re.compile(r"^/sessions$"), "create"),
    ("POST", re.compile(r"^/sessions/([0-9a-f]+)/labels$"), "label"),
    ("POST", re.compile(r"^/sessions/([0-9a-f]+)/candidates$"), "candidates"),
    ("POST", re.compile(r"^/sessions/([0-9a-f]+)/suggest$"), "suggest"),
    ("GET", re.compile(r"^/sessions/([0-9a-f]+)/state$"), "state"),
]

_STATIC_TYPES = {
    ".html": "text/html",
    ".js": "text/javascript",
    ".css": "text/css",
    ".map": "application/json",
    ".svg": "image/svg+xml",
}


def make_handler(store: SessionStore, ui_dir: Optional[str] = None):
    ui_root = Path(ui_dir).resolve() if ui_dir else None

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):
            pass

        def _send_json(self, status: int, body: dict) -> None:
            data = json.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def _send_error(self, status: int, message: str) -> None:
            self._send_json(status, {"error": {"code": status, "message": message}})

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b"{}"
            try:
                body = json.loads(raw or b"{}")
            except json.JSONDecodeError as exc:
                raise ApiError(400, f"malformed JSON body: {exc}") from exc
            if not isinstance(body, dict):
                raise ApiError(400, "JSON body must be an object")
            return body

        def _dispatch(self, method: str) -> None:
            try:
                for verb, pattern, action in _ROUTES:
                    if verb != method:
                        continue
                    match = pattern.match(self.path)
                    if not match:
                        continue
                    if action == "create":
                        self._send_json(201, store.create(self._read_body()))
                    elif action == "label":
                        self._send_json(200, store.label(match.group(1), self._read_body()))
                    elif action == "candidates":
                        self._send_json(200, store.candidates(match.group(1), self._read_body()))
                    elif action == "suggest":
                        self._send_json(200, store.suggest(match.group(1)))
                    elif action == "state":
                        self._send_json(200, store.state(match.group(1)))
                    return
                if method == "GET" and self._serve_static():
                    return
                self._send_error(404, f"no route for {method} {self.path}")
            except ApiError as exc:
                self._send_error(exc.status, exc.message)
            except Exception as exc:  # pragma: no cover - defensive
                self._send_error(500, f"internal error: {exc}")

        def _serve_static(self) -> bool:
            if ui_root is None:
                return False
            rel = self.path.split("?", 1)[0].lstrip("/") or "index.html"
            target = (ui_root / rel).resolve()
            if not str(target).startswith(str(ui_root)) or not target.is_file():
                return False
            data = target.read_bytes()
            self.send_response(200)
            ctype = _STATIC_TYPES.get(target.suffix, "application/octet-stream")
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)
            return True

        def do_POST(self):
            self._dispatch("POST")

        def do_GET(self):
            self._dispatch("GET")

    return Handler


def make_server(
    host: str = "127.0.0.1",
    port: int = 8008,
    state_dir: Optional[str] = None,
    ui_dir: Optional[str] = None,
) -> ThreadingHTTPServer:
    store = SessionStore(state_dir=state_dir)
    server = ThreadingHTTPServer((host, port), make_handler(store, ui_dir=ui_dir))
    server.store = store
    return server


def serve(host: str, port: int, state_dir: Optional[str], ui_dir: Optional[str] = None) -> None:
    server = make_server(host, port, state_dir, ui_dir)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
