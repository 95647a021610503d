"""Networked session API: open a refinement session, edit anchors, step, export.

Transport is a WebSocket carrying JSON messages (see docs/protocol.md for the
schema).  Every anchor edit triggers one refinement step so clients get
continuous feedback; an explicit ``step`` message exists for harnesses.
Sessions live in memory, are keyed by opaque ids, and expire after an idle
timeout.  Message handling is strictly serialized per session.
"""
from __future__ import annotations

import base64
import dataclasses
import threading
import time
import uuid
from typing import Any

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from . import __version__
from .bspline import contour_to_dict
from .config import PipelineConfig
from .errors import (ConfigurationError, DivergenceError, InitializationError, InputError,
                     PolarSnakeError, ShapeMismatchError, UnsupportedFormatError)
from .fileio import decode_pixels, encode_png, mask_to_pixels
from .interaction import EnergyWeights, interactive_step
from .phantom import generate_phantom
from .pipeline import RefineSession, dice, open_session, session_mask

DEFAULT_IDLE_TIMEOUT_S = 30 * 60


class _Entry:
    def __init__(self, session: RefineSession):
        self.session = session
        self.lock = threading.Lock()
        self.last_access = time.monotonic()
        self.rev = 0


class SessionHub:
    """In-memory session registry with idle expiry."""

    def __init__(self, config: PipelineConfig, idle_timeout_s: float = DEFAULT_IDLE_TIMEOUT_S):
        self.config = config
        self.idle_timeout_s = idle_timeout_s
        self._entries: dict[str, _Entry] = {}
        self._lock = threading.Lock()

    def prune(self) -> None:
        now = time.monotonic()
        with self._lock:
            dead = [sid for sid, e in self._entries.items()
                    if now - e.last_access > self.idle_timeout_s]
            for sid in dead:
                del self._entries[sid]

    def create(self, session: RefineSession) -> tuple[str, _Entry]:
        sid = uuid.uuid4().hex
        entry = _Entry(session)
        with self._lock:
            self._entries[sid] = entry
        return sid, entry

    def get(self, sid: str) -> _Entry:
        self.prune()
        with self._lock:
            entry = self._entries.get(sid)
        if entry is None:
            raise KeyError(sid)
        entry.last_access = time.monotonic()
        return entry

    def remove(self, sid: str) -> None:
        with self._lock:
            self._entries.pop(sid, None)

    @property
    def active_count(self) -> int:
        self.prune()
        with self._lock:
            return len(self._entries)


def _error(code: str, message: str, echo: Any = None) -> dict[str, Any]:
    msg: dict[str, Any] = {"kind": "error", "payload": {"code": code, "message": message}}
    if echo is not None:
        msg["echo"] = echo
    return msg


def _anchor_payload(session: RefineSession) -> list[dict[str, Any]]:
    ox, oy = session.frame.origin
    return [{"id": a.id, "rho": a.rho, "theta": a.theta,
             "x": ox + a.rho * np.cos(a.theta), "y": oy + a.rho * np.sin(a.theta)}
            for a in session.anchors]


def _state_message(sid: str, entry: _Entry, *, displacement: float = 0.0,
                   extras: dict[str, Any] | None = None, echo: Any = None) -> dict[str, Any]:
    session = entry.session
    payload: dict[str, Any] = {
        "session_id": sid,
        "rev": entry.rev,
        "contour": contour_to_dict(session.contour, session.frame.origin),
        "anchors": _anchor_payload(session),
        "weights": {"alpha": session.weights.alpha, "beta": session.weights.beta,
                    "gamma": session.weights.gamma},
        "displacement": displacement,
        "iterations": session.last_iterations,
        "converged": session.last_converged,
        "stage": session.stage,
        "shape": list(session.image.shape),
    }
    if extras:
        payload.update(extras)
    msg: dict[str, Any] = {"kind": "state", "payload": payload}
    if echo is not None:
        msg["echo"] = echo
    return msg


def _open_session_from_payload(hub: SessionHub, payload: dict[str, Any]) -> RefineSession:
    if "phantom" in payload:
        spec = payload["phantom"]
        pcfg = hub.config.phantom
        if "size" in spec:
            pcfg = dataclasses.replace(pcfg, size=int(spec["size"]))
        pcfg = pcfg.with_corruption(int(spec.get("corruption", 0)))
        image, prob, _ = generate_phantom(int(spec["seed"]), pcfg)
        return open_session(image, prob, hub.config)
    if "image_b64" in payload and "prob_map_b64" in payload:
        image = decode_pixels(base64.b64decode(payload["image_b64"])).astype(np.float64) / 255.0
        prob = decode_pixels(base64.b64decode(payload["prob_map_b64"])).astype(np.float64) / 255.0
        if image.shape != prob.shape:
            raise ShapeMismatchError(f"image shape {image.shape} does not match "
                                     f"probability map shape {prob.shape}")
        return open_session(image, prob, hub.config)
    raise InputError("open payload needs either 'phantom' or 'image_b64' + 'prob_map_b64'")


def handle_message(hub: SessionHub, message: dict[str, Any]) -> dict[str, Any]:
    """Process one client message, return the reply message."""
    echo = message.get("echo")
    kind = message.get("kind")
    payload = message.get("payload") or {}

    try:
        if kind == "open":
            session = _open_session_from_payload(hub, payload)
            sid, entry = hub.create(session)
            stage_dice = dice(session_mask(session),
                              session.prob_map >= session.config.threshold)
            extras = {
                "dice_stage_one": stage_dice,
                "image_png_b64": base64.b64encode(
                    encode_png(np.rint(session.image * 255.0))).decode("ascii"),
                "prob_map_png_b64": base64.b64encode(
                    encode_png(np.rint(session.prob_map * 255.0))).decode("ascii"),
            }
            return _state_message(sid, entry, extras=extras, echo=echo)

        sid = message.get("session_id")
        if not isinstance(sid, str):
            return _error("BAD_MESSAGE", "missing session_id", echo)
        try:
            entry = hub.get(sid)
        except KeyError:
            return _error("SESSION_NOT_FOUND", f"unknown session {sid}", echo)

        with entry.lock:
            session = entry.session
            if kind == "close":
                hub.remove(sid)
                return {"kind": "state", "payload": {"session_id": sid, "closed": True},
                        **({"echo": echo} if echo is not None else {})}

            if kind in ("add_anchor", "move_anchor", "remove_anchor", "step"):
                if kind == "add_anchor":
                    session.add_anchor(float(payload["x"]), float(payload["y"]))
                elif kind == "move_anchor":
                    try:
                        session.move_anchor(int(payload["id"]),
                                            float(payload["x"]), float(payload["y"]))
                    except KeyError:
                        return _error("ANCHOR_NOT_FOUND",
                                      f"unknown anchor {payload.get('id')}", echo)
                elif kind == "remove_anchor":
                    try:
                        session.remove_anchor(int(payload["id"]))
                    except KeyError:
                        return _error("ANCHOR_NOT_FOUND",
                                      f"unknown anchor {payload.get('id')}", echo)
                _, displacement = interactive_step(session)
                entry.rev += 1
                return _state_message(sid, entry, displacement=displacement, echo=echo)

            if kind == "set_weights":
                session.weights = EnergyWeights(alpha=float(payload["alpha"]),
                                                beta=float(payload["beta"]),
                                                gamma=float(payload["gamma"]))
                entry.rev += 1
                return _state_message(sid, entry, echo=echo)

            if kind == "reset":
                session.reset()
                entry.rev += 1
                return _state_message(sid, entry, echo=echo)

        return _error("BAD_MESSAGE", f"unknown message kind {kind!r}", echo)

    except ShapeMismatchError as exc:
        return _error("INPUT_SHAPE", str(exc), echo)
    except InputError as exc:
        return _error("INPUT_RANGE", str(exc), echo)
    except InitializationError as exc:
        return _error("INIT_EMPTY", str(exc), echo)
    except DivergenceError as exc:
        return _error("DIVERGENCE", str(exc), echo)
    except UnsupportedFormatError as exc:
        return _error("UNSUPPORTED_FORMAT", str(exc), echo)
    except ConfigurationError as exc:
        return _error("INPUT_RANGE", str(exc), echo)
    except (KeyError, TypeError, ValueError) as exc:
        return _error("BAD_MESSAGE", f"malformed payload: {exc!r}", echo)
    except PolarSnakeError as exc:
        return _error("INTERNAL", str(exc), echo)


def create_app(config: PipelineConfig | None = None,
               idle_timeout_s: float = DEFAULT_IDLE_TIMEOUT_S) -> FastAPI:
    hub = SessionHub(config or PipelineConfig(), idle_timeout_s)
    app = FastAPI(title="polarsnake session service", version=__version__)
    app.state.hub = hub

    @app.get("/health")
    def health() -> dict[str, Any]:
        return {"version": __version__, "active_sessions": hub.active_count}

    @app.get("/sessions/{sid}/export")
    def export(sid: str):
        try:
            entry = hub.get(sid)
        except KeyError:
            return JSONResponse(
                status_code=404,
                content={"error": {"code": "SESSION_NOT_FOUND",
                                   "message": f"unknown session {sid}"}})
        with entry.lock:
            session = entry.session
            mask = session_mask(session)
            return {
                "contour": contour_to_dict(session.contour, session.frame.origin),
                "mask_png_b64": base64.b64encode(
                    encode_png(mask_to_pixels(mask))).decode("ascii"),
            }

    @app.websocket("/ws")
    async def websocket_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        try:
            while True:
                message = await ws.receive_json()
                reply = handle_message(hub, message)
                await ws.send_json(reply)
        except WebSocketDisconnect:
            pass

    return app
