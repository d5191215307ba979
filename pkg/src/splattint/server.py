"""Websocket transport for an EditSession.

Text frames are JSON control messages and replies; binary frames are encoded
video frames.  Each connection gets its own frame stream, capped at `max_fps`
and paced by the socket itself (a slow client gets fewer frames, never a
growing backlog).  Session work runs on executor threads so the event loop
stays responsive while depth maps or datasets are being built.
"""

from __future__ import annotations

import asyncio
import json
import logging

from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed

from .session import EditSession

log = logging.getLogger(__name__)

DEFAULT_MAX_FPS = 30.0
DEFAULT_STATUS_INTERVAL = 0.25


async def _consume(ws, session: EditSession, stop: asyncio.Event) -> None:
    loop = asyncio.get_running_loop()
    try:
        async for raw in ws:
            if isinstance(raw, (bytes, bytearray)):
                await ws.send(json.dumps(
                    {"type": "error", "message": "binary messages are not valid here"}))
                continue
            try:
                message = json.loads(raw)
            except json.JSONDecodeError as exc:
                await ws.send(json.dumps({"type": "error", "message": f"invalid JSON: {exc}"}))
                continue
            replies = await loop.run_in_executor(None, session.handle_message, message)
            for reply in replies:
                await ws.send(json.dumps(reply))
            if session.stopped:
                stop.set()
                return
    except ConnectionClosed:
        pass


async def _stream(ws, session: EditSession, stop: asyncio.Event,
                  max_fps: float, status_interval: float) -> None:
    loop = asyncio.get_running_loop()
    interval = 1.0 / max_fps
    next_status = 0.0
    try:
        while not stop.is_set():
            started = loop.time()
            frame = await loop.run_in_executor(None, session.render_frame)
            await ws.send(frame)
            if started >= next_status:
                await ws.send(json.dumps(session.status_message()))
                next_status = started + status_interval
            delay = interval - (loop.time() - started)
            if delay > 0.0:
                await asyncio.sleep(delay)
    except ConnectionClosed:
        pass


async def serve_session(session: EditSession, host: str = "127.0.0.1", port: int = 0,
                        max_fps: float = DEFAULT_MAX_FPS,
                        status_interval: float = DEFAULT_STATUS_INTERVAL,
                        on_ready=None) -> None:
    """Serve until a stop message arrives; on_ready(port) fires once bound."""
    stop = asyncio.Event()

    async def handler(ws):
        tasks = (asyncio.create_task(_consume(ws, session, stop)),
                 asyncio.create_task(_stream(ws, session, stop, max_fps, status_interval)))
        try:
            await asyncio.wait(tasks, return_when=asyncio.FIRST_COMPLETED)
        finally:
            for task in tasks:
                task.cancel()
            await asyncio.gather(*tasks, return_exceptions=True)

    async with serve(handler, host, port) as server:
        bound = server.sockets[0].getsockname()[1]
        log.info("serving ws://%s:%d", host, bound)
        if on_ready is not None:
            on_ready(bound)
        await stop.wait()
    session.close()


def run_server(session: EditSession, host: str = "127.0.0.1", port: int = 8765,
               max_fps: float = DEFAULT_MAX_FPS, on_ready=None) -> None:
    asyncio.run(serve_session(session, host, port, max_fps, on_ready=on_ready))
