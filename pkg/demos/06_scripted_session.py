"""
Driving an edit session through the message protocol
====================================================

Everything the websocket server does can be scripted in-process: an
EditSession consumes the same JSON messages a browser client would send and
returns the replies it would stream back. Deterministic mode keeps the
optimizer on the caller's thread.
"""

import json
from pathlib import Path

from splattint import (
    EditSession,
    SessionConfig,
    decode_frame_image,
    generate_synthetic_scene,
    load_scene_ply,
    recipe,
    write_png,
)

out = Path(__file__).parent / "out" / "session"
out.mkdir(parents=True, exist_ok=True)

bundle = generate_synthetic_scene(recipe("two-blobs", width=64, height=64,
                                         camera_count=2), seed=1)
session = EditSession(bundle.scene, bundle.views,
                      SessionConfig(depth_method="gaussians",
                                    deterministic=True, seed=0))


def send(message):
    print(f">> {json.dumps(message)}")
    for reply in session.handle_message(message):
        if isinstance(reply, bytes):
            print(f"<< frame ({len(reply)} bytes)")
        else:
            print(f"<< {json.dumps(reply)}")


send({"type": "hello", "format": "raw"})
send({"type": "set_camera", "position": [0.0, 0.4, -2.2], "target": [0, 0, 0]})

# paint, tint, commit
send({"type": "enter_selection"})
send({"type": "stroke", "tool": "brush",
      "path": [[24, 32], [40, 32]], "radius": 9.0})
write_png(out / "highlight.png",
          decode_frame_image(session.render_frame())[:, :, :3] / 255.0)
send({"type": "set_tint", "rgb": [0.2, 0.9, 0.4]})
send({"type": "commit_selection"})

# a few optimizer bursts; deterministic mode runs them synchronously
for _ in range(3):
    session.run_iterations(50)
    status = session.status_message()
    print(f"-- iteration {status['iteration']}, generation {status['generation']}")

send({"type": "save", "path": str(out / "edited.ply")})
send({"type": "stop"})

edited = load_scene_ply(out / "edited.ply")
print(f"saved scene reloads: {len(edited)} gaussians")
write_png(out / "final.png", decode_frame_image(session.render_frame())[:, :, :3] / 255.0)
print(f"artifacts in {out}")
