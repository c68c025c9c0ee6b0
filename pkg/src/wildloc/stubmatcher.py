"""Reference bridge process: serves the built-in matcher over the protocol.

Run as `python -m wildloc.stubmatcher`. Useful for exercising the external
matcher path without a learned model, and as a template for real bridges.
"""

from __future__ import annotations

import json
import sys

from wildloc.extmatch import HANDSHAKE, PROTOCOL_VERSION
from wildloc.features import MatcherConfig, match_images
from wildloc.raster import load_gray


def serve(stdin=None, stdout=None) -> None:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stdout.write(HANDSHAKE + "\n")
    stdout.flush()
    cfg = MatcherConfig()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            if request.get("v") != PROTOCOL_VERSION:
                raise ValueError(f"unsupported protocol version {request.get('v')!r}")
            a = load_gray(request["a"])
            b = load_gray(request["b"])
            pairs = match_images(a, b, cfg)
            response = {
                "status": "ok",
                "matches": [
                    [p.a.x, p.a.y, p.b.x, p.b.y, round(p.confidence, 6)] for p in pairs
                ],
            }
        except Exception as exc:  # a bad request must not kill the server
            response = {"status": "error", "message": f"{type(exc).__name__}: {exc}"}
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()


if __name__ == "__main__":
    serve()
