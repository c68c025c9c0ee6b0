"""Client side of the match-exchange protocol.

A bridge process speaks line-delimited JSON over its standard streams:
it announces itself with a handshake line, then answers one response line
per request line. Images travel as file paths on shared disk.
"""

from __future__ import annotations

import json
import subprocess
import tempfile
import threading
from pathlib import Path
from typing import Sequence

from wildloc.errors import ExternalMatcherError, ExternalMatcherUnavailable
from wildloc.features import MatcherConfig, MatchPair
from wildloc.geo import PixelPoint
from wildloc.raster import GrayRaster, save_gray

HANDSHAKE = "wildloc-matcher v1"
PROTOCOL_VERSION = 1


class ExternalMatcher:
    """One bridge process; requests are serialized per process."""

    def __init__(self, cmd: Sequence[str]):
        if not cmd:
            raise ExternalMatcherUnavailable("no external matcher command configured")
        try:
            self._proc = subprocess.Popen(
                list(cmd),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ExternalMatcherUnavailable(f"cannot start {cmd[0]!r}: {exc}") from None
        self._lock = threading.Lock()
        greeting = self._proc.stdout.readline()
        if greeting.strip() != HANDSHAKE:
            self.close()
            raise ExternalMatcherUnavailable(f"bad handshake line {greeting.strip()!r}")

    def match_files(self, image_a, image_b) -> list[MatchPair]:
        """Request correspondences between two image files."""
        request = json.dumps({"v": PROTOCOL_VERSION, "a": str(image_a), "b": str(image_b)})
        with self._lock:
            try:
                self._proc.stdin.write(request + "\n")
                self._proc.stdin.flush()
                line = self._proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise ExternalMatcherUnavailable(f"bridge process died: {exc}") from None
        if not line:
            raise ExternalMatcherUnavailable("bridge closed its output stream")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ExternalMatcherError(f"malformed response line: {exc}") from None
        if response.get("status") != "ok":
            raise ExternalMatcherError(str(response.get("message", "unspecified failure")))
        pairs = []
        for ax, ay, bx, by, conf in response.get("matches", []):
            pairs.append(
                MatchPair(
                    PixelPoint(float(ax), float(ay)),
                    PixelPoint(float(bx), float(by)),
                    min(max(float(conf), 0.0), 1.0),
                )
            )
        return pairs

    def close(self) -> None:
        proc = self._proc
        if proc.stdin and not proc.stdin.closed:
            try:
                proc.stdin.close()
            except OSError:
                pass
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self) -> "ExternalMatcher":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def match_rasters_external(a: GrayRaster, b: GrayRaster, cfg: MatcherConfig) -> list[MatchPair]:
    """Match two in-memory rasters through a transient bridge process."""
    with tempfile.TemporaryDirectory(prefix="wildloc-match-") as tmp:
        pa = Path(tmp) / "a.png"
        pb = Path(tmp) / "b.png"
        save_gray(a, pa)
        save_gray(b, pb)
        with ExternalMatcher(cfg.matcher_cmd or ()) as matcher:
            return matcher.match_files(pa, pb)
