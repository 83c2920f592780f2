"""Run manifests: what was run, with which inputs, and what it produced."""

from __future__ import annotations

import hashlib
import json
import platform
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

MANIFEST_NAME = "manifest.json"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _version(dist: str) -> str | None:
    try:
        return metadata.version(dist)
    except metadata.PackageNotFoundError:
        return None


def environment_versions() -> dict:
    out = {"python": platform.python_version(), "platform": sys.platform}
    for dist in ("interface-lab", "numpy", "scipy", "shapely", "matplotlib"):
        out[dist] = _version(dist)
    return out


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int
    reference_mode: bool
    threads: int
    versions: dict = field(default_factory=environment_versions)
    started: str = field(default_factory=_now)
    finished: str | None = None
    status: str = "running"
    exit_code: int | None = None
    message: str | None = None
    files: list = field(default_factory=list)

    def record(self, path, root) -> None:
        path = Path(path)
        rel = path.relative_to(root).as_posix()
        self.files = [f for f in self.files if f["path"] != rel]
        self.files.append({"path": rel, "sha256": sha256_file(path), "bytes": path.stat().st_size})

    def checksums(self) -> dict:
        return {f["path"]: f["sha256"] for f in self.files}

    def finish(self, status: str, exit_code: int, message: str | None = None) -> None:
        self.status, self.exit_code, self.message = status, exit_code, message
        self.finished = _now()

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / MANIFEST_NAME
        body = dict(self.__dict__)
        body["files"] = sorted(self.files, key=lambda f: f["path"])
        path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
        return path


def read_manifest(out_dir) -> dict:
    return json.loads((Path(out_dir) / MANIFEST_NAME).read_text())
