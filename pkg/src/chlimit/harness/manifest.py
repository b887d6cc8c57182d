"""Run manifest: per-stage config digest, status and checksummed outputs.

Several subcommands may share an output directory, so every stage keeps
its own digest and file inventory. A stage is current when its digest
matches and every file it declared still has the recorded checksum.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

MANIFEST_NAME = "manifest.json"
DONE = ("ok", "acceptance_failed")


def sha256_file(path, chunk=1 << 16):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(chunk), b""):
            h.update(block)
    return h.hexdigest()


def digest(obj):
    """SHA-256 of the canonical JSON encoding of ``obj``."""
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


@dataclass
class RunManifest:
    out_dir: str
    tool_version: str = ""
    stages: dict = field(default_factory=dict)

    @property
    def path(self):
        return os.path.join(self.out_dir, MANIFEST_NAME)

    @classmethod
    def load(cls, out_dir):
        path = os.path.join(out_dir, MANIFEST_NAME)
        if not os.path.exists(path):
            return cls(out_dir)
        with open(path) as fh:
            data = json.load(fh)
        return cls(out_dir, data.get("tool_version", ""), data.get("stages", {}))

    def is_current(self, stage, config_hash):
        entry = self.stages.get(stage)
        if not entry or entry.get("config_hash") != config_hash or entry.get("status") not in DONE:
            return False
        for rel, sha in entry.get("files", {}).items():
            full = os.path.join(self.out_dir, rel)
            if not os.path.exists(full) or sha256_file(full) != sha:
                return False
        return True

    def status(self, stage):
        return self.stages.get(stage, {}).get("status")

    def record(self, stage, config_hash, status, paths=()):
        files = {os.path.relpath(p, self.out_dir): sha256_file(p) for p in paths}
        self.stages[stage] = {"config_hash": config_hash, "status": status, "files": dict(sorted(files.items()))}

    def save(self, tool_version=None):
        if tool_version is not None:
            self.tool_version = tool_version
        os.makedirs(self.out_dir, exist_ok=True)
        data = {"tool_version": self.tool_version, "stages": dict(sorted(self.stages.items()))}
        with open(self.path, "w") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")
        return self.path
