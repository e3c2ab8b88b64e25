"""Run manifests: reproducibility records for CLI commands.

A manifest snapshots the resolved configuration, the seed, and SHA-256
fingerprints of every input file before any work starts; the run id is a
hash of exactly those ingredients, so re-running from a manifest against
identical inputs reproduces identical outputs (and a changed input is
detected instead of silently producing different results).
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

from chatternet import __version__
from chatternet.errors import DataError


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def fingerprint_dir(directory, names: list[str]) -> dict[str, str]:
    directory = Path(directory)
    out = {}
    for name in names:
        path = directory / name
        if path.exists():
            out[name] = sha256_file(path)
    return out


def make_run_id(config: dict, fingerprints: dict[str, str], seed: int) -> str:
    blob = canonical_json({"config": config, "data": fingerprints, "seed": seed})
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def write_manifest(path, command: str, config: dict, fingerprints: dict[str, str],
                   seed: int) -> dict:
    path = Path(path)
    if path.exists():
        raise DataError(f"manifest {path} already exists; manifests are immutable")
    manifest = {
        "run_id": make_run_id(config, fingerprints, seed),
        "command": command,
        "package_version": __version__,
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "seed": seed,
        "config": config,
        "data_fingerprints": fingerprints,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest


def load_manifest(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest {path} does not exist")
    return json.loads(path.read_text())


def verify_fingerprints(manifest: dict, directory) -> None:
    """Fail loudly when the data the manifest describes has changed."""
    recorded = manifest.get("data_fingerprints", {})
    current = fingerprint_dir(directory, list(recorded))
    for name, digest in recorded.items():
        if current.get(name) != digest:
            raise DataError(
                f"data fingerprint mismatch for {name}: manifest has {digest[:12]}..., "
                f"directory has {current.get(name, 'missing')[:12]}..."
            )
