"""Run manifests: one JSON record per CLI run.

Captures the command line, a hash of the resolved parameters, seeds, input
and output file digests, the tool version, and wall-clock time. Reruns with
identical inputs and seeds reproduce identical input/output digests; the
wall-clock field is the only part expected to vary.
"""

from __future__ import annotations

import hashlib
import json
from typing import Mapping, Sequence

from . import __version__
from .errors import IoError


def file_digest(path) -> str:
    h = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
    except OSError as exc:
        raise IoError(f"cannot digest {path}: {exc}") from exc
    return h.hexdigest()


def config_hash(params: Mapping) -> str:
    canon = json.dumps(params, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def write_manifest(
    path,
    *,
    argv: Sequence[str],
    params: Mapping,
    seeds: Mapping,
    inputs: Sequence,
    outputs: Sequence,
    wall_clock_s: float,
) -> dict:
    doc = {
        "tool": f"evc {__version__}",
        "command": list(argv),
        "config_hash": config_hash(params),
        "params": dict(params),
        "seeds": dict(seeds),
        "inputs": {str(p): file_digest(p) for p in inputs},
        "outputs": {str(p): file_digest(p) for p in outputs},
        "wall_clock_s": round(float(wall_clock_s), 6),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return doc
