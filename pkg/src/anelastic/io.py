"""Deterministic outputs: CSV series, JSON summaries, manifests and coefficient snapshots.

Snapshot format (version 1, all little-endian)::

    bytes 0-3    magic b"ANSN"
    uint32       format version (1)
    uint32       m
    float64 x 4  alpha, eps, delta, t
    payload      v then w, each (2m+1)(m+1) complex coefficients stored as
                 (real, imag) float64 pairs, k1 = -m..m outer, k2 = 0..m inner
"""
from __future__ import annotations

import hashlib
import json
import math
import platform
import struct
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .basis import SpectralField, make_basis

SNAPSHOT_MAGIC = b"ANSN"
SNAPSHOT_VERSION = 1
SCHEMA_VERSION = 1
_HEADER = struct.Struct("<4sII4d")


class Snapshot(NamedTuple):
    m: int
    alpha: float
    eps: float
    delta: float
    t: float
    v: SpectralField
    w: SpectralField


def write_snapshot(path, t, v, w, density):
    """Write the velocity coefficients at time ``t`` (format in the module docstring)."""
    m = v.m
    if w.m != m:
        raise ValueError("v and w must share the same order")
    header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, m, density.alpha, density.eps, density.delta, t)
    payload = np.concatenate([v.coeffs.ravel(), w.coeffs.ravel()]).astype("<c16")
    Path(path).write_bytes(header + payload.tobytes())


def read_snapshot(path):
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated snapshot header")
    magic, version, m, alpha, eps, delta, t = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a snapshot file (magic {magic!r})")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    basis = make_basis(m)
    n = 2 * (2 * m + 1) * (m + 1)
    payload = np.frombuffer(data, dtype="<c16", offset=_HEADER.size)
    if payload.size != n:
        raise ValueError(f"{path}: expected {n} coefficients, found {payload.size}")
    half = n // 2
    v = SpectralField(basis, "cos", payload[:half].reshape(basis.shape))
    w = SpectralField(basis, "sin", payload[half:].reshape(basis.shape))
    return Snapshot(m, alpha, eps, delta, t, v, w)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj):
    """Canonical JSON text (sorted keys, non-finite floats as strings)."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj), encoding="utf-8")


def write_csv(path, series):
    Path(path).write_text(series.to_csv(), encoding="utf-8")


def write_table(path, header, rows):
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(repr(float(x)) if isinstance(x, (float, np.floating)) else str(x) for x in r))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions():
    import scipy

    from . import __version__
    from .kernels import BACKEND

    return {
        "anelastic": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "kernel_backend": BACKEND,
    }


def write_manifest(outdir, command, config_text, files):
    """Manifest with the config, its hash, versions and per-file digests (no timestamps)."""
    outdir = Path(outdir)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config_text,
        "config_sha256": hashlib.sha256(config_text.encode("utf-8")).hexdigest(),
        "versions": versions(),
        "files": {name: sha256_file(outdir / name) for name in sorted(files)},
    }
    write_json(outdir / "manifest.json", manifest)
    return manifest
