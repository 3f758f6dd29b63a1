"""File formats: field CSV with a JSON grid sidecar, PGM/CSV node sets, measure JSON.

A field stored at ``u.csv`` has its grid in ``u.grid.json``
(``{dim, shape, spacing, origin}``). Scalar CSVs are row-major with the last
axis along a row; vector CSVs hold one node per row with one column per
component (``nan`` marks an undefined node).
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import MalformedInput
from .grid import GridDomain, NodeSet, ScalarField, VectorField
from .measure import GridMeasure, SingularPart


def sidecar_path(path: str | Path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".grid.json")


def read_domain(path: str | Path) -> GridDomain:
    try:
        d = json.loads(Path(path).read_text())
        return GridDomain(int(d["dim"]), tuple(d["shape"]), float(d["spacing"]), tuple(d["origin"]))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise MalformedInput(f"bad grid sidecar {path}: {exc}") from exc


def write_domain(domain: GridDomain, path: str | Path) -> None:
    Path(path).write_text(json.dumps(domain.to_json(), sort_keys=True) + "\n")


def _read_numbers(path: Path) -> np.ndarray:
    try:
        text = path.read_text()
    except OSError as exc:
        raise MalformedInput(f"cannot read {path}: {exc}") from exc
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([float(tok) for tok in line.replace(";", ",").split(",") if tok.strip()])
        except ValueError as exc:
            raise MalformedInput(f"{path}: {exc}") from exc
    return rows


def _fmt(v: float) -> str:
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def read_scalar(path: str | Path, domain: GridDomain | None = None) -> ScalarField:
    path = Path(path)
    domain = domain or read_domain(sidecar_path(path))
    rows = _read_numbers(path)
    flat = np.array([v for r in rows for v in r], dtype=float)
    if flat.size != domain.size:
        raise MalformedInput(f"{path}: {flat.size} values for {domain.size} nodes")
    try:
        return ScalarField(domain, flat.reshape(domain.shape))
    except ValueError as exc:
        raise MalformedInput(f"{path}: {exc}") from exc


def write_scalar(u: ScalarField, path: str | Path) -> None:
    path = Path(path)
    v = u.values.reshape(-1, u.domain.shape[-1]) if u.domain.dim > 1 else u.values.reshape(-1, 1)
    path.write_text("".join(",".join(_fmt(x) for x in row) + "\n" for row in v))
    write_domain(u.domain, sidecar_path(path))


def read_vector(path: str | Path, domain: GridDomain | None = None) -> VectorField:
    path = Path(path)
    domain = domain or read_domain(sidecar_path(path))
    rows = _read_numbers(path)
    if len(rows) != domain.size or any(len(r) != domain.dim for r in rows):
        raise MalformedInput(f"{path}: expected {domain.size} rows of {domain.dim} components")
    return VectorField(domain, np.array(rows, dtype=float).reshape(domain.shape + (domain.dim,)))


def write_vector(f: VectorField, path: str | Path) -> None:
    path = Path(path)
    v = f.values.reshape(-1, f.components)
    path.write_text("".join(",".join(_fmt(x) for x in row) + "\n" for row in v))
    write_domain(f.domain, sidecar_path(path))


def read_pgm(path: str | Path) -> np.ndarray:
    """Binary (P5) or ASCII (P2) graymap as a 2D uint array."""
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MalformedInput(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    magic = tokens[0]
    try:
        w, hgt, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise MalformedInput(f"{path}: bad PGM header") from exc
    if magic == b"P5":
        dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
        raw = np.frombuffer(data[pos + 1:], dtype=dtype, count=w * hgt)
        if raw.size != w * hgt:
            raise MalformedInput(f"{path}: truncated PGM data")
        return raw.reshape(hgt, w).astype(np.int64)
    if magic == b"P2":
        vals = np.array(data[pos:].split(), dtype=np.int64)
        if vals.size != w * hgt:
            raise MalformedInput(f"{path}: wrong PGM value count")
        return vals.reshape(hgt, w)
    raise MalformedInput(f"{path}: not a P2/P5 graymap")


def write_pgm(mask: np.ndarray, path: str | Path) -> None:
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ValueError("PGM holds 2D masks only")
    body = np.where(m, 255, 0).astype(np.uint8)
    header = f"P5\n{m.shape[1]} {m.shape[0]}\n255\n".encode()
    Path(path).write_bytes(header + body.tobytes())


def read_nodeset(path: str | Path, domain: GridDomain | None = None) -> NodeSet:
    """PGM (nonzero = member, image rows along the first axis) or 0/1 CSV."""
    path = Path(path)
    domain = domain or read_domain(sidecar_path(path))
    if path.suffix.lower() == ".pgm":
        arr = read_pgm(path) > 0
        if arr.shape != domain.shape:
            raise MalformedInput(f"{path}: image {arr.shape} vs grid {domain.shape}")
        return NodeSet(domain, arr)
    rows = _read_numbers(path)
    flat = np.array([v for r in rows for v in r], dtype=float)
    if flat.size != domain.size:
        raise MalformedInput(f"{path}: {flat.size} values for {domain.size} nodes")
    return NodeSet(domain, flat.reshape(domain.shape) != 0)


def write_nodeset(S: NodeSet, path: str | Path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        write_pgm(S.mask, path)
    else:
        v = S.mask.astype(int).reshape(-1, S.domain.shape[-1]) if S.domain.dim > 1 else S.mask.astype(int).reshape(-1, 1)
        path.write_text("".join(",".join(str(x) for x in row) + "\n" for row in v))
    write_domain(S.domain, sidecar_path(path))


def read_measure(path: str | Path, domain: GridDomain | None = None) -> GridMeasure:
    """``{density_file | density: c, [domain], singular_parts: [...]}``.

    ``density_file`` is resolved relative to the JSON file. A constant
    ``density`` needs a domain, given either inline or by the caller.
    Singular parts use ``polyline`` (vertex list), ``segments`` or ``points``.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise MalformedInput(f"bad measure file {path}: {exc}") from exc
    if "density_file" in doc:
        dens = read_scalar(path.parent / doc["density_file"], domain)
    else:
        if "domain" in doc:
            d = doc["domain"]
            domain = GridDomain(int(d["dim"]), tuple(d["shape"]), float(d["spacing"]), tuple(d["origin"]))
        if domain is None:
            raise MalformedInput(f"{path}: no density_file and no domain")
        dens = ScalarField(domain, np.full(domain.shape, float(doc.get("density", 1.0))))
    parts = []
    for item in doc.get("singular_parts", []):
        try:
            w = float(item["weight"])
            if "polyline" in item:
                parts.append(SingularPart.polyline(item["polyline"], w))
            elif "segments" in item:
                parts.append(SingularPart(item["segments"], w))
            else:
                parts.append(SingularPart.points(item["points"], w))
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedInput(f"{path}: bad singular part {item!r}") from exc
    try:
        return GridMeasure(dens, tuple(parts))
    except ValueError as exc:
        raise MalformedInput(f"{path}: {exc}") from exc


def jsonable(obj):
    """Plain JSON types with non-finite floats spelled ``"inf"``, ``"-inf"`` or ``"nan"``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else _fmt(v)
    if hasattr(obj, "to_json"):
        return jsonable(obj.to_json())
    return obj


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"
