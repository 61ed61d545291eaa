"""TSPLIB instance/tour files and benchmark instance generation."""
from __future__ import annotations

import math
import os
import re
from pathlib import Path

import numpy as np

from .core import METRICS, Instance, Tour
from .errors import ContractViolation, MalformedFileError, UnsupportedFormatError

_HEADER = re.compile(r"^\s*([A-Z_]+)\s*:?\s*(.*?)\s*$")
_SECTIONS = {"NODE_COORD_SECTION", "TOUR_SECTION", "EOF"}


def _read_lines(path) -> list[str]:
    try:
        return Path(path).read_text().splitlines()
    except UnicodeDecodeError as exc:
        raise MalformedFileError(f"{path}: not a text file") from exc


def _headers(lines):
    """Yield (key, value, index) until a section keyword."""
    for i, raw in enumerate(lines):
        line = raw.strip()
        if not line:
            continue
        key = line.split(":")[0].strip().upper()
        if key in _SECTIONS:
            yield key, "", i
            return
        m = _HEADER.match(line)
        if not m:
            raise MalformedFileError(f"line {i + 1}: cannot parse {raw!r}")
        yield m.group(1).upper(), m.group(2), i


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def parse_tsplib(path) -> Instance:
    """Read a TSPLIB ``TSP`` file with EUC_2D or CEIL_2D weights."""
    lines = _read_lines(path)
    hdr = {}
    start = None
    for key, val, i in _headers(lines):
        if key in _SECTIONS:
            if key == "NODE_COORD_SECTION":
                start = i + 1
            break
        hdr[key] = val
    typ = hdr.get("TYPE", "TSP").split()[0].upper() if hdr.get("TYPE") else "TSP"
    if typ != "TSP":
        raise UnsupportedFormatError(f"TYPE {typ} is not supported")
    ewt = hdr.get("EDGE_WEIGHT_TYPE", "").upper()
    if ewt not in METRICS:
        raise UnsupportedFormatError(f"EDGE_WEIGHT_TYPE {ewt or '(missing)'} is not supported")
    try:
        dim = int(hdr["DIMENSION"])
    except (KeyError, ValueError) as exc:
        raise MalformedFileError("missing or bad DIMENSION") from exc
    if start is None:
        raise MalformedFileError("missing NODE_COORD_SECTION")
    ids, xy = [], []
    for ln, raw in enumerate(lines[start:], start + 1):
        line = raw.strip()
        if not line:
            continue
        if line.upper() == "EOF":
            break
        parts = line.split()
        if len(parts) < 3:
            raise MalformedFileError(f"line {ln}: expected 'id x y'")
        try:
            ids.append(int(parts[0]))
            xy.append((float(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise MalformedFileError(f"line {ln}: {exc}") from exc
    if len(ids) != dim:
        raise MalformedFileError(f"DIMENSION {dim} but {len(ids)} coordinates")
    ids = np.asarray(ids)
    if np.any(ids < 1) or np.any(ids > dim) or np.unique(ids).size != dim:
        raise MalformedFileError("node ids must be 1..DIMENSION, each once")
    coords = np.empty((dim, 2))
    coords[ids - 1] = xy
    name = hdr.get("NAME", "") or Path(path).stem
    try:
        return Instance(coords, ewt, name=name)
    except ContractViolation as exc:
        raise MalformedFileError(str(exc)) from exc


def write_tsplib(path, inst: Instance, comment: str | None = None) -> None:
    if inst.forced:
        raise ValueError("TSPLIB output has no place for forced edges")
    out = [f"NAME : {inst.name or Path(path).stem}", "TYPE : TSP"]
    if comment:
        out.append(f"COMMENT : {comment}")
    out += [f"DIMENSION : {inst.n}", f"EDGE_WEIGHT_TYPE : {inst.metric}", "NODE_COORD_SECTION"]
    out += [f"{i + 1} {_fmt(x)} {_fmt(y)}" for i, (x, y) in enumerate(inst.coords)]
    out.append("EOF")
    _atomic_write(path, "\n".join(out) + "\n")


def write_tour(path, tour: Tour, name: str = "", comment: str | None = None) -> None:
    out = [f"NAME : {name or Path(path).stem}", "TYPE : TOUR"]
    if comment:
        out.append(f"COMMENT : {comment}")
    out += [f"DIMENSION : {tour.n}", "TOUR_SECTION"]
    out += [str(int(v) + 1) for v in tour.order]
    out += ["-1", "EOF"]
    _atomic_write(path, "\n".join(out) + "\n")


def parse_tour(path, inst: Instance | None = None) -> Tour:
    """Read a TSPLIB tour; ids are checked against ``inst`` (or DIMENSION)."""
    lines = _read_lines(path)
    hdr = {}
    start = None
    for key, val, i in _headers(lines):
        if key == "TOUR_SECTION":
            start = i + 1
            break
        if key in _SECTIONS:
            break
        hdr[key] = val
    if start is None:
        raise MalformedFileError("missing TOUR_SECTION")
    ids = []
    for ln, raw in enumerate(lines[start:], start + 1):
        for tok in raw.split():
            if tok.upper() == "EOF":
                break
            try:
                v = int(tok)
            except ValueError as exc:
                raise MalformedFileError(f"line {ln}: bad vertex id {tok!r}") from exc
            if v == -1:
                break
            ids.append(v)
        else:
            continue
        break
    n = inst.n if inst is not None else int(hdr.get("DIMENSION", len(ids)) or len(ids))
    order = np.asarray(ids, dtype=np.int64) - 1
    if order.size and (order.min() < 0 or order.max() >= n):
        raise MalformedFileError("tour references unknown vertex ids")
    if order.size != n or np.unique(order).size != n:
        raise MalformedFileError(f"tour lists {order.size} vertices, expected each of {n} once")
    if inst is not None:
        return Tour.from_order(inst, order)
    pos = np.empty_like(order)
    pos[order] = np.arange(n)
    return Tour(order, pos, 0)


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------- generators

def clustered_points(n: int, square: float, seed: int):
    """Clustered coordinates plus the centres and per-point assignment."""
    rng = np.random.default_rng(seed)
    c = math.ceil(n / 100)
    centers = rng.uniform(0, square, size=(c, 2))
    assign = np.arange(n) % c
    sigma = square / 100
    pts = centers[assign] + rng.normal(0.0, sigma, size=(n, 2))
    pts = np.clip(np.rint(pts), 0, square)
    return pts, centers, assign


def generate_instance(kind: str, n: int, square: float = 1_000_000, seed: int = 0,
                      name: str | None = None) -> Instance:
    """Uniform (E-series style) or clustered (C-series style) instance."""
    if n < 3:
        raise ValueError("n must be >= 3")
    if kind == "uniform":
        rng = np.random.default_rng(seed)
        pts = rng.integers(0, int(square) + 1, size=(n, 2)).astype(np.float64)
    elif kind == "clustered":
        pts, _, _ = clustered_points(n, square, seed)
    else:
        raise ValueError(f"unknown instance kind {kind!r}")
    return Instance(pts, name=name or f"{kind[0].upper()}{n}.s{seed}")
