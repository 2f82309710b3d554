"""PLY point cloud reading and writing, plus the arrow-field export.

The reader handles ASCII and binary little-endian files, extracts the
x/y/z vertex properties and ignores everything else (extra properties,
face elements and so on). The writer stores coordinates as doubles so a
binary round trip is bit-exact.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import IoError, ParseError
from .geometry import as_points

_SCALAR_TYPES = {
    "char": "b", "int8": "b",
    "uchar": "B", "uint8": "B",
    "short": "h", "int16": "h",
    "ushort": "H", "uint16": "H",
    "int": "i", "int32": "i",
    "uint": "I", "uint32": "I",
    "float": "f", "float32": "f",
    "double": "d", "float64": "d",
}


def _parse_header(raw: bytes, path) -> tuple[str, list[dict], int]:
    """Returns (format, elements, body offset). Elements carry their properties."""
    end = raw.find(b"end_header")
    if end < 0:
        raise ParseError(f"{path}: no end_header line")
    newline = raw.find(b"\n", end)
    if newline < 0:
        raise ParseError(f"{path}: header not terminated by newline")
    body_offset = newline + 1

    lines = raw[:end].decode("ascii", errors="replace").splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ParseError(f"{path}: line 1: missing 'ply' magic")

    fmt = None
    elements: list[dict] = []
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if not tokens or tokens[0] == "comment" or tokens[0] == "obj_info":
            continue
        if tokens[0] == "format":
            if len(tokens) < 2 or tokens[1] not in ("ascii", "binary_little_endian"):
                raise ParseError(f"{path}: line {lineno}: unsupported format {line!r}")
            fmt = tokens[1]
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise ParseError(f"{path}: line {lineno}: malformed element declaration")
            try:
                count = int(tokens[2])
            except ValueError as exc:
                raise ParseError(f"{path}: line {lineno}: bad element count") from exc
            elements.append({"name": tokens[1], "count": count, "properties": []})
        elif tokens[0] == "property":
            if not elements:
                raise ParseError(f"{path}: line {lineno}: property before any element")
            if tokens[1] == "list":
                if len(tokens) != 5 or tokens[2] not in _SCALAR_TYPES or tokens[3] not in _SCALAR_TYPES:
                    raise ParseError(f"{path}: line {lineno}: malformed list property")
                elements[-1]["properties"].append(("list", tokens[2], tokens[3], tokens[4]))
            else:
                if len(tokens) != 3 or tokens[1] not in _SCALAR_TYPES:
                    raise ParseError(f"{path}: line {lineno}: unknown property type {tokens[1]!r}")
                elements[-1]["properties"].append(("scalar", tokens[1], tokens[2]))
        else:
            raise ParseError(f"{path}: line {lineno}: unexpected header line {line!r}")
    if fmt is None:
        raise ParseError(f"{path}: missing format line")
    return fmt, elements, body_offset


def _vertex_columns(element: dict, path) -> dict[str, int]:
    columns = {}
    for pos, prop in enumerate(element["properties"]):
        if prop[0] == "list":
            raise ParseError(f"{path}: list property in vertex element is unsupported")
        columns[prop[2]] = pos
    for name in ("x", "y", "z"):
        if name not in columns:
            raise ParseError(f"{path}: vertex element lacks property {name!r}")
    return columns


def _read_ascii(lines: list[str], elements: list[dict], path) -> np.ndarray:
    cursor = 0
    cloud = None
    for element in elements:
        rows = lines[cursor : cursor + element["count"]]
        if len(rows) < element["count"]:
            raise ParseError(
                f"{path}: element {element['name']!r} expects {element['count']} rows, "
                f"found {len(rows)}"
            )
        if element["name"] == "vertex":
            columns = _vertex_columns(element, path)
            data = np.empty((element["count"], 3))
            want = [columns["x"], columns["y"], columns["z"]]
            for i, row in enumerate(rows):
                tokens = row.split()
                if len(tokens) < len(element["properties"]):
                    raise ParseError(f"{path}: vertex row {i + 1}: too few values")
                try:
                    data[i] = [float(tokens[c]) for c in want]
                except ValueError as exc:
                    raise ParseError(f"{path}: vertex row {i + 1}: {exc}") from exc
            cloud = data
        cursor += element["count"]
    return cloud


def _read_binary(body: bytes, elements: list[dict], path) -> np.ndarray:
    offset = 0
    cloud = None
    for element in elements:
        props = element["properties"]
        if all(p[0] == "scalar" for p in props):
            fmt = "<" + "".join(_SCALAR_TYPES[p[1]] for p in props)
            rowsize = struct.calcsize(fmt)
            total = rowsize * element["count"]
            if offset + total > len(body):
                raise ParseError(
                    f"{path}: truncated body in element {element['name']!r} at offset {offset}"
                )
            if element["name"] == "vertex":
                columns = _vertex_columns(element, path)
                dtype = np.dtype([(f"f{i}", "<" + _SCALAR_TYPES[p[1]]) for i, p in enumerate(props)])
                rows = np.frombuffer(body, dtype=dtype, count=element["count"], offset=offset)
                cloud = np.column_stack(
                    [rows[f"f{columns[name]}"].astype(np.float64) for name in ("x", "y", "z")]
                )
            offset += total
        else:
            # Variable-width rows (list properties): walk them one by one.
            for _ in range(element["count"]):
                for prop in props:
                    if prop[0] == "scalar":
                        size = struct.calcsize(_SCALAR_TYPES[prop[1]])
                        offset += size
                    else:
                        count_fmt = "<" + _SCALAR_TYPES[prop[1]]
                        count_size = struct.calcsize(count_fmt)
                        if offset + count_size > len(body):
                            raise ParseError(f"{path}: truncated list count at offset {offset}")
                        (n,) = struct.unpack_from(count_fmt, body, offset)
                        offset += count_size + n * struct.calcsize(_SCALAR_TYPES[prop[2]])
                if offset > len(body):
                    raise ParseError(f"{path}: truncated list body at offset {offset}")
    return cloud


def read_ply(path) -> np.ndarray:
    """Load the vertex positions of a PLY file as an (N, 3) float64 cloud."""
    with open(path, "rb") as handle:
        raw = handle.read()
    fmt, elements, body_offset = _parse_header(raw, path)
    if not any(e["name"] == "vertex" for e in elements):
        raise ParseError(f"{path}: no vertex element")

    if fmt == "ascii":
        text = raw[body_offset:].decode("ascii", errors="replace")
        lines = [line for line in text.splitlines() if line.strip()]
        cloud = _read_ascii(lines, elements, path)
    else:
        cloud = _read_binary(raw[body_offset:], elements, path)
    return as_points(cloud)


def write_ply(cloud, path, binary: bool = True) -> None:
    """Write a cloud as PLY with double-precision x, y, z properties."""
    pts = as_points(cloud)
    header = [
        "ply",
        "format binary_little_endian 1.0" if binary else "format ascii 1.0",
        f"element vertex {len(pts)}",
        "property double x",
        "property double y",
        "property double z",
        "end_header",
    ]
    try:
        with open(path, "wb") as handle:
            handle.write(("\n".join(header) + "\n").encode("ascii"))
            if binary:
                handle.write(np.ascontiguousarray(pts, dtype="<f8").tobytes())
            else:
                for x, y, z in pts:
                    handle.write(f"{x:.17g} {y:.17g} {z:.17g}\n".encode("ascii"))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def export_arrows(table, regions, transforms, path) -> None:
    """Write one arrow per kept region registration as a PLY line set.

    Each arrow runs from the source-side centroid of its region to that
    centroid plus the estimated translation. Vertices carry an integer
    group id per motion key; edges repeat the group and add the rotation
    angle magnitude, so a viewer can color arrows by cluster.
    """
    ordered_keys = sorted(table.keys(), key=lambda k: (k.qbins, k.tbins))
    group_of_cell = {}
    for gid, key in enumerate(ordered_keys):
        for cell in table[key]:
            group_of_cell[cell] = gid

    region_by_cell = {region.cell: region for region in regions}
    rows = []
    for cell, transform in transforms:
        region = region_by_cell[cell]
        origin = region.points_a.mean(axis=0)
        tip = origin + transform.translation
        rows.append((origin, tip, group_of_cell[cell], transform.angle))

    header = [
        "ply",
        "format ascii 1.0",
        f"element vertex {2 * len(rows)}",
        "property double x",
        "property double y",
        "property double z",
        "property int group",
        f"element edge {len(rows)}",
        "property int vertex1",
        "property int vertex2",
        "property int group",
        "property double angle",
        "end_header",
    ]
    try:
        with open(path, "w", encoding="ascii") as handle:
            handle.write("\n".join(header) + "\n")
            for origin, tip, gid, _ in rows:
                handle.write(f"{origin[0]:.17g} {origin[1]:.17g} {origin[2]:.17g} {gid}\n")
                handle.write(f"{tip[0]:.17g} {tip[1]:.17g} {tip[2]:.17g} {gid}\n")
            for i, (_, _, gid, angle) in enumerate(rows):
                handle.write(f"{2 * i} {2 * i + 1} {gid} {angle:.17g}\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
