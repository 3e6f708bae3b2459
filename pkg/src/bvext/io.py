"""Reading and writing binary masks (PBM, PNG, layered text) and JSON reports."""

from __future__ import annotations

import io
import json
import math
import os

import numpy as np

from .errors import InvalidInputError, ParseError
from .grid import CellSet, Grid


def level_for(shape) -> int:
    """Smallest L >= 1 with 2**L >= every axis length."""
    return max(1, math.ceil(math.log2(max(shape))))


def _grid_for(mask, level=None, origin=None):
    if mask.size == 0 or min(mask.shape) == 0:
        raise InvalidInputError(f"zero-size mask {mask.shape}")
    return Grid(mask.ndim, level_for(mask.shape) if level is None else level, mask.shape, origin)


def _pbm_tokens(data, pos):
    """Yield (token, offset) pairs from a PBM header, skipping comments."""
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            start = pos
            while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
                pos += 1
            yield data[start:pos], start, pos


def parse_pbm(data: bytes) -> np.ndarray:
    """Parse a P1 (ASCII) or P4 (packed) PBM image into a boolean array (rows, cols)."""
    magic = data[:2]
    if magic not in (b"P1", b"P4"):
        raise ParseError(f"not a PBM file: magic {magic!r}", 0)
    toks = _pbm_tokens(data, 2)
    dims = []
    end = 2
    for _ in range(2):
        try:
            tok, off, end = next(toks)
        except StopIteration:
            raise ParseError("truncated PBM header", len(data)) from None
        if not tok.isdigit():
            raise ParseError(f"expected an integer, got {tok!r}", off)
        dims.append(int(tok))
    width, height = dims
    if width == 0 or height == 0:
        raise InvalidInputError(f"zero-size image {width}x{height}")
    if magic == b"P1":
        bits = []
        pos = end
        while len(bits) < width * height:
            if pos >= len(data):
                raise ParseError(f"expected {width * height} pixels, got {len(bits)}", pos)
            c = data[pos:pos + 1]
            if c in (b"0", b"1"):
                bits.append(c == b"1")
            elif c == b"#":
                while pos < len(data) and data[pos:pos + 1] != b"\n":
                    pos += 1
            elif not c.isspace():
                raise ParseError(f"unexpected byte {c!r} in P1 raster", pos)
            pos += 1
        return np.array(bits, dtype=bool).reshape(height, width)
    pos = end + 1  # single whitespace after the header
    row_bytes = (width + 7) // 8
    need = row_bytes * height
    raster = data[pos:pos + need]
    if len(raster) < need:
        raise ParseError(f"P4 raster needs {need} bytes, found {len(raster)}", pos + len(raster))
    packed = np.frombuffer(raster, dtype=np.uint8).reshape(height, row_bytes)
    return np.unpackbits(packed, axis=1)[:, :width].astype(bool)


def parse_layers(text: str) -> np.ndarray:
    """Layered ASCII 3D grid: ``#`` set, ``.`` unset, blank line between z-layers.

    Returns an array indexed (x, y, z) with x along a row and y down the rows.
    """
    layers, cur = [], []
    offset = 0
    for line in text.splitlines(keepends=True):
        body = line.rstrip("\r\n")
        if body.strip() == "":
            if cur:
                layers.append(cur)
                cur = []
        else:
            bad = [i for i, ch in enumerate(body) if ch not in "#."]
            if bad:
                raise ParseError(f"unexpected character {body[bad[0]]!r}", offset + bad[0])
            cur.append([ch == "#" for ch in body])
        offset += len(line.encode())
    if cur:
        layers.append(cur)
    if not layers:
        raise InvalidInputError("empty layered grid")
    ny, nx = len(layers[0]), len(layers[0][0])
    for k, layer in enumerate(layers):
        if len(layer) != ny or any(len(r) != nx for r in layer):
            raise ParseError(f"layer {k} is not {ny}x{nx}", None)
    arr = np.array(layers, dtype=bool)  # (z, y, x)
    return np.transpose(arr, (2, 1, 0))


def read_png(data: bytes) -> np.ndarray:
    from PIL import Image

    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:  # PIL raises a zoo of exception types
        raise ParseError(f"cannot decode PNG: {exc}", 0) from exc
    arr = np.asarray(img.convert("L") if img.mode not in ("1", "L", "I", "I;16") else img)
    return arr > 0


def load_mask(source, level=None, origin=None) -> CellSet:
    """Load a binary mask from a path or raw bytes.

    2D images are returned with array axis 0 = image row.  PNG pixels are set
    when > 0.  Text input (``.txt`` or bytes starting with ``#``/``.``) is read
    as a layered 3D grid.
    """
    if isinstance(source, (str, os.PathLike)):
        path = os.fspath(source)
        with open(path, "rb") as fh:
            data = fh.read()
        ext = os.path.splitext(path)[1].lower()
    else:
        data, ext = bytes(source), ""
    if len(data) == 0:
        raise InvalidInputError("empty input")
    if data[:2] in (b"P1", b"P4") or ext == ".pbm":
        mask = parse_pbm(data)
    elif data[:8] == b"\x89PNG\r\n\x1a\n" or ext == ".png":
        mask = read_png(data)
    elif ext == ".txt" or data[:1] in (b"#", b".", b"\n"):
        mask = parse_layers(data.decode("ascii", errors="replace"))
    else:
        raise ParseError("unrecognised mask format", 0)
    return CellSet(_grid_for(mask, level, origin), mask)


def to_pbm(mask: np.ndarray) -> bytes:
    """Encode a 2D boolean array as a P4 PBM."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    packed = np.packbits(mask, axis=1)
    return f"P4\n{w} {h}\n".encode() + packed.tobytes()


def to_layers(mask: np.ndarray) -> str:
    arr = np.transpose(np.asarray(mask, dtype=bool), (2, 1, 0))
    return "\n".join("\n".join("".join("#" if v else "." for v in row) for row in layer) + "\n"
                     for layer in arr)


def write_png(mask: np.ndarray, path, scale=255):
    from PIL import Image

    Image.fromarray((np.asarray(mask) > 0).astype(np.uint8) * scale).save(path)


def dump_json(obj, path=None, **kw) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True, **kw)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text
