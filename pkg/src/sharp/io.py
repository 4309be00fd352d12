"""Readers and writers: PNG/PGM images, RAWF float grids, CSV."""

from __future__ import annotations

import csv
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataError

RAWF_MAGIC = b"RAWF"
_HEADER = struct.Struct("<4sIII")
IMAGE_SUFFIXES = {".png", ".pgm", ".rawf"}


def write_rawf(path, grid) -> None:
    g = np.asarray(grid, dtype="<f4")
    if g.ndim != 2:
        raise DataError(f"RAWF holds 2-D grids, got shape {g.shape}")
    payload = _HEADER.pack(RAWF_MAGIC, g.shape[0], g.shape[1], 0) + np.ascontiguousarray(g).tobytes()
    atomic_write_bytes(path, payload)


def read_rawf(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise DataError(f"{path}: truncated RAWF header")
    magic, h, w, _ = _HEADER.unpack_from(data)
    if magic != RAWF_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}")
    body = data[_HEADER.size:]
    if len(body) != 4 * h * w:
        raise DataError(f"{path}: expected {4 * h * w} payload bytes, got {len(body)}")
    return np.frombuffer(body, dtype="<f4").reshape(h, w).astype(np.float64)


def read_image(path) -> np.ndarray:
    """Grayscale image scaled to [0, 1]."""
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            if im.mode in ("I;16", "I;16B", "I"):
                arr = np.asarray(im, dtype=np.float64)
                return arr / (65535.0 if arr.max() > 255 else 255.0)
            return np.asarray(im.convert("L"), dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError) as exc:
        raise DataError(f"{path}: cannot read image ({exc})") from exc


def read_grid(path) -> np.ndarray:
    path = Path(path)
    if path.suffix.lower() == ".rawf":
        return read_rawf(path)
    return read_image(path)


def list_images(directory) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise DataError(f"not a directory: {d}")
    return sorted(p for p in d.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.9g}"


def csv_text(header, rows) -> str:
    out = []
    out.append(",".join(header))
    for row in rows:
        out.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    return "\n".join(out) + "\n"


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_csv(path, header, rows) -> None:
    atomic_write_text(path, csv_text(header, rows))


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def spectrum_rows(raw, normalized):
    for i, (k, p, n) in enumerate(zip(raw.bin_centers, raw.power, normalized.power)):
        yield (i, k, p, n)


SPECTRUM_HEADER = ("bin", "cycles_per_image", "power", "normalized")
