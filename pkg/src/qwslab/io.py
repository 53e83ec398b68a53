"""File formats: CSV tables, complex matrices, field maps, JSON with hashes.

All numbers are written with ``%.17g`` so that files round-trip exactly and
reruns on one platform are byte-identical.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17g"


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return FLOAT_FMT % float(v)


def write_table(path, header, rows):
    """Write a 2-D array (or list of rows) as CSV with a header line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_table(path):
    """Read a CSV written by :func:`write_table`; returns (header, float array)."""
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    data = np.array([[float(x) for x in line.split(",")] for line in text[1:]])
    return header, data.reshape(len(text) - 1, len(header))


def write_smatrix(path, S):
    """S as long-format CSV with columns (row, col, re, im), 0-based indices."""
    S = np.asarray(S)
    n, m = S.shape
    r, c = np.meshgrid(np.arange(n), np.arange(m), indexing="ij")
    rows = zip(r.ravel(), c.ravel(), S.real.ravel(), S.imag.ravel())
    return write_table(path, ["row", "col", "re", "im"], rows)


def read_smatrix(path):
    _, d = read_table(path)
    n = int(d[:, 0].max()) + 1
    m = int(d[:, 1].max()) + 1
    S = np.zeros((n, m), dtype=complex)
    S[d[:, 0].astype(int), d[:, 1].astype(int)] = d[:, 2] + 1j * d[:, 3]
    return S


def write_complex_matrix(path, M):
    """Complex matrix as CSV with ``re_j, im_j`` column pairs, one line per row."""
    M = np.atleast_2d(np.asarray(M))
    header = [f"{p}{j}" for j in range(M.shape[1]) for p in ("re", "im")]
    rows = np.empty((M.shape[0], 2 * M.shape[1]))
    rows[:, 0::2] = M.real
    rows[:, 1::2] = M.imag
    return write_table(path, header, rows)


def read_complex_matrix(path):
    _, d = read_table(path)
    return d[:, 0::2] + 1j * d[:, 1::2]


def write_field_map(path, values, h):
    """Field map CSV with columns (x, y, re, im, intensity)."""
    values = np.asarray(values)
    nx, ny = values.shape
    x = h * np.arange(nx)
    y = h * np.arange(1, ny + 1)
    X, Y = np.meshgrid(x, y, indexing="ij")
    rows = np.column_stack([X.ravel(), Y.ravel(), values.real.ravel(), values.imag.ravel(),
                            np.abs(values.ravel()) ** 2])
    return write_table(path, ["x", "y", "re", "im", "intensity"], rows)


def write_scalar_map(path, values, h, name="density"):
    """Real map on the interior grid as CSV with columns (x, y, name)."""
    values = np.asarray(values, dtype=float)
    nx, ny = values.shape
    X, Y = np.meshgrid(h * np.arange(nx), h * np.arange(1, ny + 1), indexing="ij")
    return write_table(path, ["x", "y", name], np.column_stack([X.ravel(), Y.ravel(), values.ravel()]))


def write_png(path, intensity):
    """8-bit grayscale PNG of a non-negative map, scaled to its maximum.

    The map is indexed ``[i, j]`` with ``i`` along x; the image shows y upward.
    Requires Pillow.
    """
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover - optional dependency
        raise RuntimeError("PNG output needs Pillow (pip install 'artifact[png]')") from exc
    a = np.asarray(intensity, dtype=float)
    top = a.max()
    img = np.zeros_like(a) if top <= 0 else a / top
    img = np.flipud((255 * img).round().astype(np.uint8).T)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img, mode="L").save(path)
    return path


def complex_to_json(z):
    z = np.asarray(z)
    if z.ndim == 0:
        return {"re": float(z.real), "im": float(z.imag)}
    return [complex_to_json(v) for v in z]


def complex_from_json(obj):
    if isinstance(obj, dict):
        return complex(obj["re"], obj["im"])
    return np.array([complex_from_json(v) for v in obj])


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
