"""Reading and writing fields, grids and snapshots.

Formats
-------
* field JSON: ``{"dim": N, "band_K": K, "coefficients": {"n1,n2": [re, im], ...}}``
* field CSV: header ``n1,...,nN,re,im``, one row per mode
* grid CSV: header ``i1,...,iN,re,im``, one row per grid point (C order)

Floats are written with ``repr`` so a round trip is exact.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from subdiffusion._validation import ParameterError
from subdiffusion.solver import SolutionSnapshot
from subdiffusion.spectral import PhysicalGrid, SpectralField

__all__ = [
    "field_to_json",
    "field_from_json",
    "field_to_csv",
    "field_from_csv",
    "grid_to_csv",
    "snapshot_to_json",
    "snapshot_from_json",
    "write_snapshots",
    "read_snapshots",
]


def _mode_key(n) -> str:
    return ",".join(str(int(v)) for v in n)


def _coeff_map(field: SpectralField) -> dict:
    return {_mode_key(n): [float(c.real), float(c.imag)] for n, c in zip(field.modes, field.coeffs)}


def _field_from_map(dim: int, band_K: float, mapping: dict) -> SpectralField:
    modes, coeffs = [], []
    for key, pair in mapping.items():
        try:
            n = [int(v) for v in key.split(",")]
            re, im = pair
        except (ValueError, TypeError) as exc:
            raise ParameterError(f"malformed coefficient entry {key!r}: {pair!r}") from exc
        if len(n) != dim:
            raise ParameterError(f"mode {key!r} does not have {dim} components")
        modes.append(n)
        coeffs.append(complex(float(re), float(im)))
    return SpectralField(dim, band_K, np.array(modes, dtype=np.int64).reshape(-1, dim), coeffs)


def field_to_json(field: SpectralField) -> str:
    doc = {"dim": field.dim, "band_K": field.band_K, "coefficients": _coeff_map(field)}
    return json.dumps(doc, indent=1) + "\n"


def field_from_json(text: str) -> SpectralField:
    doc = json.loads(text)
    try:
        return _field_from_map(int(doc["dim"]), float(doc["band_K"]), doc["coefficients"])
    except KeyError as exc:
        raise ParameterError(f"field JSON lacks key {exc}") from exc


def field_to_csv(field: SpectralField) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"n{i + 1}" for i in range(field.dim)] + ["re", "im"])
    for n, c in zip(field.modes, field.coeffs):
        w.writerow([int(v) for v in n] + [repr(float(c.real)), repr(float(c.imag))])
    return buf.getvalue()


def field_from_csv(text: str, band_K: float) -> SpectralField:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ParameterError("empty field CSV")
    dim = len(rows[0]) - 2
    if dim < 1 or rows[0][-2:] != ["re", "im"]:
        raise ParameterError(f"unexpected field CSV header {rows[0]}")
    modes = [[int(v) for v in r[:dim]] for r in rows[1:]]
    coeffs = [complex(float(r[dim]), float(r[dim + 1])) for r in rows[1:]]
    return SpectralField(dim, band_K, np.array(modes, dtype=np.int64).reshape(-1, dim), coeffs)


def grid_to_csv(grid: PhysicalGrid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"i{k + 1}" for k in range(grid.dim)] + ["re", "im"])
    samples = np.asarray(grid.samples, dtype=complex)
    for idx in np.ndindex(samples.shape):
        v = samples[idx]
        w.writerow(list(idx) + [repr(float(v.real)), repr(float(v.imag))])
    return buf.getvalue()


def snapshot_to_json(snap: SolutionSnapshot) -> str:
    doc = {
        "t": snap.t,
        "dim": snap.field.dim,
        "band_K": snap.field.band_K,
        "coefficients": _coeff_map(snap.field),
        "regularized": _coeff_map(snap.regularized),
    }
    return json.dumps(doc, indent=1) + "\n"


def snapshot_from_json(text: str) -> SolutionSnapshot:
    try:
        doc = json.loads(text)
        dim, K = int(doc["dim"]), float(doc["band_K"])
        return SolutionSnapshot(
            float(doc["t"]),
            _field_from_map(dim, K, doc["coefficients"]),
            _field_from_map(dim, K, doc["regularized"]),
        )
    except (KeyError, TypeError, AttributeError, json.JSONDecodeError) as exc:
        raise ParameterError(f"malformed snapshot: {exc}") from exc


def write_snapshots(snapshots: list[SolutionSnapshot], directory) -> list[str]:
    """Write ``snapshot_XXXX.json``/``.csv`` (and ``grid_XXXX.csv``) files; return their names."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for i, snap in enumerate(snapshots):
        stem = f"snapshot_{i:04d}"
        (out / f"{stem}.json").write_text(snapshot_to_json(snap))
        (out / f"{stem}.csv").write_text(field_to_csv(snap.field))
        names += [f"{stem}.json", f"{stem}.csv"]
        if snap.grid is not None:
            (out / f"grid_{i:04d}.csv").write_text(grid_to_csv(snap.grid))
            names.append(f"grid_{i:04d}.csv")
    return names


def read_snapshots(directory) -> list[SolutionSnapshot]:
    """Read back the ``snapshot_XXXX.json`` files of a directory, in order."""
    files = sorted(Path(directory).glob("snapshot_*.json"))
    return [snapshot_from_json(p.read_text()) for p in files]
