"""Reading and writing Kraus-family model files.

The on-disk format is JSON: complex entries are [re, im] pairs, matrices are
row-major nested lists, and the d Kraus operators live under "matrices".
Optional blocks carry boundary vectors and a chain geometry.  Loading
re-checks left normalization at 1e-8 and rejects anything malformed with a
message naming the offending field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .chain import BoundaryPair, ChainGeometry, KrausFamily

__all__ = ["ModelFile", "load_model", "save_model"]

FORMAT_NAME = "kraus-family"
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ModelFile:
    """A loaded model: the Kraus family plus optional boundary data."""

    kraus: KrausFamily
    boundaries: BoundaryPair | None = None
    geometry: ChainGeometry | None = None
    label: str | None = None


def _encode_complex(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _encode_matrix(M: np.ndarray) -> list[list[list[float]]]:
    return [[_encode_complex(M[r, c]) for c in range(M.shape[1])] for r in range(M.shape[0])]


def _encode_vector(v: np.ndarray) -> list[list[float]]:
    return [_encode_complex(z) for z in v]


def _decode_complex(obj: Any, where: str) -> complex:
    if (
        not isinstance(obj, (list, tuple))
        or len(obj) != 2
        or not all(isinstance(t, (int, float)) for t in obj)
    ):
        raise ValueError(f"{where}: complex entries must be [re, im] pairs, got {obj!r}")
    return complex(obj[0], obj[1])


def _decode_matrix(obj: Any, rows: int, cols: int, where: str) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != rows:
        raise ValueError(f"{where}: expected {rows} rows")
    M = np.zeros((rows, cols), dtype=complex)
    for r, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != cols:
            raise ValueError(f"{where}: row {r} must have {cols} entries")
        for c, entry in enumerate(row):
            M[r, c] = _decode_complex(entry, f"{where}[{r}][{c}]")
    return M


def _decode_vector(obj: Any, dim: int, where: str) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != dim:
        raise ValueError(f"{where}: expected a length-{dim} vector")
    return np.array([_decode_complex(e, f"{where}[{i}]") for i, e in enumerate(obj)])


def save_model(
    path: str | Path,
    kraus: KrausFamily,
    boundaries: BoundaryPair | None = None,
    geometry: ChainGeometry | None = None,
    label: str | None = None,
) -> None:
    """Write a model file; fields are emitted in sorted order for stable diffs."""
    doc: dict[str, Any] = {
        "format": FORMAT_NAME,
        "schema_version": SCHEMA_VERSION,
        "d": kraus.d,
        "D": kraus.D,
        "matrices": [_encode_matrix(A) for A in kraus.ops],
    }
    if label is not None:
        doc["label"] = str(label)
    if boundaries is not None:
        doc["boundaries"] = {
            "L": _encode_vector(boundaries.L),
            "R": _encode_vector(boundaries.R),
        }
    if geometry is not None:
        doc["geometry"] = {
            "len_a": geometry.len_a,
            "len_b": geometry.len_b,
            "len_c": geometry.len_c,
        }
    text = json.dumps(doc, indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(path: str | Path) -> ModelFile:
    """Parse and validate a model file.

    Raises ValueError for structural problems and NotLeftNormalized (with the
    residual in the message) when the matrices fail the isometry check at
    atol = 1e-8.
    """
    raw = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValueError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError("model file must contain a JSON object")
    if doc.get("format") != FORMAT_NAME:
        raise ValueError(f"unsupported format {doc.get('format')!r}")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")
    try:
        d = int(doc["d"])
        D = int(doc["D"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError("model file must carry integer fields 'd' and 'D'") from exc
    if d < 1 or D < 1:
        raise ValueError(f"dimensions must be positive, got d={d}, D={D}")
    mats = doc.get("matrices")
    if not isinstance(mats, list) or len(mats) != d:
        raise ValueError(f"'matrices' must list exactly d = {d} operators")
    ops = np.stack(
        [_decode_matrix(m, D, D, f"matrices[{x}]") for x, m in enumerate(mats)]
    )
    kraus = KrausFamily(ops=ops, atol=1e-8)

    boundaries = None
    if "boundaries" in doc:
        bl = doc["boundaries"]
        if not isinstance(bl, dict) or "L" not in bl or "R" not in bl:
            raise ValueError("'boundaries' must carry vectors 'L' and 'R'")
        boundaries = BoundaryPair(
            L=_decode_vector(bl["L"], D, "boundaries.L"),
            R=_decode_vector(bl["R"], D, "boundaries.R"),
        )

    geometry = None
    if "geometry" in doc:
        gm = doc["geometry"]
        if not isinstance(gm, dict):
            raise ValueError("'geometry' must be an object")
        try:
            geometry = ChainGeometry(
                len_a=int(gm["len_a"]),
                len_b=int(gm["len_b"]),
                len_c=int(gm["len_c"]),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError("'geometry' needs integer len_a, len_b, len_c") from exc

    label = doc.get("label")
    if label is not None and not isinstance(label, str):
        raise ValueError("'label' must be a string")
    return ModelFile(kraus=kraus, boundaries=boundaries, geometry=geometry, label=label)
