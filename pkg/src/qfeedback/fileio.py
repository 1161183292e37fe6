"""Reading and writing system descriptions as JSON documents.

One document holds one model: a square field system (annihilation or
general kind), a plant with split inputs, or a controller.  Complex matrix
entries are stored as two-element arrays [re, im] so the format stays
portable and diff-friendly; floats rely on shortest round-trip repr, which
reproduces binary64 values exactly on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .errors import DimensionError, DomainError, FileFormatError
from .feedback import ControllerModel, CostOutput, PlantModel
from .systems import AnnihilationQSys, GeneralQSys

SCHEMA_VERSION = 1

_SYSTEM_MATRICES = ("f", "g", "h", "k")
_PLANT_MATRICES = ("f", "g_w", "g_u", "h", "k")
_CONTROLLER_MATRICES = ("f_c", "g_cw", "g_cy", "h_c", "k_cw", "k_cy")


def matrix_to_entries(arr: np.ndarray) -> list[list[list[float]]]:
    """Encode a complex matrix as rows of [re, im] entries."""
    a = np.asarray(arr, dtype=complex)
    if a.ndim != 2:
        a = a.reshape(1, -1) if a.size else a.reshape(0, 0)
    return [[[float(v.real), float(v.imag)] for v in row] for row in a]


def entries_to_matrix(obj: Any, location: str) -> np.ndarray:
    """Decode rows of [re, im] entries into a complex matrix."""
    if not isinstance(obj, list):
        raise FileFormatError("matrix must be a list of rows", location)
    rows = []
    width = None
    for i, row in enumerate(obj):
        if not isinstance(row, list):
            raise FileFormatError("row must be a list of entries", f"{location}[{i}]")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise FileFormatError("rows have unequal lengths", f"{location}[{i}]")
        decoded = []
        for j, entry in enumerate(row):
            where = f"{location}[{i}][{j}]"
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry)
            ):
                raise FileFormatError("entry must be [re, im]", where)
            value = complex(float(entry[0]), float(entry[1]))
            if not (np.isfinite(value.real) and np.isfinite(value.imag)):
                raise FileFormatError("entry must be finite", where)
            decoded.append(value)
        rows.append(decoded)
    if width is None:
        width = 0
    return np.array(rows, dtype=complex).reshape(len(rows), width)


@dataclass(frozen=True)
class LoadedFile:
    """A parsed document: the model plus its metadata."""

    kind: str
    model: AnnihilationQSys | GeneralQSys | PlantModel | ControllerModel
    metadata: dict[str, Any]
    document: dict[str, Any]


def _require(doc: dict, key: str, location: str) -> Any:
    if key not in doc:
        raise FileFormatError(f"missing required field '{key}'", location)
    return doc[key]


def _read_dims(doc: dict, names: tuple[str, ...]) -> dict[str, int]:
    declared = _require(doc, "dimensions", "document")
    if not isinstance(declared, dict):
        raise FileFormatError("must be an object", "dimensions")
    out = {}
    for nm in names:
        val = declared.get(nm)
        if not isinstance(val, int) or isinstance(val, bool) or val < 0:
            raise FileFormatError(
                f"'{nm}' must be a nonnegative integer, got {val!r}", "dimensions"
            )
        out[nm] = val
    return out


def _decode_matrices(
    doc: dict, shapes: dict[str, tuple[int, int]]
) -> dict[str, np.ndarray]:
    mats_doc = _require(doc, "matrices", "document")
    if not isinstance(mats_doc, dict):
        raise FileFormatError("must be an object", "matrices")
    out = {}
    for nm, want in shapes.items():
        got = entries_to_matrix(_require(mats_doc, nm, "matrices"), f"matrices.{nm}")
        if got.size == 0 and want[0] * want[1] == 0:
            got = got.reshape(want)
        if got.shape != want:
            raise FileFormatError(
                f"shape {got.shape} does not match declared dimensions {want}",
                f"matrices.{nm}",
            )
        out[nm] = got
    return out


def _representation(doc: dict, kind: str) -> str:
    if kind in ("annihilation", "general"):
        return kind
    rep = _require(doc, "representation", "document")
    if rep not in ("annihilation", "general"):
        raise FileFormatError(
            f"representation must be 'annihilation' or 'general', got {rep!r}",
            "representation",
        )
    return rep


def document_to_model(doc: dict) -> LoadedFile:
    """Validate a parsed JSON document and build the model it describes."""
    if not isinstance(doc, dict):
        raise FileFormatError("document must be an object", "document")
    version = _require(doc, "schema_version", "document")
    if version != SCHEMA_VERSION:
        raise FileFormatError(
            f"unsupported schema_version {version!r}", "schema_version"
        )
    kind = _require(doc, "kind", "document")
    if kind not in ("annihilation", "general", "plant", "controller"):
        raise FileFormatError(f"unknown kind {kind!r}", "kind")
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise FileFormatError("must be an object", "metadata")

    try:
        if kind in ("annihilation", "general"):
            d = 2 if kind == "general" else 1
            dims = _read_dims(doc, ("n_modes", "m_fields"))
            n, m = d * dims["n_modes"], d * dims["m_fields"]
            mats = _decode_matrices(
                doc, {"f": (n, n), "g": (n, m), "h": (m, n), "k": (m, m)}
            )
            cls = GeneralQSys if kind == "general" else AnnihilationQSys
            model = cls(
                f=mats["f"], g=mats["g"], h=mats["h"], k=mats["k"],
                n_modes=dims["n_modes"], m_fields=dims["m_fields"],
            )
        elif kind == "plant":
            rep = _representation(doc, kind)
            d = 2 if rep == "general" else 1
            dims = _read_dims(doc, ("n_modes", "m_w", "m_u", "m_y"))
            n = d * dims["n_modes"]
            m_w, m_u, m_y = d * dims["m_w"], d * dims["m_u"], d * dims["m_y"]
            mats = _decode_matrices(
                doc,
                {
                    "f": (n, n),
                    "g_w": (n, m_w),
                    "g_u": (n, m_u),
                    "h": (m_y, n),
                    "k": (m_y, m_w),
                },
            )
            cost = None
            if "cost" in doc:
                cost_doc = doc["cost"]
                if not isinstance(cost_doc, dict):
                    raise FileFormatError("must be an object", "cost")
                c_mat = entries_to_matrix(_require(cost_doc, "c", "cost"), "cost.c")
                d_mat = entries_to_matrix(_require(cost_doc, "d", "cost"), "cost.d")
                if c_mat.size == 0 and c_mat.shape[0] == 0:
                    c_mat = c_mat.reshape(0, n)
                if d_mat.size == 0 and d_mat.shape[0] == 0:
                    d_mat = d_mat.reshape(0, m_u)
                cost = CostOutput(c=c_mat, d=d_mat)
            model = PlantModel(kind=rep, cost=cost, **mats)
        else:
            rep = _representation(doc, kind)
            d = 2 if rep == "general" else 1
            dims = _read_dims(doc, ("n_modes", "m_wt", "m_y", "m_u"))
            n = d * dims["n_modes"]
            m_wt, m_y, m_u = d * dims["m_wt"], d * dims["m_y"], d * dims["m_u"]
            mats = _decode_matrices(
                doc,
                {
                    "f_c": (n, n),
                    "g_cw": (n, m_wt),
                    "g_cy": (n, m_y),
                    "h_c": (m_u, n),
                    "k_cw": (m_u, m_wt),
                    "k_cy": (m_u, m_y),
                },
            )
            model = ControllerModel(kind=rep, **mats)
    except (DimensionError, DomainError) as exc:
        raise FileFormatError(str(exc), "matrices") from exc
    return LoadedFile(kind=kind, model=model, metadata=metadata, document=doc)


def model_to_document(model, metadata: dict[str, Any] | None = None) -> dict[str, Any]:
    """Encode a model as a schema-versioned JSON-ready document."""
    doc: dict[str, Any] = {"schema_version": SCHEMA_VERSION}
    if isinstance(model, (AnnihilationQSys, GeneralQSys)):
        doc["kind"] = "general" if isinstance(model, GeneralQSys) else "annihilation"
        doc["dimensions"] = {"n_modes": model.n_modes, "m_fields": model.m_fields}
        doc["matrices"] = {
            nm: matrix_to_entries(getattr(model, nm)) for nm in _SYSTEM_MATRICES
        }
    elif isinstance(model, PlantModel):
        doc["kind"] = "plant"
        doc["representation"] = model.kind
        doc["dimensions"] = {
            "n_modes": model.n_modes,
            "m_w": model.m_w,
            "m_u": model.m_u,
            "m_y": model.m_y,
        }
        doc["matrices"] = {
            nm: matrix_to_entries(getattr(model, nm)) for nm in _PLANT_MATRICES
        }
        if model.cost is not None:
            doc["cost"] = {
                "c": matrix_to_entries(model.cost.c),
                "d": matrix_to_entries(model.cost.d),
            }
    elif isinstance(model, ControllerModel):
        doc["kind"] = "controller"
        doc["representation"] = model.kind
        doc["dimensions"] = {
            "n_modes": model.n_modes,
            "m_wt": model.m_wt,
            "m_y": model.m_y,
            "m_u": model.m_u,
        }
        doc["matrices"] = {
            nm: matrix_to_entries(getattr(model, nm)) for nm in _CONTROLLER_MATRICES
        }
    else:
        raise DomainError(f"cannot serialize object of type {type(model).__name__}")
    if metadata:
        doc["metadata"] = metadata
    return doc


def load_system(path: str | Path) -> LoadedFile:
    """Load and validate a system description file.

    Raises
    ------
    FileFormatError
        On JSON syntax errors or any schema violation; carries the field
        location when known.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileFormatError(f"cannot read file: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"invalid JSON: {exc}") from exc
    return document_to_model(doc)


def save_system(path: str | Path, model, metadata: dict[str, Any] | None = None) -> None:
    """Write a model to a system description file."""
    doc = model_to_document(model, metadata)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
