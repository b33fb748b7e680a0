"""File formats: JSON documents with a fixed wire encoding for matrices.

Complex scalars are serialized as two-element [re, im] arrays of IEEE-754
doubles; matrices as row-major nested arrays of those pairs. Files carry a
``version`` field and re-saving a loaded document reproduces it byte for
byte (Python's float repr round-trips exactly).
"""

from __future__ import annotations

import json

import numpy as np

from .dynamics import KrausSet, LindbladModel, TimeSeries
from .metrics import IdentifiedModel
from .optimize import OptimizationResult

SCHEMA_VERSION = 1


def matrix_to_wire(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def wire_to_matrix(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError("matrix wire format must be rows of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _check_version(doc: dict, path) -> None:
    version = doc.get("version")
    if version != SCHEMA_VERSION:
        raise ValueError(
            f"{path}: unsupported schema version {version!r} (expected {SCHEMA_VERSION})"
        )


def _dump(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"))
        fh.write("\n")


def _load(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: expected a JSON object at top level")
    return doc


def save_time_series(series: TimeSeries, path) -> None:
    """Write {version, n, dt, w, seed, states} with matrices in wire format."""
    doc = {
        "version": SCHEMA_VERSION,
        "n": series.n,
        "dt": series.dt,
        "w": float(series.metadata.get("w", 0.0)),
        "seed": series.metadata.get("seed"),
        "states": [matrix_to_wire(s) for s in series.states],
    }
    _dump(doc, path)


def load_time_series(path) -> TimeSeries:
    doc = _load(path)
    _check_version(doc, path)
    try:
        states = np.stack([wire_to_matrix(s) for s in doc["states"]])
        dt = float(doc["dt"])
        metadata = {"seed": doc.get("seed"), "w": float(doc.get("w", 0.0)), "generator": None}
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed time-series document ({exc})") from exc
    return TimeSeries(dt=dt, states=states, metadata=metadata)


def save_identified_model(identified: IdentifiedModel, path) -> None:
    """Write {version, kind, n, model, completeness_residual, optimization}."""
    model = identified.model
    if isinstance(model, KrausSet):
        model_doc = {"ops": [matrix_to_wire(e) for e in model.ops]}
    else:
        model_doc = {
            "h": matrix_to_wire(model.h),
            "jumps": [matrix_to_wire(a) for a in model.jumps],
        }
    opt = identified.optimization
    doc = {
        "version": SCHEMA_VERSION,
        "kind": identified.kind,
        "n": identified.n,
        "model": model_doc,
        "completeness_residual": identified.completeness_residual,
        "optimization": {
            "best_value": opt.best_value,
            "best_grad_norm": opt.best_grad_norm,
            "converged": opt.converged,
            "local_runs": opt.local_runs,
            "total_evals": opt.total_evals,
            "wall_time": opt.wall_time,
        },
    }
    _dump(doc, path)


def load_identified_model(path) -> IdentifiedModel:
    doc = _load(path)
    _check_version(doc, path)
    try:
        kind = doc["kind"]
        model_doc = doc["model"]
        if kind == "kraus":
            model = KrausSet(ops=tuple(wire_to_matrix(e) for e in model_doc["ops"]))
        else:
            model = LindbladModel(
                h=wire_to_matrix(model_doc["h"]),
                jumps=tuple(wire_to_matrix(a) for a in model_doc["jumps"]),
            )
        opt_doc = doc["optimization"]
        optimization = OptimizationResult(
            best_params=np.array([]),
            best_value=float(opt_doc["best_value"]),
            best_grad_norm=float(opt_doc["best_grad_norm"]),
            converged=bool(opt_doc["converged"]),
            local_runs=int(opt_doc["local_runs"]),
            total_evals=int(opt_doc["total_evals"]),
            wall_time=float(opt_doc["wall_time"]),
        )
        residual = doc.get("completeness_residual")
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed model document ({exc})") from exc
    return IdentifiedModel(
        kind=kind,
        model=model,
        optimization=optimization,
        completeness_residual=residual,
    )
