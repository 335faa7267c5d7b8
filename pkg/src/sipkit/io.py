"""Plain-text serialization: CSV with 17 significant digits plus JSON sidecars."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, Sequence

import numpy as np

from .contour import ContourPdf
from .density import Grid1D, GriddedPdf1D, SampleSet
from .inference import ParamPosterior
from .maxent import MaxEntModel
from .random_fields import FieldEnsemble, KLBasis

FMT = "%.17g"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return FMT % float(v)


def write_csv(path, header: Sequence[str], columns: Sequence) -> Path:
    """Write equal-length columns under ``header``."""
    cols = [np.asarray(c).ravel() for c in columns]
    n = {c.size for c in cols}
    if len(n) > 1:
        raise ValueError("columns differ in length")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_matrix_csv(path, M, header: Sequence[str] = None) -> Path:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    head = ",".join(header) if header is not None else ",".join(f"c{k}" for k in range(M.shape[1]))
    np.savetxt(path, M, fmt=FMT, delimiter=",", header=head, comments="")
    return path


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.bool_, bool)):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, (np.floating, float)):
        f = float(o)
        return f if np.isfinite(f) else None
    return o


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_csv(path) -> Dict[str, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {h: data[:, k] for k, h in enumerate(header)}


# ---------------------------------------------------------------- typed writers

def save_pdf(p, path) -> Path:
    """``x,value`` (1-D) or ``x,y,value`` row-major (2-D)."""
    if isinstance(p, GriddedPdf1D):
        return write_csv(path, ["x", "value"], [p.grid.nodes, p.values])
    X, Y = p.grid.mesh()
    return write_csv(path, ["x", "y", "value"], [X, Y, p.values])


def load_pdf1d(path, grid: Grid1D) -> GriddedPdf1D:
    d = read_csv(path)
    if not np.allclose(d["x"], grid.nodes, rtol=0, atol=1e-12 * max(1.0, abs(grid.hi))):
        raise ValueError("file nodes do not match the grid")
    return GriddedPdf1D(grid, d["value"])


def save_samples(s: SampleSet, path) -> Path:
    path = Path(path)
    names = ["q"] if s.dim == 1 else [f"z{k + 1}" for k in range(s.dim)]
    write_csv(path, names, [s.points[:, k] for k in range(s.dim)])
    write_json(path.with_suffix(".json"), {"dim": s.dim, "n": s.n, "seed": s.seed})
    return path


def save_contour_pdf(c: ContourPdf, path) -> Path:
    path = Path(path)
    write_csv(path, ["x_C", "value"], [c.arc_nodes, c.values])
    write_json(path.with_suffix(".json"), c.metadata())
    return path


def save_maxent(m: MaxEntModel, path) -> Path:
    return write_json(path, m.to_dict())


def save_posterior(post: ParamPosterior, path) -> Path:
    path = Path(path)
    A, B = post.grid.mesh()
    write_csv(path, ["theta1", "theta2", "prior", "loglik", "posterior"],
              [A, B, post.prior, post.loglik, post.posterior])
    write_json(path.with_suffix(".json"), {"map_estimate": list(post.map_estimate),
                                           "n_samples": post.n_samples, "seed": post.seed,
                                           "grid": post.grid.to_dict()})
    return path


def save_ensemble(e: FieldEnsemble, path) -> Path:
    path = Path(path)
    write_matrix_csv(path, e.samples, [f"x{k}" for k in range(e.mesh.size)])
    write_json(path.with_suffix(".json"), {"mesh": e.mesh.to_dict(),
                                           "kernel": e.meta.get("kernel"), "seed": e.seed})
    return path


def save_kl(b: KLBasis, stem) -> Path:
    stem = Path(stem)
    write_csv(stem.with_name(stem.name + "_eigvals.csv"), ["k", "eigval"],
              [np.arange(1, b.n_modes + 1), b.eigvals])
    write_matrix_csv(stem.with_name(stem.name + "_eigvecs.csv"),
                     np.column_stack([b.mesh.points, b.eigvecs]),
                     ["x"] + [f"phi{k + 1}" for k in range(b.n_modes)])
    if b.scores is not None:
        write_matrix_csv(stem.with_name(stem.name + "_scores.csv"), b.scores,
                         [f"Y{k + 1}" for k in range(b.n_modes)])
    return stem


__all__ = [
    "write_csv", "write_matrix_csv", "write_json", "read_csv", "save_pdf", "load_pdf1d",
    "save_samples", "save_contour_pdf", "save_maxent", "save_posterior", "save_ensemble",
    "save_kl",
]
