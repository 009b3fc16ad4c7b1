"""File formats: matrix JSON, system JSON, adjacency CSV / edge-list JSON, protocol bundles."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .cluster import ClusterGraph
from .errors import InvalidInput
from .gaussian import ComplexCoupling
from .systems import ExtendedSystem, TargetSystem


def matrix_to_json(M) -> dict:
    """``{rows, cols, real, imag?}`` with row-major flattened entries."""
    M = np.atleast_2d(np.asarray(M))
    out = {"rows": int(M.shape[0]), "cols": int(M.shape[1]), "real": [float(x) for x in M.real.ravel()]}
    if np.iscomplexobj(M):
        out["imag"] = [float(x) for x in M.imag.ravel()]
    return out


def matrix_from_json(obj) -> np.ndarray:
    """Inverse of :func:`matrix_to_json`; nested row lists are accepted too."""
    if isinstance(obj, list):
        return np.array(obj, dtype=float)
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        real = np.array(obj["real"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed matrix object: {exc}") from exc
    if real.size != rows * cols:
        raise InvalidInput(f"matrix has {real.size} entries, expected {rows * cols}")
    M = real.reshape(rows, cols)
    if obj.get("imag") is not None:
        imag = np.array(obj["imag"], dtype=float)
        if imag.size != rows * cols:
            raise InvalidInput("imaginary part has the wrong size")
        M = M + 1j * imag.reshape(rows, cols)
    return M


def system_to_json(sys, kappa=None, gamma=None, epsilon=None) -> dict:
    """Serialise a target or extended system."""
    if isinstance(sys, ExtendedSystem):
        kappa = sys.kappa if kappa is None else kappa
        gamma = sys.gamma if gamma is None and sys.gamma else gamma
        sys = sys.target
    doc = {
        "n": sys.n,
        "m": sys.m,
        "kappa": kappa,
        "G": matrix_to_json(sys.G),
        "C_real": matrix_to_json(sys.C.real),
        "C_imag": matrix_to_json(sys.C.imag),
    }
    if gamma is not None:
        doc["gamma"] = gamma
    if epsilon is not None:
        doc["epsilon"] = epsilon
    return doc


def system_from_json(doc: dict):
    """Returns ``(TargetSystem, kappa, gamma, epsilon)``; missing optionals are ``None``/0."""
    try:
        n, m = int(doc["n"]), int(doc["m"])
        C = matrix_from_json(doc["C_real"]) + 1j * matrix_from_json(doc["C_imag"])
        G = matrix_from_json(doc["G"]) if doc.get("G") is not None else np.zeros((2 * n, 2 * n))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed system document: {exc}") from exc
    if C.shape != (m, 2 * n):
        raise InvalidInput(f"C has shape {C.shape}, expected {(m, 2 * n)}")
    sys = TargetSystem(np.real(G), ComplexCoupling(C))
    kappa = doc.get("kappa")
    gamma = float(doc.get("gamma") or 0.0)
    eps = doc.get("epsilon")
    return sys, (None if kappa is None else float(kappa)), gamma, eps


def load_graph(path) -> ClusterGraph:
    """Dense CSV (n lines) or JSON edge list ``{n, edges: [[i, j, w], ...]}``.

    Raises ``InvalidInput`` for asymmetric dense input rather than silently
    symmetrising it.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(text)
            return ClusterGraph.from_edges(int(doc["n"]), doc["edges"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed edge list: {exc}") from exc
    try:
        rows = [[float(x) for x in row] for row in csv.reader(text.splitlines()) if row]
        A = np.array(rows, dtype=float)
    except ValueError as exc:
        raise InvalidInput(f"malformed adjacency CSV: {exc}") from exc
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInput(f"adjacency CSV is not square: {A.shape}")
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-12:
        raise InvalidInput("adjacency matrix is not symmetric")
    return ClusterGraph(A)


def save_graph_csv(g: ClusterGraph, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in g.A:
            w.writerow([repr(float(x)) for x in row])


def read_matrix_csv(path) -> np.ndarray:
    with open(path) as fh:
        return np.array([[float(x) for x in row] for row in csv.reader(fh) if row])


def write_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: invalid JSON ({exc})") from exc
