"""JSON file formats for presentations, cochains and gauge fields.

Arrays are stored as base64 strings of little-endian float64 values.
"""
from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from .forms import Cochain
from .presentation import Chart, FoliationPresentation, Generator

FORMAT_VERSION = 1


def encode_array(a) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def decode_array(s: str, shape=None) -> np.ndarray:
    a = np.frombuffer(base64.b64decode(s), dtype="<f8").astype(float)
    return a if shape is None else a.reshape(shape)


def presentation_to_dict(P: FoliationPresentation) -> dict:
    return {
        "format": "foliata.presentation",
        "version": FORMAT_VERSION,
        "name": P.name,
        "charts": [{"id": c.id, "extent": list(c.extent), "metric": [float(g) for g in c.metric]}
                   for c in P.charts],
        "generators": [{"source": g.source, "target": g.target, "name": g.name,
                        "matrix": g.matrix.astype(int).tolist(),
                        "translation": [int(t) for t in g.translation]} for g in P.generators],
        "theta": encode_array(P.theta),
        "kappa": encode_array(P.kappa),
        "bundle_lifts": [None if g.lift is None else encode_array(g.lift) for g in P.generators],
        "metric_field": None if P.metric_field is None else encode_array(P.metric_field),
    }


def presentation_from_dict(doc: dict) -> FoliationPresentation:
    charts = [Chart(c["id"], tuple(c["extent"]), tuple(c.get("metric", (1.0,) * 4)))
              for c in doc["charts"]]
    lifts = doc.get("bundle_lifts") or [None] * len(doc["generators"])
    if len(lifts) != len(doc["generators"]):
        raise ValueError("bundle_lifts must list one entry per generator")
    gens = []
    for g, lift in zip(doc["generators"], lifts):
        nv = charts[g.get("source", 0)].n_vertices
        gens.append(Generator(g.get("source", 0), g.get("target", 0), g["matrix"],
                              g.get("translation", (0, 0, 0, 0)),
                              None if lift is None else decode_array(lift, (nv, 4)),
                              g.get("name", "")))
    nv = sum(c.n_vertices for c in charts)
    theta = decode_array(doc["theta"]) if doc.get("theta") is not None else np.ones(nv)
    kappa = decode_array(doc["kappa"]) if doc.get("kappa") is not None else np.zeros(4 * nv)
    mf = doc.get("metric_field")
    return FoliationPresentation(charts, gens, theta, kappa,
                                 None if mf is None else decode_array(mf, (nv, 4, 4)),
                                 name=doc.get("name", ""))


def cochain_to_dict(c: Cochain) -> dict:
    return {"format": "foliata.cochain", "version": FORMAT_VERSION,
            "degree": c.degree, "value_type": c.value_type, "layout": c.layout,
            "presentation_hash": c.P.hash, "data": encode_array(c.data)}


def cochain_from_dict(doc: dict, P: FoliationPresentation) -> Cochain:
    if doc.get("presentation_hash") not in (None, P.hash):
        raise ValueError("cochain was saved for a different presentation")
    n = P.n_cells(doc["degree"])
    shape = (n,) if doc["value_type"] == "scalar" else (n, 3)
    return Cochain(P, doc["degree"], decode_array(doc["data"], shape), doc.get("layout", "cell"))


def orbit_table_hash(P: FoliationPresentation) -> str:
    """Digest of the edge-orbit parametrization a field file depends on."""
    import hashlib
    eo = P.edge_orbits
    h = hashlib.sha256()
    for a in (eo.reps.astype("<i8"), eo.rep.astype("<i8"), eo.reversed.astype("u1")):
        h.update(a.tobytes())
    h.update(np.round(eo.left, 12).astype("<f8").tobytes())
    h.update(np.round(eo.right, 12).astype("<f8").tobytes())
    return h.hexdigest()


def field_to_dict(U) -> dict:
    return {"format": "foliata.field", "version": FORMAT_VERSION,
            "n_representatives": int(U.reps.shape[0]),
            "orbit_table_hash": orbit_table_hash(U.P),
            "presentation_hash": U.P.hash,
            "quaternions": encode_array(U.reps)}


def field_from_dict(doc: dict, P: FoliationPresentation):
    from .gauge import EquivariantGaugeField
    if doc.get("orbit_table_hash") != orbit_table_hash(P):
        raise ValueError("field file does not match this presentation's orbit table")
    reps = decode_array(doc["quaternions"], (doc["n_representatives"], 4))
    return EquivariantGaugeField(P, reps)


def save_json(doc: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())


def save_presentation(P, path):
    save_json(presentation_to_dict(P), path)


def load_presentation(path):
    return presentation_from_dict(load_json(path))


def save_cochain(c, path):
    save_json(cochain_to_dict(c), path)


def load_cochain(path, P):
    return cochain_from_dict(load_json(path), P)


def save_field(U, path):
    save_json(field_to_dict(U), path)


def load_field(path, P):
    return field_from_dict(load_json(path), P)
