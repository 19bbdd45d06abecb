"""Plant and gain ingestion from JSON documents.

Plant schema: top-level keys "E", "A", "Bw", "Bu", "C", "Dw" as row-major
nested arrays, plus an optional "uncertainty" object with keys "MA", "NA",
"MB", "NB", "MC", "NC", "MD", "ND" and "s".  Missing uncertainty keys mean
zero factors.
"""

import json

import numpy as np

from .errors import PlantFormatError
from .model import DescriptorPlant, UncertainPlant

_PLANT_KEYS = ("E", "A", "Bw", "Bu", "C", "Dw")
_FACTOR_KEYS = ("MA", "NA", "MB", "NB", "MC", "NC", "MD", "ND")


def plant_from_dict(doc):
    if not isinstance(doc, dict):
        raise PlantFormatError("plant document must be a JSON object")
    missing = [k for k in _PLANT_KEYS if k not in doc]
    if missing:
        raise PlantFormatError(f"missing plant keys: {missing}")
    try:
        plant = DescriptorPlant(**{k: np.asarray(doc[k], dtype=float)
                                   for k in _PLANT_KEYS})
    except (TypeError, ValueError) as exc:
        raise PlantFormatError(f"bad plant matrices: {exc}") from exc
    unc = doc.get("uncertainty") or {}
    if not isinstance(unc, dict):
        raise PlantFormatError("'uncertainty' must be an object")
    unknown = set(unc) - set(_FACTOR_KEYS) - {"s"}
    if unknown:
        raise PlantFormatError(f"unknown uncertainty keys: {sorted(unknown)}")
    try:
        factors = {k: np.asarray(unc[k], dtype=float)
                   for k in _FACTOR_KEYS if k in unc}
        return UncertainPlant.from_factors(plant, s=unc.get("s"), **factors)
    except (TypeError, ValueError) as exc:
        raise PlantFormatError(f"bad uncertainty factors: {exc}") from exc


def plant_from_json(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise PlantFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise PlantFormatError(f"invalid JSON in {path}: {exc}") from exc
    return plant_from_dict(doc)


def plant_to_dict(uplant):
    pl = uplant.plant
    doc = {k: getattr(pl, k).tolist() for k in _PLANT_KEYS}
    if uplant.has_uncertainty:
        doc["uncertainty"] = {k: getattr(uplant, k).tolist()
                              for k in _FACTOR_KEYS}
        doc["uncertainty"]["s"] = uplant.s
    return doc


def gain_from_json(path):
    """A gain file is either a bare row-major nested array or {"F": [[...]]}."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise PlantFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise PlantFormatError(f"invalid JSON in {path}: {exc}") from exc
    if isinstance(doc, dict):
        if "F" not in doc:
            raise PlantFormatError("gain object must carry key 'F'")
        doc = doc["F"]
    try:
        gain = np.atleast_2d(np.asarray(doc, dtype=float))
    except (TypeError, ValueError) as exc:
        raise PlantFormatError(f"bad gain matrix: {exc}") from exc
    return gain
