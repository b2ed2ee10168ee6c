"""JSON reading and writing for chains and abstractions."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .abstraction import (
    Imdpa,
    LumpedChain,
    Mdpa,
    imdpa_from_dict,
    imdpa_to_dict,
    mdpa_from_dict,
    mdpa_to_dict,
)
from .model import LabeledMarkovChain, chain_to_dict, validate_model

SIG_DIGITS = 12


def round_sig(obj, digits: int = SIG_DIGITS):
    """Round every float in a JSON-like tree to ``digits`` significant digits."""
    if isinstance(obj, float):
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: round_sig(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_sig(v, digits) for v in obj]
    return obj


def load_model(path) -> LabeledMarkovChain:
    with open(path, encoding="utf-8") as fh:
        return validate_model(json.load(fh))


def case_study() -> LabeledMarkovChain:
    """The 11-state example chain with labels a, b, c shipped with the package."""
    text = resources.files(__package__).joinpath("data/case_study.json").read_text()
    return validate_model(json.loads(text))


def to_document(obj) -> dict:
    if isinstance(obj, LabeledMarkovChain):
        return chain_to_dict(obj)
    if isinstance(obj, LumpedChain):
        doc = chain_to_dict(obj.chain)
        doc["epsilon"] = obj.epsilon
        doc["representatives"] = list(obj.representatives)
        return doc
    if isinstance(obj, Imdpa):
        return imdpa_to_dict(obj)
    if isinstance(obj, Mdpa):
        return mdpa_to_dict(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    """One top-level key per line, values compact; floats at 12 significant digits."""
    doc = round_sig(to_document(obj))
    body = ",\n".join(f"  {json.dumps(k)}: {json.dumps(v)}" for k, v in doc.items())
    return "{\n" + body + "\n}\n"


def from_document(doc: dict):
    """Rebuild whatever :func:`to_document` produced (a lumped chain comes back as a plain chain)."""
    if "actions" in doc:
        return mdpa_from_dict(doc)
    if "interval_rows" in doc:
        return imdpa_from_dict(doc)
    return validate_model(doc)


def load(path):
    return from_document(json.loads(Path(path).read_text(encoding="utf-8")))
