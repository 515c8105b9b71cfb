"""Artifact emission: certificate JSON (schema-validated) and CSV files.

Floats are serialized with 17 significant digits so every value
round-trips bit-faithfully.
"""

from __future__ import annotations

import importlib.resources
import json
from pathlib import Path
from typing import Any, Optional

from .bounds import BootstrapResult, DensityCertificate, KolmogorovCertificate

__all__ = [
    "certificate_document",
    "dump_json17",
    "validate_certificate",
    "write_certificate",
]


def _write_value(value: Any, indent: int, chunks: list) -> None:
    pad = "  " * indent
    if isinstance(value, dict):
        if not value:
            chunks.append("{}")
            return
        chunks.append("{\n")
        for i, (k, v) in enumerate(value.items()):
            chunks.append(f"{pad}  {json.dumps(str(k))}: ")
            _write_value(v, indent + 1, chunks)
            chunks.append(",\n" if i < len(value) - 1 else "\n")
        chunks.append(pad + "}")
    elif isinstance(value, (list, tuple)):
        if not value:
            chunks.append("[]")
            return
        chunks.append("[\n")
        for i, v in enumerate(value):
            chunks.append(pad + "  ")
            _write_value(v, indent + 1, chunks)
            chunks.append(",\n" if i < len(value) - 1 else "\n")
        chunks.append(pad + "]")
    elif isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        chunks.append(json.dumps(value))
    elif isinstance(value, float):
        # json.dump would use the shortest repr; 17 significant digits are
        # requested explicitly for bit-faithful round trips
        chunks.append(format(value, ".17g"))
    else:
        raise TypeError(f"unsupported value in certificate document: {type(value)!r}")


def dump_json17(doc: dict, path: Path) -> None:
    chunks: list = []
    _write_value(doc, 0, chunks)
    chunks.append("\n")
    path.write_text("".join(chunks))


def certificate_document(*, n: int, s: int, kol: KolmogorovCertificate,
                         dens: Optional[DensityCertificate],
                         sup_chain: tuple[float, ...],
                         meta: Optional[dict] = None) -> dict:
    doc = {
        "n": n,
        "s": s,
        "p": int(kol.p_used),
        "lp": float(kol.lp.value) if kol.lp is not None else None,
        "kolmogorov": float(kol.bound),
        "delta": float(dens.delta) if dens is not None else None,
        "d": int(dens.d) if dens is not None else None,
        "density_bound": float(dens.bound) if dens is not None else None,
        "density_sup_chain": [float(b) for b in sup_chain],
    }
    if meta:
        doc["meta"] = meta
    return doc


def bootstrap_document(n: int, s: int, boot: BootstrapResult, meta: Optional[dict] = None) -> dict:
    return certificate_document(n=n, s=s, kol=boot.kolmogorov, dens=boot.density,
                                sup_chain=boot.sup_chain, meta=meta)


def _schema() -> dict:
    text = importlib.resources.files("perpetua.schemas").joinpath(
        "certificate.schema.json").read_text()
    return json.loads(text)


def validate_certificate(doc: dict) -> None:
    """Validate against the shipped schema; jsonschema if present, else basic checks."""
    schema = _schema()
    try:
        import jsonschema
    except ImportError:  # fall back to the required-keys core of the schema
        missing = [k for k in schema["required"] if k not in doc]
        if missing:
            raise ValueError(f"certificate document missing keys: {missing}")
        return
    jsonschema.validate(doc, schema)


def write_certificate(doc: dict, path: Path) -> None:
    validate_certificate(doc)
    dump_json17(doc, path)
