"""The one-shot client-to-server message and its wire format.

The upload is a self-describing JSON document with explicit ``k`` and ``d``
so payloads are human-inspectable and diffable. Centroid values survive the
round trip bit-exactly (JSON emits the shortest repr that parses back to
the same double).

Schema: ``{"client_id": int, "k": int, "d": int, "centroids": [[float]]}``
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass
class CentroidUpload:
    """Centroid set uploaded by one client; the only data that leaves it."""

    client_id: int
    k: int
    d: int
    centroids: np.ndarray

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.k < 1:
            raise ValidationError(f"upload must carry k >= 1 clusters, got k={self.k}")
        if self.d < 1:
            raise ValidationError(f"upload must carry d >= 1 features, got d={self.d}")
        if self.centroids.shape != (self.k, self.d):
            raise ValidationError(
                f"centroid matrix shape {self.centroids.shape} "
                f"does not match (k={self.k}, d={self.d})")
        if not np.all(np.isfinite(self.centroids)):
            raise ValidationError("upload contains non-finite centroid values")


def serialize_upload(upload: CentroidUpload) -> bytes:
    doc = {
        "client_id": int(upload.client_id),
        "k": int(upload.k),
        "d": int(upload.d),
        "centroids": [[float(v) for v in row] for row in upload.centroids],
    }
    return json.dumps(doc, sort_keys=True).encode("utf-8")


def parse_upload(payload: bytes) -> CentroidUpload:
    """Decode and validate an upload; rejects schema and invariant violations."""
    try:
        doc = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"upload is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValidationError("upload must be a JSON object")
    missing = {"client_id", "k", "d", "centroids"} - set(doc)
    if missing:
        raise ValidationError(f"upload missing fields: {sorted(missing)}")
    for field in ("client_id", "k", "d"):
        if not isinstance(doc[field], int):
            raise ValidationError(f"upload field {field!r} must be an integer")
    rows = doc["centroids"]
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ValidationError("upload centroids must be a list of rows")
    if any(len(r) != doc["d"] for r in rows):
        raise ValidationError("upload centroid row length does not match d")
    try:
        centroids = np.asarray(rows, dtype=np.float64).reshape(len(rows), doc["d"])
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"upload centroids must be numeric: {exc}") from None
    return CentroidUpload(
        client_id=doc["client_id"], k=doc["k"], d=doc["d"], centroids=centroids)
