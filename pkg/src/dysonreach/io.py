"""Problem files (JSON) and net files (CSV) used by the command line.

Complex numbers are written as ``[re, im]`` pairs inside JSON and as
Python ``complex`` literals (``1.5-2j``) inside CSV cells. The JSON layout is
described by ``docs/problem.schema.json``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .controls import PiecewiseConstantControl
from .errors import InvalidInputError

FIELDS = ("real", "complex")


def _encode_scalar(z, field):
    if field == "complex":
        z = complex(z)
        return [z.real, z.imag]
    return float(np.real(z))


def encode_vector(v, field: str | None = None):
    v = np.asarray(v)
    field = field or ("complex" if np.iscomplexobj(v) else "real")
    return [_encode_scalar(z, field) for z in v]


def encode_matrix(M, field: str):
    return [encode_vector(row, field) for row in np.asarray(M)]


def _decode_scalar(x, field, where):
    if field == "complex":
        if not (isinstance(x, (list, tuple)) and len(x) == 2):
            raise InvalidInputError(f"{where}: complex entries must be [re, im] pairs")
        re, im = (_finite(c, where) for c in x)
        return complex(re, im)
    return _finite(x, where)


def _finite(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InvalidInputError(f"{where}: expected a number, got {x!r}")
    if not math.isfinite(x):
        raise InvalidInputError(f"{where}: non-finite entry")
    return float(x)


def decode_vector(data, field: str, dim: int, where: str) -> np.ndarray:
    if not isinstance(data, list) or len(data) != dim:
        raise InvalidInputError(f"{where}: expected a list of length {dim}")
    dtype = complex if field == "complex" else float
    return np.array([_decode_scalar(x, field, where) for x in data], dtype=dtype)


def decode_matrix(data, field: str, dim: int, where: str) -> np.ndarray:
    if not isinstance(data, list) or len(data) != dim:
        raise InvalidInputError(f"{where}: expected {dim} rows")
    return np.stack([decode_vector(row, field, dim, f"{where}[{i}]") for i, row in enumerate(data)])


@dataclass
class ProblemSpec:
    dim: int
    field: str
    A: np.ndarray
    B: np.ndarray
    psi0: np.ndarray
    control: PiecewiseConstantControl | None = None
    T: float | None = None
    K: float | None = None
    eps: float | None = None
    seed: int = 0

    def to_dict(self) -> dict:
        d = {
            "dim": self.dim,
            "field": self.field,
            "A": encode_matrix(self.A, self.field),
            "B": encode_matrix(self.B, self.field),
            "psi0": encode_vector(self.psi0, self.field),
            "seed": self.seed,
        }
        if self.control is not None:
            d["control"] = self.control.to_dict()
        for key in ("T", "K", "eps"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        return d

    @classmethod
    def from_dict(cls, d) -> "ProblemSpec":
        if not isinstance(d, dict):
            raise InvalidInputError("problem document must be a JSON object")
        for key in ("dim", "field", "A", "B", "psi0"):
            if key not in d:
                raise InvalidInputError(f"missing required key {key!r}")
        dim = d["dim"]
        if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
            raise InvalidInputError("dim must be a positive integer")
        field = d["field"]
        if field not in FIELDS:
            raise InvalidInputError(f"field must be one of {FIELDS}, got {field!r}")
        control = None
        if d.get("control") is not None:
            control = PiecewiseConstantControl.from_dict(d["control"])
        scalars = {}
        for key in ("T", "K", "eps"):
            if d.get(key) is not None:
                scalars[key] = _finite(d[key], key)
        seed = d.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise InvalidInputError("seed must be an integer")
        return cls(
            dim=dim,
            field=field,
            A=decode_matrix(d["A"], field, dim, "A"),
            B=decode_matrix(d["B"], field, dim, "B"),
            psi0=decode_vector(d["psi0"], field, dim, "psi0"),
            control=control,
            seed=seed,
            **scalars,
        )

    def __eq__(self, other):
        if not isinstance(other, ProblemSpec):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.field == other.field
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.B, other.B)
            and np.array_equal(self.psi0, other.psi0)
            and self.control == other.control
            and (self.T, self.K, self.eps, self.seed) == (other.T, other.K, other.eps, other.seed)
        )


def load_problem(path) -> ProblemSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read problem file: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"problem file is not valid JSON: {exc}") from exc
    return ProblemSpec.from_dict(data)


def dump_problem(problem: ProblemSpec, path) -> None:
    Path(path).write_text(json.dumps(problem.to_dict(), indent=2) + "\n")


def _fmt(z) -> str:
    if isinstance(z, complex):
        return repr(z).strip("()")
    return repr(float(z))


def net_to_csv(centers: np.ndarray, radius: float, field: str) -> str:
    """Serialise net centers: a ``# radius=...`` line, a header, one center per row."""
    centers = np.asarray(centers)
    dim = centers.shape[1] if centers.ndim == 2 else 0
    buf = io.StringIO()
    buf.write(f"# radius={radius!r} field={field} dim={dim}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"c{i}" for i in range(dim)])
    for row in centers:
        cast = complex if field == "complex" else float
        writer.writerow([_fmt(cast(z)) for z in row])
    return buf.getvalue()


def net_from_csv(text: str):
    """Inverse of ``net_to_csv``: returns ``(centers, radius, field)``."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise InvalidInputError("net file must start with a '# radius=... field=... dim=...' line")
    meta = {}
    for token in lines[0][1:].split():
        key, _, value = token.partition("=")
        meta[key] = value
    try:
        radius = float(meta["radius"])
        field = meta["field"]
        dim = int(meta["dim"])
    except (KeyError, ValueError) as exc:
        raise InvalidInputError(f"malformed net header: {lines[0]!r}") from exc
    if field not in FIELDS or not (math.isfinite(radius) and radius > 0):
        raise InvalidInputError(f"malformed net header: {lines[0]!r}")
    rows = list(csv.reader(lines[1:]))
    if not rows or len(rows[0]) != dim:
        raise InvalidInputError("net file header row does not match dim")
    cast = complex if field == "complex" else float
    try:
        data = [[cast(x) for x in row] for row in rows[1:] if row]
    except ValueError as exc:
        raise InvalidInputError(f"malformed net entry: {exc}") from exc
    if any(len(r) != dim for r in data):
        raise InvalidInputError("net row length does not match dim")
    centers = np.array(data, dtype=cast).reshape(len(data), dim)
    if not np.all(np.isfinite(centers)):
        raise InvalidInputError("net file contains non-finite entries")
    return centers, radius, field
