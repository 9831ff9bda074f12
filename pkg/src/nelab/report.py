"""Check reports and their JSON / CSV forms.

JSON key order is fixed::

    check, space, field, params, verdict, max_violation, witnesses,
    samples, seed, tolerance, elapsed_ms, version

``elapsed_ms`` is the only field that varies between identical runs.
Complex scalars are written as ``{"re": .., "im": ..}``.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__

__all__ = [
    "CheckReport", "HOLDS", "FAILS", "UNDECIDED", "encode", "decode",
    "encode_array", "decode_array", "CSV_HEADER", "write_atomic",
]

HOLDS, FAILS, UNDECIDED = "holds", "fails", "undecided"
VERDICTS = (HOLDS, FAILS, UNDECIDED)
TIMING_KEY = "elapsed_ms"

CSV_HEADER = (
    "check", "space", "field", "verdict", "max_violation", "witness",
    "functional", "vector", "values", "samples", "seed", "tolerance",
)


def encode(value):
    """JSON-ready form of scalars, arrays and nested containers."""
    if isinstance(value, np.ndarray):
        return encode_array(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    return value


def decode(value):
    if isinstance(value, dict):
        if set(value) == {"re", "im"}:
            return complex(value["re"], value["im"])
        return {k: decode(v) for k, v in value.items()}
    if isinstance(value, list):
        return [decode(v) for v in value]
    return value


def encode_array(arr) -> list:
    arr = np.asarray(arr)
    if np.iscomplexobj(arr):
        return [{"re": float(z.real), "im": float(z.imag)} for z in arr]
    return [float(v) for v in arr]


def decode_array(items) -> np.ndarray:
    if items and isinstance(items[0], dict):
        return np.array([complex(d["re"], d["im"]) for d in items])
    return np.array(items, dtype=float)


@dataclass
class CheckReport:
    check: str
    space: str
    field: str
    verdict: str
    max_violation: float
    witnesses: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    samples: int = 0
    seed: int | None = None
    tolerance: float = 0.0
    elapsed_ms: float = 0.0

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")

    def to_dict(self, timing: bool = True) -> dict[str, Any]:
        out = {
            "check": self.check,
            "space": self.space,
            "field": self.field,
            "params": encode(self.params),
            "verdict": self.verdict,
            "max_violation": float(self.max_violation),
            "witnesses": [encode(w) for w in self.witnesses],
            "samples": int(self.samples),
            "seed": self.seed,
            "tolerance": float(self.tolerance),
            TIMING_KEY: round(float(self.elapsed_ms), 3),
            "version": __version__,
        }
        if not timing:
            del out[TIMING_KEY]
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "CheckReport":
        return cls(
            check=d["check"], space=d["space"], field=d["field"],
            verdict=d["verdict"], max_violation=d["max_violation"],
            witnesses=[decode(w) for w in d["witnesses"]],
            params=decode(d["params"]), samples=d["samples"], seed=d["seed"],
            tolerance=d["tolerance"], elapsed_ms=d.get(TIMING_KEY, 0.0),
        )

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CheckReport":
        return cls.from_dict(json.loads(text))

    def csv_rows(self) -> list[list]:
        base = [self.check, self.space, self.field, self.verdict, repr(float(self.max_violation))]
        tail = [self.samples, self.seed, repr(float(self.tolerance))]
        if not self.witnesses:
            return [base + ["", "", "", ""] + tail]
        rows = []
        for i, w in enumerate(self.witnesses):
            w = encode(w)
            rows.append(base + [
                i,
                json.dumps(w.get("functional", [])),
                json.dumps(w.get("vector", [])),
                json.dumps(w.get("values", {})),
            ] + tail)
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(self.csv_rows())
        return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".nelab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
