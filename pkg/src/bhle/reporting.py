"""Bit-stable report emission: JSON summaries and CSV scan tables.

Reports are regression artifacts: the same configuration and seed must
reproduce the same bytes, so the serialized summary contains no timestamp
(wall-clock time lives only on the in-memory record) and all floats go
through Python's shortest-roundtrip repr, which preserves 17 significant
digits.  Every summary embeds the sha256 hash of the configuration it was
produced from.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from dataclasses import asdict, dataclass, field, is_dataclass

import numpy as np

from . import __version__


def _plain(obj):
    """Recursively convert dataclasses/numpy scalars/arrays to JSON types."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return _plain(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)  # json can't carry inf/nan portably
    return obj


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, no whitespace variance, LF-free."""
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"),
                      ensure_ascii=True)


def config_hash(config_payload) -> str:
    return hashlib.sha256(canonical_json(config_payload).encode()).hexdigest()


@dataclass
class ReportRecord:
    """One emitted result: a verdict batch, a run summary, or a Hardy scan."""

    kind: str                 # "CaseVerdict" | "EnergyLeSeries" | "HardyScan"
    payload: dict
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.provenance.setdefault("code_version", __version__)
        # wall-clock time stays on the object only; serialization drops it so
        # that identical configs reproduce byte-identical files
        self.provenance.setdefault("timestamp", time.time())

    def to_json(self) -> str:
        prov = {k: v for k, v in self.provenance.items() if k != "timestamp"}
        return canonical_json({"kind": self.kind, "payload": self.payload,
                               "provenance": prov})


def roundtrip_equal(record: ReportRecord) -> bool:
    """Payload survives serialization losslessly (shortest-roundtrip floats)."""
    back = json.loads(record.to_json())["payload"]
    return canonical_json(back) == canonical_json(record.payload)


def write_json(path, record: ReportRecord):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(record.to_json())
        fh.write("\n")


def scan_csv_text(rows, header=("r", "value", "margin")) -> str:
    """CSV with header row, LF endings, repr-precision floats."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating))
                         else v for v in row])
    return buf.getvalue()


def write_scan_csv(path, rows, header=("r", "value", "margin")):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(scan_csv_text(rows, header))


def write_series_csv(path, series):
    """Time series of one evolution run."""
    rows = zip(series.times, series.energy, series.le_accum,
               series.base_residual)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(scan_csv_text(rows, header=("t", "energy", "le_accum",
                                             "base_residual")))
