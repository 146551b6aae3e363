"""Line-delimited waveform files.

The on-disk format (see docs/formats.md) is JSON Lines: a header object on
the first line, then one record object per line.  Field names and the
header are fixed; readers reject any record that violates the
:class:`~quakebox.waveform.WaveformRecord` invariants with a line-numbered
error so bad inputs fail loudly instead of poisoning an experiment.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, List, Tuple

from .errors import FormatError
from .waveform import WaveformRecord

FORMAT_NAME = "quakebox-waveforms-v1"

RECORD_FIELDS = (
    "trace_id",
    "event_id",
    "station",
    "channel",
    "sample_rate",
    "label",
    "magnitude",
    "samples",
)


def write_waveforms(path: str | Path, records: Iterable[WaveformRecord], role: str = "all") -> None:
    """Write records as JSON Lines with a header carrying the partition role."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"format": FORMAT_NAME, "role": role}) + "\n")
        for rec in records:
            row = {
                "trace_id": rec.trace_id,
                "event_id": rec.event_id,
                "station": rec.station,
                "channel": rec.channel,
                "sample_rate": rec.sample_rate,
                "label": rec.label,
                "magnitude": rec.magnitude,
                "samples": [float(v) for v in rec.samples],
            }
            fh.write(json.dumps(row) + "\n")


def read_waveforms(path: str | Path) -> Tuple[List[WaveformRecord], str]:
    """Read a waveform file; returns (records, role).

    Raises :class:`FormatError` with the offending line number on any
    malformed line or invariant violation.
    """
    path = Path(path)
    records: List[WaveformRecord] = []
    with path.open("r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line:
            raise FormatError(f"{path}: empty file")
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid header JSON ({exc})", line=1) from exc
        if not isinstance(header, dict) or header.get("format") != FORMAT_NAME:
            raise FormatError(f"{path}: not a {FORMAT_NAME} file", line=1)
        role = str(header.get("role", "all"))
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON ({exc})", line=lineno) from exc
            if not isinstance(row, dict):
                raise FormatError("record is not a JSON object", line=lineno)
            missing = [f for f in RECORD_FIELDS if f not in row]
            if missing:
                raise FormatError(f"missing fields {missing}", line=lineno)
            try:
                rec = WaveformRecord(
                    trace_id=str(row["trace_id"]),
                    event_id=row["event_id"],
                    station=str(row["station"]),
                    channel=str(row["channel"]),
                    sample_rate=float(row["sample_rate"]),
                    label=str(row["label"]),
                    magnitude=None if row["magnitude"] is None else float(row["magnitude"]),
                    samples=row["samples"],
                )
            except (ValueError, TypeError) as exc:
                raise FormatError(str(exc), line=lineno) from exc
            records.append(rec)
    return records, role
