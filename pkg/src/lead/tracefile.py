"""Trace export in the ``lead_trace_v1`` JSON-lines and CSV layouts.

JSON-lines: the first line is a header object ``{"schema": "lead_trace_v1",
"config": {...}, ...}``; every following line is one step record with the
fields ``step, phase, token, entropy, ref_entropy, mode, event, injected,
persistence, switch_count, top_k``.

CSV: the first line is ``# lead_trace_v1 <header JSON>``, then a column header
row ``step,phase,token,entropy,ref_entropy,mode,event,injected``.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Optional

from .engine import TRACE_SCHEMA, StepRecord

CSV_COLUMNS = ("step", "phase", "token", "entropy", "ref_entropy", "mode", "event", "injected")


def _header(header: Optional[dict]) -> dict:
    return {"schema": TRACE_SCHEMA, **(header or {})}


def dumps_jsonl(records: Iterable[StepRecord], header: Optional[dict] = None) -> str:
    lines = [json.dumps(_header(header), sort_keys=True)]
    lines += [json.dumps(r.to_dict()) for r in records]
    return "\n".join(lines) + "\n"


def dumps_csv(records: Iterable[StepRecord], header: Optional[dict] = None) -> str:
    buf = io.StringIO()
    buf.write(f"# {TRACE_SCHEMA} {json.dumps(_header(header), sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        d = r.to_dict()
        writer.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def write_trace(records, path, fmt: str = "jsonl", header: Optional[dict] = None) -> Path:
    path = Path(path)
    text = dumps_jsonl(records, header) if fmt == "jsonl" else dumps_csv(records, header)
    path.write_text(text)
    return path


def read_jsonl(path) -> tuple[dict, list[StepRecord]]:
    lines = Path(path).read_text().splitlines()
    header = json.loads(lines[0])
    if header.get("schema") != TRACE_SCHEMA:
        raise ValueError(f"{path}: not a {TRACE_SCHEMA} trace")
    return header, [StepRecord.from_dict(json.loads(line)) for line in lines[1:] if line.strip()]
