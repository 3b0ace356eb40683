"""Schema-versioned, line-delimited JSON records."""

from __future__ import annotations

import json
from pathlib import Path

RECORD_SCHEMA = "smoothltf.record/1"
LEMMA_SCHEMA = "smoothltf.lemma/1"
KNOWN_SCHEMAS = {RECORD_SCHEMA, LEMMA_SCHEMA}


class SchemaError(ValueError):
    pass


def dumps(record: dict) -> str:
    # sorted keys and repr floats keep lines byte-stable for fixed inputs
    return json.dumps(record, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_records(path, records, append: bool = True) -> None:
    for r in records:
        if r.get("schema") not in KNOWN_SCHEMAS:
            raise SchemaError(f"refusing to write a record with schema {r.get('schema')!r}")
    with open(path, "a" if append else "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(dumps(r) + "\n")


def read_records(path, schema: str | None = None) -> list[dict]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            r = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}:{lineno}: not valid JSON ({exc.msg})") from None
        got = r.get("schema") if isinstance(r, dict) else None
        if got not in KNOWN_SCHEMAS:
            raise SchemaError(f"{path}:{lineno}: unknown schema {got!r}")
        if schema is not None and got != schema:
            raise SchemaError(f"{path}:{lineno}: expected {schema}, found {got}")
        out.append(r)
    return out
