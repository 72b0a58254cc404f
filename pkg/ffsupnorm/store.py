"""
JSON persistence for trace tables and report emission (JSON, JSON lines, CSV).
"""

import json
from pathlib import Path
from typing import Iterable

import pandas as pd
from pydantic import BaseModel

from .errors import ConfigError
from .funfield import parse_divisor, parse_place
from .tracefn import EllipticSurface, LocalFactor, TraceTable, assemble_trace_table
from .utils.logger import logger


def table_to_json(tbl: TraceTable) -> dict:
    return {
        "surface": tbl.surface.to_dict(),
        "conductor": str(tbl.conductor),
        "depth": tbl.depth,
        "factors": {str(v): {"a": lf.a, "kind": lf.kind} for v, lf in tbl.factors.items()},
    }


def table_from_json(data: dict) -> TraceTable:
    E = EllipticSurface.from_dict(data["surface"])
    p = E.p
    N = parse_divisor(data["conductor"], p)
    factors = {parse_place(key, p): LocalFactor(int(val["a"]), val["kind"])
               for key, val in data["factors"].items()}
    return assemble_trace_table(E, N, factors, int(data["depth"]))


def save_table(tbl: TraceTable, path: str | Path) -> Path:
    """Write the table; an existing corrupt file is reported and overwritten."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.exists():
        try:
            existing = path.read_text(encoding="utf-8").strip()
            if existing:
                json.loads(existing)
        except json.JSONDecodeError:
            logger.warning(f"⚠️ Corrupt JSON detected in {path}. Overwriting.")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(table_to_json(tbl), f, indent=2, sort_keys=True)
    logger.info(f"✅ Trace table stored: {path}")
    return path


def load_table(path: str | Path) -> TraceTable:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"trace table {path} not found")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"corrupt trace table {path}: {exc}") from exc
    try:
        return table_from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed trace table {path}: {exc}") from exc


def dump_json(obj) -> str:
    """Deterministic JSON for models and plain dicts."""
    if isinstance(obj, BaseModel):
        obj = obj.model_dump(mode="json")
    return json.dumps(obj, indent=2, sort_keys=True)


def write_json(obj, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(obj) + "\n", encoding="utf-8")
    return path


def write_jsonl(records: Iterable, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            if isinstance(rec, BaseModel):
                rec = rec.model_dump(mode="json")
            f.write(json.dumps(rec, sort_keys=True) + "\n")
    return path


def write_csv(rows: list[dict], path: str | Path) -> Path:
    """Flat sweep table; nested values are stored as JSON strings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    flat = [{k: json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else v
             for k, v in row.items()} for row in rows]
    pd.DataFrame(flat).to_csv(path, index=False)
    logger.info(f"📝 {len(rows)} rows written to {path}")
    return path
