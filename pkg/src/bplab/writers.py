"""Artifact emission: diagnostics CSV, summary JSON and raw field snapshots."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError

from .diagnostics import CSV_COLUMNS, DiagnosticsRecord, mode_column
from .spectral import Grid

logger = logging.getLogger(__name__)

SNAPSHOT_DTYPE = "<f8"
TIMING_KEY = "timing"


class OutputError(Exception):
    """出力ファイルの書き込みエラー"""

    pass


class RunEntry(BaseModel):
    model_config = ConfigDict(extra="allow")

    name: str
    status: str


class SummaryModel(BaseModel):
    """Schema of summary.json."""

    model_config = ConfigDict(extra="allow")

    scenario: str
    parameters: Dict[str, Any]
    verdicts: Dict[str, bool]
    passed: bool
    runs: List[RunEntry]
    results: Dict[str, Any]
    timing: Dict[str, float]


def _ensure_dir(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"{path}: ディレクトリを作成できません: {e}")


def write_diagnostics_csv(
    records: Sequence[DiagnosticsRecord], path: Union[str, Path], modes: Sequence[float] = ()
) -> Path:
    """One row per record; an empty trajectory yields the header only."""
    path = Path(path)
    _ensure_dir(path.parent)
    columns = list(CSV_COLUMNS) + [mode_column(k) for k in modes]
    frame = pd.DataFrame([r.as_row() for r in records], columns=columns)
    try:
        frame.to_csv(path, index=False, float_format="%.17g")
    except OSError as e:
        raise OutputError(f"{path}: CSV の書き込みに失敗: {e}")
    return path


def write_table_csv(rows: Sequence[Dict[str, Any]], path: Union[str, Path]) -> Path:
    path = Path(path)
    _ensure_dir(path.parent)
    try:
        pd.DataFrame(list(rows)).to_csv(path, index=False, float_format="%.17g")
    except OSError as e:
        raise OutputError(f"{path}: CSV の書き込みに失敗: {e}")
    return path


def validate_summary(summary: Dict[str, Any]) -> SummaryModel:
    try:
        return SummaryModel.model_validate(summary)
    except ValidationError as e:
        raise OutputError(f"summary does not match the schema: {e}")


def summary_without_timing(summary: Dict[str, Any]) -> Dict[str, Any]:
    return {key: value for key, value in summary.items() if key != TIMING_KEY}


def dump_summary(summary: Dict[str, Any]) -> str:
    return json.dumps(summary, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=True)


def write_summary_json(summary: Dict[str, Any], path: Union[str, Path]) -> Path:
    """Validate and write the summary with sorted keys."""
    validate_summary(summary)
    path = Path(path)
    _ensure_dir(path.parent)
    try:
        path.write_text(dump_summary(summary) + "\n", encoding="utf-8")
    except OSError as e:
        raise OutputError(f"{path}: JSON の書き込みに失敗: {e}")
    return path


def read_summary_json(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise OutputError(f"{path}: JSON の読み込みに失敗: {e}")
    validate_summary(data)
    return data


def write_snapshot(
    fields: Dict[str, np.ndarray],
    grid: Grid,
    time: float,
    stem: Union[str, Path],
) -> Dict[str, Path]:
    """Write fields as little-endian float64 in C order plus a JSON sidecar.

    Components are concatenated in the order of ``fields``; each entry is a
    scalar field or a (d, *shape) vector field.
    """
    stem = Path(stem)
    _ensure_dir(stem.parent)
    components = []
    blocks = []
    for name, value in fields.items():
        array = np.asarray(value, dtype=float)
        if array.shape == grid.shape:
            array = array[np.newaxis]
        if array.shape[1:] != grid.shape:
            raise OutputError(f"{name}: shape {array.shape} does not match grid {grid.shape}")
        components.extend(f"{name}[{i}]" if array.shape[0] > 1 else name for i in range(array.shape[0]))
        blocks.append(array)
    data = np.ascontiguousarray(np.concatenate(blocks, axis=0), dtype=SNAPSHOT_DTYPE)

    binary = stem.with_suffix(".bin")
    sidecar = stem.with_suffix(".json")
    meta = {
        "d": grid.d,
        "n": grid.n,
        "L": list(grid.lengths),
        "gamma": grid.gamma,
        "time": float(time),
        "dtype": SNAPSHOT_DTYPE,
        "order": "C",
        "shape": list(data.shape),
        "components": components,
    }
    try:
        binary.write_bytes(data.tobytes(order="C"))
        sidecar.write_text(json.dumps(meta, sort_keys=True, indent=2), encoding="utf-8")
    except OSError as e:
        raise OutputError(f"{binary}: スナップショットの書き込みに失敗: {e}")
    return {"binary": binary, "sidecar": sidecar}


def read_snapshot(stem: Union[str, Path]) -> tuple:
    stem = Path(stem)
    try:
        meta = json.loads(stem.with_suffix(".json").read_text(encoding="utf-8"))
        raw = stem.with_suffix(".bin").read_bytes()
    except (OSError, json.JSONDecodeError) as e:
        raise OutputError(f"{stem}: スナップショットの読み込みに失敗: {e}")
    data = np.frombuffer(raw, dtype=meta["dtype"]).reshape(meta["shape"])
    return data, meta


def write_outputs(
    out_dir: Union[str, Path],
    summary: Dict[str, Any],
    runs: Optional[Dict[str, List[DiagnosticsRecord]]] = None,
    tables: Optional[Dict[str, List[Dict[str, Any]]]] = None,
    modes: Optional[Dict[str, Sequence[float]]] = None,
) -> Dict[str, str]:
    """Write every artifact of one scenario under ``out_dir``.

    Args:
        out_dir: Target directory (created if missing)
        summary: Summary dict (validated against SummaryModel)
        runs: Diagnostics records per run name, one CSV each under runs/
        tables: Result tables, one CSV each
        modes: Mode wavenumbers recorded per run name

    Returns:
        Mapping artifact name -> path
    """
    out_dir = Path(out_dir)
    _ensure_dir(out_dir)
    written: Dict[str, str] = {}
    for name, records in (runs or {}).items():
        path = write_diagnostics_csv(records, out_dir / "runs" / f"{name}.csv", (modes or {}).get(name, ()))
        written[f"runs/{name}"] = str(path)
    for name, rows in (tables or {}).items():
        written[name] = str(write_table_csv(rows, out_dir / f"{name}.csv"))
    written["summary"] = str(write_summary_json(summary, out_dir / "summary.json"))
    logger.info(f"outputs written: dir={out_dir} files={len(written)}")
    return written
