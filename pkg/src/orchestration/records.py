"""
测量记录 CSV 持久化

列顺序：host, config_id, <维度列>, iteration, status, reason, joules, runtime_s,
get, post, put, delete, errors, started_at；未知附加列读取时保留
"""

import os
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import pandas as pd
import structlog
from pydantic import ValidationError

from ..core.exceptions import RecordFormatError
from ..models.measurement_models import MeasurementRecord, RunStatus
from ..models.workload_models import HttpMethod

logger = structlog.get_logger(__name__)

LEADING_COLUMNS = ["host", "config_id"]
TRAILING_COLUMNS = [
    "iteration", "status", "reason", "joules", "runtime_s",
    "get", "post", "put", "delete", "errors", "started_at",
]
COUNT_COLUMNS = {method: method.value.lower() for method in HttpMethod}


def header_for(dimensions: Sequence[str], extra: Sequence[str] = ()) -> List[str]:
    return LEADING_COLUMNS + list(dimensions) + TRAILING_COLUMNS + list(extra)


def _format_float(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def record_to_row(record: MeasurementRecord) -> Dict[str, str]:
    """记录 → 字符串字段（浮点数用 repr 保证无损）"""
    row = {
        "host": record.host,
        "config_id": record.config_id,
        **record.assignments,
        "iteration": str(record.iteration),
        "status": record.status.value,
        "reason": record.reason or "",
        "joules": _format_float(record.joules),
        "runtime_s": _format_float(record.runtime_s),
        "errors": str(record.error_count),
        "started_at": record.started_at.isoformat(),
    }
    for method, column in COUNT_COLUMNS.items():
        row[column] = str(record.counts.get(method, 0))
    row.update(record.extra)
    return row


def existing_header(path: Path) -> Optional[List[str]]:
    if not path.exists() or path.stat().st_size == 0:
        return None
    return list(pd.read_csv(path, nrows=0).columns)


def persist_record(record: MeasurementRecord, path: Union[str, Path], dimensions: Sequence[str]) -> None:
    """
    追加一条记录并 fsync

    已有文件按其表头顺序写入；新文件先写表头

    Raises:
        RecordFormatError: 记录含有已有表头中没有的列
    """
    path = Path(path)
    row = record_to_row(record)
    header = existing_header(path)
    write_header = header is None
    if header is None:
        header = header_for(dimensions, sorted(record.extra))

    unknown = set(row) - set(header)
    if unknown:
        raise RecordFormatError(
            f"record has columns missing from the file header: {sorted(unknown)}", path=str(path)
        )

    frame = pd.DataFrame([[row.get(column, "") for column in header]], columns=header)
    with path.open("a", newline="", encoding="utf-8") as handle:
        frame.to_csv(handle, header=write_header, index=False)
        handle.flush()
        os.fsync(handle.fileno())


def _parse_float(value: str, column: str, row: int) -> Optional[float]:
    if value == "":
        return None
    try:
        return float(value)
    except ValueError:
        raise RecordFormatError(f"{column} is not a number: {value!r}", row=row)


def _parse_int(value: str, column: str, row: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise RecordFormatError(f"{column} is not an integer: {value!r}", row=row)


def load_records(path: Union[str, Path]) -> List[MeasurementRecord]:
    """
    读取测量 CSV

    维度列为 config_id 与 iteration 之间的列；其余未知列进入 extra

    Raises:
        RecordFormatError: 缺少必需列或某行格式错误（带行号，1 起始的数据行）
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError as e:
        raise RecordFormatError(f"measurement file not found: {path}", path=str(path)) from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise RecordFormatError(f"cannot parse measurement file: {e}", path=str(path)) from e

    columns = list(frame.columns)
    missing = [c for c in LEADING_COLUMNS + TRAILING_COLUMNS if c not in columns]
    if missing:
        raise RecordFormatError(f"missing columns: {missing}", path=str(path))
    dimensions = columns[columns.index("config_id") + 1:columns.index("iteration")]
    known = set(LEADING_COLUMNS + TRAILING_COLUMNS + dimensions)
    extra_columns = [c for c in columns if c not in known]

    records = []
    for index, values in enumerate(frame.to_dict(orient="records"), start=1):
        try:
            status = RunStatus(values["status"])
        except ValueError:
            raise RecordFormatError(f"unknown status {values['status']!r}", row=index, path=str(path))
        try:
            records.append(MeasurementRecord(
                host=values["host"],
                config_id=values["config_id"],
                assignments={d: values[d] for d in dimensions},
                iteration=_parse_int(values["iteration"], "iteration", index),
                status=status,
                reason=values["reason"] or None,
                joules=_parse_float(values["joules"], "joules", index),
                runtime_s=_parse_float(values["runtime_s"], "runtime_s", index),
                counts={m: _parse_int(values[c] or "0", c, index) for m, c in COUNT_COLUMNS.items()},
                error_count=_parse_int(values["errors"] or "0", "errors", index),
                started_at=datetime.fromisoformat(values["started_at"]),
                extra={c: values[c] for c in extra_columns},
            ))
        except ValidationError as e:
            problems = "; ".join(err["msg"] for err in e.errors())
            raise RecordFormatError(problems, row=index, path=str(path))
        except ValueError as e:
            raise RecordFormatError(str(e), row=index, path=str(path))
    return records
