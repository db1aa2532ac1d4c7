import csv
import io
import json
import logging
import math
import os
import tempfile
from typing import Any, Dict, Iterable, List, Optional, Sequence

from pydantic import ValidationError

from src.config import settings
from src.errors import CurveFormatError
from src.models.fit_models import FitReport
from src.models.sim_models import CurvePoint, PruneCurve

logger = logging.getLogger(__name__)

CURVE_HEADER = ["k", "acc", "wsr", "seed"]
REPORT_HEADER = ["curve", "alpha", "alpha_stderr", "a", "eps_res", "r2", "k_star_theory", "k_best_empirical", "n_points"]
MULTISEED_HEADER = ["curve", "seed", "a", "r2", "wsr_at_k"]
UNITS_FLAG = "# units="
UNITS = ("fraction", "percent")


def format_value(value: Any, digits: Optional[int] = None) -> str:
    digits = digits or settings.FLOAT_DIGITS
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, f".{digits}g")
    return str(value)

def atomic_write_text(path: str, text: str) -> None:
    """Writes UTF-8 text with LF endings via a sibling temp file and os.replace."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
    logger.debug(f"Wrote {path}")

def _render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(value) for value in row])
    return buffer.getvalue()

def write_rows_csv(rows: List[Dict[str, Any]], header: Sequence[str], path: str) -> None:
    atomic_write_text(path, _render_csv(header, ([row.get(column) for column in header] for row in rows)))

def write_json(payload: Any, path: str) -> None:
    atomic_write_text(path, json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n")

def write_curve_csv(curve: PruneCurve, path: str) -> None:
    """Writes fractions with full float precision, rows ordered by (seed, k)."""
    rows = ([p.k, p.acc, p.wsr, p.seed] for p in curve.sorted().points)
    atomic_write_text(path, _render_csv(CURVE_HEADER, rows))

def _parse_float(text: str, column: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise CurveFormatError(f"{column} value '{text}' is not a number", line=line)
    if not math.isfinite(value):
        raise CurveFormatError(f"{column} value '{text}' is not finite", line=line)
    return value

def _parse_seed(text: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise CurveFormatError(f"seed value '{text}' is not an integer", line=line)

def read_curve_csv(path: str, units: Optional[str] = None) -> PruneCurve:
    """
    Parses a `k,acc,wsr,seed` file; the seed column may be omitted (seed 0).

    A leading `# units=percent` line divides acc and wsr by 100. An explicit
    units argument overrides the file's flag.

    Raises:
        CurveFormatError: for a bad header, a malformed row, or an
            out-of-range value, naming the 1-based line number.
    """
    if units is not None and units not in UNITS:
        raise CurveFormatError(f"units must be one of {', '.join(UNITS)}, got '{units}'")

    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            lines = handle.read().splitlines()
    except OSError as e:
        raise CurveFormatError(f"cannot read curve file {path}: {e.strerror}")

    file_units = "fraction"
    header_line = None
    points: List[CurvePoint] = []
    columns: List[str] = []

    for number, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        if text.startswith("#"):
            if header_line is None and text.replace(" ", "").startswith(UNITS_FLAG.replace(" ", "")):
                file_units = text.split("=", 1)[1].strip()
                if file_units not in UNITS:
                    raise CurveFormatError(f"unknown units flag '{file_units}'", line=number)
            continue

        fields = [field.strip() for field in next(csv.reader([text]))]
        if header_line is None:
            if fields not in (CURVE_HEADER, CURVE_HEADER[:3]):
                raise CurveFormatError(f"expected header '{','.join(CURVE_HEADER)}', got '{text}'", line=number)
            header_line = number
            columns = fields
            continue

        if len(fields) != len(columns):
            raise CurveFormatError(f"expected {len(columns)} fields, got {len(fields)}", line=number)

        scale = 100.0 if (units or file_units) == "percent" else 1.0
        k = _parse_float(fields[0], "k", number)
        acc = _parse_float(fields[1], "acc", number) / scale
        wsr = _parse_float(fields[2], "wsr", number) / scale
        seed = _parse_seed(fields[3], number) if len(columns) == 4 else 0

        try:
            points.append(CurvePoint(k=k, acc=acc, wsr=wsr, seed=seed))
        except ValidationError as e:
            detail = e.errors()[0]
            field = ".".join(str(part) for part in detail["loc"])
            raise CurveFormatError(f"{field} out of range ({detail['msg']})", line=number)

    if header_line is None:
        raise CurveFormatError(f"curve file {path} has no header row")

    logger.debug(f"Read {len(points)} points from {path}")
    curve = PruneCurve(points=points, metadata={"path": path, "units": units or file_units})
    return curve.sorted()

def write_fit_reports_csv(reports: List[FitReport], path: str) -> None:
    write_rows_csv([report.csv_row() for report in reports], REPORT_HEADER, path)

def write_multiseed_table(rows: List[Dict[str, Any]], path: str) -> None:
    write_rows_csv(rows, MULTISEED_HEADER, path)
