"""
Comma-separated reports with a `#`-prefixed metadata header.
"""
# imports from built-in packages
import csv
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

# imports from external packages (in requirements.txt)
import numpy as np

# imports from same project
from constants import (
    ALPHA_RULE,
    INVERSION_POLICY,
    LATTICE_OFFSET_CONVENTION,
    LEGENDRE_RULE,
    PRUNE_STRATEGY_NOTE,
    SAMPLING_PERIODIC,
    SAMPLING_PLAIN,
    TOOL_VERSION,
)
from experiment_config import ExperimentConfig
from solver import REPRESENTATIONS

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReportRow:
    """
    One reported level of one representation at one sweep point.

    Rows for skipped points (empty masks, failed solves) leave level and the
    numeric columns empty and say why in `flags`.
    """
    experiment_id: str
    representation: str
    n: int
    nx: Optional[int] = None
    np: Optional[int] = None
    prune_parameter: Optional[float] = None
    retained: Optional[int] = None
    fraction: Optional[float] = None
    cond_s: Optional[float] = None
    level: Optional[int] = None
    eigenvalue: Optional[float] = None
    reference: Optional[float] = None
    reference_kind: str = ""
    abs_error: Optional[float] = None
    direct_deviation: Optional[float] = None
    flags: Tuple[str, ...] = field(default_factory=tuple)

    def sort_key(self) -> tuple:
        rep_order = REPRESENTATIONS.index(self.representation) if self.representation in REPRESENTATIONS else len(REPRESENTATIONS)
        prune = float("-inf") if self.prune_parameter is None else self.prune_parameter
        level = -1 if self.level is None else self.level
        return (self.experiment_id, self.n, prune, rep_order, self.representation, level)


REPORT_COLUMNS = [f.name for f in fields(ReportRow)]


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (tuple, list)):
        return ";".join(sorted(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def header_lines(config: ExperimentConfig, command: str, heuristic: bool) -> List[str]:
    """Metadata block written above every table, without the `#` prefix."""
    lines = [
        f"tool_version={TOOL_VERSION}",
        f"command={command}",
        f"experiment_id={config.experiment_id}",
        f"lattice_offset={LATTICE_OFFSET_CONVENTION}",
        f"sampling={SAMPLING_PLAIN if heuristic else SAMPLING_PERIODIC}",
        f"alpha_rule={ALPHA_RULE}",
        f"prune_strategy={config.prune_strategy} ({PRUNE_STRATEGY_NOTE})",
        f"inversion_policy={INVERSION_POLICY}",
        f"legendre_rule={LEGENDRE_RULE}",
        f"heuristic_lattice={'true' if heuristic else 'false'}",
    ]
    if config.echo_config:
        lines.append("config:")
        lines.extend(f"  {line}" for line in config.echo_lines())
    return lines


def write_table(path: Path, header: Sequence[str], columns: Sequence[str], records: Iterable[dict]) -> Path:
    """
    Writes `# header` lines followed by a CSV table.

    Args:
        path (Path): Output file; parent directories are created.
        header (Sequence[str]): Metadata lines.
        columns (Sequence[str]): Column names.
        records (Iterable[dict]): Rows keyed by column name.

    Returns:
        Path: The written file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        for line in header:
            f.write(f"# {line}\n")
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for record in records:
            writer.writerow({key: _format_cell(value) for key, value in record.items()})
    logger.info(f"Wrote {path}")
    return path


def write_report(path: Path, rows: Iterable[ReportRow], header: Sequence[str]) -> Path:
    """Writes report rows sorted by (experiment, N, prune parameter, representation, level)."""
    ordered = sorted(rows, key=ReportRow.sort_key)
    return write_table(path, header, REPORT_COLUMNS, (asdict(row) for row in ordered))


def read_report(path: Path) -> Tuple[List[str], List[dict]]:
    """
    Reads a report back as (header lines, rows of strings).

    Used by tests and by downstream plotting scripts that want the metadata.
    """
    header: List[str] = []
    body: List[str] = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.startswith("# ") and not body:
                header.append(line[2:].rstrip("\n"))
            else:
                body.append(line)
    return header, list(csv.DictReader(body))
