"""Result tables, output files and console reporting for the TransNN toolkit"""

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .certificates import CertificateReport
from .network_model import Violation

SEPARATOR = "=" * 80

TABLE_FORMATS = ('csv', 'json')


@dataclass
class Table:
    """Labeled matrix: one row per step (or table row), one column per node or series"""
    name: str
    values: np.ndarray
    columns: Optional[Sequence[str]] = None
    index_name: str = 'step'

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.columns is None:
            self.columns = [f"node_{i + 1}" for i in range(self.values.shape[1])]
        self.columns = list(self.columns)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=self.columns)
        frame.index.name = self.index_name
        return frame

    def to_document(self) -> Dict[str, Any]:
        """JSON rendering with the same labels and values as the CSV"""
        return {
            'name': self.name,
            'index_name': self.index_name,
            'columns': self.columns,
            'index': list(range(self.values.shape[0])),
            'data': self.values.tolist(),
        }


@dataclass
class RunResult:
    """Everything one CLI command produced"""
    command: str
    spec_digest: Optional[str]
    tables: Dict[str, Table] = field(default_factory=dict)
    reports: List[CertificateReport] = field(default_factory=list)
    seed: Optional[int] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def add_table(self, name: str, values, columns: Optional[Sequence[str]] = None,
                  index_name: str = 'step') -> Table:
        table = Table(name, values, columns, index_name)
        self.tables[name] = table
        return table

    def manifest(self, files: Sequence[str]) -> Dict[str, Any]:
        return {
            'command': self.command,
            'spec_digest': self.spec_digest,
            'seed': self.seed,
            'tables': list(self.tables),
            'reports': [report.kind for report in self.reports],
            'files': list(files),
            'metadata': self.metadata,
        }


def _dump_json(document: Any) -> str:
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def write_table(table: Table, out_dir: Path, fmt: str = 'csv') -> Path:
    """
    Write one table as <out_dir>/<name>.<fmt>

    Args:
        table: Table to write
        out_dir: Existing output directory
        fmt: 'csv' or 'json'

    Returns:
        Path of the written file
    """
    path = Path(out_dir) / f"{table.name}.{fmt}"
    if fmt == 'csv':
        table.to_frame().to_csv(path, index=True, lineterminator="\n")
    elif fmt == 'json':
        path.write_text(_dump_json(table.to_document()), encoding='utf-8')
    else:
        raise ValueError(f"unknown table format '{fmt}'")
    return path


def write_tables(result: RunResult, out_dir: Path, fmt: str = 'csv') -> List[Path]:
    return [write_table(table, out_dir, fmt) for table in result.tables.values()]


def write_report(reports: Sequence[CertificateReport], out_dir: Path) -> Path:
    """Write certificate reports to <out_dir>/report.json"""
    path = Path(out_dir) / "report.json"
    path.write_text(_dump_json([report.to_dict() for report in reports]), encoding='utf-8')
    return path


def write_json(document: Any, path: Path) -> Path:
    path = Path(path)
    path.write_text(_dump_json(document), encoding='utf-8')
    return path


def write_manifest(result: RunResult, out_dir: Path, files: Sequence[Path]) -> Path:
    """Write <out_dir>/run.json listing what the run produced (file names only)"""
    names = sorted(Path(f).name for f in files)
    return write_json(result.manifest(names), Path(out_dir) / "run.json")


def print_run_header(command: str, spec_label: str, spec_digest: Optional[str], out_dir: Path) -> None:
    """Print header for a command run"""
    print(f"\nRunning '{command}' on {spec_label}")
    if spec_digest:
        print(f"Spec digest: {spec_digest}")
    print(f"Output directory: {out_dir}")
    print(SEPARATOR)
    print()


def print_violations(violations: Sequence[Violation]) -> None:
    """
    Print validation failures

    Args:
        violations: Violations returned by validate()
    """
    print(f"✗ Specification failed validation with {len(violations)} violation(s):", file=sys.stderr)
    for violation in violations:
        print(f"  - [{violation.code}] {violation}", file=sys.stderr)


def print_certificate(report: CertificateReport) -> None:
    marker = "✓" if report.holds else "✗"
    print(f"  {marker} {report}")


def print_file_written(path: Path) -> None:
    print(f"  ✓ Wrote {Path(path).name}")


def print_run_summary(result: RunResult, files: Sequence[Path], errors: List[str]) -> None:
    """
    Print final summary after a command

    Args:
        result: RunResult of the command
        files: Paths written
        errors: Formatted error strings from the error tracker
    """
    print()
    print(SEPARATOR)
    print("Run Summary:")
    print(f"  Command: {result.command}")
    if result.seed is not None:
        print(f"  Seed: {result.seed}")
    print(f"  Tables written: {len(result.tables)}")
    if result.reports:
        held = sum(1 for report in result.reports if report.holds)
        print(f"  Certificates holding: {held}/{len(result.reports)}")
    print(f"  Files: {len(files)}")

    if errors:
        print()
        print("Detailed error log:")
        for error in errors:
            print(f"  - {error}")

    print()
    if errors:
        print(f"⚠ Completed with {len(errors)} warning(s). Review the log above.")
    else:
        print("✓ Done")


def print_error(message: str) -> None:
    """Print an error message to stderr"""
    print(f"✗ Error: {message}", file=sys.stderr)


def print_warning(message: str) -> None:
    """Print a warning message"""
    print(f"⚠ Warning: {message}")


def print_info(message: str) -> None:
    """Print an informational message"""
    print(f"ℹ {message}")
