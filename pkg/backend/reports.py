"""
Structured text reports
Matrices row-major with 17 significant digits, pandas tables, and a sorted
`key = value` section for scripts
"""

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel

from field_theory import EvalResult

logger = logging.getLogger(__name__)

DIGITS = 17


def format_number(value: float) -> str:
    return f"{float(value):.{DIGITS}g}"


def format_matrix(M: np.ndarray, indent: str = "  ") -> List[str]:
    """One line per row, entries separated by two spaces"""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return [indent + "  ".join(format_number(v) for v in row) for row in M]


def render_table(rows: Sequence, columns: Optional[Sequence[str]] = None,
                 labels: Optional[Dict[str, str]] = None) -> str:
    """pandas rendering of pydantic models or dicts; floats in scientific notation"""
    records = [row.model_dump() if isinstance(row, BaseModel) else dict(row) for row in rows]
    if not records:
        return "(empty)"
    df = pd.DataFrame(records)
    if columns is not None:
        df = df[list(columns)]
    display = df.copy()
    for column in display.columns:
        if pd.api.types.is_float_dtype(display[column]):
            display[column] = display[column].apply(lambda x: f"{x:.3e}")
        elif pd.api.types.is_bool_dtype(display[column]):
            display[column] = display[column].map({True: "PASS", False: "FAIL"})
    if labels:
        display = display.rename(columns=labels)
    return display.to_string(index=False)


class Report:
    """Accumulates sections and renders them in insertion order"""

    def __init__(self, title: str):
        self.title = title
        self.sections: List[str] = []
        self.values: Dict[str, str] = {}

    def add_text(self, heading: str, lines: Iterable[str]) -> "Report":
        self.sections.append("\n".join([f"== {heading} =="] + list(lines)))
        return self

    def add_matrix(self, heading: str, M: np.ndarray) -> "Report":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return self.add_text(f"{heading} [{M.shape[0]} x {M.shape[1]}]", format_matrix(M))

    def add_table(self, heading: str, rows: Sequence, columns: Optional[Sequence[str]] = None,
                  labels: Optional[Dict[str, str]] = None) -> "Report":
        return self.add_text(heading, render_table(rows, columns, labels).splitlines())

    def add_evaluation(self, heading: str, result: EvalResult) -> "Report":
        lines = [
            f"domain: {' (x) '.join(result.domain) or 'R'}",
            f"codomain: {' (x) '.join(result.codomain) or 'R'}",
        ]
        for s, value in zip(result.fibers, result.values):
            lines.append(f"s = {format_number(s)}  shape {value.shape[0]} x {value.shape[1]}")
            lines.extend(format_matrix(value))
        return self.add_text(heading, lines)

    def set(self, key: str, value) -> "Report":
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, (float, np.floating)):
            text = format_number(value)
        else:
            text = str(value)
        self.values[key] = text
        return self

    def render(self) -> str:
        parts = [f"# {self.title}"] + self.sections
        if self.values:
            parts.append("\n".join(["== values =="] + [f"{k} = {self.values[k]}" for k in sorted(self.values)]))
        return "\n\n".join(parts) + "\n"

    def write(self, path: Optional[str] = None) -> str:
        text = self.render()
        if path:
            Path(path).write_text(text, encoding="utf-8")
            logger.info(f"report written to {path}")
        return text
