"""
Reading and writing actor-event incidence files and heir-label sidecars.

Incidence format: UTF-8 delimited text, first row = event labels (its first
cell is ignored), first column = actor labels, cells "0"/"1".
Label sidecar: one 1-based heir index per line, aligned with actor rows.
"""
import hashlib
import logging
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from backend.models.entities import IncidenceMatrix
from backend.models.errors import DataFormatError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def file_digest(path: PathLike) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _duplicate(labels: pd.Index) -> Union[str, None]:
    dup = labels[labels.duplicated()]
    return str(dup[0]) if len(dup) else None


def read_incidence(path: PathLike, delimiter: str = ",") -> IncidenceMatrix:
    """Parse and validate an incidence file"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Incidence file not found: {path}")
    try:
        raw = pd.read_csv(
            path, sep=delimiter, header=None, dtype=str, keep_default_na=False,
            skip_blank_lines=True, encoding="utf-8",
        )
    except pd.errors.ParserError as e:
        raise DataFormatError(f"Ragged row: {e}") from e
    except pd.errors.EmptyDataError as e:
        raise DataFormatError("Incidence file is empty") from e

    if raw.shape[0] < 2 or raw.shape[1] < 2:
        raise DataFormatError(f"Need a header row, a label column and at least one cell, got shape {raw.shape}")

    event_labels = pd.Index(raw.iloc[0, 1:].str.strip())
    actor_labels = pd.Index(raw.iloc[1:, 0].str.strip())
    if (dup := _duplicate(event_labels)) is not None:
        raise DataFormatError(f"Duplicate event label '{dup}'", line=1)
    if (dup := _duplicate(actor_labels)) is not None:
        row = int(np.flatnonzero(actor_labels == dup)[1]) + 2
        raise DataFormatError(f"Duplicate actor label '{dup}'", line=row, column=1)

    cells = raw.iloc[1:, 1:].apply(lambda col: col.str.strip())
    bad = ~cells.isin(["0", "1"]).to_numpy()
    if bad.any():
        i, j = np.argwhere(bad)[0]
        value = cells.iat[i, j]
        if pd.isna(value) or value == "":
            raise DataFormatError("Ragged row: missing cell", line=int(i) + 2, column=int(j) + 2)
        raise DataFormatError(f"Non-binary cell '{value}'", line=int(i) + 2, column=int(j) + 2)

    y = cells.to_numpy().astype(np.int8)
    logger.info(f"Read incidence matrix {y.shape[0]}x{y.shape[1]} from {path}")
    return IncidenceMatrix(y=y, actor_labels=list(actor_labels), event_labels=list(event_labels))


def write_incidence(data: IncidenceMatrix, path: PathLike, delimiter: str = ",") -> None:
    frame = pd.DataFrame(data.y, index=pd.Index(data.actor_labels, name="actor"), columns=data.event_labels)
    frame.to_csv(path, sep=delimiter, encoding="utf-8")


def read_labels(path: PathLike) -> np.ndarray:
    """Heir codes (0-based) from a sidecar of 1-based heir indices"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Label file not found: {path}")
    codes = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        text = line.strip()
        if not text:
            continue
        try:
            h = int(text)
        except ValueError as e:
            raise DataFormatError(f"Heir index '{text}' is not an integer", line=line_no, column=1) from e
        if h < 1:
            raise DataFormatError(f"Heir index {h} must be >= 1", line=line_no, column=1)
        codes.append(h - 1)
    return np.asarray(codes, dtype=np.int64)


def write_labels(codes: np.ndarray, path: PathLike) -> None:
    Path(path).write_text("".join(f"{int(c) + 1}\n" for c in codes), encoding="utf-8")
