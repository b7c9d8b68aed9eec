"""
CSV and sidecar metadata emission.
"""

import logging
import sys
from pathlib import Path
from typing import Any, Mapping, Optional

import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def write_csv(frame: pd.DataFrame, path: Optional[Path]) -> None:
    """
    Writes a report as CSV with 17 significant digits and LF line endings.

    Args:
        frame: Report table; column order is the header order
        path: Output file, or None for stdout
    """
    if path is None:
        frame.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return

    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote {len(frame)} rows to {path}")


def metadata_path(path: Path) -> Path:
    return Path(f"{path}.meta")


def write_metadata(path: Optional[Path], metadata: Mapping[str, Any]) -> Optional[Path]:
    """
    Writes `<path>.meta` as sorted key=value lines. Nothing is written for stdout output.

    Returns:
        Optional[Path]: Path of the sidecar, if any
    """
    if path is None:
        logger.debug("No output file; metadata sidecar skipped")
        return None

    sidecar = metadata_path(Path(path))
    lines = [f"{key}={_flatten(value)}" for key, value in sorted(metadata.items())]
    sidecar.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return sidecar


def _flatten(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return ",".join(_flatten(v) for v in value)
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    return str(value).replace("\n", " ")
