import hashlib
import json
import logging
import os
import re
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Tuple, Union

import pandas as pd

logger = logging.getLogger(__name__)

MONTH_PATTERN = re.compile(r"^(\d{4})-(\d{2})$")


def parse_month(text: str) -> int:
    """
    Convert a `YYYY-MM` code to an integer month index (year * 12 + month - 1).
    """
    match = MONTH_PATTERN.match(text.strip())
    if not match:
        raise ValueError(f"month must look like YYYY-MM, got {text!r}")
    year, month = int(match.group(1)), int(match.group(2))
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range in {text!r}")
    return year * 12 + month - 1


def format_month(index: int) -> str:
    year, month = divmod(index, 12)
    return f"{year:04d}-{month + 1:02d}"


def file_digest(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format="%.12g", lineterminator="\n")


def to_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n"


def write_outputs(output_dir: Path, files: Iterable[Tuple[str, str]]) -> Dict[str, Path]:
    """
    Write rendered outputs as one set.

    Files are staged in a hidden directory and moved into `output_dir` only
    after every one of them was written. The last file is moved last and any
    older copy of it is removed first, so its presence marks a complete set
    (`finish` puts the manifest there).
    """
    files = list(files)
    output_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    with tempfile.TemporaryDirectory(dir=output_dir, prefix=".staging-") as staging:
        for name, text in files:
            with open(Path(staging) / name, "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
        if files:
            (output_dir / files[-1][0]).unlink(missing_ok=True)
        for name, _ in files:
            target = output_dir / name
            os.replace(Path(staging) / name, target)
            written[name] = target
            logger.debug(f"wrote {target}")
    return written


def parse_float_list(text: str) -> list:
    return [float(part) for part in text.split(",") if part.strip()]


def frame_to_json(frame: pd.DataFrame) -> str:
    return frame.to_json(orient="records", double_precision=12, indent=2) + "\n"


def slug(label: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", label.lower()).strip("_")
