"""Run reports: ordered sections of rows, emitted as fixed-width text or sorted key=value lines."""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, Union

import pandas as pd

logger = logging.getLogger(__name__)

Format = Literal["text", "keyvalue"]
FILE_NAMES = {"text": "report.txt", "keyvalue": "report.kv"}


@dataclass
class RunReport:
    subcommand: str
    sections: dict[str, list[dict[str, Any]]] = field(default_factory=dict)
    artifacts: list[str] = field(default_factory=list)

    def add(self, section: str, row: dict[str, Any]) -> None:
        self.sections.setdefault(section, []).append(row)

    def extend(self, section: str, rows: list[dict[str, Any]]) -> None:
        for row in rows:
            self.add(section, row)


def _text_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.6g}"
    if value is None:
        return "NA"
    return str(value)


def _kv_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    if value is None:
        return "NA"
    return str(value)


def render_text(report: RunReport) -> str:
    blocks = [f"netharvest {report.subcommand}"]
    for name, rows in report.sections.items():
        if not rows:
            continue
        frame = pd.DataFrame(rows).map(_text_cell)
        blocks.append(f"[{name}]\n{frame.to_string(index=False)}")
    if report.artifacts:
        blocks.append("[artifacts]\n" + "\n".join(report.artifacts))
    return "\n\n".join(blocks) + "\n"


def render_keyvalue(report: RunReport) -> str:
    pairs = {}
    for name, rows in report.sections.items():
        for index, row in enumerate(rows):
            key = row.get("name", index)
            for column, value in row.items():
                if column == "name":
                    continue
                pairs[f"{name}.{key}.{column}"] = _kv_value(value)
    for index, artifact in enumerate(report.artifacts):
        pairs[f"artifacts.{index}"] = artifact
    return "".join(f"{key}={pairs[key]}\n" for key in sorted(pairs))


def emit_report(report: RunReport, out_dir: Union[str, Path], fmt: Format = "text") -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / FILE_NAMES[fmt]
    text = render_text(report) if fmt == "text" else render_keyvalue(report)
    path.write_text(text, encoding="utf-8")
    logger.info("Wrote %s report %s", fmt, path)
    return path
