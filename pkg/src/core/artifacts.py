"""산출물 모듈

CSV / JSON / JSON lines / 엑셀 / 이진 거리 행렬 / 마크다운 보고서를 씁니다.
같은 설정과 시드에서 CSV 는 바이트 단위로 동일합니다.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import openpyxl
from jinja2 import Template as Jinja2Template
from openpyxl.styles import Font

from src import __version__
from src.core.logger import get_logger

logger = get_logger("artifacts")

TEMPLATE_DIR = Path(__file__).parent.parent.parent / "templates"
REPORT_TEMPLATE = "report.md.j2"


class ArtifactError(Exception):
    """산출물 쓰기 에러"""

    pass


def artifact_name(subcommand: str, config_hash: str, ext: str) -> str:
    """<subcommand>-<hash>.<ext> (oracle 은 oracle.json)"""
    if subcommand == "oracle":
        return f"oracle.{ext}"
    return f"{subcommand}-{config_hash}.{ext}"


def format_value(value: Any) -> str:
    """CSV 셀 문자열 (실수는 유효숫자 17자리)"""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    text = str(value)
    if any(c in text for c in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        return x if math.isfinite(x) else str(x)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, Path):
        return str(value)
    return value


def write_csv(
    path: Path,
    subcommand: str,
    config_hash: str,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
) -> Path:
    """'#' 주석 머리줄 3개 + 헤더 + 행 (쉼표, LF)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"# collapse-lab {__version__}",
        f"# subcommand={subcommand}",
        f"# config={config_hash}",
        ",".join(header),
    ]
    width = len(header)
    for row in rows:
        if len(row) != width:
            raise ArtifactError(f"행 길이 {len(row)} 가 헤더 길이 {width} 와 다릅니다")
        lines.append(",".join(format_value(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    logger.debug(f"CSV 저장: {path.name} ({len(lines) - 4}행)")
    return path


def read_csv(path: Path) -> Dict[str, Any]:
    """write_csv 결과 읽기 (머리 주석, 헤더, 문자열 행)"""
    meta: Dict[str, str] = {}
    header: List[str] = []
    rows: List[List[str]] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, value = body.split("=", 1)
                meta[key] = value
            else:
                meta["version"] = body.split()[-1]
        elif not header:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return {"meta": meta, "header": header, "rows": rows}


def write_json(path: Path, payload: Dict[str, Any], config_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = dict(_jsonable(payload))
    data["config_hash"] = config_hash
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    logger.debug(f"JSON 저장: {path.name}")
    return path


def write_jsonl(path: Path, records: Iterable[Dict[str, Any]], subcommand: str, config_hash: str) -> Path:
    """JSON lines: 첫 줄은 머리 기록 {"collapse_lab", "subcommand", "config_hash"}"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    head = {"collapse_lab": __version__, "subcommand": subcommand, "config_hash": config_hash}
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(head, ensure_ascii=False, sort_keys=True) + "\n")
        for record in records:
            f.write(json.dumps(_jsonable(record), ensure_ascii=False, sort_keys=True) + "\n")
    return path


def write_workbook(path: Path, tables: Dict[str, Dict[str, Any]], config_hash: str) -> Path:
    """표마다 시트 하나 ({"header": [...], "rows": [...]})"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    wb = openpyxl.Workbook()
    wb.remove(wb.active)
    for name, table in tables.items():
        ws = wb.create_sheet(title=name[:31])
        ws.append(list(table["header"]))
        for cell in ws[1]:
            cell.font = Font(bold=True)
        for row in table["rows"]:
            ws.append([_jsonable(v) if not isinstance(v, str) else v for v in row])
    info = wb.create_sheet(title="meta")
    info.append(["collapse-lab", __version__])
    info.append(["config_hash", config_hash])
    wb.save(path)
    logger.debug(f"엑셀 저장: {path.name} (시트 {len(tables)}개)")
    return path


def render_report(
    path: Path,
    context: Dict[str, Any],
    template_path: Optional[Path] = None,
) -> Path:
    """Jinja2 마크다운 보고서"""
    template_path = Path(template_path or TEMPLATE_DIR / REPORT_TEMPLATE)
    if not template_path.exists():
        raise ArtifactError(f"보고서 템플릿을 찾을 수 없습니다: {template_path}")
    template = Jinja2Template(template_path.read_text(encoding="utf-8"), trim_blocks=True, lstrip_blocks=True)
    text = template.render(version=__version__, **_jsonable(context))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info(f"보고서 생성: {path.name}")
    return path


@dataclass
class ArtifactSet:
    """한 실행에서 쓴 산출물 목록"""

    out_dir: Path
    subcommand: str
    config_hash: str
    formats: Sequence[str] = ("csv", "json")
    written: List[Path] = field(default_factory=list)

    def path(self, ext: str, stem: Optional[str] = None) -> Path:
        return Path(self.out_dir) / artifact_name(stem or self.subcommand, self.config_hash, ext)

    def csv(self, header: Sequence[str], rows: Iterable[Sequence[Any]], stem: Optional[str] = None) -> Optional[Path]:
        if "csv" not in self.formats:
            return None
        path = write_csv(self.path("csv", stem), self.subcommand, self.config_hash, header, rows)
        self.written.append(path)
        return path

    def json(self, payload: Dict[str, Any], stem: Optional[str] = None, force: bool = False) -> Optional[Path]:
        if "json" not in self.formats and not force:
            return None
        path = write_json(self.path("json", stem), payload, self.config_hash)
        self.written.append(path)
        return path

    def jsonl(self, records: Iterable[Dict[str, Any]]) -> Optional[Path]:
        if "jsonl" not in self.formats:
            return None
        path = write_jsonl(self.path("jsonl"), records, self.subcommand, self.config_hash)
        self.written.append(path)
        return path

    def workbook(self, tables: Dict[str, Dict[str, Any]]) -> Optional[Path]:
        if "xlsx" not in self.formats:
            return None
        path = write_workbook(self.path("xlsx"), tables, self.config_hash)
        self.written.append(path)
        return path

    def report(self, context: Dict[str, Any], force: bool = False) -> Optional[Path]:
        if "report" not in self.formats and not force:
            return None
        path = render_report(self.path("md", "report"), context)
        self.written.append(path)
        return path

    def discard(self) -> List[Path]:
        """실패한 실행이 남긴 산출물 삭제"""
        removed = []
        for path in self.written:
            if Path(path).exists():
                Path(path).unlink()
                removed.append(Path(path))
        self.written.clear()
        if removed:
            logger.warning(f"부분 산출물 {len(removed)}개 삭제")
        return removed
