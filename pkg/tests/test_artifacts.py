"""artifacts 단위 테스트"""

import json

import numpy as np
import openpyxl
import pytest

from src import __version__
from src.core.artifacts import (
    ArtifactError,
    ArtifactSet,
    artifact_name,
    format_value,
    read_csv,
    render_report,
    write_csv,
    write_json,
    write_workbook,
)


class TestFormatting:
    """셀 형식 테스트"""

    def test_values(self):
        """실수 17자리, 논리값, 빈 값, 따옴표"""
        assert format_value(0.1) == "0.10000000000000001"
        assert format_value(np.float64(2.0)) == "2"
        assert format_value(True) == "true"
        assert format_value(np.bool_(False)) == "false"
        assert format_value(None) == ""
        assert format_value(float("inf")) == "inf"
        assert format_value('a,"b"') == '"a,""b"""'

    def test_names(self):
        """<subcommand>-<hash>.<ext>, oracle 은 해시 없음"""
        assert artifact_name("spectrum", "abc123", "csv") == "spectrum-abc123.csv"
        assert artifact_name("oracle", "abc123", "json") == "oracle.json"


class TestCsv:
    """CSV 테스트"""

    def test_header_lines(self, tmp_path):
        """'#' 머리줄 3개 다음 헤더, LF 줄바꿈"""
        path = write_csv(tmp_path / "a.csv", "bs", "abc", ["k", "level"], [[1, 1], [2, 2]])
        raw = path.read_bytes()
        assert b"\r" not in raw
        lines = raw.decode("utf-8").split("\n")
        assert lines[0] == f"# collapse-lab {__version__}"
        assert lines[1] == "# subcommand=bs"
        assert lines[2] == "# config=abc"
        assert lines[3] == "k,level"

    def test_read_back(self, tmp_path):
        """read_csv 로 메타/헤더/행 복원"""
        path = write_csv(tmp_path / "a.csv", "spectrum", "h1", ["i", "v"], [[0, 0.5]])
        table = read_csv(path)
        assert table["meta"] == {"version": __version__, "subcommand": "spectrum", "config": "h1"}
        assert table["header"] == ["i", "v"]
        assert table["rows"] == [["0", "0.5"]]

    def test_deterministic(self, tmp_path):
        """같은 입력은 같은 바이트"""
        rows = [[i, i / 3.0, i % 2 == 0] for i in range(5)]
        a = write_csv(tmp_path / "a.csv", "x", "h", ["i", "v", "even"], rows).read_bytes()
        b = write_csv(tmp_path / "b.csv", "x", "h", ["i", "v", "even"], rows).read_bytes()
        assert a == b

    def test_row_width(self, tmp_path):
        """행 길이 불일치"""
        with pytest.raises(ArtifactError):
            write_csv(tmp_path / "a.csv", "x", "h", ["a", "b"], [[1]])


class TestJsonAndWorkbook:
    """JSON / 엑셀 테스트"""

    def test_json(self, tmp_path):
        """numpy 값 변환과 config_hash 추가"""
        path = write_json(tmp_path / "a.json", {"values": np.array([1.0, 2.0]), "z": 1 + 2j, "n": np.int64(3)}, "h")
        data = json.loads(path.read_text(encoding="utf-8"))
        assert data == {"values": [1.0, 2.0], "z": [1.0, 2.0], "n": 3, "config_hash": "h"}

    def test_workbook(self, tmp_path):
        """표마다 시트, 굵은 헤더, meta 시트"""
        path = write_workbook(tmp_path / "a.xlsx", {"sweep": {"header": ["s", "k"], "rows": [[0.1, 1]]}}, "h")
        wb = openpyxl.load_workbook(path)
        assert wb.sheetnames == ["sweep", "meta"]
        ws = wb["sweep"]
        assert ws["A1"].value == "s"
        assert ws["A1"].font.bold
        assert ws["B2"].value == 1
        assert wb["meta"]["B2"].value == "h"


class TestReport:
    """보고서 테스트"""

    def test_custom_template(self, tmp_path):
        """Jinja2 템플릿 렌더링"""
        template = tmp_path / "t.md.j2"
        template.write_text("v={{ version }} n={{ items|length }}", encoding="utf-8")
        path = render_report(tmp_path / "r.md", {"items": [1, 2]}, template)
        assert path.read_text(encoding="utf-8") == f"v={__version__} n=2"

    def test_missing_template(self, tmp_path):
        """템플릿 없음"""
        with pytest.raises(ArtifactError):
            render_report(tmp_path / "r.md", {}, tmp_path / "none.j2")

    def test_builtin_template(self, tmp_path):
        """기본 템플릿의 스펙트럼 절"""
        context = {
            "config": {"model": {"kind": "limit", "s": 0.1, "k": 1, "m": 1}, "output": {"seed": 1}},
            "config_hash": "h",
            "sections": {"spectrum": {"threshold": 0.5, "count_below": 1, "eigenvalues": [0.0, 2.0]}},
        }
        text = render_report(tmp_path / "r.md", context).read_text(encoding="utf-8")
        assert "**1**" in text
        assert "| 1 | 2 |" in text


class TestArtifactSet:
    """ArtifactSet 테스트"""

    def test_format_gating(self, tmp_path):
        """formats 에 없는 형식은 쓰지 않음 (force 제외)"""
        out = ArtifactSet(tmp_path, "bs", "h", formats=("csv",))
        assert out.json({"a": 1}) is None
        assert out.workbook({"t": {"header": ["a"], "rows": []}}) is None
        assert out.json({"a": 1}, force=True) == tmp_path / "bs-h.json"
        assert out.csv(["a"], [[1]]) == tmp_path / "bs-h.csv"
        assert out.written == [tmp_path / "bs-h.json", tmp_path / "bs-h.csv"]

    def test_jsonl(self, tmp_path):
        """JSON lines: 머리 기록 다음 한 줄에 한 기록"""
        out = ArtifactSet(tmp_path, "sweep", "h", formats=("jsonl",))
        path = out.jsonl([{"s": 0.1}, {"s": 0.2}])
        head, *lines = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]
        assert head == {"collapse_lab": __version__, "subcommand": "sweep", "config_hash": "h"}
        assert [record["s"] for record in lines] == [0.1, 0.2]

    def test_jsonl_gating(self, tmp_path):
        """formats 에 jsonl 이 없으면 쓰지 않음"""
        out = ArtifactSet(tmp_path, "sweep", "h")
        assert out.jsonl([{"s": 0.1}]) is None
        assert list(tmp_path.iterdir()) == []

    def test_discard(self, tmp_path):
        """쓴 산출물 삭제, 다른 파일은 유지"""
        other = tmp_path / "keep.txt"
        other.write_text("x", encoding="utf-8")
        out = ArtifactSet(tmp_path, "gh", "h")
        csv_path = out.csv(["a"], [[1]])
        json_path = out.json({"a": 1})
        assert out.discard() == [csv_path, json_path]
        assert out.written == []
        assert sorted(p.name for p in tmp_path.iterdir()) == ["keep.txt"]
