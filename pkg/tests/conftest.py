"""pytest fixtures for Collapse Lab tests"""

import logging
import os
import tempfile
from pathlib import Path

# 로거가 처음 쓰이기 전에 로그 디렉토리를 임시 위치로 돌림
os.environ.setdefault("COLLAPSE_LAB_LOG_DIR", tempfile.mkdtemp(prefix="collapse_lab_logs_"))

import pytest  # noqa: E402

from src.core.geometry import ModelParams  # noqa: E402
from src.core.harmonic import HarmonicShift  # noqa: E402
from src.core.logger import get_logger  # noqa: E402
from src.core.ooguri_vafa import OVParams  # noqa: E402


@pytest.fixture
def abelian_params():
    """평탄 아벨 모델 파라미터 (s=0.2, k=1)"""
    return ModelParams(s=0.2, k=1)


@pytest.fixture
def ov_params():
    """OV 파라미터 (s=0.05, h=0)"""
    return OVParams(s=0.05)


@pytest.fixture
def ov_params_shifted():
    """선형 조화 이동이 있는 OV 파라미터"""
    return OVParams(s=0.05, shift=HarmonicShift.linear(0.005, 0.01, -0.008))


@pytest.fixture
def out_dir(tmp_path):
    """산출물 디렉토리"""
    path = tmp_path / "out"
    path.mkdir()
    return path


@pytest.fixture
def write_config(tmp_path):
    """TOML 설정 파일 작성기"""

    def _write(text: str, name: str = "config.toml") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


@pytest.fixture
def abelian_config_text(out_dir):
    """작은 평탄 아벨 설정"""
    return f"""
[model]
kind = "semi-flat-abelian"
s = 0.2
k = 1

[solver]
points_per_well = 8
n_eigs = 4

[sweep]
s = [0.2]
k = [1, 2]
R = [2.0, 3.0]

[gh]
n = 300
radius = 2.0

[output]
dir = "{out_dir.as_posix()}"
seed = 7
formats = ["csv", "json"]
"""


class _ListHandler(logging.Handler):
    def __init__(self):
        super().__init__(logging.DEBUG)
        self.records = []

    def emit(self, record):
        self.records.append(record)


@pytest.fixture
def log_records():
    """collapse_lab 로거 기록 수집 (루트가 전파하지 않음)"""
    root = get_logger()
    handler = _ListHandler()
    root.addHandler(handler)
    yield handler.records
    root.removeHandler(handler)
