"""실험 설정 모듈

TOML 설정 파일을 읽어 ExperimentConfig 로 검증하고,
산출물 이름에 쓰는 설정 해시를 계산합니다.
"""

from __future__ import annotations

import hashlib
import json
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from src.core.geometry import ModelParams, ParameterError
from src.core.harmonic import HarmonicShift, HarmonicShiftError
from src.core.logger import get_logger

logger = get_logger("config")

MODEL_KINDS = ("semi-flat-abelian", "semi-flat-general", "ooguri-vafa-window", "limit")
BRANCHES = ("inverse", "e2")
FORMATS = ("csv", "json", "jsonl", "xlsx", "bin", "report")
THREADS_ENV = "COLLAPSE_SPEC_THREADS"
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")
HASH_LENGTH = 12


class ConfigError(Exception):
    """설정 에러"""

    pass


@dataclass(frozen=True)
class ModelSection:
    """[model] 섹션"""

    kind: str = "semi-flat-abelian"
    params: ModelParams = field(default_factory=lambda: ModelParams(s=0.05))
    offsets: Tuple[float, float] = (0.0, 0.0)
    branch: str = "inverse"
    h_const: float = 0.0
    h_linear: Tuple[float, float] = (0.0, 0.0)

    @property
    def shift(self) -> HarmonicShift:
        if self.h_const == 0 and self.h_linear == (0.0, 0.0):
            return HarmonicShift.zero()
        return HarmonicShift.linear(self.h_const, *self.h_linear)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            **self.params.to_dict(),
            "offsets": list(self.offsets),
            "branch": self.branch,
            "h_const": self.h_const,
            "h_linear": list(self.h_linear),
        }


@dataclass(frozen=True)
class SolverSection:
    """[solver] 섹션"""

    points_per_well: float = 8.0
    n_eigs: int = 6
    block_size: int = 4

    def to_dict(self) -> Dict[str, Any]:
        return {"points_per_well": self.points_per_well, "n_eigs": self.n_eigs, "block_size": self.block_size}


@dataclass(frozen=True)
class SweepSection:
    """[sweep] 섹션 (각 목록은 비어 있지 않고 엄격 단조)"""

    s: Tuple[float, ...] = (0.2, 0.1, 0.05)
    k: Tuple[int, ...] = (1, 2, 3)
    R: Tuple[float, ...] = (4.0, 6.0, 8.0)

    def to_dict(self) -> Dict[str, Any]:
        return {"s": list(self.s), "k": list(self.k), "R": list(self.R)}


@dataclass(frozen=True)
class GHSection:
    """[gh] 섹션"""

    n: int = 600
    radius: float = 3.0
    neighbors: int = 12

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "radius": self.radius, "neighbors": self.neighbors}


@dataclass(frozen=True)
class OutputSection:
    """[output] 섹션"""

    dir: str = "out"
    seed: int = 12345
    formats: Tuple[str, ...] = ("csv", "json")

    def to_dict(self) -> Dict[str, Any]:
        return {"dir": self.dir, "seed": self.seed, "formats": list(self.formats)}


@dataclass(frozen=True)
class ExperimentConfig:
    """검증된 실험 설정"""

    model: ModelSection = field(default_factory=ModelSection)
    solver: SolverSection = field(default_factory=SolverSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    gh: GHSection = field(default_factory=GHSection)
    output: OutputSection = field(default_factory=OutputSection)
    source: Optional[Path] = field(default=None, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        """정규형 딕셔너리 (해시 대상, source 제외)"""
        return {
            "model": self.model.to_dict(),
            "solver": self.solver.to_dict(),
            "sweep": self.sweep.to_dict(),
            "gh": self.gh.to_dict(),
            "output": self.output.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], source: Optional[Path] = None) -> "ExperimentConfig":
        """섹션 딕셔너리에서 생성 (모든 값 재검증)

        Raises:
            ConfigError: 알 수 없는 섹션/키, 잘못된 값
        """
        unknown = set(data) - {"model", "solver", "sweep", "gh", "output"}
        if unknown:
            raise ConfigError(f"알 수 없는 섹션: {sorted(unknown)}")
        for name, section in data.items():
            if not isinstance(section, dict):
                raise ConfigError(f"[{name}] 는 섹션이어야 합니다")
            nested = [key for key, value in section.items() if isinstance(value, dict)]
            if nested:
                raise ConfigError(f"[{name}] 에 중첩 구조는 허용되지 않습니다: {nested}")
        try:
            return cls(
                model=_model_section(data.get("model", {})),
                solver=_solver_section(data.get("solver", {})),
                sweep=_sweep_section(data.get("sweep", {})),
                gh=_gh_section(data.get("gh", {})),
                output=_output_section(data.get("output", {})),
                source=source,
            )
        except (ParameterError, HarmonicShiftError) as e:
            raise ConfigError(str(e)) from e
        except (TypeError, ValueError) as e:
            raise ConfigError(f"잘못된 설정 값: {e}") from e

    def with_overrides(self, out: Optional[str] = None, seed: Optional[int] = None) -> "ExperimentConfig":
        """CLI 덮어쓰기 (--out, --seed) 적용"""
        output = self.output
        if out is not None:
            output = replace(output, dir=str(out))
        if seed is not None:
            if int(seed) < 0 or int(seed) >= 2**64:
                raise ConfigError(f"seed는 u64 범위여야 합니다: {seed}")
            output = replace(output, seed=int(seed))
        return replace(self, output=output)

    @property
    def config_hash(self) -> str:
        return config_hash(self)

    @property
    def out_dir(self) -> Path:
        return Path(self.output.dir)


def _check_keys(section: str, data: Dict[str, Any], allowed: List[str]) -> None:
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"[{section}] 알 수 없는 키: {sorted(unknown)}")


def _pair(value: Any, name: str) -> Tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{name} 는 길이 2 목록이어야 합니다: {value!r}")
    return (float(value[0]), float(value[1]))


def _model_section(data: Dict[str, Any]) -> ModelSection:
    _check_keys(
        "model",
        data,
        ["kind", "s", "k", "m", "delta0", "trunc_n", "tol", "offsets", "branch", "h_const", "h_linear"],
    )
    kind = data.get("kind", "semi-flat-abelian")
    if kind not in MODEL_KINDS:
        raise ConfigError(f"알 수 없는 모델 종류: {kind!r} (허용: {', '.join(MODEL_KINDS)})")
    branch = data.get("branch", "inverse")
    if branch not in BRANCHES:
        raise ConfigError(f"알 수 없는 로그 분지: {branch!r}")
    for key in ("k", "m", "trunc_n"):
        if key in data and (isinstance(data[key], bool) or not isinstance(data[key], int)):
            raise ConfigError(f"{key} 는 정수여야 합니다: {data[key]!r}")
    numeric = {key: data[key] for key in ("k", "m", "delta0", "trunc_n", "tol") if key in data}
    params = ModelParams.from_dict({"s": data.get("s", 0.05), **numeric})
    section = ModelSection(
        kind=kind,
        params=params,
        offsets=_pair(data.get("offsets", [0.0, 0.0]), "offsets"),
        branch=branch,
        h_const=float(data.get("h_const", 0.0)),
        h_linear=_pair(data.get("h_linear", [0.0, 0.0]), "h_linear"),
    )
    if not section.shift.is_zero:
        section.shift.validate(params.delta0)
    return section


def _solver_section(data: Dict[str, Any]) -> SolverSection:
    _check_keys("solver", data, ["points_per_well", "n_eigs", "block_size"])
    section = SolverSection(
        points_per_well=float(data.get("points_per_well", 8.0)),
        n_eigs=int(data.get("n_eigs", 6)),
        block_size=int(data.get("block_size", 4)),
    )
    if section.points_per_well < 8:
        raise ConfigError(f"points_per_well 은 8 이상이어야 합니다: {section.points_per_well}")
    if section.n_eigs < 1 or section.block_size < 1:
        raise ConfigError("n_eigs, block_size 는 1 이상이어야 합니다")
    return section


def _strictly_monotone(values: List[float]) -> bool:
    if len(values) < 2:
        return True
    diffs = [b - a for a, b in zip(values, values[1:])]
    return all(d > 0 for d in diffs) or all(d < 0 for d in diffs)


def _sweep_list(data: Dict[str, Any], key: str, default: Tuple, cast) -> Tuple:
    values = data.get(key, list(default))
    if not isinstance(values, list) or not values:
        raise ConfigError(f"[sweep] {key} 는 비어 있지 않은 목록이어야 합니다")
    values = [cast(v) for v in values]
    if not _strictly_monotone(values):
        raise ConfigError(f"[sweep] {key} 는 엄격 단조여야 합니다: {values}")
    return tuple(values)


def _sweep_section(data: Dict[str, Any]) -> SweepSection:
    _check_keys("sweep", data, ["s", "k", "R"])
    defaults = SweepSection()
    section = SweepSection(
        s=_sweep_list(data, "s", defaults.s, float),
        k=_sweep_list(data, "k", defaults.k, int),
        R=_sweep_list(data, "R", defaults.R, float),
    )
    if any(v <= 0 for v in section.s) or any(v < 1 for v in section.k) or any(v <= 0 for v in section.R):
        raise ConfigError("[sweep] 값은 양수여야 합니다 (k ≥ 1)")
    return section


def _gh_section(data: Dict[str, Any]) -> GHSection:
    _check_keys("gh", data, ["n", "radius", "neighbors"])
    section = GHSection(
        n=int(data.get("n", 600)),
        radius=float(data.get("radius", 3.0)),
        neighbors=int(data.get("neighbors", 12)),
    )
    if section.n < 200:
        raise ConfigError(f"[gh] n 은 200 이상이어야 합니다: {section.n}")
    if section.radius <= 0 or section.neighbors < 2:
        raise ConfigError("[gh] radius > 0, neighbors ≥ 2 이어야 합니다")
    return section


def _output_section(data: Dict[str, Any]) -> OutputSection:
    _check_keys("output", data, ["dir", "seed", "formats"])
    formats = data.get("formats", ["csv", "json"])
    if not isinstance(formats, list) or not formats:
        raise ConfigError("[output] formats 는 비어 있지 않은 목록이어야 합니다")
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise ConfigError(f"[output] 알 수 없는 형식: {bad}")
    seed = data.get("seed", 12345)
    if isinstance(seed, bool) or not isinstance(seed, int) or not (0 <= seed < 2**64):
        raise ConfigError(f"[output] seed 는 u64 정수여야 합니다: {seed!r}")
    return OutputSection(dir=str(data.get("dir", "out")), seed=seed, formats=tuple(formats))


def load_config(path: Path) -> ExperimentConfig:
    """TOML 설정 파일 로드

    Raises:
        ConfigError: 파일 없음, 구문 오류, 검증 실패
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"설정 파일을 찾을 수 없습니다: {path}")
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"TOML 구문 오류: {e}") from e
    config = ExperimentConfig.from_dict(data, source=path)
    logger.info(f"설정 로드: {path.name} (hash={config_hash(config)})")
    return config


def config_hash(config: ExperimentConfig) -> str:
    """정규 JSON 덤프의 sha256 앞 12자리"""
    canonical = json.dumps(config.to_dict(), sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:HASH_LENGTH]


def apply_threads(threads: Optional[int] = None) -> Optional[int]:
    """수치 라이브러리 스레드 수 설정 (--threads, 없으면 COLLAPSE_SPEC_THREADS)

    이미 설정된 환경 변수는 덮어쓰지 않습니다.
    """
    if threads is None:
        raw = os.environ.get(THREADS_ENV)
        if not raw:
            return None
        try:
            threads = int(raw)
        except ValueError as e:
            raise ConfigError(f"{THREADS_ENV} 는 정수여야 합니다: {raw!r}") from e
    if threads < 1:
        raise ConfigError(f"threads 는 1 이상이어야 합니다: {threads}")
    for var in THREAD_VARS:
        os.environ.setdefault(var, str(threads))
    logger.debug(f"스레드 수: {threads}")
    return threads
