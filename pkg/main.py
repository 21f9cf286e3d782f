#!/usr/bin/env python3
"""Collapse Lab - Entry Point

붕괴하는 하이퍼캘러 올뭉치의 국소 모델 실험을 실행하는 명령줄 도구
"""

import argparse
import logging
import sys

from src import __version__
from src.core.logger import set_console_level
from src.core.runner import SUBCOMMANDS, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="collapse-lab", description="Collapse Lab 실험 실행기")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("subcommand", choices=SUBCOMMANDS, help="실행할 하위 명령")
    parser.add_argument("--config", required=True, help="TOML 설정 파일 경로")
    parser.add_argument("--out", default=None, help="산출물 디렉토리 (설정의 [output] dir 덮어쓰기)")
    parser.add_argument("--seed", type=int, default=None, help="난수 시드 (u64)")
    parser.add_argument("--threads", type=int, default=None, help="수치 라이브러리 스레드 수")
    parser.add_argument("-q", "--quiet", action="store_true", help="경고 이상만 출력")
    return parser


def main(argv=None) -> int:
    """명령 실행 후 종료 코드 반환"""
    args = build_parser().parse_args(argv)
    if args.quiet:
        set_console_level(logging.WARNING)
    result = run(args.subcommand, args.config, out=args.out, seed=args.seed, threads=args.threads)
    for path in result.artifacts:
        print(path)
    return result.status


if __name__ == "__main__":
    sys.exit(main())
