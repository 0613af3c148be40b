import argparse
import logging
import sys
import structlog
from rdopt import __version__
from rdopt.commands import HANDLERS, run_experiment
from rdopt.config import get_settings
from rdopt.errors import RdOptError
from rdopt.services.config_parser import load_config

# 설정 로드
settings = get_settings()

# 구조화된 로깅 설정
log_level = getattr(logging, settings.log_level.upper(), logging.INFO)

structlog.configure(
    processors=[
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.JSONRenderer()
    ],
    wrapper_class=structlog.make_filtering_bound_logger(log_level),
    context_class=dict,
    logger_factory=structlog.PrintLoggerFactory(),
    cache_logger_on_first_use=True,
)

logger = structlog.get_logger()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rdopt",
        description="반응-확산 방정식 초기값 최적화 실험 도구"
    )
    parser.add_argument("--version", action="version", version=f"rdopt {__version__}")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in HANDLERS:
        cmd = sub.add_parser(mode, help=f"{mode} 실험 실행")
        cmd.add_argument("config", help="INI 실험 설정 파일")
        cmd.add_argument("--out", default=None, help="실행 디렉터리 (기본: [output] dir/<mode>)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logger.info("application_startup", version=__version__, mode=args.mode)

    try:
        cfg = load_config(args.config)
        status = run_experiment(cfg, args.mode, args.out)
        logger.info("application_shutdown", mode=args.mode, status=status)
        return status

    except RdOptError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code

    except OSError as e:
        logger.error("io_error", error=str(e), error_type=type(e).__name__)
        print(f"error: {e}", file=sys.stderr)
        return 3

    except Exception as e:
        logger.error(
            "unhandled_exception",
            mode=args.mode,
            error=str(e),
            error_type=type(e).__name__
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
