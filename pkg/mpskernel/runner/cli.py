"""
コマンドラインインターフェースモジュール

このモジュールは、実行設定ファイルを読み込んで検証し、タスクを実行して成果物を書き出す
コマンドラインのエントリーポイントを提供します。

終了コード: 0 成功、2 設定エラー、3 数値計算の失敗
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from ..config import settings
from ..exceptions import ConfigError, MpsKernelError, NumericError
from ..schemas import TASKS, RunConfig, validate
from ..utils.io_utils import read_config_file
from .executor import TaskExecutor

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_ERROR = 3


def setup_logging() -> None:
    """標準エラー出力へのロギングを設定する"""
    if settings.LOG_LEVEL:
        level = getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)
    else:
        level = logging.INFO if settings.MPSKERNEL_ENV == "production" else logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )


def build_parser() -> argparse.ArgumentParser:
    """引数パーサーを作成する"""
    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description=f"{settings.APP_DESCRIPTION}（タスク: {', '.join(TASKS)}）",
        epilog="リッジ回帰の規約は (G + λI)α = y です（λ はデータ数でスケールしません）。",
    )
    parser.add_argument("--config", required=True, help="実行設定ファイル（JSON、または .yaml/.yml）")
    parser.add_argument("--out", default="out", help="成果物の出力ディレクトリ（デフォルト: out）")
    parser.add_argument("--seed-override", type=int, default=None, help="設定内のすべてのシードをこの値で置き換える")
    parser.add_argument("--threads", type=int, default=None, help="グラム行列計算のスレッド数")
    return parser


def apply_seed_override(raw: Dict[str, Any], seed: int) -> Dict[str, Any]:
    """設定辞書のすべてのシード（全体、タスク、ランダム重み付け）を置き換える

    Args:
        raw (Dict[str, Any]): 設定辞書
        seed (int): 新しいシード

    Returns:
        Dict[str, Any]: シードを置き換えた設定辞書（元の辞書は変更しない）
    """
    updated = dict(raw)
    updated["seed"] = seed
    params = dict(updated.get("params") or {})
    params["seed"] = seed
    updated["params"] = params
    weighting = dict(updated.get("weighting") or {})
    if weighting.get("kind") == "random" or "seed" in weighting:
        weighting["seed"] = seed
        updated["weighting"] = weighting
    return updated


def _report(diagnostics: List[str]) -> None:
    for diagnostic in diagnostics:
        print(f"設定エラー: {diagnostic}", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    """メイン関数

    Args:
        argv (Optional[List[str]], optional): コマンドライン引数。デフォルトは sys.argv

    Returns:
        int: 終了コード
    """
    args = build_parser().parse_args(argv)
    setup_logging()

    config_path = Path(args.config)
    try:
        raw = read_config_file(config_path)
        if args.seed_override is not None:
            raw = apply_seed_override(raw, args.seed_override)
        diagnostics = validate(raw)
        if diagnostics:
            raise ConfigError(f"実行設定に {len(diagnostics)} 件の問題があります", diagnostics)
        config = RunConfig.model_validate(raw)
    except ConfigError as e:
        _report(e.diagnostics or [str(e)])
        return EXIT_CONFIG_ERROR
    except ValidationError as e:
        _report([str(err["msg"]) for err in e.errors()])
        return EXIT_CONFIG_ERROR

    if args.threads is not None and args.threads < 1:
        _report([f"--threads: 1以上である必要があります: {args.threads}"])
        return EXIT_CONFIG_ERROR
    threads = args.threads or config.threads or settings.DEFAULT_THREADS

    executor = TaskExecutor(base_dir=config_path.resolve().parent, threads=threads)
    try:
        executor.execute(config, Path(args.out))
    except NumericError as e:
        logger.error(f"タスク {config.task} で数値計算に失敗しました: {e}")
        print(f"数値エラー ({config.task}): {e}", file=sys.stderr)
        return EXIT_NUMERIC_ERROR
    except (MpsKernelError, ValueError, OSError) as e:
        logger.error(f"タスク {config.task} の入力が不正です: {e}")
        print(f"設定エラー ({config.task}): {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    print(str(Path(args.out) / "result.json"))
    return EXIT_OK
