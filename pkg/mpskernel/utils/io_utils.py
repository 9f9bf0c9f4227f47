"""
入出力ユーティリティ

このモジュールは、実行設定（JSON/YAML）、データセットや入力ペアのCSV、
および結果のJSON/CSVを読み書きするための機能を提供します。
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np
import yaml

from ..exceptions import ConfigError, ShapeMismatchError
from ..models.dataset import Dataset

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def read_config_file(path: PathLike) -> Dict[str, Any]:
    """実行設定ファイルを読み込む（拡張子 .yaml/.yml はYAML、それ以外はJSON）

    Args:
        path (PathLike): 設定ファイルのパス

    Returns:
        Dict[str, Any]: 設定内容

    Raises:
        ConfigError: ファイルが存在しない、または解析できない場合
    """
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"設定ファイルが見つかりません: {config_path}", [f"config: {config_path} が存在しません"])
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            if config_path.suffix in (".yaml", ".yml"):
                data = yaml.safe_load(f) or {}
            else:
                data = json.load(f)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"設定ファイルの解析に失敗しました: {e}", [f"config: {e}"]) from e
    if not isinstance(data, dict):
        raise ConfigError("設定ファイルの最上位はオブジェクトである必要があります", ["config: オブジェクトではありません"])
    return data


def read_json(path: PathLike) -> Any:
    """JSONファイルを読み込む"""
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _read_rows(path: PathLike) -> Tuple[List[str], np.ndarray]:
    """ヘッダー付きCSVを読み込み、列名と数値行列を返す"""
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = [name.strip() for name in next(reader)]
        except StopIteration as e:
            raise ShapeMismatchError(f"CSVファイルが空です: {path}") from e
        rows = [[float(value) for value in row] for row in reader if row]
    if not rows:
        raise ShapeMismatchError(f"CSVファイルにデータ行がありません: {path}")
    values = np.asarray(rows, dtype=float)
    if values.shape[1] != len(header):
        raise ShapeMismatchError(f"CSVの列数 {values.shape[1]} がヘッダーの列数 {len(header)} と一致しません: {path}")
    return header, values


def read_dataset_csv(path: PathLike, require_y: bool = True) -> Dataset:
    """列 x_1..x_d,y のCSVからデータセットを読み込む

    Args:
        path (PathLike): CSVファイルのパス
        require_y (bool, optional): y 列を必須とするかどうか。Falseで y 列がない場合は y = 0

    Returns:
        Dataset: データセット
    """
    header, values = _read_rows(path)
    x_columns = [i for i, name in enumerate(header) if name.startswith("x_")]
    if not x_columns:
        raise ShapeMismatchError(f"CSVに x_ 列がありません: {path}")
    if "y" in header:
        y = values[:, header.index("y")]
    elif require_y:
        raise ShapeMismatchError(f"CSVに y 列がありません: {path}")
    else:
        y = np.zeros(values.shape[0])
    return Dataset(values[:, x_columns], y)


def read_pairs_csv(path: PathLike) -> Tuple[np.ndarray, np.ndarray]:
    """列 x_1..x_d,xp_1..xp_d のCSVから入力ペアを読み込む"""
    header, values = _read_rows(path)
    x_columns = [i for i, name in enumerate(header) if name.startswith("x_")]
    xp_columns = [i for i, name in enumerate(header) if name.startswith("xp_")]
    if not x_columns or len(x_columns) != len(xp_columns):
        raise ShapeMismatchError(f"CSVの x_ 列と xp_ 列の数が一致しません: {path}")
    return values[:, x_columns], values[:, xp_columns]


def write_csv(path: PathLike, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    """ヘッダー付きCSVを書き出す（浮動小数点は repr で完全な精度を保つ）"""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    logger.debug(f"CSVを書き出しました: {path} ({len(rows)} 行)")


def to_jsonable(value: Any) -> Any:
    """numpy配列やスカラーを含む値をJSON直列化できる形に変換する"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(path: PathLike, data: Dict[str, Any]) -> None:
    """キーをソートしたJSONを書き出す"""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(to_jsonable(data), f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")
    logger.debug(f"JSONを書き出しました: {path}")
