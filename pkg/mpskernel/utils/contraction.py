"""
テンソル縮約ユーティリティモジュール

このモジュールは、opt_einsumの縮約式をキャッシュして再利用するためのユーティリティ関数を提供します。
MPSの辺・ボンド・ボンド順の縮約では同じ形状の縮約が繰り返し現れるため、縮約経路の探索を一度だけ行います。
"""

from functools import lru_cache
from typing import Tuple

import numpy as np
from opt_einsum import contract_expression


@lru_cache(maxsize=2048)
def get_contract_expr_cached(equation: str, shapes: Tuple[Tuple[int, ...], ...]):
    """形状ごとに縮約式をキャッシュして返す

    Args:
        equation (str): einsum形式の縮約式
        shapes (Tuple[Tuple[int, ...], ...]): 各オペランドの形状

    Returns:
        ContractExpression: 再利用可能な縮約式
    """
    return contract_expression(equation, *shapes, optimize="greedy")


def cached_einsum(equation: str, *operands: np.ndarray) -> np.ndarray:
    """キャッシュされた縮約式でeinsumを実行する

    Args:
        equation (str): einsum形式の縮約式
        *operands (np.ndarray): オペランド

    Returns:
        np.ndarray: 縮約結果
    """
    expr = get_contract_expr_cached(equation, tuple(op.shape for op in operands))
    return expr(*operands)


def renormalize(env: np.ndarray, axis: Tuple[int, ...]) -> Tuple[np.ndarray, np.ndarray]:
    """環境テンソルを最大絶対値で正規化し、対数スケールを返す

    長い鎖の縮約でオーバーフロー・アンダーフローを避けるため、各サイトでこの関数を適用します。
    全要素がゼロの場合はスケール1として扱います。

    Args:
        env (np.ndarray): 環境テンソル（先頭軸がバッチ軸の場合もある）
        axis (Tuple[int, ...]): 最大値を取る軸

    Returns:
        Tuple[np.ndarray, np.ndarray]: 正規化された環境テンソルと、各バッチの対数スケール
    """
    scale = np.max(np.abs(env), axis=axis, keepdims=True)
    scale = np.where(scale > 0.0, scale, 1.0)
    return env / scale, np.log(scale).reshape(-1)
