"""
線形代数ユーティリティモジュール

このモジュールは、ジッター付きの対称（エルミート）正定値ソルバーを提供します。
カーネルリッジ回帰、RFF回帰、フーリエ係数の最小二乗法で共通の数値処理として使用されます。
"""

import logging
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ..config import settings
from ..exceptions import FactorizationError

logger = logging.getLogger(__name__)


def solve_psd(
    matrix: np.ndarray,
    rhs: np.ndarray,
    jitter_start: Optional[float] = None,
    jitter_max: Optional[float] = None,
) -> np.ndarray:
    """正定値行列の連立方程式をCholesky分解で解く

    分解に失敗した場合は対角にジッターを加えて再試行します。
    ジッターは jitter_start から始めて JITTER_FACTOR 倍ずつ jitter_max まで増やし、
    それでも失敗した場合は FactorizationError を送出します。

    Args:
        matrix (np.ndarray): 対称（エルミート）行列
        rhs (np.ndarray): 右辺ベクトルまたは行列
        jitter_start (Optional[float], optional): 最初のジッター。デフォルトは設定値
        jitter_max (Optional[float], optional): ジッターの上限。デフォルトは設定値

    Returns:
        np.ndarray: 解

    Raises:
        FactorizationError: ジッターを上限まで加えても分解できない場合
    """
    jitter_start = settings.JITTER_START if jitter_start is None else jitter_start
    jitter_max = settings.JITTER_MAX if jitter_max is None else jitter_max

    try:
        factor = cho_factor(matrix, lower=True, check_finite=True)
        return cho_solve(factor, rhs)
    except LinAlgError:
        pass

    identity = np.eye(matrix.shape[0], dtype=matrix.dtype)
    jitter = jitter_start
    while jitter <= jitter_max * (1.0 + 1e-9):
        logger.warning(f"Cholesky分解に失敗したため、ジッター {jitter:.1e} を加えて再試行します")
        try:
            factor = cho_factor(matrix + jitter * identity, lower=True, check_finite=True)
            return cho_solve(factor, rhs)
        except LinAlgError:
            jitter *= settings.JITTER_FACTOR

    raise FactorizationError(
        f"ジッター {jitter_max:.1e} まで加えてもCholesky分解に失敗しました（行列が特異の可能性があります）"
    )
