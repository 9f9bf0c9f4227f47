"""
回帰データモデルモジュール

このモジュールは、回帰タスクの入力データ（X, y）と、学習・テスト分割、
RKHS内の合成ターゲット生成、平均二乗誤差などの補助関数を提供します。
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..exceptions import ShapeMismatchError
from .lattice import FrequencyLattice, frequency_grid, index_grid, positive_mask


@dataclass(frozen=True)
class Dataset:
    """回帰データ

    X は形状 (n, d) の実数行列、y は長さ n の実数ベクトルです（n ≥ 1、全要素有限）。
    """

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float, copy=True)
        y = np.array(self.y, dtype=float, copy=True).reshape(-1)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] < 1:
            raise ShapeMismatchError(f"X は (n, d) の行列で n ≥ 1 である必要があります: {X.shape}")
        if y.shape[0] != X.shape[0]:
            raise ShapeMismatchError(f"y の長さ {y.shape[0]} が X の行数 {X.shape[0]} と一致しません")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("データに有限でない値が含まれています")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        """サンプル数"""
        return self.X.shape[0]

    @property
    def d(self) -> int:
        """入力次元"""
        return self.X.shape[1]


def train_test_split(data: Dataset, test_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """データを学習用とテスト用にランダムに分割する

    Args:
        data (Dataset): 分割するデータ
        test_fraction (float): テストデータの割合（0 < test_fraction < 1）
        seed (int): 乱数シード

    Returns:
        Tuple[Dataset, Dataset]: 学習データとテストデータ
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction は (0, 1) の範囲である必要があります: {test_fraction}")
    n_test = int(round(data.n * test_fraction))
    if n_test < 1 or n_test >= data.n:
        raise ValueError(f"サンプル数 {data.n} を割合 {test_fraction} で分割できません")
    order = np.random.default_rng(seed).permutation(data.n)
    test, train = order[:n_test], order[n_test:]
    return Dataset(data.X[train], data.y[train]), Dataset(data.X[test], data.y[test])


def synthetic_rkhs_target(
    lattice: FrequencyLattice,
    n: int,
    seed: int,
    X: Optional[np.ndarray] = None,
) -> Dataset:
    """半格子上の余弦・正弦のランダムな実線形結合をラベルとする合成データを生成する

    入力は [0, 2π)^d から一様に、係数は標準正規分布から同じシードで生成します。

    Args:
        lattice (FrequencyLattice): 周波数格子
        n (int): サンプル数
        seed (int): 乱数シード
        X (Optional[np.ndarray], optional): 入力を指定する場合の (n, d) 行列

    Returns:
        Dataset: 合成データ
    """
    rng = np.random.default_rng(seed)
    indices = index_grid(lattice)
    freqs = frequency_grid(lattice)[positive_mask(indices)]
    cos_coef = rng.standard_normal(freqs.shape[0])
    sin_coef = rng.standard_normal(freqs.shape[0])
    if X is None:
        X = rng.uniform(0.0, 2.0 * np.pi, size=(n, lattice.d))
    angles = np.asarray(X, dtype=float) @ freqs.T
    y = np.cos(angles) @ cos_coef + np.sin(angles) @ sin_coef
    return Dataset(X, y)


def mse(y: np.ndarray, y_hat: np.ndarray) -> float:
    """平均二乗誤差を返す"""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise ShapeMismatchError(f"形状が一致しません: {y.shape} != {y_hat.shape}")
    return float(np.mean((y - y_hat) ** 2))
