"""
回帰サービスモジュール

このモジュールは、厳密カーネルによるカーネルリッジ回帰（KRR）と、
MPS分布からの厳密な周波数サンプリングを用いたランダムフーリエ特徴（RFF）回帰を提供します。

リッジの規約は (G + λI)α = y（λ を n でスケールしない）です。
"""

import json
import logging
import time
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from ..config import settings
from ..exceptions import EnumerationCapError, ShapeMismatchError
from ..models.dataset import Dataset
from ..models.lattice import FrequencyLattice
from ..models.weight_mps import WeightMPS, c_tensor_mps, check_lattice, hadamard, sample_offsets, symmetrize
from ..utils.linalg import solve_psd
from .kernel_engine import KernelEngine, gram

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KRRModel:
    """厳密カーネルによるリッジ回帰モデル"""

    alpha: np.ndarray
    X_train: np.ndarray
    lam: float
    fit_seconds: float = 0.0

    @property
    def n(self) -> int:
        """学習サンプル数"""
        return self.X_train.shape[0]


@dataclass(frozen=True)
class RFFModel:
    """ランダムフーリエ特徴による回帰モデル

    offsets はサンプルしたマルチインデックス、frequencies は対応する周波数ベクトル (S, d)、
    beta は余弦ブロックと正弦ブロックを連結した長さ 2S の線形重みです。
    """

    offsets: np.ndarray
    frequencies: np.ndarray
    beta: np.ndarray
    lam: float
    seed: int
    fit_seconds: float = 0.0

    @property
    def S(self) -> int:
        """サンプルした周波数の数"""
        return self.frequencies.shape[0]


def krr_fit(engine: KernelEngine, data: Dataset, lam: float, threads: Optional[int] = None) -> KRRModel:
    """カーネルリッジ回帰を学習する

    グラム行列 G を縮約で計算し、(G + λI)α = y をCholesky分解で解きます。

    Args:
        engine (KernelEngine): カーネル評価エンジン
        data (Dataset): 学習データ
        lam (float): リッジ係数 λ ≥ 0
        threads (Optional[int], optional): グラム行列計算のスレッド数

    Returns:
        KRRModel: 学習済みモデル

    Raises:
        FactorizationError: ジッターを上限まで加えても分解できない場合
    """
    if lam < 0.0:
        raise ValueError(f"リッジ係数は非負である必要があります: {lam}")
    if data.d != engine.d:
        raise ShapeMismatchError(f"データの次元 {data.d} がエンジンの入力次元 {engine.d} と一致しません")

    start = time.perf_counter()
    G = gram(engine, data.X, threads=threads)
    alpha = solve_psd(G + lam * np.eye(data.n), data.y)
    elapsed = time.perf_counter() - start

    residual = float(np.max(np.abs(G @ alpha + lam * alpha - data.y)))
    logger.info(f"KRRを学習しました: n={data.n}, λ={lam:.1e}, 残差={residual:.2e}, 所要時間={elapsed:.3f}s")
    return KRRModel(alpha=alpha, X_train=data.X, lam=lam, fit_seconds=elapsed)


def krr_predict(model: KRRModel, engine: KernelEngine, X_query: np.ndarray, threads: Optional[int] = None) -> np.ndarray:
    """KRRモデルで予測する（ŷ_q = Σ_i α_i K(X_i, x_q)）

    Args:
        model (KRRModel): 学習済みモデル
        engine (KernelEngine): 学習時と同じカーネル評価エンジン
        X_query (np.ndarray): 形状 (m, d) のクエリ
        threads (Optional[int], optional): グラム行列計算のスレッド数

    Returns:
        np.ndarray: 長さ m の予測値
    """
    return gram(engine, X_query, model.X_train, threads=threads) @ model.alpha


def rff_sampling_mps(lattice: FrequencyLattice, weights: WeightMPS) -> WeightMPS:
    """RFFの周波数サンプリングに使う B テンソルMPSを返す

    p(idx) ∝ B[idx]² からサンプリングすると、z(x)·z(x′) の期待値が正規化カーネルに一致します。
    """
    check_lattice(weights, lattice)
    return hadamard(c_tensor_mps(lattice), symmetrize(weights))


def rff_features(model: RFFModel, X: np.ndarray) -> np.ndarray:
    """特徴行列 z(X) = (1/√S)·[cos⟨ω_s, x⟩, sin⟨ω_s, x⟩] を返す

    Args:
        model (RFFModel): RFFモデル
        X (np.ndarray): 形状 (n, d) の入力

    Returns:
        np.ndarray: 形状 (n, 2S) の特徴行列
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.frequencies.shape[1]:
        raise ShapeMismatchError(f"入力の次元 {X.shape[1]} が周波数の次元 {model.frequencies.shape[1]} と一致しません")
    angles = X @ model.frequencies.T
    return np.concatenate([np.cos(angles), np.sin(angles)], axis=1) / np.sqrt(model.S)


def rff_fit(
    lattice: FrequencyLattice,
    weights: WeightMPS,
    data: Dataset,
    S: int,
    lam: float,
    seed: int,
) -> RFFModel:
    """RFF回帰を学習する

    重み付けMPSの二乗分布から S 個のマルチインデックスを厳密にサンプリングし、
    余弦・正弦の特徴で正則化最小二乗 (ZᵀZ + λI)β = Zᵀy を解きます（2S > n では双対形式）。

    Args:
        lattice (FrequencyLattice): 周波数格子
        weights (WeightMPS): 重み付けMPS（内部で対称化する）
        data (Dataset): 学習データ
        S (int): サンプル数
        lam (float): リッジ係数 λ ≥ 0
        seed (int): 乱数シード

    Returns:
        RFFModel: 学習済みモデル

    Raises:
        ZeroWeightingError: 重み付けがゼロの場合
        EnumerationCapError: 特徴行列の要素数 n·2S がメモリ上限を超える場合
    """
    if S < 1:
        raise ValueError(f"サンプル数 S は1以上である必要があります: {S}")
    if lam < 0.0:
        raise ValueError(f"リッジ係数は非負である必要があります: {lam}")
    if data.d != lattice.d:
        raise ShapeMismatchError(f"データの次元 {data.d} が格子の次元 {lattice.d} と一致しません")
    entries = data.n * 2 * S
    if entries > settings.RFF_MAX_FEATURE_ENTRIES:
        raise EnumerationCapError(
            f"特徴行列の要素数 {entries} が上限 {settings.RFF_MAX_FEATURE_ENTRIES} を超えています（S={S}）"
        )

    start = time.perf_counter()
    model = rff_sample(lattice, weights, S, seed, lam=lam)
    Z = rff_features(model, data.X)
    if 2 * S <= data.n:
        beta = solve_psd(Z.T @ Z + lam * np.eye(2 * S), Z.T @ data.y)
    else:
        # 特徴数がデータ数を超える場合は同値な双対形式 β = Zᵀ(ZZᵀ + λI)⁻¹y で解く
        beta = Z.T @ solve_psd(Z @ Z.T + lam * np.eye(data.n), data.y)
    elapsed = time.perf_counter() - start

    logger.info(f"RFFを学習しました: n={data.n}, S={S}, λ={lam:.1e}, seed={seed}, 所要時間={elapsed:.3f}s")
    return RFFModel(
        offsets=model.offsets,
        frequencies=model.frequencies,
        beta=beta,
        lam=lam,
        seed=seed,
        fit_seconds=elapsed,
    )


def rff_sample(lattice: FrequencyLattice, weights: WeightMPS, S: int, seed: int, lam: float = 0.0) -> RFFModel:
    """周波数だけをサンプリングした未学習のRFFモデル（β = 0）を返す

    カーネル推定 rff_kernel_estimate のみを使う場合に利用します。
    """
    if S < 1:
        raise ValueError(f"サンプル数 S は1以上である必要があります: {S}")
    rng = np.random.default_rng(seed)
    offsets = sample_offsets(rff_sampling_mps(lattice, weights), rng, S)
    columns = [axis.array[offsets[:, j] + axis.M] for j, axis in enumerate(lattice.axes)]
    frequencies = np.stack(columns, axis=1)
    return RFFModel(offsets=offsets, frequencies=frequencies, beta=np.zeros(2 * S), lam=lam, seed=seed)


def rff_kernel_estimate(model: RFFModel, x: np.ndarray, x_prime: np.ndarray) -> float:
    """RFFによるカーネル推定値 z(x)·z(x′) を返す（x = x′ で1）"""
    z = rff_features(model, np.asarray(x, dtype=float)[None, :])
    z_prime = rff_features(model, np.asarray(x_prime, dtype=float)[None, :])
    return float(z[0] @ z_prime[0])


def rff_predict(model: RFFModel, X_query: np.ndarray) -> np.ndarray:
    """RFFモデルで予測する（ŷ = z(X)·β）"""
    return rff_features(model, X_query) @ model.beta


def cost_report(n: int, S: int, mode: str = "compare", measured: Optional[Dict[str, float]] = None) -> Dict[str, Any]:
    """KRRとRFFの漸近コストの予測値と、実測時間をまとめたレポートを返す

    予測値は KRR が空間 n²・時間 n³、RFF が空間 nS・時間 nS² + S³ です。
    時間の項が小さい方を cheaper として示します。

    Args:
        n (int): データ数
        S (int): RFFのサンプル数
        mode (str, optional): "krr"、"rff"、"compare" のいずれか。デフォルトは"compare"
        measured (Optional[Dict[str, float]], optional): 実測時間（秒）

    Returns:
        Dict[str, Any]: コストレポート
    """
    if n < 1 or S < 1:
        raise ValueError(f"サイズは正である必要があります: n={n}, S={S}")
    if mode not in ("krr", "rff", "compare"):
        raise ValueError(f"不正なモードです: {mode}")

    predicted = {
        "krr": {"space": n * n, "time": n**3},
        "rff": {"space": n * S, "time": n * S * S + S**3},
    }
    if mode != "compare":
        predicted = {mode: predicted[mode]}

    measured_seconds = {key: max(0.0, float(value)) for key, value in (measured or {}).items()}
    krr_time, rff_time = n**3, n * S * S + S**3
    return {
        "mode": mode,
        "n": n,
        "S": S,
        "predicted": predicted,
        "cheaper": "rff" if rff_time < krr_time else "krr",
        "measured_seconds": measured_seconds,
    }


def model_to_dict(model: Any) -> Dict[str, Any]:
    """KRRModel または RFFModel をJSON直列化用の辞書に変換する"""
    if isinstance(model, KRRModel):
        return {
            "type": "krr",
            "lam": model.lam,
            "n": model.n,
            "alpha": model.alpha.tolist(),
            "X_train": model.X_train.tolist(),
        }
    if isinstance(model, RFFModel):
        return {
            "type": "rff",
            "lam": model.lam,
            "S": model.S,
            "seed": model.seed,
            "offsets": model.offsets.tolist(),
            "frequencies": model.frequencies.tolist(),
            "beta": model.beta.tolist(),
        }
    raise TypeError(f"直列化できないモデルです: {type(model).__name__}")


def model_to_json(model: Any) -> str:
    """モデルをJSON文字列に直列化する（seed、λ、S を含む）"""
    return json.dumps(model_to_dict(model), sort_keys=True)
