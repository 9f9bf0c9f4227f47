"""
カーネル評価エンジンモジュール

このモジュールは、対称MPS重み付けで再重み付けされたPQC由来カーネル K_(D,w)(x, x′) を
テンソルネットワークの縮約により厳密に評価するエンジンを提供します。

- eval_kernel / kernel_batch: 辺・ボンド・ボンド順の縮約（計算量 O(d·D³·M̃_max)）
- eval_kernel_etk: 二重化した B 鎖から作るMPOコアに局所特徴を接続する順序での縮約
- gram: グラム行列（行単位で並列化、結果はスレッド数に依存しない）
- dense_*: 格子を全列挙する小規模用の参照実装
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..config import settings
from ..exceptions import ImaginaryResidueError, NumericError, ShapeMismatchError, ZeroWeightingError
from ..models.lattice import (
    FrequencyAxis,
    FrequencyLattice,
    Splitting,
    frequency_grid,
    index_grid,
    is_positive_rep,
    positive_mask,
)
from ..models.weight_mps import (
    WeightMPS,
    bond_dims,
    c_tensor_mps,
    check_lattice,
    hadamard,
    log_squared_sum,
    symmetrize,
    to_dense,
)
from ..utils.contraction import cached_einsum, renormalize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KernelEngine:
    """事前計算済みの B テンソルMPSと正規化定数を保持するカーネル評価エンジン

    b_mps は hadamard(c_tensor_mps(lattice), symmetrize(weights)) で、
    norm2 = squared_sum(b_mps) = 2‖w‖² です。長い鎖では norm2 がオーバーフローし得るため、
    評価には対数 log_norm2 を使用します。
    """

    lattice: FrequencyLattice
    weights: WeightMPS
    b_mps: WeightMPS
    norm2: float
    log_norm2: float

    @property
    def d(self) -> int:
        """入力次元"""
        return self.lattice.d


def new_engine(lattice: FrequencyLattice, weights: WeightMPS) -> KernelEngine:
    """重み付けMPSからカーネル評価エンジンを構築する

    重み付けを対称化し、C テンソルとのアダマール積で B テンソルを構築してから、
    二乗和の縮約で正規化定数を計算します。

    Args:
        lattice (FrequencyLattice): 周波数格子
        weights (WeightMPS): 重み付けMPS（対称でなくてもよい）

    Returns:
        KernelEngine: カーネル評価エンジン

    Raises:
        ShapeMismatchError: MPSの物理次元が格子と一致しない場合
        ZeroWeightingError: 正規化定数が許容値以下の場合
    """
    check_lattice(weights, lattice)
    symmetric = symmetrize(weights)
    b_mps = hadamard(c_tensor_mps(lattice), symmetric)

    value, log_scale = log_squared_sum(b_mps)
    if not value > 0.0 or log_scale + math.log(value) <= math.log(settings.NORM_TOL):
        raise ZeroWeightingError(f"重み付けの正規化定数 2‖w‖² が許容値 {settings.NORM_TOL:.0e} 以下です")
    log_norm2 = log_scale + math.log(value)
    norm2 = math.exp(log_norm2) if log_norm2 < 700.0 else math.inf

    logger.debug(f"カーネルエンジンを構築しました: d={lattice.d}, bonds={bond_dims(b_mps)}, norm2={norm2:.6e}")
    return KernelEngine(lattice=lattice, weights=symmetric, b_mps=b_mps, norm2=norm2, log_norm2=log_norm2)


def local_features(axis: FrequencyAxis, x_j: float) -> np.ndarray:
    """局所特徴ベクトル ψ⁽ʲ⁾(x_j) = (e^{i ω_k x_j})_k を返す

    Args:
        axis (FrequencyAxis): 周波数軸
        x_j (float): 入力の第 j 成分

    Returns:
        np.ndarray: 長さ 2M_j+1 の複素ベクトル（オフセット −M…M の順）
    """
    return np.exp(1j * axis.array * float(x_j))


def _as_batch(engine: KernelEngine, X: np.ndarray, name: str) -> np.ndarray:
    """入力を (n, d) の実数配列に整形する"""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != engine.d:
        raise ShapeMismatchError(f"{name} の形状 {np.shape(X)} が入力次元 d={engine.d} と一致しません")
    return arr


def _finish(engine: KernelEngine, values: np.ndarray, log_scales: np.ndarray) -> np.ndarray:
    """正規化済みの縮約値からカーネル値を復元し、虚部の残差を検査する"""
    scaled = values * np.exp(log_scales - engine.log_norm2)
    residue = float(np.max(np.abs(scaled.imag))) if scaled.size else 0.0
    if residue > settings.IMAG_TOL:
        raise ImaginaryResidueError(
            f"カーネル縮約の虚部 {residue:.3e} が許容値 {settings.IMAG_TOL:.0e} を超えています（重み付けの対称性を確認してください）"
        )
    return scaled.real


def kernel_batch(engine: KernelEngine, X: np.ndarray, X_prime: np.ndarray) -> np.ndarray:
    """行ごとに対応する入力の組 (X_p, X′_p) のカーネル値をまとめて評価する

    環境 E[p] (左ボンド × 左ボンド) を左から辺・ボンド・ボンドの順に更新します。
    各サイトでは局所特徴の積 conj(ψ(x_j))·ψ(x′_j) = e^{i ω_k (x′_j − x_j)} で物理インデックスを重み付けします。

    Args:
        engine (KernelEngine): カーネル評価エンジン
        X (np.ndarray): 形状 (p, d) の入力
        X_prime (np.ndarray): 形状 (p, d) の入力

    Returns:
        np.ndarray: 長さ p のカーネル値

    Raises:
        ShapeMismatchError: 形状が一致しない場合
        ImaginaryResidueError: 虚部の残差が許容値を超える場合
    """
    X = _as_batch(engine, X, "X")
    X_prime = _as_batch(engine, X_prime, "X_prime")
    if X.shape[0] != X_prime.shape[0]:
        raise ShapeMismatchError(f"入力の行数が一致しません: {X.shape[0]} != {X_prime.shape[0]}")

    count = X.shape[0]
    delta = X_prime - X
    env = np.ones((count, 1, 1), dtype=complex)
    log_scales = np.zeros(count)
    for j, (axis, tensor) in enumerate(zip(engine.lattice.axes, engine.b_mps.tensors)):
        phase = np.exp(1j * delta[:, j, None] * axis.array[None, :])
        half = cached_einsum("pab,akc->pkbc", env, tensor)
        half = half * phase[:, :, None, None]
        env = cached_einsum("pkbc,bkd->pcd", half, tensor)
        env, logs = renormalize(env, axis=(1, 2))
        log_scales += logs
    return _finish(engine, env[:, 0, 0], log_scales)


def eval_kernel(engine: KernelEngine, x: np.ndarray, x_prime: np.ndarray) -> float:
    """カーネル値 K_(D,w)(x, x′) を縮約で厳密に評価する

    Args:
        engine (KernelEngine): カーネル評価エンジン
        x (np.ndarray): 長さ d の入力
        x_prime (np.ndarray): 長さ d の入力

    Returns:
        float: カーネル値（x = x′ で1）
    """
    x = np.asarray(x, dtype=float)
    x_prime = np.asarray(x_prime, dtype=float)
    if x.shape != (engine.d,) or x_prime.shape != (engine.d,):
        raise ShapeMismatchError(f"入力の形状 {x.shape}, {x_prime.shape} が入力次元 d={engine.d} と一致しません")
    return float(kernel_batch(engine, x[None, :], x_prime[None, :])[0])


def etk_cores(engine: KernelEngine) -> List[np.ndarray]:
    """二重化した B 鎖からMPOコア T_j を構築する

    T_j[(a,b), k, (c,d)] = B_j[a,k,c]·B_j[b,k,d] で、物理インデックスについて対角なMPOを
    (D², 2M_j+1, D²) の形状で保持します。

    Args:
        engine (KernelEngine): カーネル評価エンジン

    Returns:
        List[np.ndarray]: サイトごとのコア
    """
    cores = []
    for tensor in engine.b_mps.tensors:
        left, dim, right = tensor.shape
        core = np.einsum("akc,bkd->abkcd", tensor, tensor).reshape(left * left, dim, right * right)
        cores.append(core)
    return cores


def eval_kernel_etk(engine: KernelEngine, x: np.ndarray, x_prime: np.ndarray) -> float:
    """ETK形式（局所特徴をMPOコアに接続する順序）でカーネル値を評価する

    各サイトで conj(ψ(x_j)) と ψ(x′_j) をコアの物理インデックスに接続して転送行列を作り、
    辺ベクトルに左から順に掛けます。結果は eval_kernel と 1e−9 以内で一致します。

    Args:
        engine (KernelEngine): カーネル評価エンジン
        x (np.ndarray): 長さ d の入力
        x_prime (np.ndarray): 長さ d の入力

    Returns:
        float: カーネル値
    """
    x = np.asarray(x, dtype=float)
    x_prime = np.asarray(x_prime, dtype=float)
    if x.shape != (engine.d,) or x_prime.shape != (engine.d,):
        raise ShapeMismatchError(f"入力の形状 {x.shape}, {x_prime.shape} が入力次元 d={engine.d} と一致しません")

    edge = np.ones((1, 1), dtype=complex)
    log_scale = np.zeros(1)
    for j, (axis, core) in enumerate(zip(engine.lattice.axes, etk_cores(engine))):
        local = np.conj(local_features(axis, x[j])) * local_features(axis, x_prime[j])
        transfer = cached_einsum("akc,k->ac", core, local)
        edge, logs = renormalize(edge @ transfer, axis=(1,))
        log_scale += logs
    return float(_finish(engine, edge[:, 0], log_scale)[0])


def gram(
    engine: KernelEngine,
    X: np.ndarray,
    X_prime: Optional[np.ndarray] = None,
    threads: Optional[int] = None,
) -> np.ndarray:
    """グラム行列 G[i, j] = K(X_i, X′_j) を計算する

    行ごとに独立なバッチとして評価するため、結果はスレッド数に依存しません。

    Args:
        engine (KernelEngine): カーネル評価エンジン
        X (np.ndarray): 形状 (n, d) の入力
        X_prime (Optional[np.ndarray], optional): 形状 (m, d) の入力。省略時は X
        threads (Optional[int], optional): ワーカースレッド数。デフォルトは設定値

    Returns:
        np.ndarray: 形状 (n, m) のグラム行列
    """
    X = _as_batch(engine, X, "X")
    X_prime = X if X_prime is None else _as_batch(engine, X_prime, "X_prime")
    threads = threads or settings.DEFAULT_THREADS
    n, m = X.shape[0], X_prime.shape[0]

    def row(i: int) -> np.ndarray:
        return kernel_batch(engine, np.repeat(X[i : i + 1], m, axis=0), X_prime)

    if threads > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, range(n)))
    else:
        rows = [row(i) for i in range(n)]
    return np.stack(rows, axis=0) if rows else np.zeros((0, m))


def _dense_b(lattice: FrequencyLattice, weights: WeightMPS) -> np.ndarray:
    """B テンソル（√2 倍した中心要素を持つ対称化済み重み）を密ベクトルとして返す"""
    check_lattice(weights, lattice)
    dense = to_dense(symmetrize(weights)).ravel().copy()
    dense[dense.size // 2] *= math.sqrt(2.0)
    return dense


def dense_feature_phi2(lattice: FrequencyLattice, weights: WeightMPS, x: np.ndarray) -> np.ndarray:
    """全格子上の特徴ベクトル φ⁽²⁾(x) を明示的に構築する（参照実装）

    要素は B[ω]·e^{i⟨ω,x⟩}/(√2‖w‖) で、順序は index_grid の行順です。

    Args:
        lattice (FrequencyLattice): 周波数格子
        weights (WeightMPS): 重み付けMPS
        x (np.ndarray): 長さ d の入力

    Returns:
        np.ndarray: 長さ |Ω̃| の複素ベクトル

    Raises:
        EnumerationCapError: 格子点数が列挙上限を超える場合
    """
    freqs = frequency_grid(lattice)
    b = _dense_b(lattice, weights)
    norm2 = float(np.sum(b**2))
    if norm2 <= settings.NORM_TOL:
        raise ZeroWeightingError("重み付けの正規化定数がゼロです")
    return b * np.exp(1j * (freqs @ np.asarray(x, dtype=float))) / math.sqrt(norm2)


def _half_lattice_weights(lattice: FrequencyLattice, weights: WeightMPS, splitting: Splitting):
    """半格子の代表元の周波数と誘導重み w を返す（ω₀ を先頭に並べる）"""
    indices = index_grid(lattice)
    freqs = frequency_grid(lattice)
    check_lattice(weights, lattice)
    dense = to_dense(symmetrize(weights)).ravel()
    mask = positive_mask(indices, splitting)
    center = indices.shape[0] // 2
    mask[center] = False
    order = np.concatenate([[center], np.flatnonzero(mask)])
    w = dense[order]
    norm_sq = float(np.sum(w**2))
    if norm_sq <= settings.NORM_TOL:
        raise ZeroWeightingError("重み付けの正規化定数 ‖w‖² がゼロです")
    return freqs[order], w, norm_sq


def dense_kernel(
    lattice: FrequencyLattice,
    weights: WeightMPS,
    x: np.ndarray,
    x_prime: np.ndarray,
    splitting: Splitting = is_positive_rep,
) -> float:
    """半格子上の余弦和 (1/‖w‖²)·Σ w[ω]² cos⟨ω, x−x′⟩ としてカーネルを評価する（参照実装）

    Args:
        lattice (FrequencyLattice): 周波数格子
        weights (WeightMPS): 重み付けMPS（内部で対称化する）
        x (np.ndarray): 長さ d の入力
        x_prime (np.ndarray): 長さ d の入力
        splitting (Splitting, optional): 鏡像対の分割規則。デフォルトは is_positive_rep

    Returns:
        float: カーネル値
    """
    freqs, w, norm_sq = _half_lattice_weights(lattice, weights, splitting)
    delta = np.asarray(x, dtype=float) - np.asarray(x_prime, dtype=float)
    return float(np.sum(w**2 * np.cos(freqs @ delta)) / norm_sq)


def phi_omega(lattice: FrequencyLattice, x: np.ndarray, splitting: Splitting = is_positive_rep) -> np.ndarray:
    """重みなしの線形モデル特徴 (1, cos⟨ω_1,x⟩, sin⟨ω_1,x⟩, …) を半格子上で返す

    Args:
        lattice (FrequencyLattice): 周波数格子
        x (np.ndarray): 長さ d の入力
        splitting (Splitting, optional): 鏡像対の分割規則

    Returns:
        np.ndarray: 長さ |Ω̃| の実ベクトル
    """
    indices = index_grid(lattice)
    freqs = frequency_grid(lattice)
    mask = positive_mask(indices, splitting)
    mask[indices.shape[0] // 2] = False
    angles = freqs[mask] @ np.asarray(x, dtype=float)
    pairs = np.stack([np.cos(angles), np.sin(angles)], axis=1).ravel()
    return np.concatenate([[1.0], pairs])


def dense_feature_phi1(
    lattice: FrequencyLattice,
    weights: WeightMPS,
    x: np.ndarray,
    splitting: Splitting = is_positive_rep,
) -> np.ndarray:
    """半格子上の実特徴ベクトル φ⁽¹⁾(x) = (w₀, w₁cos, w₁sin, …)/‖w‖ を返す（参照実装）

    Args:
        lattice (FrequencyLattice): 周波数格子
        weights (WeightMPS): 重み付けMPS
        x (np.ndarray): 長さ d の入力
        splitting (Splitting, optional): 鏡像対の分割規則

    Returns:
        np.ndarray: 長さ |Ω̃| の実ベクトル
    """
    freqs, w, norm_sq = _half_lattice_weights(lattice, weights, splitting)
    angles = freqs[1:] @ np.asarray(x, dtype=float)
    pairs = (w[1:, None] * np.stack([np.cos(angles), np.sin(angles)], axis=1)).ravel()
    return np.concatenate([[w[0]], pairs]) / math.sqrt(norm_sq)


def assert_psd(matrix: np.ndarray, tol: float = 1e-8) -> float:
    """対称行列が（許容誤差内で）半正定値であることを検証する

    Args:
        matrix (np.ndarray): 対称行列
        tol (float, optional): 最小固有値の許容下限の絶対値。デフォルトは1e-8

    Returns:
        float: 最小固有値

    Raises:
        NumericError: 最小固有値が −tol を下回る場合
    """
    sym = 0.5 * (matrix + np.conj(matrix).T)
    min_eig = float(np.min(np.linalg.eigvalsh(sym))) if sym.size else 0.0
    if min_eig < -tol:
        raise NumericError(f"行列が半正定値ではありません: 最小固有値 {min_eig:.3e}")
    return min_eig
