"""
MPS重み付けモジュール

このモジュールは、周波数格子 Ω̃_D 上の重み付け w̃ を行列積状態（MPS）として表現し、
対称化、C テンソル、コピーテンソルによるアダマール積（B テンソル）、二乗和の縮約、
各点評価、および二乗重み分布からの厳密サンプリングを提供します。

テンソル j の形状は (左ボンド, 2M_j+1, 右ボンド) で、物理インデックスの位置 p はオフセット k = p − M_j に対応します。
"""

import json
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import settings
from ..exceptions import EnumerationCapError, LatticeError, ShapeMismatchError, ZeroWeightingError
from ..utils.contraction import cached_einsum, renormalize
from .lattice import FrequencyLattice, MultiIndex, Splitting, is_positive_rep

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightMPS:
    """周波数格子上の重み付けを表すMPS

    tensors は3階テンソルのタプルで、隣接ボンドが一致し、両端のボンドは1です。
    symmetric が True の場合、eval_weight(idx) = eval_weight(−idx) が全 idx で成り立ちます。
    seed はランダム生成時のシードを記録します。
    """

    tensors: Tuple[np.ndarray, ...]
    symmetric: bool = False
    seed: Optional[int] = None

    def __post_init__(self):
        tensors = []
        for j, tensor in enumerate(self.tensors):
            arr = np.array(tensor, dtype=float, copy=True)
            if arr.ndim != 3:
                raise ShapeMismatchError(f"サイト {j} のテンソルは3階である必要があります: ndim={arr.ndim}")
            if arr.shape[1] % 2 != 1:
                raise ShapeMismatchError(f"サイト {j} の物理次元は奇数である必要があります: {arr.shape[1]}")
            arr.setflags(write=False)
            tensors.append(arr)
        if not tensors:
            raise ShapeMismatchError("MPSには少なくとも1つのテンソルが必要です")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
            raise ShapeMismatchError("MPSの両端のボンド次元は1である必要があります")
        for j, (left, right) in enumerate(zip(tensors, tensors[1:])):
            if left.shape[2] != right.shape[0]:
                raise ShapeMismatchError(
                    f"サイト {j} と {j + 1} のボンド次元が一致しません: {left.shape[2]} != {right.shape[0]}"
                )
        object.__setattr__(self, "tensors", tuple(tensors))

    @property
    def d(self) -> int:
        """サイト数"""
        return len(self.tensors)

    @property
    def phys_dims(self) -> Tuple[int, ...]:
        """各サイトの物理次元 2M_j+1"""
        return tuple(t.shape[1] for t in self.tensors)

    def __repr__(self) -> str:
        """文字列表現

        Returns:
            str: MPSの文字列表現
        """
        return f"<WeightMPS(d={self.d}, bonds={bond_dims(self)}, symmetric={self.symmetric})>"


def bond_dims(mps: WeightMPS) -> List[int]:
    """ボンド次元のリスト（長さ d+1、両端は1）を返す"""
    return [mps.tensors[0].shape[0]] + [t.shape[2] for t in mps.tensors]


def max_bond(mps: WeightMPS) -> int:
    """最大ボンド次元 D を返す"""
    return max(bond_dims(mps))


def check_lattice(mps: WeightMPS, lattice: FrequencyLattice) -> None:
    """MPSの物理次元が格子と一致するか検証する

    Raises:
        ShapeMismatchError: 一致しない場合
    """
    if mps.phys_dims != lattice.dims:
        raise ShapeMismatchError(f"MPSの物理次元 {mps.phys_dims} が格子の次元 {lattice.dims} と一致しません")


def _positions(mps: WeightMPS, idx: Sequence[int]) -> List[int]:
    """オフセットを物理インデックスの位置に変換する"""
    if len(idx) != mps.d:
        raise ShapeMismatchError(f"マルチインデックスの長さ {len(idx)} がMPSのサイト数 {mps.d} と一致しません")
    positions = []
    for j, (k, dim) in enumerate(zip(idx, mps.phys_dims)):
        M = dim // 2
        if not -M <= int(k) <= M:
            raise LatticeError(f"軸 {j} のインデックス {k} が範囲 [-{M}, {M}] 外です")
        positions.append(int(k) + M)
    return positions


def eval_weight(mps: WeightMPS, idx: Sequence[int]) -> float:
    """マルチインデックスにおける重み w̃[ω_idx] を評価する

    各サイトで物理インデックスを固定した行列の積（行ベクトル × 行列 × 列ベクトル）を計算します。

    Args:
        mps (WeightMPS): 重み付けMPS
        idx (Sequence[int]): マルチインデックス（オフセット）

    Returns:
        float: 重み
    """
    vec = np.ones(1)
    for tensor, p in zip(mps.tensors, _positions(mps, idx)):
        vec = vec @ tensor[:, p, :]
    return float(vec[0])


def flip(mps: WeightMPS) -> WeightMPS:
    """全サイトにインデックス反転 k → −k を適用したMPSを返す"""
    return WeightMPS(tuple(t[:, ::-1, :] for t in mps.tensors), symmetric=mps.symmetric)


def add(a: WeightMPS, b: WeightMPS, alpha: float = 1.0, beta: float = 1.0) -> WeightMPS:
    """線形結合 alpha·a + beta·b をボンドの直和で構成する

    Args:
        a (WeightMPS): 1つ目のMPS
        b (WeightMPS): 2つ目のMPS
        alpha (float, optional): a の係数。デフォルトは1
        beta (float, optional): b の係数。デフォルトは1

    Returns:
        WeightMPS: ボンド次元が a と b の和になったMPS
    """
    if a.phys_dims != b.phys_dims:
        raise ShapeMismatchError(f"物理次元が一致しません: {a.phys_dims} != {b.phys_dims}")
    if a.d == 1:
        return WeightMPS((alpha * a.tensors[0] + beta * b.tensors[0],))

    tensors = []
    last = a.d - 1
    for j, (ta, tb) in enumerate(zip(a.tensors, b.tensors)):
        if j == 0:
            tensors.append(np.concatenate([alpha * ta, beta * tb], axis=2))
        elif j == last:
            tensors.append(np.concatenate([ta, tb], axis=0))
        else:
            la, m, ra = ta.shape
            lb, _, rb = tb.shape
            block = np.zeros((la + lb, m, ra + rb))
            block[:la, :, :ra] = ta
            block[la:, :, ra:] = tb
            tensors.append(block)
    return WeightMPS(tuple(tensors))


def symmetrize(mps: WeightMPS) -> WeightMPS:
    """鏡像平均 (w̃[k] + w̃[−k])/2 をとった対称MPSを返す

    ボンド次元は入力の高々2倍です。対称な入力は値として不動点になります。

    Args:
        mps (WeightMPS): 重み付けMPS

    Returns:
        WeightMPS: symmetric フラグが立った対称MPS
    """
    averaged = add(mps, flip(mps), 0.5, 0.5)
    return WeightMPS(averaged.tensors, symmetric=True, seed=mps.seed)


def c_tensor_mps(lattice: FrequencyLattice) -> WeightMPS:
    """C テンソル（全ゼロインデックスで √2、それ以外で1）のMPSを構築する

    C = 1 + (√2 − 1)·∏_j δ_{k_j,0} をボンド次元2で表現します（d=1 の場合はボンド次元1）。

    Args:
        lattice (FrequencyLattice): 周波数格子

    Returns:
        WeightMPS: 対称な C テンソルMPS
    """
    excess = np.sqrt(2.0) - 1.0
    deltas = []
    for axis in lattice.axes:
        delta = np.zeros(axis.dim)
        delta[axis.M] = 1.0
        deltas.append(delta)

    if lattice.d == 1:
        core = np.ones(lattice.dims[0]) + excess * deltas[0]
        return WeightMPS((core.reshape(1, -1, 1),), symmetric=True)

    tensors = []
    last = lattice.d - 1
    for j, (axis, delta) in enumerate(zip(lattice.axes, deltas)):
        ones = np.ones(axis.dim)
        if j == 0:
            tensor = np.stack([ones, excess * delta], axis=1).reshape(1, axis.dim, 2)
        elif j == last:
            tensor = np.stack([ones, delta], axis=0).reshape(2, axis.dim, 1)
        else:
            tensor = np.zeros((2, axis.dim, 2))
            tensor[0, :, 0] = ones
            tensor[1, :, 1] = delta
        tensors.append(tensor)
    return WeightMPS(tuple(tensors), symmetric=True)


def hadamard(a: WeightMPS, b: WeightMPS) -> WeightMPS:
    """コピーテンソルによる要素ごとの積（アダマール積）を返す

    各物理インデックスでボンド行列のクロネッカー積をとるため、ボンド次元は積になります。
    (c_tensor_mps, w̃_s) に適用すると B テンソルが得られます。

    Args:
        a (WeightMPS): 1つ目のMPS
        b (WeightMPS): 2つ目のMPS

    Returns:
        WeightMPS: eval_weight(out, idx) = eval_weight(a, idx)·eval_weight(b, idx) を満たすMPS
    """
    if a.phys_dims != b.phys_dims:
        raise ShapeMismatchError(f"物理次元が一致しません: {a.phys_dims} != {b.phys_dims}")
    tensors = []
    for ta, tb in zip(a.tensors, b.tensors):
        la, m, ra = ta.shape
        lb, _, rb = tb.shape
        prod = np.einsum("akb,ckd->ackbd", ta, tb).reshape(la * lb, m, ra * rb)
        tensors.append(prod)
    return WeightMPS(tuple(tensors), symmetric=a.symmetric and b.symmetric)


def log_squared_sum(mps: WeightMPS) -> Tuple[float, float]:
    """二乗和 Σ_idx w̃[idx]² を (値, 対数スケール) の形で返す

    二重化した鎖を左から辺・ボンド・ボンドの順に縮約します（計算量 O(d·D³·M̃_max)）。
    各サイトで環境を正規化し、二乗和は value·exp(log_scale) になります。

    Args:
        mps (WeightMPS): 重み付けMPS

    Returns:
        Tuple[float, float]: 正規化された値と対数スケール
    """
    env = np.ones((1, 1))
    log_scale = 0.0
    for tensor in mps.tensors:
        half = cached_einsum("ab,akc->bkc", env, tensor)
        env = cached_einsum("bkc,bkd->cd", half, tensor)
        env, logs = renormalize(env[None], axis=(1, 2))
        env = env[0]
        log_scale += float(logs[0])
    return float(env[0, 0]), log_scale


def squared_sum(mps: WeightMPS) -> float:
    """二乗和 Σ_idx w̃[idx]² を縮約で計算する（列挙は行わない）

    B テンソルに適用すると 2‖w‖²₂ になります。

    Args:
        mps (WeightMPS): 重み付けMPS

    Returns:
        float: 二乗和
    """
    value, log_scale = log_squared_sum(mps)
    if value == 0.0:
        return 0.0
    return float(value * np.exp(log_scale))


def to_dense(mps: WeightMPS, cap: int = 0) -> np.ndarray:
    """MPSを密テンソル（形状 phys_dims）に展開する

    Args:
        mps (WeightMPS): 重み付けMPS
        cap (int, optional): 要素数の上限。0の場合は設定値

    Returns:
        np.ndarray: 密テンソル

    Raises:
        EnumerationCapError: 要素数が上限を超える場合
    """
    cap = cap or settings.ENUMERATION_CAP
    size = int(np.prod(mps.phys_dims, dtype=object))
    if size > cap:
        raise EnumerationCapError(f"密テンソルの要素数 {size} が列挙上限 {cap} を超えています")
    dense = mps.tensors[0].reshape(mps.tensors[0].shape[1], -1)
    for tensor in mps.tensors[1:]:
        dense = np.tensordot(dense, tensor, axes=([-1], [0]))
    return dense.reshape(mps.phys_dims)


def induced_weights(mps: WeightMPS, splitting: Splitting = is_positive_rep) -> Dict[MultiIndex, float]:
    """半格子上に誘導される重み付け w を返す（全列挙）

    Args:
        mps (WeightMPS): 重み付けMPS
        splitting (Splitting, optional): 鏡像対の分割規則。デフォルトは is_positive_rep

    Returns:
        Dict[MultiIndex, float]: 代表元から重みへの辞書
    """
    dense = to_dense(mps)
    Ms = [dim // 2 for dim in mps.phys_dims]
    weights = {}
    for position in np.ndindex(*dense.shape):
        idx = tuple(p - M for p, M in zip(position, Ms))
        if splitting(idx):
            weights[idx] = float(dense[position])
    return weights


def is_symmetric_dense(mps: WeightMPS, tol: float = 1e-12) -> bool:
    """全列挙により w̃[idx] = w̃[−idx] を検証する"""
    dense = to_dense(mps)
    flipped = dense[tuple(slice(None, None, -1) for _ in range(dense.ndim))]
    return bool(np.allclose(dense, flipped, rtol=0.0, atol=tol))


def _right_environments(mps: WeightMPS) -> List[np.ndarray]:
    """二重化した鎖の右環境を右端から計算する（スケールは各サイトで正規化）"""
    envs = [np.ones((1, 1))]
    for tensor in reversed(mps.tensors):
        half = cached_einsum("akc,cd->akd", tensor, envs[-1])
        env = cached_einsum("akd,bkd->ab", half, tensor)
        env, _ = renormalize(env[None], axis=(1, 2))
        envs.append(env[0])
    envs.reverse()
    return envs


def sample_offsets(mps: WeightMPS, rng: np.random.Generator, count: int) -> np.ndarray:
    """p(idx) ∝ w̃[idx]² から独立同分布のサンプルを (count, d) のオフセット配列として返す

    二重化した鎖の右環境を先に計算し、サイト1からdまで厳密な条件付き周辺分布から順にサンプリングします。
    環境はこの呼び出しの中だけでキャッシュされ、MPS自体は変更されません。

    Args:
        mps (WeightMPS): 重み付けMPS
        rng (np.random.Generator): 乱数生成器
        count (int): サンプル数

    Returns:
        np.ndarray: オフセットの配列

    Raises:
        ZeroWeightingError: 二乗和がゼロの場合
    """
    if count < 1:
        raise ValueError(f"サンプル数は正である必要があります: {count}")
    value, _ = log_squared_sum(mps)
    if not value > 0.0:
        raise ZeroWeightingError("重み付けの二乗和がゼロのためサンプリングできません")

    right_envs = _right_environments(mps)
    samples = np.empty((count, mps.d), dtype=int)
    left = np.ones((count, 1))
    rows = np.arange(count)
    for j, tensor in enumerate(mps.tensors):
        branch = cached_einsum("na,akb->nkb", left, tensor)
        probs = cached_einsum("nkb,bc,nkc->nk", branch, right_envs[j + 1], branch)
        probs = np.clip(probs, 0.0, None)
        totals = probs.sum(axis=1, keepdims=True)
        if np.any(totals <= 0.0):
            raise ZeroWeightingError(f"サイト {j} の条件付き分布の正規化定数がゼロです")
        cumulative = np.cumsum(probs / totals, axis=1)
        draws = rng.random(count)
        choice = np.minimum((cumulative < draws[:, None]).sum(axis=1), tensor.shape[1] - 1)
        samples[:, j] = choice - tensor.shape[1] // 2
        left, _ = renormalize(branch[rows, choice][:, None, :], axis=(1, 2))
        left = left[:, 0, :]
    return samples


def sample_indices(mps: WeightMPS, rng: np.random.Generator, count: int) -> List[MultiIndex]:
    """p(idx) ∝ w̃[idx]² から独立同分布のマルチインデックスをサンプリングする

    Args:
        mps (WeightMPS): 重み付けMPS
        rng (np.random.Generator): 乱数生成器（並行利用時は呼び出し側で独立なストリームを用意する）
        count (int): サンプル数

    Returns:
        List[MultiIndex]: サンプルのリスト
    """
    return [tuple(int(k) for k in row) for row in sample_offsets(mps, rng, count)]


def uniform_mps(lattice: FrequencyLattice) -> WeightMPS:
    """全重み1（正準重み付け）のボンド次元1のMPSを構築する"""
    return WeightMPS(tuple(np.ones((1, dim, 1)) for dim in lattice.dims), symmetric=True)


def product_weights(lattice: FrequencyLattice, vectors: Sequence[Sequence[float]], strict: bool = False) -> WeightMPS:
    """軸ごとの重みベクトルの積 ∏_j v⁽ʲ⁾[k_j] を表すボンド次元1のMPSを構築する

    ゼロ要素は許容されますが警告を出します（strict=True の場合はエラー）。

    Args:
        lattice (FrequencyLattice): 周波数格子
        vectors (Sequence[Sequence[float]]): 軸ごとの重みベクトル（長さ 2M_j+1、オフセット −M…M の順）
        strict (bool, optional): ゼロ要素をエラーにするかどうか。デフォルトはFalse

    Returns:
        WeightMPS: 積重み付けMPS
    """
    if len(vectors) != lattice.d:
        raise ShapeMismatchError(f"重みベクトルの数 {len(vectors)} が格子の次元 {lattice.d} と一致しません")
    tensors = []
    symmetric = True
    for j, (vec, dim) in enumerate(zip(vectors, lattice.dims)):
        arr = np.asarray(vec, dtype=float)
        if arr.shape != (dim,):
            raise ShapeMismatchError(f"軸 {j} の重みベクトルの長さ {arr.shape} が {dim} と一致しません")
        if np.any(arr == 0.0):
            if strict:
                raise ZeroWeightingError(f"軸 {j} の重みベクトルにゼロ要素が含まれています")
            logger.warning(f"軸 {j} の重みベクトルにゼロ要素が含まれています（Ã_w は半正定値になります）")
        symmetric = symmetric and bool(np.array_equal(arr, arr[::-1]))
        tensors.append(arr.reshape(1, dim, 1))
    return WeightMPS(tuple(tensors), symmetric=symmetric)


def random_mps(lattice: FrequencyLattice, D: int, seed: int) -> WeightMPS:
    """標準正規分布の要素を持つボンド次元 D のランダムMPSを構築する

    同じシードからは同一のテンソルが得られます。

    Args:
        lattice (FrequencyLattice): 周波数格子
        D (int): 内部ボンド次元
        seed (int): 乱数シード

    Returns:
        WeightMPS: ランダムMPS
    """
    if D < 1:
        raise ValueError(f"ボンド次元は1以上である必要があります: {D}")
    rng = np.random.default_rng(seed)
    bonds = [1] + [D] * (lattice.d - 1) + [1]
    tensors = tuple(rng.standard_normal((bonds[j], dim, bonds[j + 1])) for j, dim in enumerate(lattice.dims))
    return WeightMPS(tensors, seed=seed)


def mps_to_dict(mps: WeightMPS, constructor: Optional[str] = None) -> Dict[str, Any]:
    """MPSをJSON直列化用の辞書に変換する（形状と行優先で平坦化した要素）"""
    return {
        "symmetric": mps.symmetric,
        "seed": mps.seed,
        "constructor": constructor,
        "tensors": [{"shape": list(t.shape), "entries": t.ravel().tolist()} for t in mps.tensors],
    }


def mps_from_dict(data: Dict[str, Any]) -> WeightMPS:
    """JSON直列化用の辞書からMPSを復元する"""
    tensors = []
    for j, item in enumerate(data["tensors"]):
        entries = np.asarray(item["entries"], dtype=float)
        shape = tuple(int(s) for s in item["shape"])
        if entries.size != int(np.prod(shape)):
            raise ShapeMismatchError(f"サイト {j} の要素数 {entries.size} が形状 {shape} と一致しません")
        tensors.append(entries.reshape(shape))
    return WeightMPS(tuple(tensors), symmetric=bool(data.get("symmetric", False)), seed=data.get("seed"))


def mps_to_json(mps: WeightMPS, constructor: Optional[str] = None) -> str:
    """MPSをJSON文字列に直列化する"""
    return json.dumps(mps_to_dict(mps, constructor), sort_keys=True)


def mps_from_json(text: str) -> WeightMPS:
    """JSON文字列からMPSを復元する"""
    return mps_from_dict(json.loads(text))
