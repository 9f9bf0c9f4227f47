"""
周波数格子モジュール

このモジュールは、データエンコーディング戦略から生じる周波数集合 Ω̃_D = Ω̃⁽¹⁾ × … × Ω̃⁽ᵈ⁾ を構築し、
マルチインデックスによるアドレッシングと、鏡像対を分割した半格子 Ω_D の列挙を提供します。

各軸の位置は中心からの符号付きオフセット −M_j…M_j で指定します（全モジュール共通の規約）。
"""

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, List, Sequence, Tuple

import numpy as np

from ..config import settings
from ..exceptions import EnumerationCapError, LatticeError

MultiIndex = Tuple[int, ...]
Splitting = Callable[[MultiIndex], bool]


@dataclass(frozen=True)
class FrequencyAxis:
    """1軸分の周波数集合 Ω̃⁽ʲ⁾

    values は狭義単調増加で、中心に0をちょうど1つ含み、鏡像対称（values[-k] = -values[k]）です。
    """

    values: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if len(values) % 2 != 1:
            raise LatticeError(f"周波数軸の要素数は奇数である必要があります: {len(values)}")
        if any(not math.isfinite(v) for v in values):
            raise LatticeError("周波数軸に有限でない値が含まれています")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise LatticeError(f"周波数軸は狭義単調増加である必要があります: {values}")
        m = len(values) // 2
        if values[m] != 0.0:
            raise LatticeError(f"周波数軸の中心は0である必要があります: {values[m]}")
        for k in range(1, m + 1):
            if values[m + k] != -values[m - k]:
                raise LatticeError(f"周波数軸が鏡像対称ではありません: offset {k}")

    @property
    def M(self) -> int:
        """非ゼロ周波数の鏡像対の数"""
        return len(self.values) // 2

    @property
    def dim(self) -> int:
        """軸の次元 M̃_j = 2M_j+1"""
        return len(self.values)

    @property
    def array(self) -> np.ndarray:
        """周波数をnumpy配列として返す"""
        return np.asarray(self.values, dtype=float)

    def value_at(self, offset: int) -> float:
        """中心からのオフセットに対応する周波数を返す

        Args:
            offset (int): オフセット（−M…M）

        Returns:
            float: 周波数
        """
        if not -self.M <= offset <= self.M:
            raise LatticeError(f"オフセット {offset} が範囲 [-{self.M}, {self.M}] 外です")
        return self.values[offset + self.M]

    def is_integer(self) -> bool:
        """全周波数が整数かどうか"""
        return all(float(v).is_integer() for v in self.values)


@dataclass(frozen=True)
class FrequencyLattice:
    """デカルト積構造を持つ周波数格子 Ω̃_D"""

    axes: Tuple[FrequencyAxis, ...]

    def __post_init__(self):
        axes = tuple(self.axes)
        if not axes:
            raise LatticeError("周波数格子には少なくとも1つの軸が必要です")
        object.__setattr__(self, "axes", axes)

    @property
    def d(self) -> int:
        """入力次元 d"""
        return len(self.axes)

    @property
    def dims(self) -> Tuple[int, ...]:
        """各軸の次元 (2M_1+1, …, 2M_d+1)"""
        return tuple(axis.dim for axis in self.axes)

    @property
    def Ms(self) -> Tuple[int, ...]:
        """各軸の M_j"""
        return tuple(axis.M for axis in self.axes)

    @property
    def size(self) -> int:
        """格子点数 ∏(2M_j+1)"""
        return lattice_size(self)


def _dedup_sorted(values: Sequence[float], tol: float) -> List[float]:
    """ソート済みの値から許容誤差以内の近接値をまとめる"""
    merged: List[float] = []
    for v in values:
        if merged and abs(v - merged[-1]) <= tol:
            continue
        merged.append(v)
    return merged


def axis_from_spectra(eigenvalue_lists: Sequence[Sequence[float]]) -> FrequencyAxis:
    """ゲート生成子の固有値リストから周波数軸を構築する

    各ゲートの固有値差集合 {λ_a − λ_b} のミンコフスキー和をとり、ソートして重複を除きます。
    1e−12 以内の近接値は同一の周波数として扱います。

    Args:
        eigenvalue_lists (Sequence[Sequence[float]]): ゲートごとの固有値リスト

    Returns:
        FrequencyAxis: 周波数軸

    Raises:
        LatticeError: 外側または内側のリストが空の場合、有限でない値が含まれる場合
    """
    if len(eigenvalue_lists) == 0:
        raise LatticeError("固有値リストが空です")

    tol = settings.DEDUP_TOL
    freqs = [0.0]
    for spectrum in eigenvalue_lists:
        eigs = np.asarray(list(spectrum), dtype=float)
        if eigs.size == 0:
            raise LatticeError("空の固有値リストが含まれています")
        if not np.all(np.isfinite(eigs)):
            raise LatticeError("固有値リストに有限でない値が含まれています")
        diffs = _dedup_sorted(sorted((eigs[:, None] - eigs[None, :]).ravel()), tol)
        sums = sorted(f + g for f in freqs for g in diffs)
        freqs = _dedup_sorted(sums, tol)

    positives = [f for f in freqs if f > tol]
    negatives = [-f for f in freqs if f < -tol]
    # 差集合は鏡像対称なので、正側と負側は許容誤差内で一致する
    assert len(positives) == len(negatives), "ミンコフスキー和が鏡像対称になっていません"
    assert all(abs(p - n) <= 10 * tol * max(1.0, abs(p)) for p, n in zip(positives, sorted(negatives)))

    values = [-p for p in reversed(positives)] + [0.0] + positives
    return FrequencyAxis(tuple(values))


def axis_integer(M: int) -> FrequencyAxis:
    """整数周波数軸 (−M, …, M) を構築する

    Args:
        M (int): 非ゼロ周波数の鏡像対の数

    Returns:
        FrequencyAxis: 周波数軸
    """
    if M < 0:
        raise LatticeError(f"M は非負である必要があります: {M}")
    return FrequencyAxis(tuple(float(k) for k in range(-M, M + 1)))


def lattice_size(lattice: FrequencyLattice) -> int:
    """格子点数 ∏(2M_j+1) を返す"""
    return int(np.prod([axis.dim for axis in lattice.axes], dtype=object))


def lattice_dims(lattice: FrequencyLattice) -> Tuple[int, ...]:
    """各軸の次元 (2M_1+1, …, 2M_d+1) を返す"""
    return lattice.dims


def max_local_dim(lattice: FrequencyLattice) -> int:
    """M̃_max = max_j (2M_j+1) を返す"""
    return max(lattice.dims)


def check_index(lattice: FrequencyLattice, idx: Sequence[int]) -> None:
    """マルチインデックスが格子の範囲内か検証する

    Args:
        lattice (FrequencyLattice): 周波数格子
        idx (Sequence[int]): マルチインデックス

    Raises:
        LatticeError: 長さが一致しない、または範囲外の成分がある場合
    """
    if len(idx) != lattice.d:
        raise LatticeError(f"マルチインデックスの長さ {len(idx)} が格子の次元 {lattice.d} と一致しません")
    for j, (k, axis) in enumerate(zip(idx, lattice.axes)):
        if not -axis.M <= int(k) <= axis.M:
            raise LatticeError(f"軸 {j} のインデックス {k} が範囲 [-{axis.M}, {axis.M}] 外です")


def frequency_of(lattice: FrequencyLattice, idx: Sequence[int]) -> np.ndarray:
    """マルチインデックスに対応する周波数ベクトル ω_{k_1,…,k_d} を返す

    Args:
        lattice (FrequencyLattice): 周波数格子
        idx (Sequence[int]): マルチインデックス

    Returns:
        np.ndarray: 長さ d の周波数ベクトル
    """
    check_index(lattice, idx)
    return np.array([axis.value_at(int(k)) for axis, k in zip(lattice.axes, idx)], dtype=float)


def negate(idx: Sequence[int]) -> MultiIndex:
    """マルチインデックスの符号を反転する"""
    return tuple(-int(k) for k in idx)


def is_positive_rep(idx: Sequence[int]) -> bool:
    """半格子の代表元かどうかを判定する（最初の非ゼロ成分が正）

    全ゼロのインデックスは ω₀ として常に代表元です。

    Args:
        idx (Sequence[int]): マルチインデックス

    Returns:
        bool: 代表元ならTrue
    """
    for k in idx:
        if k != 0:
            return k > 0
    return True


def is_positive_rep_last(idx: Sequence[int]) -> bool:
    """別の分割規則（最後の非ゼロ成分が正）による代表元判定"""
    return is_positive_rep(tuple(reversed(tuple(idx))))


SPLITTINGS = {
    "first_nonzero": is_positive_rep,
    "last_nonzero": is_positive_rep_last,
}


def all_indices(lattice: FrequencyLattice) -> Iterator[MultiIndex]:
    """格子の全マルチインデックスを行優先順で列挙する"""
    return itertools.product(*(range(-axis.M, axis.M + 1) for axis in lattice.axes))


def half_lattice(lattice: FrequencyLattice, splitting: Splitting = is_positive_rep) -> Iterator[MultiIndex]:
    """半格子 Ω_D の代表元を列挙する

    計算量は格子点数に対して線形（d に対して指数的）です。

    Args:
        lattice (FrequencyLattice): 周波数格子
        splitting (Splitting, optional): 鏡像対の分割規則。デフォルトは is_positive_rep

    Yields:
        MultiIndex: 代表元のマルチインデックス
    """
    for idx in all_indices(lattice):
        if splitting(idx):
            yield idx


def _check_cap(lattice: FrequencyLattice, cap: int) -> None:
    """全列挙の上限を検証する"""
    if lattice.size > cap:
        raise EnumerationCapError(f"格子点数 {lattice.size} が列挙上限 {cap} を超えています")


def index_grid(lattice: FrequencyLattice, cap: int = 0) -> np.ndarray:
    """全マルチインデックスを (N, d) の整数配列として返す

    行の順序は形状 lattice.dims の密テンソルを行優先で平坦化した順序と一致します。

    Args:
        lattice (FrequencyLattice): 周波数格子
        cap (int, optional): 列挙上限。0の場合は設定値

    Returns:
        np.ndarray: オフセットの配列
    """
    _check_cap(lattice, cap or settings.ENUMERATION_CAP)
    grids = np.indices(lattice.dims).reshape(lattice.d, -1).T
    return grids - np.asarray(lattice.Ms, dtype=int)[None, :]


def frequency_grid(lattice: FrequencyLattice, cap: int = 0) -> np.ndarray:
    """全格子点の周波数ベクトルを (N, d) の配列として返す"""
    positions = index_grid(lattice, cap) + np.asarray(lattice.Ms, dtype=int)[None, :]
    columns = [axis.array[positions[:, j]] for j, axis in enumerate(lattice.axes)]
    return np.stack(columns, axis=1)


def positive_mask(indices: np.ndarray, splitting: Splitting = is_positive_rep) -> np.ndarray:
    """index_grid の各行が代表元かどうかのマスクを返す"""
    if splitting is is_positive_rep:
        # 最初の非ゼロ成分の符号をベクトル化して判定
        nonzero = indices != 0
        has_nonzero = nonzero.any(axis=1)
        first = np.argmax(nonzero, axis=1)
        signs = indices[np.arange(indices.shape[0]), first]
        return ~has_nonzero | (signs > 0)
    return np.array([splitting(tuple(row)) for row in indices], dtype=bool)
