"""
PQC検証サービスモジュール

このモジュールは、小規模PQCを状態ベクトルで厳密にシミュレーションし、
モデル関数 f_θ(x) = ⟨0|U†(x,θ) O U(x,θ)|0⟩ がエンコーディング戦略の周波数格子上の
複素指数関数の張る空間に含まれることを、最小二乗フーリエフィットで検証します。
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import svdvals

from ..config import settings
from ..exceptions import FactorizationError, ImaginaryResidueError, NumericError, ShapeMismatchError
from ..models.circuit import UNITARY_TOL, CircuitSpec, DataGate, FixedGate
from ..models.lattice import (
    FrequencyAxis,
    FrequencyLattice,
    axis_from_spectra,
    axis_integer,
    frequency_grid,
    index_grid,
    lattice_size,
    positive_mask,
)
from ..utils.linalg import solve_psd

logger = logging.getLogger(__name__)

REALITY_TOL = 1e-10


@dataclass(frozen=True)
class FourierFit:
    """フーリエ係数のフィット結果

    coefficients は全格子上の係数 c_ω（index_grid の行順）、residual はRMS残差です。
    """

    coefficients: np.ndarray
    residual: float
    sample_count: int
    seed: int


def apply_gate(state: np.ndarray, matrix: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """q 階テンソルとして保持した状態ベクトルにゲートを作用させる

    Args:
        state (np.ndarray): 形状 (2,)*q の状態テンソル
        matrix (np.ndarray): 対象量子ビット上のゲート行列
        qubits (Sequence[int]): 対象量子ビット（行列の最上位ビットが qubits[0]）

    Returns:
        np.ndarray: 作用後の状態テンソル
    """
    k = len(qubits)
    gate = matrix.reshape((2,) * (2 * k))
    moved = np.tensordot(gate, state, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(moved, list(range(k)), list(qubits))


def statevector(circuit: CircuitSpec, x: np.ndarray) -> np.ndarray:
    """|0…0⟩ に回路を作用させた最終状態を返す

    ゲートはユニタリ性の許容誤差の範囲でノルムを変えるため、各ゲートの後でノルムのずれが
    その許容誤差（ゲート行列の次元倍）以内であることを検査してから正規化し直します。

    Args:
        circuit (CircuitSpec): 回路記述
        x (np.ndarray): 長さ d の入力

    Returns:
        np.ndarray: 長さ 2^q の状態ベクトル

    Raises:
        NumericError: ノルムが保存されない場合
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != circuit.n_inputs:
        raise ShapeMismatchError(f"入力の長さ {x.shape[0]} が回路の入力次元 {circuit.n_inputs} と一致しません")

    state = np.zeros((2,) * circuit.n_qubits, dtype=complex)
    state[(0,) * circuit.n_qubits] = 1.0
    for i, gate in enumerate(circuit.gates):
        if isinstance(gate, DataGate):
            matrix = gate.matrix(x[gate.axis])
        elif isinstance(gate, FixedGate):
            matrix = gate.unitary
        else:
            matrix = gate.matrix(circuit.params[gate.param])
        state = apply_gate(state, matrix, gate.qubits)
        norm = float(np.linalg.norm(state))
        if abs(norm - 1.0) > UNITARY_TOL * matrix.shape[0]:
            raise NumericError(f"ゲート {i} の後で状態のノルムが保存されていません: {norm:.15f}")
        state = state / norm
    return state.reshape(-1)


def simulate_f(circuit: CircuitSpec, x: np.ndarray) -> float:
    """モデル関数 f_θ(x) = ⟨ψ|O|ψ⟩ を評価する

    Args:
        circuit (CircuitSpec): 回路記述
        x (np.ndarray): 長さ d の入力

    Returns:
        float: 期待値

    Raises:
        ImaginaryResidueError: 期待値の虚部が 1e−10 を超える場合
    """
    psi = statevector(circuit, x)
    value = np.vdot(psi, circuit.observable @ psi)
    if abs(value.imag) > REALITY_TOL:
        raise ImaginaryResidueError(f"期待値の虚部 {value.imag:.3e} が許容値を超えています")
    return float(value.real)


def induced_lattice(circuit: CircuitSpec) -> FrequencyLattice:
    """回路のデータゲートの生成子スペクトルから周波数格子を構築する

    データゲートを持たない軸は M_j = 0 の軸 (0) になります。

    Args:
        circuit (CircuitSpec): 回路記述

    Returns:
        FrequencyLattice: 周波数格子
    """
    axes: List[FrequencyAxis] = []
    for axis in range(circuit.n_inputs):
        spectra = [gate.spectrum() for gate in circuit.data_gates(axis)]
        axes.append(axis_from_spectra(spectra) if spectra else axis_integer(0))
    return FrequencyLattice(tuple(axes))


def default_sample_count(lattice: FrequencyLattice) -> int:
    """フィットに使うサンプル数の既定値 max(4·|Ω̃|, 64)"""
    return max(settings.PQC_SAMPLE_FACTOR * lattice_size(lattice), settings.PQC_MIN_SAMPLES)


def fourier_fit(
    circuit: CircuitSpec,
    lattice: FrequencyLattice,
    sample_count: Optional[int] = None,
    seed: int = 0,
) -> FourierFit:
    """モデル関数を格子上の複素指数関数で最小二乗フィットする

    x を [0, 2π)^d から一様にサンプリングし、正規方程式 Φ^H Φ c = Φ^H f をジッター付きで解きます。
    設計行列 Φ の最小特異値と最大特異値の比が PQC_RANK_TOL を下回る場合は、周波数がサンプル数に対して
    近すぎて区別できないものとしてエラーにします。

    Args:
        circuit (CircuitSpec): 回路記述
        lattice (FrequencyLattice): 周波数格子
        sample_count (Optional[int], optional): サンプル数（2·|Ω̃| 以上）。デフォルトは max(4·|Ω̃|, 64)
        seed (int, optional): 乱数シード

    Returns:
        FourierFit: フィット結果

    Raises:
        EnumerationCapError: 格子点数が列挙上限を超える場合
        FactorizationError: 設計行列がランク落ちしている場合
    """
    if lattice.d != circuit.n_inputs:
        raise ShapeMismatchError(f"格子の次元 {lattice.d} が回路の入力次元 {circuit.n_inputs} と一致しません")
    freqs = frequency_grid(lattice)
    size = freqs.shape[0]
    sample_count = sample_count or default_sample_count(lattice)
    if sample_count < 2 * size:
        raise ValueError(f"サンプル数 {sample_count} は 2·|Ω̃| = {2 * size} 以上である必要があります")
    if not all(axis.is_integer() for axis in lattice.axes):
        logger.warning("格子に非整数の周波数が含まれるため、[0, 2π) 上のサンプリングは周期と一致しません")

    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 2.0 * np.pi, size=(sample_count, lattice.d))
    f = np.array([simulate_f(circuit, x) for x in X])
    design = np.exp(1j * (X @ freqs.T))
    singular = svdvals(design)
    ratio = float(singular[-1] / singular[0])
    if ratio < settings.PQC_RANK_TOL:
        raise FactorizationError(
            f"設計行列がランク落ちしています（特異値比 {ratio:.3e}）。"
            f"周波数が近すぎてサンプル数 {sample_count} では区別できません"
        )
    coefficients = solve_psd(design.conj().T @ design, design.conj().T @ f)
    residual = float(np.sqrt(np.mean(np.abs(design @ coefficients - f) ** 2)))

    logger.info(f"フーリエフィットが完了しました: |Ω̃|={size}, サンプル数={sample_count}, 残差={residual:.3e}")
    return FourierFit(coefficients=coefficients, residual=residual, sample_count=sample_count, seed=seed)


def conjugacy_error(fit: FourierFit) -> float:
    """max_ω |c_{−ω} − conj(c_ω)| を返す

    index_grid の行順では、平坦化した係数を逆順にすると ω → −ω の対応になります。
    """
    c = fit.coefficients
    return float(np.max(np.abs(c[::-1] - np.conj(c))))


def real_coefficients(fit: FourierFit, lattice: FrequencyLattice) -> Dict[str, Any]:
    """半格子上の実係数 c_ω₀、a_ω = c_ω + c_{−ω}、b_ω = i(c_ω − c_{−ω}) を返す

    Args:
        fit (FourierFit): フィット結果
        lattice (FrequencyLattice): フィットに使った周波数格子

    Returns:
        Dict[str, Any]: c0 と、代表元ごとの (index, a, b) のリスト
    """
    indices = index_grid(lattice)
    c = fit.coefficients
    mirrored = c[::-1]
    center = indices.shape[0] // 2
    mask = positive_mask(indices)
    mask[center] = False
    a = c + mirrored
    b = 1j * (c - mirrored)
    terms = [
        {"index": [int(k) for k in indices[i]], "a": float(a[i].real), "b": float(b[i].real)}
        for i in np.flatnonzero(mask)
    ]
    return {"c0": float(c[center].real), "terms": terms}


def evaluate_fourier(fit: FourierFit, lattice: FrequencyLattice, x: np.ndarray) -> float:
    """フィットしたフーリエ級数 Σ c_ω e^{i⟨ω,x⟩} の実部を評価する"""
    freqs = frequency_grid(lattice)
    return float(np.real(np.sum(fit.coefficients * np.exp(1j * (freqs @ np.asarray(x, dtype=float))))))
