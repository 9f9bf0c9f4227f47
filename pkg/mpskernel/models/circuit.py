"""
回路記述モデルモジュール

このモジュールは、小規模なPQC（パラメータ付き量子回路）の記述を定義します。
ゲートはデータエンコーディングゲート V(x_j) = exp(−i·x_j·H)、固定ユニタリ、
パラメータ付き回転 exp(−i·θ_p·G) の3種類で、観測量はエルミート行列です。

量子ビット0を最上位ビットとし、データの軸は0始まり（0 ≤ axis < n_inputs）です。
"""

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import unitary_group

from ..config import settings
from ..exceptions import ShapeMismatchError
from ..schemas import CircuitFile, MatrixSpec

UNITARY_TOL = 1e-10

_I2 = np.eye(2, dtype=complex)
PAULIS: Dict[str, np.ndarray] = {
    "I": _I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

NAMED_GATES: Dict[str, np.ndarray] = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0),
    "X": PAULIS["X"],
    "Y": PAULIS["Y"],
    "Z": PAULIS["Z"],
    "S": np.diag([1.0, 1j]),
    "T": np.diag([1.0, np.exp(1j * np.pi / 4)]),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "CZ": np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}

NAMED_GENERATORS: Dict[str, np.ndarray] = {
    "X": PAULIS["X"],
    "Y": PAULIS["Y"],
    "Z": PAULIS["Z"],
    "X/2": PAULIS["X"] / 2,
    "Y/2": PAULIS["Y"] / 2,
    "Z/2": PAULIS["Z"] / 2,
}


def _is_hermitian(matrix: np.ndarray) -> bool:
    return bool(np.allclose(matrix, matrix.conj().T, rtol=0.0, atol=UNITARY_TOL))


def _is_unitary(matrix: np.ndarray) -> bool:
    identity = np.eye(matrix.shape[0])
    return bool(np.allclose(matrix.conj().T @ matrix, identity, rtol=0.0, atol=UNITARY_TOL))


def _check_square(matrix: np.ndarray, n_qubits: int, name: str) -> None:
    size = 2**n_qubits
    if matrix.shape != (size, size):
        raise ShapeMismatchError(f"{name} の形状 {matrix.shape} が {n_qubits} 量子ビット ({size}×{size}) と一致しません")


@dataclass(frozen=True)
class DataGate:
    """データエンコーディングゲート V(x_j) = exp(−i·x_j·H)

    generator は対象量子ビット上のエルミート行列、label は名前付き生成子の名前（固有値指定の場合はNone）です。
    """

    axis: int
    qubits: Tuple[int, ...]
    generator: np.ndarray
    label: Optional[str] = None

    def __post_init__(self):
        gen = np.asarray(self.generator, dtype=complex)
        _check_square(gen, len(self.qubits), "データゲートの生成子")
        if not _is_hermitian(gen):
            raise ValueError("データゲートの生成子がエルミートではありません")
        object.__setattr__(self, "generator", gen)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))

    def spectrum(self) -> np.ndarray:
        """生成子の固有値"""
        return np.linalg.eigvalsh(self.generator)

    def matrix(self, x_j: float) -> np.ndarray:
        """x_j におけるゲート行列"""
        eigs, vecs = np.linalg.eigh(self.generator)
        return (vecs * np.exp(-1j * x_j * eigs)) @ vecs.conj().T


@dataclass(frozen=True)
class FixedGate:
    """固定ユニタリゲート"""

    qubits: Tuple[int, ...]
    unitary: np.ndarray
    label: Optional[str] = None

    def __post_init__(self):
        mat = np.asarray(self.unitary, dtype=complex)
        _check_square(mat, len(self.qubits), "固定ゲート")
        if not _is_unitary(mat):
            raise ValueError(f"固定ゲート {self.label or ''} がユニタリではありません")
        object.__setattr__(self, "unitary", mat)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))


@dataclass(frozen=True)
class RotationGate:
    """パラメータ付き回転ゲート exp(−i·θ_p·G)"""

    qubits: Tuple[int, ...]
    generator: np.ndarray
    param: int
    label: Optional[str] = None

    def __post_init__(self):
        gen = np.asarray(self.generator, dtype=complex)
        _check_square(gen, len(self.qubits), "回転ゲートの生成子")
        if not _is_hermitian(gen):
            raise ValueError("回転ゲートの生成子がエルミートではありません")
        object.__setattr__(self, "generator", gen)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))

    def matrix(self, theta: float) -> np.ndarray:
        """θ におけるゲート行列"""
        eigs, vecs = np.linalg.eigh(self.generator)
        return (vecs * np.exp(-1j * theta * eigs)) @ vecs.conj().T


Gate = Union[DataGate, FixedGate, RotationGate]


@dataclass(frozen=True)
class CircuitSpec:
    """小規模PQCの記述

    Attributes:
        n_qubits (int): 量子ビット数 q（上限は MAX_QUBITS）
        n_inputs (int): 入力次元 d
        gates (Tuple[Gate, ...]): 適用順のゲート列
        observable (np.ndarray): 2^q 次元のエルミート観測量
        params (Tuple[float, ...]): パラメータベクトル θ
    """

    n_qubits: int
    n_inputs: int
    gates: Tuple[Gate, ...]
    observable: np.ndarray
    params: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not 1 <= self.n_qubits <= settings.MAX_QUBITS:
            raise ValueError(f"量子ビット数は 1..{settings.MAX_QUBITS} である必要があります: {self.n_qubits}")
        if self.n_inputs < 1:
            raise ValueError(f"入力次元は1以上である必要があります: {self.n_inputs}")
        obs = np.asarray(self.observable, dtype=complex)
        _check_square(obs, self.n_qubits, "観測量")
        if not _is_hermitian(obs):
            raise ValueError("観測量がエルミートではありません")
        object.__setattr__(self, "observable", obs)
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

        for i, gate in enumerate(self.gates):
            if len(set(gate.qubits)) != len(gate.qubits) or any(not 0 <= q < self.n_qubits for q in gate.qubits):
                raise ShapeMismatchError(f"ゲート {i} の対象量子ビット {gate.qubits} が不正です")
            if isinstance(gate, DataGate) and not 0 <= gate.axis < self.n_inputs:
                raise ShapeMismatchError(f"ゲート {i} の軸 {gate.axis} が範囲 [0, {self.n_inputs}) 外です")
            if isinstance(gate, RotationGate) and not 0 <= gate.param < len(self.params):
                raise ShapeMismatchError(f"ゲート {i} のパラメータ番号 {gate.param} が範囲外です")

    def data_gates(self, axis: int) -> List[DataGate]:
        """指定した軸をエンコードするデータゲートの一覧"""
        return [g for g in self.gates if isinstance(g, DataGate) and g.axis == axis]


def pauli_string(ops: str, qubits: Sequence[int], n_qubits: int) -> np.ndarray:
    """指定した量子ビットにパウリ演算子を作用させる 2^q 次元の行列を返す

    Args:
        ops (str): パウリ文字列（例: "XZ"）
        qubits (Sequence[int]): 各文字を作用させる量子ビット
        n_qubits (int): 量子ビット数

    Returns:
        np.ndarray: テンソル積行列
    """
    if len(ops) != len(qubits):
        raise ShapeMismatchError(f"パウリ文字列 {ops} の長さが量子ビット数 {len(qubits)} と一致しません")
    factors = [_I2] * n_qubits
    for op, q in zip(ops, qubits):
        if op not in PAULIS:
            raise ValueError(f"不明なパウリ演算子です: {op}")
        factors[int(q)] = PAULIS[op]
    out = np.ones((1, 1), dtype=complex)
    for factor in factors:
        out = np.kron(out, factor)
    return out


def _matrix_from_parts(spec: MatrixSpec) -> np.ndarray:
    real = np.asarray(spec.real, dtype=float)
    if spec.imag is None:
        return real.astype(complex)
    return real + 1j * np.asarray(spec.imag, dtype=float)


def _matrix_to_parts(matrix: np.ndarray) -> Dict[str, Any]:
    return {"real": matrix.real.tolist(), "imag": matrix.imag.tolist()}


def circuit_from_dict(data: Dict[str, Any]) -> CircuitSpec:
    """回路JSON（辞書）から CircuitSpec を構築する

    入力はスキーマ（CircuitFile）で検証してから変換します。

    Args:
        data (Dict[str, Any]): 回路JSONの辞書

    Returns:
        CircuitSpec: 回路記述
    """
    spec = CircuitFile.model_validate(data)
    gates: List[Gate] = []
    for gate in spec.gates:
        qubits = tuple(gate.qubits)
        if gate.type == "data":
            if gate.generator is not None:
                gates.append(DataGate(gate.axis, qubits, NAMED_GENERATORS[gate.generator], label=gate.generator))
            else:
                gates.append(DataGate(gate.axis, qubits, np.diag(np.asarray(gate.eigenvalues, dtype=float))))
        elif gate.type == "fixed":
            if gate.name is not None:
                gates.append(FixedGate(qubits, NAMED_GATES[gate.name], label=gate.name))
            else:
                gates.append(FixedGate(qubits, _matrix_from_parts(gate.matrix)))
        else:
            gates.append(RotationGate(qubits, NAMED_GENERATORS[gate.generator], gate.param, label=gate.generator))

    if spec.observable.matrix is not None:
        observable = _matrix_from_parts(spec.observable.matrix)
    else:
        observable = np.zeros((2**spec.n_qubits, 2**spec.n_qubits), dtype=complex)
        for term in spec.observable.paulis:
            observable = observable + term.coeff * pauli_string(term.ops, term.qubits, spec.n_qubits)
    return CircuitSpec(spec.n_qubits, spec.n_inputs, tuple(gates), observable, tuple(spec.params))


def circuit_to_dict(circuit: CircuitSpec) -> Dict[str, Any]:
    """CircuitSpec を回路JSON（辞書）に変換する（観測量は行列形式）

    回路JSONは名前付き生成子と対角生成子の固有値しか表せないため、それ以外の生成子を持つ
    データゲートや名前のない回転ゲートは変換できません。

    Raises:
        ValueError: 回路JSONで表せないゲートを含む場合
    """
    gates: List[Dict[str, Any]] = []
    for i, gate in enumerate(circuit.gates):
        if isinstance(gate, DataGate):
            item: Dict[str, Any] = {"type": "data", "axis": gate.axis, "qubits": list(gate.qubits)}
            if gate.label is not None:
                item["generator"] = gate.label
            else:
                diagonal = np.diag(gate.generator)
                if not np.allclose(gate.generator, np.diag(diagonal), rtol=0.0, atol=UNITARY_TOL):
                    raise ValueError(f"ゲート {i}: 名前のない非対角の生成子は回路JSONで表せません")
                item["eigenvalues"] = np.real(diagonal).tolist()
        elif isinstance(gate, FixedGate):
            item = {"type": "fixed", "qubits": list(gate.qubits)}
            if gate.label is not None:
                item["name"] = gate.label
            else:
                item["matrix"] = _matrix_to_parts(gate.unitary)
        else:
            if gate.label is None:
                raise ValueError(f"ゲート {i}: 名前のない生成子の回転ゲートは回路JSONで表せません")
            item = {"type": "rotation", "qubits": list(gate.qubits), "generator": gate.label, "param": gate.param}
        gates.append(item)
    return {
        "n_qubits": circuit.n_qubits,
        "n_inputs": circuit.n_inputs,
        "params": list(circuit.params),
        "gates": gates,
        "observable": {"matrix": _matrix_to_parts(circuit.observable)},
    }


def circuit_from_json(text: str) -> CircuitSpec:
    """回路JSON文字列から CircuitSpec を構築する"""
    return circuit_from_dict(json.loads(text))


def circuit_to_json(circuit: CircuitSpec) -> str:
    """CircuitSpec を回路JSON文字列に直列化する"""
    return json.dumps(circuit_to_dict(circuit), sort_keys=True)


def random_encoding_circuit(n_qubits: int, n_inputs: int, layers: int, seed: int) -> CircuitSpec:
    """ハール乱数ユニタリとZ/2エンコーディングを交互に並べた回路を生成する

    各層で全量子ビットにハール乱数ユニタリを作用させた後、軸 j を量子ビット j mod q に Z/2 生成子でエンコードします。
    最後にもう一度ハール乱数ユニタリを作用させ、観測量は量子ビット0の Z です。

    Args:
        n_qubits (int): 量子ビット数
        n_inputs (int): 入力次元
        layers (int): エンコーディング層の数
        seed (int): 乱数シード

    Returns:
        CircuitSpec: 回路記述
    """
    rng = np.random.default_rng(seed)
    all_qubits = tuple(range(n_qubits))
    gates: List[Gate] = []
    for _ in range(layers):
        gates.append(FixedGate(all_qubits, unitary_group.rvs(2**n_qubits, random_state=rng)))
        for axis in range(n_inputs):
            gates.append(DataGate(axis, (axis % n_qubits,), NAMED_GENERATORS["Z/2"], label="Z/2"))
    gates.append(FixedGate(all_qubits, unitary_group.rvs(2**n_qubits, random_state=rng)))
    observable = pauli_string("Z", (0,), n_qubits)
    return CircuitSpec(n_qubits, n_inputs, tuple(gates), observable)
