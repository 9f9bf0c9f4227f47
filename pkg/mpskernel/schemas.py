"""
スキーマ定義モジュール

このモジュールは、入出力されるJSON成果物（エンコーディング戦略、MPSファイル、回路ファイル、実行設定）の
pydanticモデルと、実行設定の検証関数 validate を定義します。
"""

from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .exceptions import MpsKernelError
from .models.lattice import FrequencyAxis, FrequencyLattice, axis_from_spectra, axis_integer

TASKS = ("kernel-eval", "gram", "krr", "rff", "sample", "verify", "bench", "pqc-check")
TaskName = Literal["kernel-eval", "gram", "krr", "rff", "sample", "verify", "bench", "pqc-check"]
GeneratorName = Literal["X", "Y", "Z", "X/2", "Y/2", "Z/2"]
GateName = Literal["H", "X", "Y", "Z", "S", "T", "CNOT", "CZ", "SWAP"]

TWO_QUBIT_GATES = ("CNOT", "CZ", "SWAP")


class AxisSpec(BaseModel):
    """1軸分のエンコーディング指定（integer_M、spectra、values のいずれか1つ）"""

    model_config = ConfigDict(extra="forbid")

    integer_M: Optional[int] = Field(None, ge=0, description="整数周波数 (−M, …, M)")
    spectra: Optional[List[List[float]]] = Field(None, min_length=1, description="ゲートごとの生成子固有値")
    values: Optional[List[float]] = Field(None, min_length=1, description="明示的な周波数（鏡像対称）")

    @model_validator(mode="after")
    def check_exactly_one(self) -> "AxisSpec":
        given = [name for name in ("integer_M", "spectra", "values") if getattr(self, name) is not None]
        if len(given) != 1:
            raise ValueError(f"integer_M、spectra、values のいずれか1つを指定してください（指定: {given}）")
        return self

    def to_axis(self) -> FrequencyAxis:
        """周波数軸に変換する"""
        if self.integer_M is not None:
            return axis_integer(self.integer_M)
        if self.spectra is not None:
            return axis_from_spectra(self.spectra)
        return FrequencyAxis(tuple(self.values or ()))


class EncodingStrategy(BaseModel):
    """データエンコーディング戦略（軸ごとの指定のリスト）"""

    model_config = ConfigDict(extra="forbid")

    axes: List[AxisSpec] = Field(..., min_length=1, description="軸ごとのエンコーディング指定")

    def to_lattice(self) -> FrequencyLattice:
        """周波数格子に変換する

        Raises:
            LatticeError: 軸の指定が不正な場合
        """
        return FrequencyLattice(tuple(axis.to_axis() for axis in self.axes))

    @classmethod
    def integer(cls, d: int, M: int) -> "EncodingStrategy":
        """全軸が整数周波数 (−M, …, M) の戦略を作成する"""
        return cls(axes=[AxisSpec(integer_M=M) for _ in range(d)])

    @classmethod
    def from_lattice(cls, lattice: FrequencyLattice) -> "EncodingStrategy":
        """周波数格子から戦略を作成する（整数軸は integer_M、それ以外は values）"""
        axes = []
        for axis in lattice.axes:
            if axis.is_integer():
                axes.append(AxisSpec(integer_M=axis.M))
            else:
                axes.append(AxisSpec(values=list(axis.values)))
        return cls(axes=axes)


def strategy_from_json(text: str) -> EncodingStrategy:
    """JSON文字列からエンコーディング戦略を読み込む"""
    return EncodingStrategy.model_validate_json(text)


def strategy_to_json(strategy: EncodingStrategy) -> str:
    """エンコーディング戦略をJSON文字列に直列化する（未指定のフィールドは出力しない）"""
    return strategy.model_dump_json(exclude_none=True)


def lattice_from_strategy(data: Union[str, Dict[str, Any], EncodingStrategy]) -> FrequencyLattice:
    """JSON文字列・辞書・戦略オブジェクトから周波数格子を構築する"""
    if isinstance(data, EncodingStrategy):
        return data.to_lattice()
    if isinstance(data, str):
        return strategy_from_json(data).to_lattice()
    return EncodingStrategy.model_validate(data).to_lattice()


class TensorSpec(BaseModel):
    """MPSの1サイト分のテンソル（形状と行優先で平坦化した要素）"""

    shape: List[int] = Field(..., min_length=3, max_length=3, description="(左ボンド, 物理次元, 右ボンド)")
    entries: List[float] = Field(..., description="行優先で平坦化した要素")


class MPSFile(BaseModel):
    """MPS重み付けのJSONファイル"""

    tensors: List[TensorSpec] = Field(..., min_length=1, description="サイトごとのテンソル")
    symmetric: bool = Field(False, description="対称フラグ")
    seed: Optional[int] = Field(None, description="ランダム生成時のシード")
    constructor: Optional[str] = Field(None, description="生成方法")


class MatrixSpec(BaseModel):
    """複素行列（実部と虚部）"""

    real: List[List[float]] = Field(..., description="実部")
    imag: Optional[List[List[float]]] = Field(None, description="虚部")


class GateSpec(BaseModel):
    """回路JSONのゲート指定"""

    model_config = ConfigDict(extra="forbid")

    type: Literal["data", "fixed", "rotation"] = Field(..., description="ゲートの種類")
    qubits: List[int] = Field(..., min_length=1, description="対象量子ビット")
    axis: Optional[int] = Field(None, ge=0, description="データゲートの入力軸（0始まり）")
    generator: Optional[GeneratorName] = Field(None, description="名前付き生成子")
    eigenvalues: Optional[List[float]] = Field(None, description="対角生成子の固有値（計算基底順）")
    name: Optional[GateName] = Field(None, description="名前付き固定ゲート")
    matrix: Optional[MatrixSpec] = Field(None, description="固定ゲートのユニタリ行列")
    param: Optional[int] = Field(None, ge=0, description="回転ゲートのパラメータ番号")

    @model_validator(mode="after")
    def check_fields(self) -> "GateSpec":
        if self.type == "data":
            if self.axis is None:
                raise ValueError("データゲートには axis が必要です")
            if (self.generator is None) == (self.eigenvalues is None):
                raise ValueError("データゲートには generator か eigenvalues のどちらか一方が必要です")
            if self.generator is not None and len(self.qubits) != 1:
                raise ValueError("名前付き生成子は1量子ビットにのみ作用します")
            if self.eigenvalues is not None and len(self.eigenvalues) != 2 ** len(self.qubits):
                raise ValueError(f"eigenvalues の長さは 2^{len(self.qubits)} である必要があります")
        elif self.type == "fixed":
            if (self.name is None) == (self.matrix is None):
                raise ValueError("固定ゲートには name か matrix のどちらか一方が必要です")
            if self.name is not None and len(self.qubits) != (2 if self.name in TWO_QUBIT_GATES else 1):
                raise ValueError(f"ゲート {self.name} の対象量子ビット数が不正です")
        else:
            if self.generator is None or self.param is None:
                raise ValueError("回転ゲートには generator と param が必要です")
            if len(self.qubits) != 1:
                raise ValueError("名前付き生成子は1量子ビットにのみ作用します")
        return self


class PauliTerm(BaseModel):
    """観測量のパウリ文字列の項"""

    coeff: float = Field(1.0, description="係数")
    ops: str = Field(..., pattern=r"^[IXYZ]+$", description="パウリ文字列")
    qubits: List[int] = Field(..., min_length=1, description="各文字を作用させる量子ビット")


class ObservableSpec(BaseModel):
    """観測量（パウリ文字列の和、または行列）"""

    model_config = ConfigDict(extra="forbid")

    paulis: Optional[List[PauliTerm]] = Field(None, min_length=1, description="パウリ文字列の項")
    matrix: Optional[MatrixSpec] = Field(None, description="エルミート行列")

    @model_validator(mode="after")
    def check_exactly_one(self) -> "ObservableSpec":
        if (self.paulis is None) == (self.matrix is None):
            raise ValueError("観測量には paulis か matrix のどちらか一方が必要です")
        return self


class CircuitFile(BaseModel):
    """回路JSONファイル"""

    n_qubits: int = Field(..., ge=1, description="量子ビット数")
    n_inputs: int = Field(..., ge=1, description="入力次元 d")
    params: List[float] = Field(default_factory=list, description="パラメータベクトル θ")
    gates: List[GateSpec] = Field(default_factory=list, description="適用順のゲート列")
    observable: ObservableSpec = Field(..., description="観測量")


class WeightingConfig(BaseModel):
    """重み付けの指定"""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["uniform", "product", "random", "file"] = Field("uniform", description="重み付けの種類")
    vectors: Optional[List[List[float]]] = Field(None, description="product: 軸ごとの重みベクトル")
    strict: bool = Field(False, description="product: ゼロ要素をエラーにするかどうか")
    bond_dim: Optional[int] = Field(None, ge=1, description="random: ボンド次元 D")
    seed: Optional[int] = Field(None, ge=0, description="random: 乱数シード（省略時は設定全体のシード）")
    path: Optional[str] = Field(None, description="file: MPS JSONファイルのパス")


class TaskParams(BaseModel):
    """タスクごとのパラメータ"""

    model_config = ConfigDict(extra="forbid")

    x: Optional[List[float]] = Field(None, description="kernel-eval: 入力 x")
    x_prime: Optional[List[float]] = Field(None, description="kernel-eval: 入力 x′")
    pairs_path: Optional[str] = Field(None, description="kernel-eval: x_1..x_d,xp_1..xp_d のCSV")
    dataset_path: Optional[str] = Field(None, description="gram/krr/rff: x_1..x_d,y のCSV")
    test_path: Optional[str] = Field(None, description="krr/rff: テストデータのCSV")
    test_fraction: Optional[float] = Field(None, gt=0.0, lt=1.0, description="krr/rff: テストデータの割合")
    lam: float = Field(1e-8, ge=0.0, description="krr/rff: リッジ係数 λ（(G + λI)α = y）")
    S: Optional[int] = Field(None, ge=1, description="rff: サンプル数")
    seed: Optional[int] = Field(None, ge=0, description="rff/sample/pqc-check: 乱数シード")
    count: Optional[int] = Field(None, ge=1, description="sample: サンプル数")
    n_configs: int = Field(50, ge=1, description="verify: ランダム構成の数")
    pairs: int = Field(20, ge=1, description="verify/bench: 構成ごとの入力ペア数")
    dims: List[int] = Field(default_factory=lambda: [25, 50, 100], min_length=1, description="bench: 入力次元")
    bond_dim: int = Field(4, ge=1, description="bench: ボンド次元 D")
    M: int = Field(1, ge=0, description="bench: 各軸の M")
    repeats: int = Field(3, ge=1, description="bench: 計測の繰り返し回数")
    circuit_path: Optional[str] = Field(None, description="pqc-check: 回路JSONのパス")
    sample_count: Optional[int] = Field(None, ge=1, description="pqc-check: フィットのサンプル数")


class RunConfig(BaseModel):
    """実行設定"""

    model_config = ConfigDict(extra="forbid")

    task: TaskName = Field(..., description="実行するタスク")
    lattice: Optional[EncodingStrategy] = Field(None, description="エンコーディング戦略")
    weighting: WeightingConfig = Field(default_factory=WeightingConfig, description="重み付け")
    seed: int = Field(0, ge=0, description="設定全体の乱数シード")
    threads: Optional[int] = Field(None, ge=1, description="グラム行列計算のスレッド数")
    params: TaskParams = Field(default_factory=TaskParams, description="タスクパラメータ")

    def task_seed(self) -> int:
        """タスクの乱数シード（params.seed、なければ設定全体のシード）"""
        return self.params.seed if self.params.seed is not None else self.seed

    def weighting_seed(self) -> int:
        """ランダム重み付けの乱数シード"""
        return self.weighting.seed if self.weighting.seed is not None else self.seed


def _format_location(loc) -> str:
    return ".".join(str(part) for part in loc) or "config"


def _check_weighting(config: RunConfig, lattice: Optional[FrequencyLattice]) -> List[str]:
    diagnostics: List[str] = []
    weighting = config.weighting
    if weighting.kind == "product":
        if weighting.vectors is None:
            diagnostics.append("weighting.vectors: product 重み付けには必須です")
        else:
            if lattice is not None and len(weighting.vectors) != lattice.d:
                diagnostics.append(f"weighting.vectors: 軸の数 {len(weighting.vectors)} が格子の次元 {lattice.d} と一致しません")
            elif lattice is not None:
                for j, (vec, dim) in enumerate(zip(weighting.vectors, lattice.dims)):
                    if len(vec) != dim:
                        diagnostics.append(f"weighting.vectors[{j}]: 長さ {len(vec)} が {dim} と一致しません")
            if any(all(v == 0.0 for v in vec) for vec in weighting.vectors):
                diagnostics.append("weighting.vectors: 全要素がゼロの軸があるため重み付けがゼロになります")
    elif weighting.kind == "random" and weighting.bond_dim is None:
        diagnostics.append("weighting.bond_dim: random 重み付けには必須です")
    elif weighting.kind == "file" and not weighting.path:
        diagnostics.append("weighting.path: file 重み付けには必須です")
    return diagnostics


def _check_task(config: RunConfig, lattice: Optional[FrequencyLattice]) -> List[str]:
    diagnostics: List[str] = []
    params = config.params
    task = config.task
    if task == "kernel-eval":
        if params.pairs_path is None and (params.x is None or params.x_prime is None):
            diagnostics.append("params.x: kernel-eval には x と x_prime、または pairs_path が必要です")
        elif lattice is not None and params.pairs_path is None:
            for name in ("x", "x_prime"):
                if len(getattr(params, name)) != lattice.d:
                    diagnostics.append(f"params.{name}: 長さが格子の次元 {lattice.d} と一致しません")
    elif task in ("gram", "krr", "rff"):
        if not params.dataset_path:
            diagnostics.append(f"params.dataset_path: {task} タスクには必須です")
        if task == "rff" and params.S is None:
            diagnostics.append("params.S: rff タスクには正のサンプル数が必要です")
    elif task == "sample":
        if params.count is None:
            diagnostics.append("params.count: sample タスクには正のサンプル数が必要です")
    elif task == "pqc-check":
        if not params.circuit_path:
            diagnostics.append("params.circuit_path: pqc-check タスクには必須です")
    return diagnostics


def validate(config: Union[Dict[str, Any], RunConfig]) -> List[str]:
    """実行設定をスキーマと項目間の整合性について検証する

    例外は送出せず、問題点を「フィールド: 内容」の形式の文字列リストとして返します。空リストは有効を意味します。

    Args:
        config (Union[Dict[str, Any], RunConfig]): 実行設定

    Returns:
        List[str]: 診断メッセージのリスト
    """
    if not isinstance(config, RunConfig):
        try:
            config = RunConfig.model_validate(config)
        except ValidationError as e:
            return [f"{_format_location(err['loc'])}: {err['msg']}" for err in e.errors()]

    diagnostics: List[str] = []
    lattice: Optional[FrequencyLattice] = None
    if config.lattice is not None:
        try:
            lattice = config.lattice.to_lattice()
        except MpsKernelError as e:
            diagnostics.append(f"lattice: {e}")
    elif config.task not in ("verify", "bench", "pqc-check"):
        diagnostics.append(f"lattice: {config.task} タスクには必須です")

    if config.task not in ("verify", "bench", "pqc-check"):
        diagnostics.extend(_check_weighting(config, lattice))
    diagnostics.extend(_check_task(config, lattice))
    return diagnostics
