"""
ユーティリティのテスト

このモジュールは、入出力ユーティリティ、ジッター付き正定値ソルバー、
縮約ユーティリティと設定管理の機能をテストします。
"""

import json
from unittest.mock import patch

import numpy as np
import pytest

from mpskernel.config import Settings, get_settings, settings
from mpskernel.exceptions import ConfigError, FactorizationError, ShapeMismatchError
from mpskernel.utils.contraction import cached_einsum, get_contract_expr_cached, renormalize
from mpskernel.utils.io_utils import (
    read_config_file,
    read_dataset_csv,
    read_pairs_csv,
    to_jsonable,
    write_csv,
    write_json,
)
from mpskernel.utils.linalg import solve_psd


def test_read_config_file_json_and_yaml(tmp_path):
    """拡張子に応じてJSONとYAMLを読み分けることをテスト"""
    (tmp_path / "config.json").write_text('{"task": "verify"}', encoding="utf-8")
    (tmp_path / "config.yml").write_text("task: verify\nseed: 3\n", encoding="utf-8")

    # 検証
    assert read_config_file(tmp_path / "config.json") == {"task": "verify"}
    assert read_config_file(tmp_path / "config.yml") == {"task": "verify", "seed": 3}


def test_read_config_file_errors(tmp_path):
    """存在しない・解析できない・オブジェクトでない設定ファイルがエラーになることをテスト"""
    (tmp_path / "broken.json").write_text("{task", encoding="utf-8")
    (tmp_path / "list.yaml").write_text("- 1\n- 2\n", encoding="utf-8")

    with pytest.raises(ConfigError) as exc_info:
        read_config_file(tmp_path / "missing.json")
    # 検証
    assert exc_info.value.diagnostics

    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "broken.json")
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "list.yaml")


def test_dataset_csv(tmp_path):
    """x_ 列と y 列のCSVからデータセットを読み込むことをテスト"""
    path = tmp_path / "data.csv"
    write_csv(path, ["x_1", "x_2", "y"], [[0.1, 0.2, 1.5], [0.3, 0.4, -2.0]])

    data = read_dataset_csv(path)

    # 検証
    np.testing.assert_array_equal(data.X, [[0.1, 0.2], [0.3, 0.4]])
    np.testing.assert_array_equal(data.y, [1.5, -2.0])


def test_dataset_csv_without_y(tmp_path):
    """y 列のないCSVは require_y=False のときだけ読み込めることをテスト"""
    path = tmp_path / "inputs.csv"
    write_csv(path, ["x_1"], [[0.5], [1.0]])

    # 検証
    np.testing.assert_array_equal(read_dataset_csv(path, require_y=False).y, [0.0, 0.0])
    with pytest.raises(ShapeMismatchError):
        read_dataset_csv(path)


def test_dataset_csv_invalid(tmp_path):
    """空のCSVと列数の合わないCSVがエラーになることをテスト"""
    (tmp_path / "empty.csv").write_text("x_1,y\n", encoding="utf-8")
    (tmp_path / "ragged.csv").write_text("x_1,y\n1.0\n", encoding="utf-8")

    with pytest.raises(ShapeMismatchError):
        read_dataset_csv(tmp_path / "empty.csv")
    with pytest.raises(ShapeMismatchError):
        read_dataset_csv(tmp_path / "ragged.csv")


def test_pairs_csv(tmp_path):
    """x_ 列と xp_ 列のCSVから入力ペアを読み込むことをテスト"""
    path = tmp_path / "pairs.csv"
    write_csv(path, ["x_1", "x_2", "xp_1", "xp_2"], [[1.0, 2.0, 3.0, 4.0]])

    X, X_prime = read_pairs_csv(path)

    # 検証
    np.testing.assert_array_equal(X, [[1.0, 2.0]])
    np.testing.assert_array_equal(X_prime, [[3.0, 4.0]])


def test_write_csv_full_precision(tmp_path):
    """浮動小数点を完全な精度で書き出すことをテスト"""
    path = tmp_path / "values.csv"

    write_csv(path, ["i", "value"], [[0, 1.0 / 3.0], [1, np.float64(0.1)]])

    # 検証
    assert path.read_text(encoding="utf-8") == f"i,value\n0,{1.0 / 3.0!r}\n1,0.1\n"


def test_write_json_numpy_values(tmp_path):
    """numpyの配列とスカラーを含む辞書をJSONに書き出すことをテスト"""
    path = tmp_path / "result.json"
    data = {"b": np.arange(3), "a": {"x": np.float64(1.5), "flag": np.bool_(True), 1: (np.int64(2),)}}

    write_json(path, data)

    # 検証
    assert json.loads(path.read_text(encoding="utf-8")) == {"a": {"1": [2], "flag": True, "x": 1.5}, "b": [0, 1, 2]}
    assert to_jsonable(np.zeros((2, 2))) == [[0.0, 0.0], [0.0, 0.0]]


def test_solve_psd():
    """正定値行列の連立方程式を解くことをテスト"""
    matrix = np.array([[4.0, 1.0], [1.0, 3.0]])
    rhs = np.array([1.0, 2.0])

    # 検証
    np.testing.assert_allclose(solve_psd(matrix, rhs), np.linalg.solve(matrix, rhs), atol=1e-12)


def test_solve_psd_jitter(caplog):
    """半正定値行列でジッターを加えて解き、警告を記録することをテスト"""
    matrix = np.array([[1.0, 1.0], [1.0, 1.0]])

    solution = solve_psd(matrix, np.array([1.0, 1.0]))

    # 検証
    np.testing.assert_allclose(matrix @ solution, [1.0, 1.0], atol=1e-4)
    assert "ジッター" in caplog.text


def test_solve_psd_failure():
    """ジッターの上限でも分解できない場合にエラーになることをテスト"""
    matrix = np.array([[1.0, 0.0], [0.0, -1.0]])

    with pytest.raises(FactorizationError):
        solve_psd(matrix, np.ones(2))


def test_cached_einsum():
    """キャッシュした縮約式が np.einsum と一致し、再利用されることをテスト"""
    rng = np.random.default_rng(0)
    a, b = rng.standard_normal((3, 4)), rng.standard_normal((4, 5))

    cached_einsum("ij,jk->ik", a, b)
    hits = get_contract_expr_cached.cache_info().hits
    result = cached_einsum("ij,jk->ik", a, b)

    # 検証
    np.testing.assert_allclose(result, np.einsum("ij,jk->ik", a, b), atol=1e-12)
    assert get_contract_expr_cached.cache_info().hits == hits + 1


def test_renormalize():
    """バッチごとに最大絶対値で正規化し、ゼロの行はスケール1とすることをテスト"""
    env = np.array([[2.0, -8.0], [0.0, 0.0]])

    normalized, log_scales = renormalize(env, axis=(1,))

    # 検証
    np.testing.assert_allclose(normalized, [[0.25, -1.0], [0.0, 0.0]])
    np.testing.assert_allclose(log_scales, [np.log(8.0), 0.0])


def test_settings_from_environment():
    """環境変数から設定値を読み込むことをテスト"""
    with patch.dict("os.environ", {"IMAG_TOL": "1e-6", "MAX_QUBITS": "4"}):
        custom = Settings()

    # 検証
    assert custom.IMAG_TOL == 1e-6
    assert custom.MAX_QUBITS == 4
    assert get_settings() is settings
    assert settings.APP_NAME == "mpskernel"
