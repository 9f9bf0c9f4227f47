"""
カーネル評価エンジンのテスト

このモジュールは、縮約によるカーネル評価を閉形式・全列挙の参照実装と比較し、
正規化・シフト不変性・対称性・ETK形式との一致・グラム行列の性質をテストします。
"""

import math

import numpy as np
import pytest

from mpskernel.exceptions import ImaginaryResidueError, NumericError, ShapeMismatchError, ZeroWeightingError
from mpskernel.models.lattice import FrequencyAxis, FrequencyLattice, axis_from_spectra, axis_integer, is_positive_rep_last
from mpskernel.models.weight_mps import WeightMPS, product_weights, random_mps, uniform_mps
from mpskernel.services.kernel_engine import (
    KernelEngine,
    assert_psd,
    dense_feature_phi1,
    dense_feature_phi2,
    dense_kernel,
    etk_cores,
    eval_kernel,
    eval_kernel_etk,
    gram,
    kernel_batch,
    local_features,
    new_engine,
    phi_omega,
)

from .conftest import integer_lattice


def test_new_engine_uniform_norm(uniform_engine_d2):
    """正準重み付け d=2, M=1 の正規化定数が 2·5 になることをテスト"""
    assert uniform_engine_d2.norm2 == pytest.approx(10.0)
    assert uniform_engine_d2.log_norm2 == pytest.approx(math.log(10.0))
    assert uniform_engine_d2.weights.symmetric


def test_new_engine_product_equals_uniform(lattice_d2, uniform_engine_d2, rng):
    """全要素1の積重み付けが正準重み付けと同じカーネルを与えることをテスト"""
    engine = new_engine(lattice_d2, product_weights(lattice_d2, [[1.0, 1.0, 1.0]] * 2))

    for _ in range(10):
        x, xp = rng.uniform(-3, 3, size=(2, 2))
        assert eval_kernel(engine, x, xp) == pytest.approx(eval_kernel(uniform_engine_d2, x, xp), abs=1e-12)


def test_new_engine_zero_weighting(lattice_d2):
    """ゼロ重み付けでエンジン構築がエラーになることをテスト"""
    zeros = product_weights(lattice_d2, [[0.0, 0.0, 0.0]] * 2)

    with pytest.raises(ZeroWeightingError):
        new_engine(lattice_d2, zeros)


def test_new_engine_shape_mismatch(lattice_d2, lattice_d3):
    """格子とMPSの形状が一致しない場合にエラーになることをテスト"""
    with pytest.raises(ShapeMismatchError):
        new_engine(lattice_d2, uniform_mps(lattice_d3))


def test_local_features(rng):
    """局所特徴ベクトルの例と共役鏡像構造をテスト"""
    axis = axis_integer(1)

    np.testing.assert_allclose(local_features(axis, 0.0), [1.0, 1.0, 1.0])
    np.testing.assert_allclose(local_features(axis, math.pi), [-1.0, 1.0, -1.0], atol=1e-15)

    wide = axis_from_spectra([[0.0, 0.3, 1.0]])
    psi = local_features(wide, rng.uniform(-5, 5))
    assert psi[wide.M] == 1.0
    np.testing.assert_allclose(psi[::-1], np.conj(psi), atol=1e-15)


def test_eval_kernel_one_dimensional_closed_form(uniform_engine_d1, rng):
    """d=1 の正準重み付けで K = (1 + cos Δ)/2 になることをテスト"""
    for _ in range(20):
        x, xp = rng.uniform(-4, 4, size=2)
        expected = (1.0 + math.cos(x - xp)) / 2.0
        assert eval_kernel(uniform_engine_d1, [x], [xp]) == pytest.approx(expected, abs=1e-12)
        assert eval_kernel_etk(uniform_engine_d1, [x], [xp]) == pytest.approx(expected, abs=1e-12)
    assert eval_kernel(uniform_engine_d1, [math.pi], [0.0]) == pytest.approx(0.0, abs=1e-12)


def test_eval_kernel_two_dimensional_closed_form(uniform_engine_d2, lattice_d2, rng):
    """d=2 の正準重み付けで閉形式と参照実装に一致することをテスト"""
    for _ in range(20):
        x, xp = rng.uniform(-4, 4, size=(2, 2))
        d1, d2 = x - xp
        expected = (1 + math.cos(d1) + math.cos(d2) + math.cos(d1 + d2) + math.cos(d1 - d2)) / 5
        assert eval_kernel(uniform_engine_d2, x, xp) == pytest.approx(expected, abs=1e-12)
        assert dense_kernel(lattice_d2, uniform_mps(lattice_d2), x, xp) == pytest.approx(expected, abs=1e-12)


def test_eval_kernel_normalized(rng):
    """x = x′ でカーネル値が1になることをテスト"""
    lattice = FrequencyLattice((axis_integer(2), axis_from_spectra([[0.0, 0.3, 1.0]]), axis_integer(1)))
    engine = new_engine(lattice, random_mps(lattice, 3, seed=8))

    X = rng.uniform(-10, 10, size=(100, 3))
    np.testing.assert_allclose(kernel_batch(engine, X, X), 1.0, atol=1e-9)


def test_eval_kernel_shift_invariant_and_symmetric(random_weights_d3, lattice_d3, rng):
    """シフト不変性と対称性をテスト"""
    engine = new_engine(lattice_d3, random_weights_d3)

    for _ in range(100):
        x, xp, delta = rng.uniform(-5, 5, size=(3, 3))
        value = eval_kernel(engine, x, xp)
        assert eval_kernel(engine, x + delta, xp + delta) == pytest.approx(value, abs=1e-9)
        assert eval_kernel(engine, xp, x) == pytest.approx(value, abs=1e-12)


@pytest.mark.parametrize("d,M,D", [(1, 2, 1), (2, 1, 3), (3, 2, 2), (4, 1, 4), (5, 1, 2), (6, 2, 3)])
def test_oracle_equivalence(d, M, D, rng):
    """縮約によるカーネル評価が全列挙の参照実装と一致することをテスト"""
    lattice = integer_lattice(d, M)
    weights = random_mps(lattice, D, seed=100 + d)
    engine = new_engine(lattice, weights)

    for _ in range(20):
        x, xp = rng.uniform(-np.pi, np.pi, size=(2, d))
        assert eval_kernel(engine, x, xp) == pytest.approx(dense_kernel(lattice, weights, x, xp), abs=1e-9)


def test_etk_agreement(rng):
    """ETK形式の評価が辺・ボンド・ボンド順の評価と一致することをテスト"""
    lattice = FrequencyLattice(tuple(axis_integer(1 + j % 2) for j in range(8)))
    engine = new_engine(lattice, random_mps(lattice, 4, seed=77))

    for _ in range(100):
        x, xp = rng.uniform(-np.pi, np.pi, size=(2, 8))
        assert eval_kernel_etk(engine, x, xp) == pytest.approx(eval_kernel(engine, x, xp), abs=1e-9)
    assert eval_kernel_etk(engine, x, x) == pytest.approx(1.0, abs=1e-9)


def test_etk_cores_shape(random_weights_d3, lattice_d3):
    """MPOコアの形状が (D², 2M+1, D²) であることをテスト"""
    engine = new_engine(lattice_d3, random_weights_d3)
    cores = etk_cores(engine)

    for core, tensor in zip(cores, engine.b_mps.tensors):
        assert core.shape == (tensor.shape[0] ** 2, tensor.shape[1], tensor.shape[2] ** 2)


def test_long_chain_kernel_is_finite(rng):
    """長い鎖でもオーバーフローせずに正規化されたカーネル値が得られることをテスト"""
    lattice = integer_lattice(200, 1)
    engine = new_engine(lattice, random_mps(lattice, 3, seed=4))
    x, xp = rng.uniform(-np.pi, np.pi, size=(2, 200))

    assert math.isinf(engine.norm2) or engine.norm2 > 0.0
    assert eval_kernel(engine, x, x) == pytest.approx(1.0, abs=1e-9)
    assert abs(eval_kernel(engine, x, xp)) <= 1.0 + 1e-9


def test_eval_kernel_dimension_mismatch(uniform_engine_d2):
    """入力次元が一致しない場合にエラーになることをテスト"""
    with pytest.raises(ShapeMismatchError):
        eval_kernel(uniform_engine_d2, [0.0], [0.0, 0.0])
    with pytest.raises(ShapeMismatchError):
        kernel_batch(uniform_engine_d2, np.zeros((2, 2)), np.zeros((3, 2)))


def test_imaginary_residue_detected(lattice_d1):
    """非対称な B テンソルを直接与えた場合に虚部の残差が検出されることをテスト"""
    asymmetric = WeightMPS((np.array([1.0, 1.0, 0.0]).reshape(1, 3, 1),))
    engine = KernelEngine(lattice=lattice_d1, weights=asymmetric, b_mps=asymmetric, norm2=2.0, log_norm2=math.log(2.0))

    with pytest.raises(ImaginaryResidueError):
        eval_kernel(engine, [0.0], [1.0])


def test_gram_properties(random_weights_d3, lattice_d3, rng):
    """グラム行列の対称性・単位対角・半正定値性をテスト"""
    engine = new_engine(lattice_d3, random_weights_d3)
    X = rng.uniform(-np.pi, np.pi, size=(30, 3))
    G = gram(engine, X)

    np.testing.assert_allclose(G, G.T, atol=1e-12)
    np.testing.assert_allclose(np.diag(G), 1.0, atol=1e-9)
    assert assert_psd(G, tol=1e-8) >= -1e-8
    np.testing.assert_allclose(gram(engine, X[:1]), [[1.0]], atol=1e-9)


def test_gram_independent_of_threads(random_weights_d3, lattice_d3, rng):
    """グラム行列がスレッド数に依存しないことをテスト"""
    engine = new_engine(lattice_d3, random_weights_d3)
    X = rng.uniform(-np.pi, np.pi, size=(12, 3))
    Xp = rng.uniform(-np.pi, np.pi, size=(7, 3))

    single = gram(engine, X, Xp, threads=1)
    multi = gram(engine, X, Xp, threads=4)
    assert single.shape == (12, 7)
    assert np.array_equal(single, multi)


def test_assert_psd_rejects_indefinite():
    """不定値行列がエラーになることをテスト"""
    with pytest.raises(NumericError):
        assert_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_dense_feature_phi2_examples(lattice_d1, rng):
    """φ⁽²⁾ の例と正規化をテスト"""
    phi = dense_feature_phi2(lattice_d1, uniform_mps(lattice_d1), np.zeros(1))
    np.testing.assert_allclose(phi, np.array([1.0, math.sqrt(2.0), 1.0]) / 2.0)

    lattice = integer_lattice(3, 1)
    weights = random_mps(lattice, 2, seed=9)
    x = rng.uniform(-3, 3, size=3)
    phi_x = dense_feature_phi2(lattice, weights, x)
    assert np.vdot(phi_x, phi_x).real == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_dense_features_match_kernel(d, rng):
    """φ⁽¹⁾・φ⁽²⁾ の内積と余弦和の参照実装と縮約評価が一致することをテスト"""
    lattice = integer_lattice(d, 1)
    weights = random_mps(lattice, 2, seed=50 + d)
    engine = new_engine(lattice, weights)

    for _ in range(5):
        x, xp = rng.uniform(-np.pi, np.pi, size=(2, d))
        value = eval_kernel(engine, x, xp)
        phi2 = np.vdot(dense_feature_phi2(lattice, weights, x), dense_feature_phi2(lattice, weights, xp))
        phi1 = dense_feature_phi1(lattice, weights, x) @ dense_feature_phi1(lattice, weights, xp)
        assert phi2.real == pytest.approx(value, abs=1e-10)
        assert abs(phi2.imag) <= 1e-10
        assert phi1 == pytest.approx(value, abs=1e-10)
        assert dense_kernel(lattice, weights, x, xp) == pytest.approx(value, abs=1e-10)


def test_dense_kernel_splitting_invariance(random_weights_d3, lattice_d3, rng):
    """異なる分割規則で参照実装のカーネル値が一致することをテスト"""
    for _ in range(10):
        x, xp = rng.uniform(-np.pi, np.pi, size=(2, 3))
        first = dense_kernel(lattice_d3, random_weights_d3, x, xp)
        last = dense_kernel(lattice_d3, random_weights_d3, x, xp, splitting=is_positive_rep_last)
        assert first == pytest.approx(last, abs=1e-12)


def test_phi_omega_layout(lattice_d2):
    """線形モデル特徴の長さと先頭要素をテスト"""
    features = phi_omega(lattice_d2, np.array([0.3, -0.2]))

    assert features.shape == (9,)
    assert features[0] == 1.0
    # 検証: 代表元 (0, 1) の余弦・正弦が先頭の対になる
    np.testing.assert_allclose(features[1:3], [math.cos(-0.2), math.sin(-0.2)])


def test_non_integer_lattice_oracle(rng):
    """非整数周波数の格子でも参照実装と一致することをテスト"""
    lattice = FrequencyLattice((FrequencyAxis((-1.3, -0.4, 0.0, 0.4, 1.3)), axis_integer(1)))
    weights = random_mps(lattice, 2, seed=13)
    engine = new_engine(lattice, weights)

    for _ in range(10):
        x, xp = rng.uniform(-np.pi, np.pi, size=(2, 2))
        assert eval_kernel(engine, x, xp) == pytest.approx(dense_kernel(lattice, weights, x, xp), abs=1e-9)
