"""
回帰サービスのテスト

このモジュールは、厳密カーネルによるKRRとMPSサンプリングによるRFF回帰、
コストレポート、データ分割と合成ターゲットをテストします。
"""

import json

import numpy as np
import pytest

from mpskernel.config import settings
from mpskernel.exceptions import EnumerationCapError, ShapeMismatchError
from mpskernel.models.dataset import Dataset, mse, synthetic_rkhs_target, train_test_split
from mpskernel.models.weight_mps import random_mps, uniform_mps
from mpskernel.services.kernel_engine import eval_kernel, gram, new_engine
from mpskernel.services.regression_service import (
    KRRModel,
    cost_report,
    krr_fit,
    krr_predict,
    model_to_json,
    rff_features,
    rff_fit,
    rff_kernel_estimate,
    rff_predict,
    rff_sample,
)

from .conftest import integer_lattice


def test_krr_single_point(uniform_engine_d1):
    """学習点1つ・λ=0 で α = y となることをテスト"""
    data = Dataset(np.array([[0.3]]), np.array([2.5]))

    model = krr_fit(uniform_engine_d1, data, lam=0.0)

    # 検証
    assert isinstance(model, KRRModel)
    np.testing.assert_allclose(model.alpha, [2.5], atol=1e-12)
    assert krr_predict(model, uniform_engine_d1, data.X)[0] == pytest.approx(2.5, abs=1e-12)


def test_krr_far_query(uniform_engine_d1):
    """K(x, x_q) = 0 となるクエリ（Δ = π）の予測が0になることをテスト"""
    data = Dataset(np.array([[0.0]]), np.array([1.0]))

    model = krr_fit(uniform_engine_d1, data, lam=0.0)

    # 検証
    assert krr_predict(model, uniform_engine_d1, np.array([[np.pi]]))[0] == pytest.approx(0.0, abs=1e-12)


def test_krr_constant_target(uniform_engine_d1):
    """等間隔3点の定数ターゲットを任意のクエリで再現することをテスト"""
    X = np.array([[0.0], [2 * np.pi / 3], [4 * np.pi / 3]])
    data = Dataset(X, np.full(3, 1.7))

    model = krr_fit(uniform_engine_d1, data, lam=0.0)
    queries = np.linspace(-3.0, 3.0, 13)[:, None]

    # 検証
    np.testing.assert_allclose(model.alpha, np.full(3, 1.7 / 1.5), atol=1e-10)
    np.testing.assert_allclose(krr_predict(model, uniform_engine_d1, queries), np.full(13, 1.7), atol=1e-10)


def test_krr_interpolation(uniform_engine_d2, rng):
    """λ が小さいとき学習点を補間することをテスト"""
    X = rng.uniform(0.0, 2 * np.pi, size=(6, 2))
    y = rng.standard_normal(6)

    model = krr_fit(uniform_engine_d2, Dataset(X, y), lam=1e-10)

    # 検証
    np.testing.assert_allclose(krr_predict(model, uniform_engine_d2, X), y, atol=1e-6)


def test_krr_residual(uniform_engine_d2, rng):
    """学習後の残差 ‖(G + λI)α − y‖ が小さいことをテスト"""
    data = Dataset(rng.uniform(0.0, 2 * np.pi, size=(30, 2)), rng.standard_normal(30))
    lam = 1e-3

    model = krr_fit(uniform_engine_d2, data, lam=lam)
    G = gram(uniform_engine_d2, data.X)

    # 検証
    assert np.max(np.abs(G @ model.alpha + lam * model.alpha - data.y)) <= 1e-8


def test_krr_norm_decreases_with_lambda(uniform_engine_d2, rng):
    """λ を大きくすると ‖α‖ が単調に減少することをテスト"""
    data = Dataset(rng.uniform(0.0, 2 * np.pi, size=(12, 2)), rng.standard_normal(12))

    norms = [np.linalg.norm(krr_fit(uniform_engine_d2, data, lam=lam).alpha) for lam in (1e-2, 1e-1, 1.0, 10.0)]

    # 検証
    assert all(a > b for a, b in zip(norms, norms[1:]))


def test_krr_rejects_invalid_input(uniform_engine_d2):
    """負の λ と次元の不一致がエラーになることをテスト"""
    data = Dataset(np.zeros((2, 2)), np.zeros(2))

    with pytest.raises(ValueError):
        krr_fit(uniform_engine_d2, data, lam=-1.0)
    with pytest.raises(ShapeMismatchError):
        krr_fit(uniform_engine_d2, Dataset(np.zeros((2, 3)), np.zeros(2)), lam=0.0)


def test_krr_recovers_rkhs_target(lattice_d3, random_weights_d3):
    """RKHS内の合成ターゲットをテストデータで高精度に再現することをテスト"""
    engine = new_engine(lattice_d3, random_weights_d3)
    data = synthetic_rkhs_target(lattice_d3, 300, seed=3)
    train, test = Dataset(data.X[:200], data.y[:200]), Dataset(data.X[200:], data.y[200:])

    model = krr_fit(engine, train, lam=1e-8)

    # 検証
    assert mse(test.y, krr_predict(model, engine, test.X)) <= 1e-6


def test_rff_unit_diagonal(lattice_d3, random_weights_d3, rng):
    """z(x)·z(x) = 1 となることをテスト"""
    model = rff_sample(lattice_d3, random_weights_d3, S=50, seed=1)

    for _ in range(5):
        x = rng.uniform(-3, 3, size=3)
        assert rff_kernel_estimate(model, x, x) == pytest.approx(1.0, abs=1e-12)


def test_rff_seed_determinism(lattice_d3, random_weights_d3):
    """同じシードで同一のサンプルと予測が得られることをテスト"""
    data = synthetic_rkhs_target(lattice_d3, 40, seed=5)

    first = rff_fit(lattice_d3, random_weights_d3, data, S=30, lam=1e-3, seed=11)
    second = rff_fit(lattice_d3, random_weights_d3, data, S=30, lam=1e-3, seed=11)
    other = rff_fit(lattice_d3, random_weights_d3, data, S=30, lam=1e-3, seed=12)

    # 検証
    np.testing.assert_array_equal(first.offsets, second.offsets)
    np.testing.assert_array_equal(rff_predict(first, data.X), rff_predict(second, data.X))
    assert not np.array_equal(first.offsets, other.offsets)


def test_rff_features_shape(lattice_d3, random_weights_d3):
    """特徴行列の形状と入力次元の検証をテスト"""
    model = rff_sample(lattice_d3, random_weights_d3, S=8, seed=0)

    # 検証
    assert model.S == 8
    assert model.frequencies.shape == (8, 3)
    assert rff_features(model, np.zeros((4, 3))).shape == (4, 16)
    with pytest.raises(ShapeMismatchError):
        rff_features(model, np.zeros((4, 2)))


def test_rff_frequencies_on_lattice(lattice_d3, random_weights_d3):
    """サンプルした周波数が格子上の値であることをテスト"""
    model = rff_sample(lattice_d3, random_weights_d3, S=100, seed=2)

    # 検証
    assert np.all(np.abs(model.offsets) <= 1)
    np.testing.assert_array_equal(model.frequencies, model.offsets.astype(float))


def test_rff_d1_closed_form(lattice_d1):
    """d=1 正準重み付けで S=10⁴ の推定値が (1 + cos Δ)/2 に近いことをテスト"""
    model = rff_sample(lattice_d1, uniform_mps(lattice_d1), S=10_000, seed=0)

    estimate = rff_kernel_estimate(model, np.array([0.0]), np.array([1.0]))

    # 検証
    assert estimate == pytest.approx((1 + np.cos(1.0)) / 2, abs=0.05)


def test_rff_converges_to_exact_kernel(lattice_d3, random_weights_d3, rng):
    """S=10⁴ で100組の入力に対する最大誤差が0.05以下になることをテスト"""
    engine = new_engine(lattice_d3, random_weights_d3)
    model = rff_sample(lattice_d3, random_weights_d3, S=10_000, seed=4)
    X, X_prime = rng.uniform(0.0, 2 * np.pi, size=(2, 100, 3))

    errors = [abs(rff_kernel_estimate(model, x, xp) - eval_kernel(engine, x, xp)) for x, xp in zip(X, X_prime)]

    # 検証
    assert max(errors) <= 0.05


def test_rff_error_decreases_with_samples(lattice_d3, random_weights_d3, rng):
    """5シードの最大誤差の中央値が S とともに減少することをテスト"""
    engine = new_engine(lattice_d3, random_weights_d3)
    X, X_prime = rng.uniform(0.0, 2 * np.pi, size=(2, 30, 3))
    exact = np.array([eval_kernel(engine, x, xp) for x, xp in zip(X, X_prime)])

    medians = []
    for S in (100, 1_000, 10_000):
        sup_errors = []
        for seed in range(5):
            model = rff_sample(lattice_d3, random_weights_d3, S=S, seed=seed)
            estimates = np.array([rff_kernel_estimate(model, x, xp) for x, xp in zip(X, X_prime)])
            sup_errors.append(np.max(np.abs(estimates - exact)))
        medians.append(np.median(sup_errors))

    # 検証
    assert medians[0] >= medians[1] >= medians[2]


def test_rff_unbiased(lattice_d3, random_weights_d3, rng):
    """50シード・S=200 の推定値の平均が厳密値から標準誤差の3倍以内にあることをテスト"""
    engine = new_engine(lattice_d3, random_weights_d3)
    X, X_prime = rng.uniform(0.0, 2 * np.pi, size=(2, 20, 3))
    models = [rff_sample(lattice_d3, random_weights_d3, S=200, seed=seed) for seed in range(50)]

    for x, xp in zip(X, X_prime):
        exact = eval_kernel(engine, x, xp)
        # cos⟨ω, Δ⟩ の分散は (1 + K(0, 2Δ))/2 − K²
        second_moment = (1.0 + eval_kernel(engine, np.zeros(3), 2.0 * (xp - x))) / 2.0
        standard_error = np.sqrt(max(second_moment - exact**2, 0.0) / (200 * 50))
        mean = np.mean([rff_kernel_estimate(model, x, xp) for model in models])
        assert abs(mean - exact) <= 3.0 * standard_error + 1e-12


def test_rff_prediction_approaches_krr():
    """S を増やすとRFFの予測とテストMSEがKRRに近づくことをテスト"""
    lattice = integer_lattice(2, 2)
    weights = random_mps(lattice, 2, seed=9)
    engine = new_engine(lattice, weights)
    data = synthetic_rkhs_target(lattice, 120, seed=6)
    noise = np.random.default_rng(7).normal(scale=0.3, size=120)
    data = Dataset(data.X, data.y + noise)
    train, test = Dataset(data.X[:80], data.y[:80]), Dataset(data.X[80:], data.y[80:])
    lam = 1e-2

    krr_pred = krr_predict(krr_fit(engine, train, lam=lam), engine, test.X)
    krr_mse = mse(test.y, krr_pred)

    distances, gaps = [], []
    for S in (100, 1_000, 10_000):
        run_distances, run_gaps = [], []
        for seed in range(5):
            pred = rff_predict(rff_fit(lattice, weights, train, S=S, lam=lam, seed=seed), test.X)
            run_distances.append(np.mean((pred - krr_pred) ** 2))
            run_gaps.append(abs(mse(test.y, pred) - krr_mse))
        distances.append(np.median(run_distances))
        gaps.append(np.median(run_gaps))

    # 検証
    assert distances[0] >= distances[1] >= distances[2]
    assert gaps[2] <= gaps[0]


def test_rff_feature_cap(lattice_d3, random_weights_d3, monkeypatch):
    """特徴行列がメモリ上限を超える場合にエラーになることをテスト"""
    monkeypatch.setattr(settings, "RFF_MAX_FEATURE_ENTRIES", 100)
    data = synthetic_rkhs_target(lattice_d3, 10, seed=0)

    with pytest.raises(EnumerationCapError):
        rff_fit(lattice_d3, random_weights_d3, data, S=10, lam=1e-3, seed=0)


def test_rff_rejects_invalid_arguments(lattice_d3, random_weights_d3):
    """不正な S・λ・次元がエラーになることをテスト"""
    data = synthetic_rkhs_target(lattice_d3, 10, seed=0)

    with pytest.raises(ValueError):
        rff_fit(lattice_d3, random_weights_d3, data, S=0, lam=1e-3, seed=0)
    with pytest.raises(ValueError):
        rff_fit(lattice_d3, random_weights_d3, data, S=5, lam=-1.0, seed=0)
    with pytest.raises(ShapeMismatchError):
        rff_fit(lattice_d3, random_weights_d3, Dataset(np.zeros((3, 2)), np.zeros(3)), S=5, lam=1e-3, seed=0)


def test_cost_report_compare():
    """n=10⁴, S=100 ではRFFが、n=100, S=10⁴ ではKRRが安価と判定されることをテスト"""
    report = cost_report(10_000, 100)

    # 検証
    assert report["mode"] == "compare"
    assert report["predicted"]["krr"] == {"space": 10**8, "time": 10**12}
    assert report["predicted"]["rff"] == {"space": 10**6, "time": 10_000 * 100**2 + 100**3}
    assert report["cheaper"] == "rff"
    assert cost_report(100, 10_000)["cheaper"] == "krr"


def test_cost_report_single_mode():
    """単一モードでは該当手法の予測値のみを含み、実測値を非負で記録することをテスト"""
    report = cost_report(50, 20, mode="krr", measured={"krr": 0.25})

    # 検証
    assert list(report["predicted"]) == ["krr"]
    assert report["measured_seconds"] == {"krr": 0.25}
    with pytest.raises(ValueError):
        cost_report(50, 20, mode="svm")
    with pytest.raises(ValueError):
        cost_report(0, 20)


def test_model_to_json(lattice_d3, random_weights_d3):
    """直列化したRFFモデルにシード・λ・S が含まれることをテスト"""
    data = synthetic_rkhs_target(lattice_d3, 20, seed=0)
    model = rff_fit(lattice_d3, random_weights_d3, data, S=4, lam=0.5, seed=21)

    payload = json.loads(model_to_json(model))

    # 検証
    assert payload["type"] == "rff"
    assert payload["seed"] == 21
    assert payload["lam"] == 0.5
    assert payload["S"] == 4
    assert len(payload["beta"]) == 8
    with pytest.raises(TypeError):
        model_to_json(object())


def test_train_test_split(lattice_d2):
    """分割がシードで決定的で、全サンプルを重複なく分けることをテスト"""
    data = synthetic_rkhs_target(lattice_d2, 20, seed=1)

    train, test = train_test_split(data, 0.25, seed=3)
    train_again, _ = train_test_split(data, 0.25, seed=3)

    # 検証
    assert (train.n, test.n) == (15, 5)
    np.testing.assert_array_equal(train.X, train_again.X)
    merged = np.sort(np.concatenate([train.y, test.y]))
    np.testing.assert_array_equal(merged, np.sort(data.y))
    with pytest.raises(ValueError):
        train_test_split(data, 1.0, seed=0)


def test_dataset_validation():
    """形状の不一致と有限でない値がエラーになることをテスト"""
    with pytest.raises(ShapeMismatchError):
        Dataset(np.zeros((3, 2)), np.zeros(2))
    with pytest.raises(ValueError):
        Dataset(np.array([[np.nan]]), np.array([0.0]))
