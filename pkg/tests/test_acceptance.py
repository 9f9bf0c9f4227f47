"""
受け入れテスト

このモジュールは、ランダム構成での全列挙オラクルとの一致検証と、
入力次元に対する評価時間のスケーリング計測をテストします。
"""

import itertools
import time

import pytest

from mpskernel.services.verify_service import ORACLE_TOL, bench_scaling, verify_suite


def test_verify_suite_default_size():
    """既定の50構成・20ペアで最大誤差が1e-9以下となり、60秒以内に終わることをテスト"""
    start = time.perf_counter()
    report = verify_suite(seed=0)
    elapsed = time.perf_counter() - start

    # 検証
    assert report["n_configs"] == 50
    assert report["pairs"] == 20
    assert report["passed"] is True
    assert elapsed < 60.0


def test_verify_suite_passes():
    """ランダム構成で縮約評価が参照実装・ETK形式と一致することをテスト"""
    report = verify_suite(n_configs=10, pairs=5, seed=0)

    # 検証
    assert report["passed"] is True
    assert report["max_oracle_error"] <= ORACLE_TOL
    assert report["max_etk_error"] <= ORACLE_TOL
    assert report["max_normalization_error"] <= ORACLE_TOL
    assert report["max_shift_error"] <= ORACLE_TOL
    assert len(report["configs"]) == 10
    for config in report["configs"]:
        assert 1 <= config["d"] <= 6
        assert all(M in (1, 2) for M in config["Ms"])
        assert 1 <= config["bond_dim"] <= 4


def test_verify_suite_deterministic():
    """同じシードで同じ構成が選ばれることをテスト"""
    first = verify_suite(n_configs=3, pairs=2, seed=11)
    second = verify_suite(n_configs=3, pairs=2, seed=11)

    # 検証
    assert [c["seed"] for c in first["configs"]] == [c["seed"] for c in second["configs"]]
    assert first["max_oracle_error"] == second["max_oracle_error"]


def test_bench_scaling_with_fake_timer():
    """計測値が最短時間を入力ペア数で割った値になることをテスト"""
    ticks = itertools.count(0.0, 0.5)

    rows = bench_scaling(dims=[6, 3], bond_dim=2, M=1, pairs=4, repeats=2, seed=0, timer=lambda: next(ticks))

    # 検証
    assert [row["d"] for row in rows] == [3, 6]
    for row in rows:
        assert row["bond_dim"] == 2
        assert row["M"] == 1
        assert row["seconds_per_eval"] == pytest.approx(0.5 / 4)


def test_bench_scaling_linear_in_dimension():
    """d を 50 から 100 に倍にしたときの評価時間の比が3以下であることをテスト"""
    rows = bench_scaling(dims=[50, 100], bond_dim=4, M=1, pairs=10, repeats=5, seed=0)

    # 検証
    assert rows[1]["seconds_per_eval"] / rows[0]["seconds_per_eval"] <= 3.0
