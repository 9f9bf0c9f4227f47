"""
テスト設定モジュール

このモジュールは、pytestのフィクスチャ（小さな周波数格子、シード付きMPS、カーネル評価エンジン）を提供します。
"""

import numpy as np
import pytest

from mpskernel.models.lattice import FrequencyLattice, axis_integer
from mpskernel.models.weight_mps import random_mps, uniform_mps
from mpskernel.services.kernel_engine import new_engine


def integer_lattice(d: int, M: int) -> FrequencyLattice:
    """全軸が (−M, …, M) の格子を作成する"""
    return FrequencyLattice(tuple(axis_integer(M) for _ in range(d)))


@pytest.fixture
def lattice_d1() -> FrequencyLattice:
    """d=1, M=1 の格子"""
    return integer_lattice(1, 1)


@pytest.fixture
def lattice_d2() -> FrequencyLattice:
    """d=2, M=1 の格子"""
    return integer_lattice(2, 1)


@pytest.fixture
def lattice_d3() -> FrequencyLattice:
    """d=3, M=1 の格子"""
    return integer_lattice(3, 1)


@pytest.fixture
def random_weights_d3(lattice_d3):
    """d=3, D=2 のシード付きランダムMPS"""
    return random_mps(lattice_d3, 2, seed=7)


@pytest.fixture
def uniform_engine_d1(lattice_d1):
    """d=1 の正準重み付けエンジン"""
    return new_engine(lattice_d1, uniform_mps(lattice_d1))


@pytest.fixture
def uniform_engine_d2(lattice_d2):
    """d=2 の正準重み付けエンジン"""
    return new_engine(lattice_d2, uniform_mps(lattice_d2))


@pytest.fixture
def rng() -> np.random.Generator:
    """テスト用の乱数生成器"""
    return np.random.default_rng(12345)
