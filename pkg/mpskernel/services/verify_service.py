"""
検証・ベンチマークサービスモジュール

このモジュールは、ランダムな対称MPS重み付けに対して縮約によるカーネル評価を全列挙の参照実装と比較する
検証スイートと、入力次元 d に対する評価時間のスケーリングを計測するベンチマークを提供します。
"""

import logging
import time
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..models.lattice import FrequencyLattice, axis_integer
from ..models.weight_mps import random_mps
from .kernel_engine import dense_kernel, eval_kernel, eval_kernel_etk, kernel_batch, new_engine

logger = logging.getLogger(__name__)

ORACLE_TOL = 1e-9


def verify_suite(n_configs: int = 50, pairs: int = 20, seed: int = 0) -> Dict[str, Any]:
    """ランダム構成で縮約評価と参照実装の一致を検証する

    各構成は d ∈ 1..6、M_j ∈ {1, 2}、D ∈ 1..4 からシード付きで選びます。

    Args:
        n_configs (int, optional): 構成の数。デフォルトは50
        pairs (int, optional): 構成ごとの入力ペア数。デフォルトは20
        seed (int, optional): 乱数シード

    Returns:
        Dict[str, Any]: 最大誤差と構成ごとの結果を含むレポート
    """
    rng = np.random.default_rng(seed)
    configs: List[Dict[str, Any]] = []
    worst = {"oracle": 0.0, "etk": 0.0, "normalization": 0.0, "shift": 0.0}

    for c in range(n_configs):
        d = int(rng.integers(1, 7))
        Ms = [int(m) for m in rng.integers(1, 3, size=d)]
        D = int(rng.integers(1, 5))
        mps_seed = int(rng.integers(0, 2**31 - 1))
        lattice = FrequencyLattice(tuple(axis_integer(M) for M in Ms))
        weights = random_mps(lattice, D, mps_seed)
        engine = new_engine(lattice, weights)

        X = rng.uniform(-np.pi, np.pi, size=(pairs, d))
        Xp = rng.uniform(-np.pi, np.pi, size=(pairs, d))
        shift = rng.uniform(-np.pi, np.pi, size=d)
        values = kernel_batch(engine, X, Xp)
        errors = {
            "oracle": max(abs(values[i] - dense_kernel(lattice, weights, X[i], Xp[i])) for i in range(pairs)),
            "etk": max(abs(values[i] - eval_kernel_etk(engine, X[i], Xp[i])) for i in range(pairs)),
            "normalization": float(np.max(np.abs(kernel_batch(engine, X, X) - 1.0))),
            "shift": float(np.max(np.abs(kernel_batch(engine, X + shift, Xp + shift) - values))),
        }
        for key, err in errors.items():
            worst[key] = max(worst[key], float(err))
        configs.append({"config": c, "d": d, "Ms": Ms, "bond_dim": D, "seed": mps_seed, **errors})

    passed = all(err <= ORACLE_TOL for err in worst.values())
    logger.info(f"検証スイートが完了しました: 構成数={n_configs}, 最大誤差={worst['oracle']:.3e}, 合格={passed}")
    return {
        "n_configs": n_configs,
        "pairs": pairs,
        "seed": seed,
        "tolerance": ORACLE_TOL,
        "max_oracle_error": worst["oracle"],
        "max_etk_error": worst["etk"],
        "max_normalization_error": worst["normalization"],
        "max_shift_error": worst["shift"],
        "passed": passed,
        "configs": configs,
    }


def bench_scaling(
    dims: Sequence[int] = (25, 50, 100),
    bond_dim: int = 4,
    M: int = 1,
    pairs: int = 20,
    repeats: int = 3,
    seed: int = 0,
    timer=time.perf_counter,
) -> List[Dict[str, Any]]:
    """入力次元ごとのカーネル評価時間を計測する

    各 d について、ボンド次元 bond_dim のランダムMPSでエンジンを構築し、
    pairs 組の評価を repeats 回繰り返した最短時間を1組あたりの時間として記録します。

    Args:
        dims (Sequence[int], optional): 入力次元のリスト
        bond_dim (int, optional): ボンド次元 D
        M (int, optional): 各軸の M
        pairs (int, optional): 入力ペア数
        repeats (int, optional): 繰り返し回数
        seed (int, optional): 乱数シード
        timer (optional): 時刻取得関数

    Returns:
        List[Dict[str, Any]]: d ごとの計測結果（d の昇順）
    """
    rows: List[Dict[str, Any]] = []
    for d in sorted(dims):
        lattice = FrequencyLattice(tuple(axis_integer(M) for _ in range(d)))
        engine = new_engine(lattice, random_mps(lattice, bond_dim, seed + d))
        rng = np.random.default_rng(seed + d)
        X = rng.uniform(-np.pi, np.pi, size=(pairs, d))
        Xp = rng.uniform(-np.pi, np.pi, size=(pairs, d))

        best: Optional[float] = None
        for _ in range(repeats):
            start = timer()
            for i in range(pairs):
                eval_kernel(engine, X[i], Xp[i])
            elapsed = timer() - start
            best = elapsed if best is None else min(best, elapsed)
        seconds = max(0.0, float(best or 0.0)) / pairs
        rows.append({"d": d, "bond_dim": bond_dim, "M": M, "seconds_per_eval": seconds})
        logger.info(f"ベンチマーク: d={d}, D={bond_dim}, M={M}, 1評価あたり {seconds * 1e3:.3f} ms")
    return rows
