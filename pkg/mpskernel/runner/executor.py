"""
実行レイヤーモジュール

このモジュールは、検証済みの実行設定（RunConfig）を受け取り、対応するタスクを実行して
結果の辞書を返し、出力ディレクトリにJSON/CSVの成果物を書き出す機能を提供します。

結果の数値は設定とシードだけで決まり、時間計測の値は timings セクションに分離します。
"""

import logging
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from ..config import settings
from ..exceptions import NumericError
from ..models.circuit import circuit_from_dict
from ..models.dataset import Dataset, mse, train_test_split
from ..models.lattice import FrequencyLattice, frequency_grid, index_grid
from ..models.weight_mps import (
    WeightMPS,
    mps_from_dict,
    product_weights,
    random_mps,
    sample_offsets,
    squared_sum,
    uniform_mps,
)
from ..schemas import MPSFile, RunConfig
from ..services.kernel_engine import KernelEngine, assert_psd, gram, kernel_batch, new_engine
from ..services.pqc_service import conjugacy_error, fourier_fit, induced_lattice, real_coefficients
from ..services.regression_service import (
    cost_report,
    krr_fit,
    krr_predict,
    rff_fit,
    rff_predict,
)
from ..services.verify_service import bench_scaling, verify_suite
from ..utils.io_utils import read_dataset_csv, read_json, read_pairs_csv, write_csv, write_json

logger = logging.getLogger(__name__)

TaskOutput = Tuple[Dict[str, Any], Dict[str, Any], Optional[Tuple[str, List[str], List[List[Any]]]]]


class TaskExecutor:
    """タスク実行クラス

    実行設定からタスクを選び、結果・時間計測・CSV成果物をまとめて返します。
    """

    def __init__(self, base_dir: Optional[Path] = None, threads: Optional[int] = None):
        """初期化

        Args:
            base_dir (Optional[Path], optional): 設定内の相対パスの基準ディレクトリ。デフォルトはカレントディレクトリ
            threads (Optional[int], optional): グラム行列計算のスレッド数。デフォルトは設定値
        """
        self.base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        self.threads = threads or settings.DEFAULT_THREADS
        self._handlers: Dict[str, Callable[[RunConfig], TaskOutput]] = {
            "kernel-eval": self._kernel_eval,
            "gram": self._gram,
            "krr": self._krr,
            "rff": self._rff,
            "sample": self._sample,
            "verify": self._verify,
            "bench": self._bench,
            "pqc-check": self._pqc_check,
        }

    def _path(self, value: str) -> Path:
        path = Path(value)
        return path if path.is_absolute() else self.base_dir / path

    def build_lattice(self, config: RunConfig) -> FrequencyLattice:
        """設定からエンコーディング戦略の周波数格子を構築する"""
        if config.lattice is None:
            raise ValueError(f"{config.task} タスクには lattice が必要です")
        return config.lattice.to_lattice()

    def build_weighting(self, config: RunConfig, lattice: FrequencyLattice) -> WeightMPS:
        """設定から重み付けMPSを構築する"""
        weighting = config.weighting
        if weighting.kind == "uniform":
            return uniform_mps(lattice)
        if weighting.kind == "product":
            return product_weights(lattice, weighting.vectors or [], strict=weighting.strict)
        if weighting.kind == "random":
            return random_mps(lattice, weighting.bond_dim or 1, config.weighting_seed())
        data = MPSFile.model_validate(read_json(self._path(weighting.path or "")))
        return mps_from_dict(data.model_dump())

    def build_engine(self, config: RunConfig) -> KernelEngine:
        """設定からカーネル評価エンジンを構築する"""
        lattice = self.build_lattice(config)
        return new_engine(lattice, self.build_weighting(config, lattice))

    def execute(self, config: RunConfig, out_dir: Path) -> Dict[str, Any]:
        """タスクを実行し、result.json とタスクごとのCSVを書き出す

        Args:
            config (RunConfig): 検証済みの実行設定
            out_dir (Path): 出力ディレクトリ

        Returns:
            Dict[str, Any]: result.json と同じ内容の辞書

        Raises:
            NumericError: verify タスクが不合格の場合（result.json は書き出し済み）
        """
        logger.info(f"タスクを開始します: {config.task}")
        start = time.perf_counter()
        results, timings, table = self._handlers[config.task](config)
        timings["task_seconds"] = time.perf_counter() - start
        logger.info(f"タスクが完了しました: {config.task} ({timings['task_seconds']:.3f}s)")

        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        artifacts: List[str] = ["result.json"]
        if table is not None:
            name, header, rows = table
            write_csv(out_dir / name, header, rows)
            artifacts.append(name)

        result = {
            "tool": {"name": settings.APP_NAME, "version": settings.APP_VERSION},
            "config": config.model_dump(mode="json"),
            "seeds": {
                "seed": config.seed,
                "task_seed": config.task_seed(),
                "weighting_seed": config.weighting_seed(),
            },
            "task": config.task,
            "results": results,
            "artifacts": sorted(artifacts),
            "timings": timings,
        }
        write_json(out_dir / "result.json", result)
        if config.task == "verify" and not results["passed"]:
            failed = [key for key, value in results.items() if key.startswith("max_") and value > results["tolerance"]]
            raise NumericError(f"検証スイートが許容誤差 {results['tolerance']:.1e} を満たしません: {', '.join(failed)}")
        return result

    def _kernel_eval(self, config: RunConfig) -> TaskOutput:
        engine = self.build_engine(config)
        params = config.params
        if params.pairs_path:
            X, Xp = read_pairs_csv(self._path(params.pairs_path))
        else:
            X = np.asarray([params.x], dtype=float)
            Xp = np.asarray([params.x_prime], dtype=float)
        values = kernel_batch(engine, X, Xp)
        rows = [[i, float(v)] for i, v in enumerate(values)]
        results = {"count": len(values), "values": values.tolist(), "norm2": engine.norm2}
        return results, {}, ("kernel.csv", ["pair", "kernel"], rows)

    def _gram(self, config: RunConfig) -> TaskOutput:
        engine = self.build_engine(config)
        data = read_dataset_csv(self._path(config.params.dataset_path or ""), require_y=False)
        G = gram(engine, data.X, threads=self.threads)
        header = ["row"] + [f"col_{j}" for j in range(G.shape[1])]
        rows = [[i] + [float(v) for v in G[i]] for i in range(G.shape[0])]
        results = {
            "n": data.n,
            "min_eigenvalue": assert_psd(G),
            "max_asymmetry": float(np.max(np.abs(G - G.T))),
            "max_diagonal_error": float(np.max(np.abs(np.diag(G) - 1.0))),
        }
        return results, {}, ("gram.csv", header, rows)

    def _split(self, config: RunConfig) -> Tuple[Dataset, Optional[Dataset]]:
        params = config.params
        data = read_dataset_csv(self._path(params.dataset_path or ""))
        if params.test_path:
            return data, read_dataset_csv(self._path(params.test_path))
        if params.test_fraction:
            return train_test_split(data, params.test_fraction, config.task_seed())
        return data, None

    @staticmethod
    def _prediction_rows(train: Dataset, train_hat, test: Optional[Dataset], test_hat) -> List[List[Any]]:
        rows: List[List[Any]] = [["train", i, float(y), float(p)] for i, (y, p) in enumerate(zip(train.y, train_hat))]
        if test is not None:
            rows += [["test", i, float(y), float(p)] for i, (y, p) in enumerate(zip(test.y, test_hat))]
        return rows

    @staticmethod
    def _cost(n: int, S: int, mode: str, fit_seconds: float) -> Tuple[Dict[str, Any], Dict[str, Any]]:
        """コストレポートを、設定で決まる予測部分と timings に書く実測時間に分ける"""
        measured = {"krr": fit_seconds} if mode == "krr" else {"rff": fit_seconds}
        report = cost_report(n, S, mode=mode, measured=measured)
        return report, {"fit_seconds": fit_seconds, "measured_seconds": report.pop("measured_seconds")}

    def _krr(self, config: RunConfig) -> TaskOutput:
        engine = self.build_engine(config)
        train, test = self._split(config)
        lam = config.params.lam
        model = krr_fit(engine, train, lam, threads=self.threads)
        train_hat = krr_predict(model, engine, train.X, threads=self.threads)
        test_hat = krr_predict(model, engine, test.X, threads=self.threads) if test is not None else None
        results = {
            "n_train": train.n,
            "n_test": test.n if test is not None else 0,
            "lam": lam,
            "train_mse": mse(train.y, train_hat),
            "test_mse": mse(test.y, test_hat) if test is not None else None,
        }
        results["cost"], timings = self._cost(train.n, 1, "krr", model.fit_seconds)
        rows = self._prediction_rows(train, train_hat, test, test_hat)
        return results, timings, ("predictions.csv", ["split", "index", "y", "y_hat"], rows)

    def _rff(self, config: RunConfig) -> TaskOutput:
        lattice = self.build_lattice(config)
        weights = self.build_weighting(config, lattice)
        train, test = self._split(config)
        params = config.params
        S = params.S or 1
        model = rff_fit(lattice, weights, train, S, params.lam, config.task_seed())
        train_hat = rff_predict(model, train.X)
        test_hat = rff_predict(model, test.X) if test is not None else None
        results = {
            "n_train": train.n,
            "n_test": test.n if test is not None else 0,
            "S": S,
            "lam": params.lam,
            "seed": model.seed,
            "train_mse": mse(train.y, train_hat),
            "test_mse": mse(test.y, test_hat) if test is not None else None,
        }
        results["cost"], timings = self._cost(train.n, S, "compare", model.fit_seconds)
        rows = self._prediction_rows(train, train_hat, test, test_hat)
        return results, timings, ("predictions.csv", ["split", "index", "y", "y_hat"], rows)

    def _sample(self, config: RunConfig) -> TaskOutput:
        lattice = self.build_lattice(config)
        weights = self.build_weighting(config, lattice)
        count = config.params.count or 1
        seed = config.task_seed()
        offsets = sample_offsets(weights, np.random.default_rng(seed), count)
        freqs = np.stack([axis.array[offsets[:, j] + axis.M] for j, axis in enumerate(lattice.axes)], axis=1)
        header = [f"k_{j + 1}" for j in range(lattice.d)] + [f"omega_{j + 1}" for j in range(lattice.d)]
        rows = [[int(k) for k in offsets[i]] + [float(w) for w in freqs[i]] for i in range(count)]
        results = {"count": count, "seed": seed, "squared_sum": squared_sum(weights)}
        return results, {}, ("samples.csv", header, rows)

    def _verify(self, config: RunConfig) -> TaskOutput:
        params = config.params
        report = verify_suite(params.n_configs, params.pairs, config.task_seed())
        return report, {}, None

    def _bench(self, config: RunConfig) -> TaskOutput:
        params = config.params
        measurements = bench_scaling(
            params.dims, params.bond_dim, params.M, params.pairs, params.repeats, config.task_seed()
        )
        rows = [[m["d"], m["bond_dim"], m["M"], m["seconds_per_eval"]] for m in measurements]
        timings = {f"seconds_per_eval_d{m['d']}": m["seconds_per_eval"] for m in measurements}
        if len(measurements) >= 2 and measurements[-2]["seconds_per_eval"] > 0:
            timings["ratio_last_two"] = measurements[-1]["seconds_per_eval"] / measurements[-2]["seconds_per_eval"]
        results = {"dims": sorted(params.dims), "bond_dim": params.bond_dim, "M": params.M, "pairs": params.pairs}
        return results, timings, ("bench.csv", ["d", "bond_dim", "M", "seconds_per_eval"], rows)

    def _pqc_check(self, config: RunConfig) -> TaskOutput:
        params = config.params
        circuit = circuit_from_dict(read_json(self._path(params.circuit_path or "")))
        lattice = config.lattice.to_lattice() if config.lattice is not None else induced_lattice(circuit)
        fit = fourier_fit(circuit, lattice, params.sample_count, config.task_seed())
        indices = index_grid(lattice)
        freqs = frequency_grid(lattice)
        header = [f"k_{j + 1}" for j in range(lattice.d)] + [f"omega_{j + 1}" for j in range(lattice.d)] + ["real", "imag"]
        rows = [
            [int(k) for k in indices[i]] + [float(w) for w in freqs[i]] + [float(c.real), float(c.imag)]
            for i, c in enumerate(fit.coefficients)
        ]
        results = {
            "lattice_dims": list(lattice.dims),
            "sample_count": fit.sample_count,
            "seed": fit.seed,
            "residual": fit.residual,
            "conjugacy_error": conjugacy_error(fit),
            "real_coefficients": real_coefficients(fit, lattice),
        }
        return results, {}, ("coefficients.csv", header, rows)
