"""
設定管理モジュール

このモジュールは、アプリケーションの設定を管理します。
環境変数から設定を読み込み、数値計算の許容誤差や上限値などアプリケーション全体で使用される設定値を提供します。
"""

from typing import Optional

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """アプリケーション設定クラス"""

    # 基本設定
    APP_NAME: str = "mpskernel"
    APP_VERSION: str = "0.1.0"
    APP_DESCRIPTION: str = "対称MPS重み付きPQC由来カーネルの厳密評価エンジン"
    MPSKERNEL_ENV: str = "development"
    LOG_LEVEL: Optional[str] = None

    # 数値計算の許容誤差
    IMAG_TOL: float = 1e-9
    NORM_TOL: float = 1e-14
    DEDUP_TOL: float = 1e-12

    # 全列挙オラクルの上限（格子点数）
    ENUMERATION_CAP: int = 1_000_000

    # Cholesky分解のジッター
    JITTER_START: float = 1e-12
    JITTER_MAX: float = 1e-6
    JITTER_FACTOR: float = 10.0

    # RFF特徴行列の要素数上限（n × 2S）
    RFF_MAX_FEATURE_ENTRIES: int = 50_000_000

    # グラム行列計算の並列数
    DEFAULT_THREADS: int = 1

    # PQCシミュレーション設定
    MAX_QUBITS: int = 10
    PQC_MIN_SAMPLES: int = 64
    PQC_SAMPLE_FACTOR: int = 4
    # フーリエフィットの設計行列の特異値比の下限
    PQC_RANK_TOL: float = 1e-8

    model_config = {
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "case_sensitive": True,
        "extra": "allow",  # 未定義の環境変数も許可する
    }


# グローバル設定インスタンス
settings = Settings()


def get_settings() -> Settings:
    """設定インスタンスを取得する関数

    Returns:
        Settings: 設定インスタンス
    """
    return settings
