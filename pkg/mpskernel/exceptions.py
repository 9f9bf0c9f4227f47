"""
例外定義モジュール

このモジュールは、mpskernel全体で使用される例外クラスを定義します。
入力の検証エラーは ValueError を、数値計算の失敗は ArithmeticError を併せて継承するため、
呼び出し側は標準の例外型でも捕捉できます。
"""

from typing import List, Optional


class MpsKernelError(Exception):
    """mpskernelの基底例外クラス"""


class LatticeError(MpsKernelError, ValueError):
    """周波数格子・マルチインデックスに関するエラー"""


class ShapeMismatchError(MpsKernelError, ValueError):
    """格子・MPS・データの次元が一致しない場合のエラー"""


class EnumerationCapError(MpsKernelError, ValueError):
    """全列挙が設定された上限を超える場合のエラー"""


class ConfigError(MpsKernelError, ValueError):
    """実行設定の検証エラー"""

    def __init__(self, message: str, diagnostics: Optional[List[str]] = None):
        """初期化

        Args:
            message (str): エラーメッセージ
            diagnostics (Optional[List[str]], optional): 診断メッセージのリスト。デフォルトはNone
        """
        super().__init__(message)
        self.diagnostics = diagnostics or []


class NumericError(MpsKernelError, ArithmeticError):
    """数値計算の失敗を表す基底クラス"""


class ZeroWeightingError(NumericError):
    """重み付けの正規化定数がゼロ（許容誤差以下）の場合のエラー"""


class ImaginaryResidueError(NumericError):
    """縮約結果の虚部が許容誤差を超えた場合のエラー（上流の対称性違反を示す）"""


class FactorizationError(NumericError):
    """ジッターを最大まで加えても分解に失敗した場合のエラー"""
