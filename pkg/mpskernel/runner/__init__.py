"""
実行レイヤーパッケージ

実行設定からタスクを実行するエグゼキューターと、コマンドラインのエントリーポイントを提供します。
"""

from .executor import TaskExecutor

__all__ = ["TaskExecutor"]
