"""
ユーティリティパッケージ

縮約・線形代数・入出力の共通処理を提供します。
"""
