"""
mpskernel パッケージ

対称MPS重み付けで再重み付けされたPQC由来カーネルを、テンソルネットワークの縮約により厳密に評価します。
"""

from .config import settings

__version__ = settings.APP_VERSION
