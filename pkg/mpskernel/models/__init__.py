"""
ドメインモデルパッケージ

周波数格子、MPS重み付け、回路記述、回帰データなどの不変なドメイン型と、その純粋な操作を定義します。
"""

from .lattice import FrequencyAxis, FrequencyLattice, MultiIndex
from .weight_mps import WeightMPS

__all__ = ["FrequencyAxis", "FrequencyLattice", "MultiIndex", "WeightMPS"]
