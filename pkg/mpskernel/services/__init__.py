"""
サービスパッケージ

カーネル評価エンジン、回帰、PQC検証、検証スイートなど、ドメインモデルを組み合わせた処理を提供します。
"""
