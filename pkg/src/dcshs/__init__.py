"""Imbalanced, class-overlapping binary classification with projective
clustering, stage-wise hybrid sampling and cluster transfer mapping."""

__version__ = "0.1.0"
