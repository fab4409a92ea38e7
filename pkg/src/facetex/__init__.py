"""Facial-block texture screening: Gabor filter-bank features over 64x64
facial blocks, k-NN and SVM classifiers, and a reproducible evaluation sweep.
"""

__version__ = "0.1.0"

from .classify import DM, HEALTHY
from .config import Config, load_config
from .images import BLOCK_SIZE, FacialBlocks, RoiRect
from .pipeline import BankAssignment, BankConfig, FeatureExtractor, Method

__all__ = [
    "BLOCK_SIZE",
    "BankAssignment",
    "BankConfig",
    "Config",
    "DM",
    "FacialBlocks",
    "FeatureExtractor",
    "HEALTHY",
    "Method",
    "RoiRect",
    "load_config",
    "__version__",
]
