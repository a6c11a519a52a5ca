"""Causal regularization of tabular classifiers with FCI-derived masks."""

from .acr import ACRConfig, fit_acr, predict_proba
from .dataset import Dataset, load_csv, write_csv
from .fci import CausalMask, PAG, extract_mask, run_fci
from .synthgen import SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "ACRConfig",
    "CausalMask",
    "Dataset",
    "PAG",
    "SynthConfig",
    "extract_mask",
    "fit_acr",
    "generate",
    "load_csv",
    "predict_proba",
    "run_fci",
    "write_csv",
]
