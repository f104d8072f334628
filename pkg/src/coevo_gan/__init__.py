"""Coevolutionary GAN training on 2D Gaussian mixtures."""
from .coevolution import StrategyConfig, run_coea, run_mgmd, run_strategy
from .datasets import MixtureSpec, get_mixture, make_blob8, make_gaussian_ring, make_split
from .metrics import MetricsReport, evaluate_generator
from .training import TrainConfig

__all__ = [
    "MixtureSpec", "MetricsReport", "StrategyConfig", "TrainConfig", "evaluate_generator",
    "get_mixture", "make_blob8", "make_gaussian_ring", "make_split", "run_coea", "run_mgmd",
    "run_strategy",
]
__version__ = "0.1.0"
