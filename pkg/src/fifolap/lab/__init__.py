from .generate import GenConfig, NoiseModel, generate, perturb, unbounded_demo
from .runner import ExperimentConfig, run_corpus, run_experiment, sweep, sweep_csv

__all__ = [
    "ExperimentConfig", "GenConfig", "NoiseModel", "generate", "perturb", "run_corpus",
    "run_experiment", "sweep", "sweep_csv", "unbounded_demo",
]
