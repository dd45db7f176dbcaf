"""Range-only single-beacon localization: simulator, LS estimator, actor-critic agents."""
from .baseline import BaselineConfig, PredefinedPath
from .env import EnvConfig, RangeOnlyEnv
from .estimator import Estimate, LeastSquaresEstimator, solve_ls
from .evaluation import compare, evaluate, iqm, metrics, probability_of_improvement, radius_sweep
from .geometry import NoiseModel, project_slant_range, seeded_rng, wrap_angle

__version__ = "0.1.0"

__all__ = ["BaselineConfig", "EnvConfig", "Estimate", "LeastSquaresEstimator", "NoiseModel",
           "PredefinedPath", "RangeOnlyEnv", "compare", "evaluate", "iqm", "metrics",
           "probability_of_improvement", "project_slant_range", "radius_sweep", "seeded_rng",
           "solve_ls", "wrap_angle"]
