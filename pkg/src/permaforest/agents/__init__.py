from .curriculum import CurriculumPpoTrainer
from .eupg import EupgTrainer
from .evaluate import (
    ConstantPolicy,
    EvaluationRecord,
    GreedyEupgPolicy,
    GreedyPpoPolicy,
    evaluate_policy,
    run_baselines,
)
from .ppo import PpoTrainer

__all__ = [
    "CurriculumPpoTrainer",
    "EupgTrainer",
    "PpoTrainer",
    "ConstantPolicy",
    "EvaluationRecord",
    "GreedyEupgPolicy",
    "GreedyPpoPolicy",
    "evaluate_policy",
    "run_baselines",
]
