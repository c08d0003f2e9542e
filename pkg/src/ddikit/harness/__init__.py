"""Training, evaluation, aggregation, and explanation orchestration."""

from ddikit.harness.config import RunConfig
from ddikit.harness.train import TrainResult, train
from ddikit.harness.evaluate import aggregate_runs, evaluate, load_checkpoint

__all__ = [
    "RunConfig",
    "train",
    "TrainResult",
    "evaluate",
    "aggregate_runs",
    "load_checkpoint",
]
