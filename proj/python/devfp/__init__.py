from ._devfp import (
    DevfpError,
    experiments,
    predict,
    reduce,
    run_experiment,
    softmax,
    trace_demo,
    train_forest,
    valid_configs,
)

__all__ = [
    "DevfpError",
    "experiments",
    "predict",
    "reduce",
    "run_experiment",
    "softmax",
    "trace_demo",
    "train_forest",
    "valid_configs",
]
