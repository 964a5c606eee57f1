"""Self-paced partial-label learning with class-balanced label assignment."""
from .types import (
    Assignment,
    LinearModel,
    PartialLabelDataset,
    PLLError,
    SelfPacedState,
    TrainConfig,
    validate,
)
from .data_io import class_prior_counts, corrupt_labels, load_dataset, save_dataset
from .margin_solver import predict, predict_many, train_weighted_mcsvm
from .label_assignment import solve_assignment
from .self_paced import update_weights
from .trainer import cross_validate, fit

__version__ = "0.1.0"
