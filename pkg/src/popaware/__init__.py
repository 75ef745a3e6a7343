"""Population-aware hierarchical Bayesian domain adaptation for binary outcomes."""

from .core import (ALL_SUBGROUPS, AgeGroup, CollectionMode, Dataset, Gender, Record, Role,
                   SubgroupKey, split_labeled, subgroup_partition)
from .data_io import ExperimentConfig, ResultRow, load_config, load_dataset, write_results
from .experiment import label_fraction_sweep, run_experiment
from .kernels import BACKEND
from .model import HierModel, fit_model
from .stats import auc
from .synth import DgpConfig, default_config, generate

__version__ = "0.1.0"

__all__ = [
    "ALL_SUBGROUPS", "AgeGroup", "BACKEND", "CollectionMode", "Dataset", "DgpConfig",
    "ExperimentConfig", "Gender", "HierModel", "Record", "ResultRow", "Role", "SubgroupKey",
    "auc", "default_config", "fit_model", "generate", "label_fraction_sweep", "load_config",
    "load_dataset", "run_experiment", "split_labeled", "subgroup_partition", "write_results",
]
