"""Multi-view clustering of view-unaligned data with learned anchor graphs."""

from .data import MultiViewDataset, load_dataset, make_blobs, save_dataset, synthesize_unaligned
from .errors import (
    ConfigurationError,
    InvalidArgumentError,
    InvalidInputError,
    InvalidShapeError,
    LoadError,
    NumericalFailure,
    VuclustError,
)
from .metrics import EvaluationReport, accuracy, nmi, pairwise_fscore, permutation_recovery
from .model import ModelState, SolverConfig
from .solver import ClusteringResult, IterationTrace, fit

__version__ = "0.1.0"
