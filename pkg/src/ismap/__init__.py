"""Isometric separation maps: low-rank MVU/MFNU unfolding with class-separation constraints."""

from ._kernels import BACKEND
from .classify import Prediction, predict, score
from .constraints import (
    AnchorAssignment,
    ConstraintSet,
    EqualityConstraint,
    SeparationConstraint,
    build_constraints,
    eq_residual,
    feasibility_metrics,
    select_anchors,
    sep_value,
)
from .dataset import Dataset, SwissRollSpec, gen_swiss_roll, load_csv, save_csv, split_train_test
from .embed import EmbeddingResult, align_to_principal_axes, pca_spectrum
from .graph import NeighborGraph, build_knn, pairwise_sq_dist
from .lbfgs import lbfgs_minimize
from .objective import ObjectiveKind, objective_value_grad
from .pipeline import embed_dataset
from .solver import SolveReport, SolverConfig, SolverState, aug_lagrangian_value_grad, outer_solve

__version__ = "0.1.0"
