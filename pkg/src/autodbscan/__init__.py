"""DBSCAN with automatic, kd-tree cell-based (eps, min_pts) generation."""

from .autoparams import AutoConfig, ParamPair, cluster_auto, merge_pairs, prioritize, run_auto
from .datagen import BlobSpec, GenSpec, generate, preset
from .dbscan import Labeling, Params, Role, brute_force_reference, cluster
from .geometry import (
    EUCLIDEAN,
    NOISE,
    Dataset,
    DimensionError,
    DistanceSpec,
    EmptyInputError,
    Point,
    distance,
)
from .kdtree import KdTree, SplitRule
from .metrics import QualityReport, adjusted_rand_index, purity

__version__ = "0.1.0"

__all__ = [
    "AutoConfig", "BlobSpec", "Dataset", "DimensionError", "DistanceSpec", "EUCLIDEAN",
    "EmptyInputError", "GenSpec", "KdTree", "Labeling", "NOISE", "ParamPair", "Params",
    "Point", "QualityReport", "Role", "SplitRule", "adjusted_rand_index",
    "brute_force_reference", "cluster", "cluster_auto", "distance", "generate",
    "merge_pairs", "preset", "prioritize", "purity", "run_auto",
]
