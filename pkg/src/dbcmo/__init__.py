"""Density-based clustering of multi-valued objects under the alpha-approximation distance."""

from .cluster import NOISE, BaselineParams, ClusterLabeling, ClusterParams, dbcmo, expdbscan, fdbscan
from .distance import alpha_distance_brute_force, alpha_distance_filtered, is_alpha_neighbor
from .evaluation import evaluate
from .fileio import read_dataset, read_truth, write_dataset, write_truth
from .index import GlobalTree, LocalTree
from .model import Dataset, Instance, MultiValuedObject
from .neighborhood import PruningLevel, QueryParams, get_neighborhood

__version__ = "0.1.0"

__all__ = [
    "NOISE",
    "BaselineParams",
    "ClusterLabeling",
    "ClusterParams",
    "Dataset",
    "GlobalTree",
    "Instance",
    "LocalTree",
    "MultiValuedObject",
    "PruningLevel",
    "QueryParams",
    "alpha_distance_brute_force",
    "alpha_distance_filtered",
    "dbcmo",
    "evaluate",
    "expdbscan",
    "fdbscan",
    "get_neighborhood",
    "is_alpha_neighbor",
    "read_dataset",
    "read_truth",
    "write_dataset",
    "write_truth",
]
