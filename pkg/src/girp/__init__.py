"""Turn per-sample local model explanations into a global interpretation tree.

Pipeline: load a paired feature table and contribution matrix (or produce the
matrix by perturbing samples against a model endpoint), grow a binary tree by
recursively maximizing the mean-contribution difference of the split variable,
prune it into a nested sequence by weakest-link average strength, and pick the
size that scores best on held-out data.
"""

from .dataset import (
    ContributionMatrix,
    DatasetError,
    DatasetSplit,
    FeatureKind,
    FeatureTable,
    load_dataset,
    load_features,
    load_schema,
    split_dataset,
)
from .explain import (
    EndpointError,
    ModelEndpoint,
    PerturbationPolicy,
    build_contribution_matrix,
    explain_sample,
)
from .grow import GrowParams, NodeStats, TreeNode, grow_tree
from .prune import PruneSequence, avg_subtree_strength, penalized_strength, prune_sequence, total_strength
from .render import export_tree, import_tree, render
from .select import SelectionReport, route, select_best
from .splits import ScoredSplit, Split, best_split, enumerate_splits, split_strength

__version__ = "0.1.0"

__all__ = [
    "ContributionMatrix",
    "DatasetError",
    "DatasetSplit",
    "EndpointError",
    "FeatureKind",
    "FeatureTable",
    "GrowParams",
    "ModelEndpoint",
    "NodeStats",
    "PerturbationPolicy",
    "PruneSequence",
    "ScoredSplit",
    "SelectionReport",
    "Split",
    "TreeNode",
    "avg_subtree_strength",
    "best_split",
    "build_contribution_matrix",
    "enumerate_splits",
    "explain_sample",
    "export_tree",
    "grow_tree",
    "import_tree",
    "load_dataset",
    "load_features",
    "load_schema",
    "penalized_strength",
    "prune_sequence",
    "render",
    "route",
    "select_best",
    "split_dataset",
    "split_strength",
    "total_strength",
]
