"""Local rule-based explanations for binary black-box classifiers on tabular data.

A genetic algorithm grows a neighborhood around the instance, a decision tree
is fitted to the black box's labels on it, and the tree yields a decision rule
plus the counterfactual rules that would flip the outcome.
"""

from .blackbox import (BaggedTreeEnsemble, BlackBox, ConstantBlackBox, FunctionBlackBox, connect_external,
                       predict_batch, train_bagged_ensemble)
from .data import (Dataset, FeatureSchema, FeatureSpec, build_empirical_distributions, impute_missing,
                   load_dataset, load_schema, train_test_split)
from .distance import distance
from .errors import (BlackBoxError, ContractViolation, DataError, HandshakeError, LocalRulesError,
                     NonBinaryTargetError, SchemaError, TransportError)
from .explanation import ExplainParams, Explanation, explain
from .genetic import GAParams, Neighborhood, build_neighborhood
from .rules import CategoricalCondition, IntervalCondition, Premise, Rule
from .tree import DecisionTree, TreeParams, build_tree

__version__ = "0.1.0"

__all__ = [
    "BaggedTreeEnsemble", "BlackBox", "ConstantBlackBox", "FunctionBlackBox", "connect_external",
    "predict_batch", "train_bagged_ensemble",
    "Dataset", "FeatureSchema", "FeatureSpec", "build_empirical_distributions", "impute_missing",
    "load_dataset", "load_schema", "train_test_split",
    "distance",
    "BlackBoxError", "ContractViolation", "DataError", "HandshakeError", "LocalRulesError",
    "NonBinaryTargetError", "SchemaError", "TransportError",
    "ExplainParams", "Explanation", "explain",
    "GAParams", "Neighborhood", "build_neighborhood",
    "CategoricalCondition", "IntervalCondition", "Premise", "Rule",
    "DecisionTree", "TreeParams", "build_tree",
]
