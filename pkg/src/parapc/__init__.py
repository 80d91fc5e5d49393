"""Constraint-based causal discovery with a level-parallel PC learner and local IDA."""

from .citest import DSepOracle, FisherZTest, ScriptedOracle, TestResult, dsep_oracle, fisher_z_test, scripted_oracle
from .data import CorrelationMatrix, DataError, Dataset, correlations, load_dataset
from .graph import DAG, AdjacencySnapshot, CpdagGraph, Graph, SepsetStore, adjacent_pairs, complete_graph, snapshot
from .ida import EffectEstimate, adjusted_effect, ida_all_effects, local_parent_sets
from .orient import meek_closure, orient, orient_colliders
from .skeleton import LearnerConfig, SkeletonResult, learn_skeleton, partition_edges, split_batches
from .synth import SemModel, random_dag, random_sem, sample_sem

__version__ = "0.1.0"
