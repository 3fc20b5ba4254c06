"""A stand of greedy decision trees in one shared DAG.

Instead of breaking ties between equally good splits at random, every
near-best split is expanded and equivalent child subsets are cached into
shared nodes, so one structure compactly holds every classifier a
randomized greedy learner could produce.  The per-leaf option structure
bounds a mini version space over DNF statements, from which the model
reports a signed instance certainty in [-1, 1] usable directly in
interactive teaching interfaces.
"""

from .data import (
    Dataset,
    DatasetError,
    Example,
    FeatureSchema,
    Literal,
    NEGATIVE,
    POSITIVE,
    SchemaError,
    dump_dataset,
    load_dataset,
    satisfies,
)
from .tree import (
    StandNode,
    StandTree,
    best_splits,
    fit,
    impurity,
    incremental_update,
    time_fit_predict,
    unchanged_modulo_new,
)
from .vspace import (
    AmbiguityReport,
    CertaintyReport,
    LeafGeneralization,
    ambiguity,
    certainty_batch,
    enumerate_G,
    instance_certainty,
    leaf_generalization,
    mini_space_size,
    render_dnf,
)
from .baseline import DecisionTree, derived_dnf, fit_tree, tree_predict
from .estimators import GreedyTreeClassifier, StandClassifier
from .teaching import (
    ConceptSpec,
    ExperimentConfig,
    Problem,
    TeachingTrace,
    active_select,
    active_utility,
    completeness,
    error_counts,
    gen_concept,
    gen_problem,
    precision_at_certainty,
    productive_monotonicity,
    reoccurrence_rates,
    run_experiment,
    teach_problem,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
