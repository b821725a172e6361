"""Causal discovery and inference toolkit for fire-test tabular data.

Pipeline: ingest or synthesize an 8-variable dataset, learn a DAG under
domain-knowledge constraints, identify backdoor adjustment sets, estimate
average treatment effects of mean-binarized treatments on fire resistance,
stress-test every estimate with three refuters, and contrast causal
estimates with purely predictive models under fix-to-mean interventions.
"""

from .baselines import (
    ComparisonReport,
    ForestModel,
    InterventionReport,
    LinearModel,
    compare_methods,
    fit_forest,
    fit_ols,
    intervene_fix_to_mean,
    intervention_shift,
)
from .dataset import (
    BinaryTreatment,
    Column,
    ColumnSchema,
    DatasetError,
    FIRE_INPUTS,
    FIRE_OUTCOME,
    FIRE_SCHEMA,
    SummaryStats,
    Table,
    binarize_at_mean,
    correlation_matrix,
    load_csv,
    pearson_correlation,
    quantile_discretize,
    summarize,
    synthesize_fire_dataset,
    write_csv,
)
from .discovery import (
    DiscoveryConfig,
    DiscoveryError,
    acyclicity_gradient,
    acyclicity_penalty,
    learn_structure,
    predictive_check,
)
from .graph import (
    ConstraintSet,
    CycleError,
    Dag,
    GraphError,
    apply_constraints,
    constraints_from_json,
    from_edge_list,
)
from .inference import (
    CausalEstimate,
    CausalQuery,
    DagConfigKind,
    DOMAIN_CONSTRAINTS,
    FIRE_VARIABLES,
    StudyRow,
    build_config,
    estimate_ate,
    identify_adjustment_set,
    run_study,
    study_to_json,
    study_to_markdown,
)
from .refute import (
    RefutationResult,
    data_subset,
    placebo_treatment,
    random_common_cause,
)

__version__ = "0.1.0"
