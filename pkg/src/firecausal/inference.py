"""Backdoor identification and ATE estimation over four DAG configurations.

Each estimate answers: by how many minutes does the expected outcome change
when the mean-binarized treatment moves from 0 to 1, adjusting for a minimal
backdoor set? Estimation is linear regression of the outcome on the binary
treatment plus the adjustment columns, with a two-sided t test.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .baselines import ols
from .dataset import BinaryTreatment, DatasetError, Table, binarize_at_mean
from .graph import ConstraintSet, Dag, GraphError, apply_constraints

__all__ = [
    "DagConfigKind",
    "CausalQuery",
    "CausalEstimate",
    "StudyRow",
    "SIGNIFICANCE_LEVEL",
    "FIRE_VARIABLES",
    "OUTCOME",
    "DOMAIN_CONSTRAINTS",
    "build_config",
    "identify_adjustment_set",
    "estimate_ate",
    "run_study",
    "study_to_markdown",
    "study_to_json",
]

SIGNIFICANCE_LEVEL = 0.05
FIRE_VARIABLES = ("W", "r", "L", "fc", "K", "C", "P")
OUTCOME = "FR"

# Domain-knowledge overlay: boundary conditions drive length (K -> L), the
# load level drives the design variables (P -> fc, W, r), strength drives
# reinforcement (fc -> r), width drives cover (W -> C), and every input is
# tied to the outcome. Reversals are forbidden.
_DOMAIN_INTER_INPUT = (
    ("K", "L"),
    ("P", "fc"),
    ("P", "W"),
    ("P", "r"),
    ("fc", "r"),
    ("W", "C"),
)
_DOMAIN_EDGES = _DOMAIN_INTER_INPUT + tuple((v, OUTCOME) for v in FIRE_VARIABLES)
DOMAIN_CONSTRAINTS = ConstraintSet(
    required_edges=frozenset(_DOMAIN_EDGES),
    forbidden_edges=frozenset((b, a) for a, b in _DOMAIN_EDGES),
)


class DagConfigKind(enum.Enum):
    ISOLATED = "isolated"
    LEARNED = "learned"
    DOMAIN_AUGMENTED = "domain"
    HYPOTHETICAL = "hypothetical"


@dataclass(frozen=True)
class CausalQuery:
    dag: Dag
    treatment: str
    outcome: str
    treatment_def: BinaryTreatment

    def __post_init__(self):
        if self.treatment == self.outcome:
            raise GraphError("treatment and outcome must differ")
        if self.treatment not in self.dag.nodes or self.outcome not in self.dag.nodes:
            raise GraphError("treatment and outcome must be DAG nodes")
        if self.outcome not in self.dag.descendants(self.treatment):
            raise GraphError(
                f"no directed path from {self.treatment!r} to {self.outcome!r}"
            )


@dataclass(frozen=True)
class CausalEstimate:
    treatment: str
    ate: float
    p_value: float
    adjustment_set: tuple[str, ...]
    std_error: float
    n_treated: int
    n_control: int

    @property
    def significant(self) -> bool:
        return self.p_value < SIGNIFICANCE_LEVEL


def build_config(
    kind: DagConfigKind,
    treatment: str,
    learned: Optional[Dag] = None,
    variables: Sequence[str] = FIRE_VARIABLES,
    outcome: str = OUTCOME,
) -> Dag:
    """One of the four analysis DAGs for the given treatment variable."""
    if treatment not in variables:
        raise GraphError(f"unknown treatment {treatment!r}")
    if kind is DagConfigKind.ISOLATED:
        return Dag((treatment, outcome), [(treatment, outcome)])
    if kind is DagConfigKind.HYPOTHETICAL:
        return Dag(tuple(variables) + (outcome,), [(v, outcome) for v in variables])
    if learned is None:
        raise GraphError(f"{kind.value} configuration requires a learned DAG")
    if kind is DagConfigKind.LEARNED:
        dag = learned
        if not dag.has_edge(treatment, outcome):
            dag = dag.add_edge(treatment, outcome)
        return dag
    if kind is DagConfigKind.DOMAIN_AUGMENTED:
        return apply_constraints(learned, DOMAIN_CONSTRAINTS)
    raise GraphError(f"unknown configuration {kind!r}")


def identify_adjustment_set(dag: Dag, treatment: str, outcome: str) -> tuple[str, ...]:
    """Smallest set of non-descendants of the treatment blocking every
    backdoor path, ties broken lexicographically.

    Validity of a candidate set Z is checked as d-separation of treatment and
    outcome in the graph with the treatment's outgoing edges removed.
    """
    mutilated = dag
    for child in sorted(dag.children(treatment)):
        mutilated = mutilated.remove_edge(treatment, child)
    forbidden = dag.descendants(treatment) | {treatment, outcome}
    candidates = sorted(n for n in dag.nodes if n not in forbidden)

    def blocks(z: tuple[str, ...]) -> bool:
        return mutilated.d_separated(treatment, outcome, z)

    for size in range(len(candidates) + 1):
        for z in combinations(candidates, size):
            if blocks(z):
                return z
    raise AssertionError(
        "no adjustment set found; impossible for a DAG without latent nodes"
    )


def estimate_ate(table: Table, query: CausalQuery) -> CausalEstimate:
    """Backdoor-adjusted ATE via OLS of the outcome on treatment + adjusters."""
    t = query.treatment_def.values
    if query.treatment_def.n_treated < 2 or query.treatment_def.n_control < 2:
        raise DatasetError("need at least 2 treated and 2 control rows")
    z_names = identify_adjustment_set(query.dag, query.treatment, query.outcome)
    x = np.column_stack([t] + [table.column(z) for z in z_names]) if z_names else t.reshape(-1, 1)
    y = table.column(query.outcome)
    fit = ols(x, y, column_names=[query.treatment] + list(z_names))
    return CausalEstimate(
        treatment=query.treatment,
        ate=float(fit.coefficients[1]),
        p_value=float(fit.p_values[1]),
        adjustment_set=z_names,
        std_error=float(fit.std_errors[1]),
        n_treated=query.treatment_def.n_treated,
        n_control=query.treatment_def.n_control,
    )


@dataclass(frozen=True)
class StudyRow:
    treatment: str
    estimate: Optional[CausalEstimate] = None
    refutations: tuple = ()  # RefutationResult entries
    error: Optional[str] = None


def run_study(
    table: Table,
    kind: DagConfigKind,
    learned: Optional[Dag] = None,
    variables: Optional[Sequence[str]] = None,
    outcome: str = OUTCOME,
    seed: int = 0,
    replicates: int = 20,
    subset_fraction: float = 0.8,
) -> list[StudyRow]:
    """One estimate per input variable (canonical order), each binarized at
    its own mean and stress-tested with the three refuters.

    A variable whose estimation fails yields an error row instead of
    aborting the study.
    """
    from .refute import data_subset, placebo_treatment, random_common_cause

    if variables is None:
        variables = tuple(v for v in FIRE_VARIABLES if v in table.names)
        if not variables:
            variables = tuple(n for n in table.names if n != outcome)
    rows: list[StudyRow] = []
    for var in variables:
        try:
            dag = build_config(kind, var, learned, variables=variables, outcome=outcome)
            treatment = binarize_at_mean(table, var)
            query = CausalQuery(dag, var, outcome, treatment)
            estimate = estimate_ate(table, query)
            refutations = (
                random_common_cause(table, query, replicates=replicates, seed=seed),
                data_subset(
                    table, query, fraction=subset_fraction, replicates=replicates, seed=seed
                ),
                placebo_treatment(table, query, replicates=replicates, seed=seed),
            )
            rows.append(StudyRow(treatment=var, estimate=estimate, refutations=refutations))
        except (DatasetError, GraphError) as exc:
            rows.append(StudyRow(treatment=var, error=str(exc)))
    return rows


_REFUTER_ORDER = ("RandomCommonCause", "DataSubset", "PlaceboTreatment")
_REFUTER_HEADERS = {
    "RandomCommonCause": "Random Common Cause",
    "DataSubset": "Data Subset Refuter",
    "PlaceboTreatment": "Placebo Treatment",
}


def study_to_markdown(rows: Sequence[StudyRow]) -> str:
    """Markdown table: treatment | mean value | p-value | three refuters.

    Significant p-values (< 5%) are bold-marked.
    """
    header = (
        "| Treatment variable | Mean value | p-value | "
        + " | ".join(_REFUTER_HEADERS[m] for m in _REFUTER_ORDER)
        + " |"
    )
    lines = [header, "| --- | --- | --- | --- | --- | --- |"]
    for row in rows:
        if row.error is not None:
            lines.append(f"| {row.treatment} | error: {row.error} | | | | |")
            continue
        est = row.estimate
        p_text = f"**{est.p_value:.3g}**" if est.significant else f"{est.p_value:.3g}"
        by_method = {r.method: r for r in row.refutations}
        cells = [
            f"{by_method[m].refuted_ate:.4f}" if m in by_method else ""
            for m in _REFUTER_ORDER
        ]
        lines.append(
            f"| {row.treatment} | {est.ate:.4f} | {p_text} | " + " | ".join(cells) + " |"
        )
    return "\n".join(lines) + "\n"


def study_to_json(rows: Sequence[StudyRow]) -> str:
    payload = []
    for row in rows:
        if row.error is not None:
            payload.append({"treatment": row.treatment, "error": row.error})
            continue
        est = row.estimate
        payload.append(
            {
                "treatment": row.treatment,
                "ate": est.ate,
                "p_value": est.p_value,
                "significant": est.significant,
                "adjustment_set": list(est.adjustment_set),
                "n_treated": est.n_treated,
                "n_control": est.n_control,
                "refutations": [
                    {
                        "method": r.method,
                        "refuted_ate": r.refuted_ate,
                        "passed": r.passed,
                        "replicates": r.replicates,
                        "seed": r.seed,
                        "replicate_values": list(r.replicate_values),
                    }
                    for r in row.refutations
                ],
            }
        )
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
