"""Predictive baselines and the intervention-shift harness.

Two regressors: multi-linear regression (QR least squares with explicit rank
check and t-test machinery) and a small bagged ensemble of axis-aligned
regression trees. The harness contrasts how purely predictive models react
when an input is fixed to its mean across all rows.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.stats

from .dataset import DatasetError, Table

__all__ = [
    "LinearModel",
    "ForestModel",
    "InterventionReport",
    "ComparisonReport",
    "OlsFit",
    "ols",
    "fit_ols",
    "fit_forest",
    "fit_forest_matrix",
    "predict_forest",
    "r_squared",
    "intervene_fix_to_mean",
    "intervention_shift",
    "compare_methods",
]

_RANK_TOL = 1e-10


def r_squared(actual: np.ndarray, predicted: np.ndarray) -> float:
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    ss_res = float(np.sum((actual - predicted) ** 2))
    ss_tot = float(np.sum((actual - actual.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


@dataclass(frozen=True)
class OlsFit:
    """Raw least-squares fit of y on [1, X]: coefficient vector (intercept
    first), standard errors, two-sided t-test p-values, and residuals."""

    coefficients: np.ndarray
    std_errors: np.ndarray
    p_values: np.ndarray
    residuals: np.ndarray
    df: int


def ols(x: np.ndarray, y: np.ndarray, column_names: Optional[Sequence[str]] = None) -> OlsFit:
    """Least squares with intercept via QR; explicit rank check.

    p-values are two-sided t tests on each coefficient with n - k degrees of
    freedom (k = number of columns including the intercept).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]
    design = np.column_stack([np.ones(n), x])
    k = design.shape[1]
    if n < k + 1:
        raise DatasetError("too few rows for the number of predictors")
    q, r = np.linalg.qr(design)
    diag = np.abs(np.diag(r))
    scale = diag.max() if diag.size else 0.0
    bad = np.where(diag <= _RANK_TOL * max(scale, 1.0))[0]
    if bad.size:
        names = ["(intercept)"] + (
            list(column_names) if column_names is not None else [f"x{i}" for i in range(k - 1)]
        )
        raise DatasetError(
            "rank-deficient design; collinear column(s): "
            + ", ".join(names[i] for i in bad)
        )
    beta = scipy.linalg.solve_triangular(r, q.T @ y)
    residuals = y - design @ beta
    df = n - k
    sigma2 = float(residuals @ residuals) / df
    rinv = scipy.linalg.solve_triangular(r, np.eye(k))
    cov = sigma2 * (rinv @ rinv.T)
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = np.where(se > 0, beta / se, np.inf)
    p_values = 2.0 * scipy.stats.t.sf(np.abs(t_stats), df)
    return OlsFit(beta, se, p_values, residuals, df)


@dataclass(frozen=True)
class LinearModel:
    coefficients: dict[str, float]
    intercept: float
    r_squared: float
    corr_coefficient: float
    outcome: str
    name: str = "linear_regression"

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(self.coefficients)

    def predict(self, table: Table) -> np.ndarray:
        pred = np.full(table.n_rows, self.intercept)
        for name, coef in self.coefficients.items():
            pred += coef * table.column(name)
        return pred


def fit_ols(table: Table, outcome: str) -> LinearModel:
    names = [n for n in table.names if n != outcome]
    if outcome not in table.names:
        raise DatasetError(f"unknown outcome column {outcome!r}")
    x = table.matrix(names)
    y = table.column(outcome)
    fit = ols(x, y, column_names=names)
    predicted = y - fit.residuals
    r2 = r_squared(y, predicted)
    if np.std(predicted) > 0 and np.std(y) > 0:
        corr = float(np.corrcoef(predicted, y)[0, 1])
    else:
        corr = 0.0
    return LinearModel(
        coefficients={name: float(c) for name, c in zip(names, fit.coefficients[1:])},
        intercept=float(fit.coefficients[0]),
        r_squared=r2,
        corr_coefficient=corr,
        outcome=outcome,
    )


# Trees are stored as parallel arrays: internal nodes hold (feature, threshold,
# left, right); leaves have feature == -1 and carry the mean in `value`.
@dataclass(frozen=True)
class _Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(x.shape[0])
        for i, row in enumerate(x):
            node = 0
            while self.feature[node] >= 0:
                if row[self.feature[node]] <= self.threshold[node]:
                    node = self.left[node]
                else:
                    node = self.right[node]
            out[i] = self.value[node]
        return out


_MIN_LEAF = 2


def _best_split(x: np.ndarray, y: np.ndarray) -> Optional[tuple[int, float]]:
    n = len(y)
    base_sse = float(np.sum((y - y.mean()) ** 2))
    best_gain, best = 0.0, None
    for j in range(x.shape[1]):
        order = np.argsort(x[:, j], kind="stable")
        xs, ys = x[order, j], y[order]
        cum = np.cumsum(ys)
        cum2 = np.cumsum(ys * ys)
        total, total2 = cum[-1], cum2[-1]
        for split in range(_MIN_LEAF, n - _MIN_LEAF + 1):
            if xs[split - 1] == xs[split]:
                continue
            left_sse = cum2[split - 1] - cum[split - 1] ** 2 / split
            n_r = n - split
            right_sse = (total2 - cum2[split - 1]) - (total - cum[split - 1]) ** 2 / n_r
            gain = base_sse - left_sse - right_sse
            if gain > best_gain + 1e-12:
                best_gain = gain
                best = (j, 0.5 * (xs[split - 1] + xs[split]))
    return best


def _grow_tree(x: np.ndarray, y: np.ndarray, max_depth: int) -> _Tree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def build(idx: np.ndarray, depth: int) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(y[idx].mean()))
        if depth >= max_depth or len(idx) < 2 * _MIN_LEAF:
            return node
        split = _best_split(x[idx], y[idx])
        if split is None:
            return node
        j, thr = split
        mask = x[idx, j] <= thr
        feature[node] = j
        threshold[node] = thr
        left[node] = build(idx[mask], depth + 1)
        right[node] = build(idx[~mask], depth + 1)
        return node

    build(np.arange(len(y)), 0)
    return _Tree(
        np.array(feature), np.array(threshold), np.array(left), np.array(right), np.array(value)
    )


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[_Tree, ...]
    feature_names: tuple[str, ...]
    outcome: str
    max_depth: int
    n_trees: int
    seed: int
    name: str = "bagged_trees"

    def predict(self, table: Table) -> np.ndarray:
        return predict_forest(self, table.matrix(list(self.feature_names)))


def fit_forest_matrix(
    x: np.ndarray, y: np.ndarray, n_trees: int, max_depth: int, seed: int
) -> list[_Tree]:
    """Bootstrap-bagged regression trees on a raw feature matrix.

    Per-tree seeds are seed + tree index, so training order is immaterial.
    """
    if n_trees < 1 or max_depth < 1:
        raise ValueError("n_trees and max_depth must be >= 1")
    n = len(y)
    if n < 2:
        raise DatasetError("need at least 2 rows to fit trees")
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng(seed + t)
        idx = rng.integers(0, n, size=n)
        trees.append(_grow_tree(x[idx], y[idx], max_depth))
    return trees


def predict_forest(forest, x: np.ndarray) -> np.ndarray:
    trees = forest.trees if isinstance(forest, ForestModel) else forest
    preds = np.zeros(x.shape[0])
    for tree in trees:
        preds += tree.predict(x)
    return preds / len(trees)


def fit_forest(
    table: Table, outcome: str, n_trees: int = 100, max_depth: int = 6, seed: int = 0
) -> ForestModel:
    names = tuple(n for n in table.names if n != outcome)
    if outcome not in table.names:
        raise DatasetError(f"unknown outcome column {outcome!r}")
    trees = fit_forest_matrix(
        table.matrix(list(names)), table.column(outcome), n_trees, max_depth, seed
    )
    return ForestModel(
        trees=tuple(trees),
        feature_names=names,
        outcome=outcome,
        max_depth=max_depth,
        n_trees=n_trees,
        seed=seed,
    )


def intervene_fix_to_mean(table: Table, variables: Iterable[str]) -> Table:
    """New table where each named input column is held constant at its mean."""
    result = table
    for name in variables:
        if table.schema.column(name).role == "outcome":
            raise DatasetError(f"cannot intervene on the outcome column {name!r}")
        mean = float(table.column(name).mean())
        result = result.replace_column(name, np.full(table.n_rows, mean))
    return result


@dataclass(frozen=True)
class InterventionReport:
    method: str
    variables: tuple[str, ...]
    predictions_before: np.ndarray = field(repr=False)
    predictions_after: np.ndarray = field(repr=False)

    @property
    def mean_shift(self) -> float:
        return float(np.mean(self.predictions_after - self.predictions_before))

    @property
    def per_row_shift(self) -> np.ndarray:
        return self.predictions_after - self.predictions_before


def intervention_shift(model, table: Table, variables: Iterable[str]) -> InterventionReport:
    """Model predictions before vs. after fixing the variables to their means."""
    variables = tuple(variables)
    missing = set(model.feature_names) - set(table.names)
    if missing:
        raise DatasetError(f"table lacks model feature(s): {', '.join(sorted(missing))}")
    before = model.predict(table)
    after = model.predict(intervene_fix_to_mean(table, variables))
    return InterventionReport(
        method=model.name,
        variables=variables,
        predictions_before=before,
        predictions_after=after,
    )


@dataclass(frozen=True)
class ComparisonReport:
    outcome: str
    variables: tuple[str, ...]
    measured: np.ndarray = field(repr=False)
    sections: tuple[InterventionReport, ...] = ()
    causal_rows: tuple = ()  # CausalEstimate-like objects for `variables`

    def to_markdown(self) -> str:
        lines = [f"# Intervention comparison ({self.outcome})", ""]
        if self.variables:
            lines.append(f"Variables fixed to their means: {', '.join(self.variables)}")
        else:
            lines.append("No interventions applied (validation only).")
        lines.append("")
        lines.append("| Method | Train R2 vs measured | Mean shift (min) |")
        lines.append("| --- | --- | --- |")
        for s in self.sections:
            r2 = r_squared(self.measured, s.predictions_before)
            lines.append(f"| {s.method} | {r2:.4f} | {s.mean_shift:.4f} |")
        if self.causal_rows:
            lines.append("")
            lines.append("| Treatment variable | Causal ATE (min) | p-value |")
            lines.append("| --- | --- | --- |")
            for row in self.causal_rows:
                lines.append(f"| {row.treatment} | {row.ate:.4f} | {row.p_value:.4g} |")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "outcome": self.outcome,
            "variables": list(self.variables),
            "methods": [
                {
                    "method": s.method,
                    "r2_vs_measured": r_squared(self.measured, s.predictions_before),
                    "mean_shift": s.mean_shift,
                }
                for s in self.sections
            ],
            "causal": [
                {"treatment": row.treatment, "ate": row.ate, "p_value": row.p_value}
                for row in self.causal_rows
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def plot_csv(self) -> str:
        """Per-row plot data: row_id,measured_FR,method,prediction_pre,prediction_post."""
        lines = ["row_id,measured_FR,method,prediction_pre,prediction_post"]
        for s in self.sections:
            for i in range(len(self.measured)):
                lines.append(
                    f"{i},{self.measured[i]!r},{s.method},"
                    f"{s.predictions_before[i]!r},{s.predictions_after[i]!r}"
                )
        return "\n".join(lines) + "\n"


def compare_methods(
    table: Table,
    models: Sequence,
    causal_estimates: Sequence = (),
    variables: Iterable[str] = (),
    external: Optional[Mapping[str, tuple[np.ndarray, np.ndarray]]] = None,
) -> ComparisonReport:
    """One intervention-shift section per model, plus causal ATE rows for the
    intervened variables.

    `external` allows pre/post prediction vectors from methods not modeled
    here to appear as extra sections.
    """
    if not models and not external:
        raise DatasetError("at least one model or external prediction required")
    variables = tuple(variables)
    outcome = models[0].outcome if models else table.schema.outcome_name
    sections = [intervention_shift(m, table, variables) for m in models]
    for name, (pre, post) in (external or {}).items():
        if len(pre) != table.n_rows or len(post) != table.n_rows:
            raise DatasetError(f"external predictions for {name!r} have wrong length")
        sections.append(
            InterventionReport(
                method=name,
                variables=variables,
                predictions_before=np.asarray(pre, dtype=float),
                predictions_after=np.asarray(post, dtype=float),
            )
        )
    causal_rows = tuple(
        e for e in causal_estimates if not variables or e.treatment in variables
    )
    return ComparisonReport(
        outcome=outcome,
        variables=variables,
        measured=table.column(outcome),
        sections=tuple(sections),
        causal_rows=causal_rows,
    )
