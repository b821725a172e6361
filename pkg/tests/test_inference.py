import numpy as np
import pytest

from firecausal import (
    CausalQuery,
    Dag,
    DagConfigKind,
    FIRE_VARIABLES,
    GraphError,
    binarize_at_mean,
    build_config,
    estimate_ate,
    identify_adjustment_set,
    run_study,
    study_to_json,
    study_to_markdown,
    synthesize_fire_dataset,
)

from conftest import exhaustive_backdoor_sets, make_table, random_dag


def confounded_table(n=5000, seed=0, effect=2.0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    t = (x + rng.normal(size=n) > 0).astype(float)
    y = effect * t + 1.5 * x + rng.normal(size=n)
    return make_table({"T": t, "X": x, "Y": y})


CONFOUNDED_DAG = Dag(["T", "X", "Y"], [("X", "T"), ("X", "Y"), ("T", "Y")])


def confounded_query(table):
    return CausalQuery(CONFOUNDED_DAG, "T", "Y", binarize_at_mean(table, "T", 0.5))


def test_build_config_isolated():
    dag = build_config(DagConfigKind.ISOLATED, "W")
    assert set(dag.nodes) == {"W", "FR"}
    assert dag.edges == {("W", "FR")}


def test_build_config_hypothetical():
    dag = build_config(DagConfigKind.HYPOTHETICAL, "r")
    assert len(dag.nodes) == 8
    assert len(dag.edges) == 7
    assert all(v == "FR" for _, v in dag.edges)


def test_build_config_domain_from_empty_graph():
    empty = Dag(list(FIRE_VARIABLES) + ["FR"])
    dag = build_config(DagConfigKind.DOMAIN_AUGMENTED, "fc", empty)
    expected = {
        ("K", "L"),
        ("P", "fc"),
        ("P", "W"),
        ("P", "r"),
        ("fc", "r"),
        ("W", "C"),
    } | {(v, "FR") for v in FIRE_VARIABLES}
    assert dag.edges == expected
    assert len(dag.edges) == 13


def test_build_config_learned_ensures_treatment_edge():
    learned = Dag(list(FIRE_VARIABLES) + ["FR"], [("W", "C")])
    dag = build_config(DagConfigKind.LEARNED, "W", learned)
    assert dag.has_edge("W", "FR")
    assert dag.has_edge("W", "C")


def test_build_config_requires_learned_graph():
    with pytest.raises(GraphError):
        build_config(DagConfigKind.LEARNED, "W")


def test_build_config_unknown_treatment():
    with pytest.raises(GraphError):
        build_config(DagConfigKind.ISOLATED, "bogus")


def test_identify_isolated_chain_empty():
    dag = Dag(["T", "FR"], [("T", "FR")])
    assert identify_adjustment_set(dag, "T", "FR") == ()


def test_identify_confounder():
    assert identify_adjustment_set(CONFOUNDED_DAG, "T", "Y") == ("X",)


def test_identify_domain_graph_fc():
    dag = build_config(
        DagConfigKind.DOMAIN_AUGMENTED, "fc", Dag(list(FIRE_VARIABLES) + ["FR"])
    )
    assert identify_adjustment_set(dag, "fc", "FR") == ("P",)


def test_identify_matches_exhaustive_oracle():
    rng = np.random.default_rng(5)
    checked = 0
    while checked < 40:
        dag = random_dag(rng, 5, edge_prob=0.45)
        nodes = sorted(dag.nodes)
        t, y = nodes[0], nodes[1]
        if y not in dag.descendants(t):
            continue
        checked += 1
        valid = exhaustive_backdoor_sets(dag, t, y)
        got = identify_adjustment_set(dag, t, y)
        assert got in valid
        min_size = min(len(z) for z in valid)
        assert len(got) == min_size
        assert got == sorted(z for z in valid if len(z) == min_size)[0]


def test_identify_blocks_in_mutilated_graph():
    rng = np.random.default_rng(6)
    checked = 0
    while checked < 25:
        dag = random_dag(rng, 6, edge_prob=0.4)
        nodes = sorted(dag.nodes)
        t, y = nodes[0], nodes[1]
        if y not in dag.descendants(t):
            continue
        checked += 1
        z = identify_adjustment_set(dag, t, y)
        mutilated = dag
        for c in sorted(dag.children(t)):
            mutilated = mutilated.remove_edge(t, c)
        assert mutilated.d_separated(t, y, z)


def test_estimate_ate_removes_confounding():
    table = confounded_table()
    est = estimate_ate(table, confounded_query(table))
    assert est.adjustment_set == ("X",)
    assert est.ate == pytest.approx(2.0, abs=0.1)
    assert est.p_value < 0.05 and est.significant
    y = table.column("Y")
    t = table.column("T")
    naive = y[t == 1].mean() - y[t == 0].mean()
    assert naive > 2.3


def test_estimate_ate_null_effect():
    rng = np.random.default_rng(7)
    t = (rng.normal(size=1000) > 0).astype(float)
    y = rng.normal(size=1000)
    table = make_table({"T": t, "Y": y})
    dag = Dag(["T", "Y"], [("T", "Y")])
    est = estimate_ate(table, CausalQuery(dag, "T", "Y", binarize_at_mean(table, "T", 0.5)))
    assert abs(est.ate) < 3 * est.std_error
    assert not est.significant


def test_estimate_ate_empty_adjustment_equals_mean_difference():
    rng = np.random.default_rng(8)
    t = (rng.normal(size=400) > 0).astype(float)
    y = 1.3 * t + rng.normal(size=400)
    table = make_table({"T": t, "Y": y})
    dag = Dag(["T", "Y"], [("T", "Y")])
    est = estimate_ate(table, CausalQuery(dag, "T", "Y", binarize_at_mean(table, "T", 0.5)))
    diff = y[t == 1].mean() - y[t == 0].mean()
    assert est.ate == pytest.approx(diff, abs=1e-9)


def test_estimate_ate_outcome_scaling():
    table = confounded_table(seed=9)
    q = confounded_query(table)
    est = estimate_ate(table, q)
    scaled = table.replace_column("Y", 3.5 * table.column("Y"))
    est2 = estimate_ate(scaled, confounded_query(scaled))
    assert est2.ate == pytest.approx(3.5 * est.ate, abs=1e-9)
    assert est2.p_value == pytest.approx(est.p_value, abs=1e-9)


def test_estimate_ate_irrelevant_adjuster_is_harmless():
    rng = np.random.default_rng(1010)
    table = confounded_table(seed=10)
    noise = rng.normal(size=table.n_rows)
    table2 = make_table(
        {
            "T": table.column("T"),
            "X": table.column("X"),
            "N": noise,
            "Y": table.column("Y"),
        }
    )
    base = estimate_ate(table2, CausalQuery(
        Dag(["T", "X", "N", "Y"], [("X", "T"), ("X", "Y"), ("T", "Y")]),
        "T", "Y", binarize_at_mean(table2, "T", 0.5)))
    wide_dag = Dag(
        ["T", "X", "N", "Y"],
        [("X", "T"), ("X", "Y"), ("T", "Y"), ("N", "T"), ("N", "Y")],
    )
    wide = estimate_ate(table2, CausalQuery(wide_dag, "T", "Y", binarize_at_mean(table2, "T", 0.5)))
    assert set(wide.adjustment_set) == {"N", "X"}
    assert abs(wide.ate - base.ate) < 2 * base.std_error


def test_query_requires_directed_path():
    dag = Dag(["T", "Y"])
    table = make_table({"T": [0.0, 1, 0, 1], "Y": [1.0, 2, 3, 4]})
    with pytest.raises(GraphError):
        CausalQuery(dag, "T", "Y", binarize_at_mean(table, "T", 0.5))


def test_run_study_hypothetical_schema():
    table = synthesize_fire_dataset(1000, seed=12)
    rows = run_study(table, DagConfigKind.HYPOTHETICAL, seed=3)
    assert [r.treatment for r in rows] == list(FIRE_VARIABLES)
    for row in rows:
        assert row.error is None
        assert len(row.refutations) == 3
        assert [r.method for r in row.refutations] == [
            "RandomCommonCause",
            "DataSubset",
            "PlaceboTreatment",
        ]


def test_run_study_isolated_two_column_table():
    rng = np.random.default_rng(13)
    w = rng.normal(350, 100, size=300)
    fr = 0.5 * w + rng.normal(0, 10, size=300)
    table = make_table({"W": w, "FR": fr})
    rows = run_study(table, DagConfigKind.ISOLATED, seed=0)
    assert len(rows) == 1
    assert rows[0].treatment == "W"
    assert rows[0].error is None


def test_run_study_deterministic_report():
    table = synthesize_fire_dataset(500, seed=14)
    a = run_study(table, DagConfigKind.HYPOTHETICAL, seed=5)
    b = run_study(table, DagConfigKind.HYPOTHETICAL, seed=5)
    assert study_to_json(a) == study_to_json(b)
    assert study_to_markdown(a) == study_to_markdown(b)


def test_run_study_error_rows_do_not_abort():
    # Constant column cannot be binarized; its row reports the error.
    table = synthesize_fire_dataset(300, seed=15)
    table = table.replace_column("K", np.full(table.n_rows, 1.0))
    rows = run_study(table, DagConfigKind.HYPOTHETICAL, seed=0)
    by_var = {r.treatment: r for r in rows}
    assert by_var["K"].error is not None
    assert sum(1 for r in rows if r.error is None) == 6


def test_markdown_significance_marking():
    table = synthesize_fire_dataset(1000, seed=16)
    rows = run_study(table, DagConfigKind.HYPOTHETICAL, seed=0)
    md = study_to_markdown(rows)
    for row in rows:
        cells = [c.strip() for c in md.splitlines()[2 + rows.index(row)].split("|")]
        p_cell = cells[3]
        assert p_cell.startswith("**") == row.estimate.significant
