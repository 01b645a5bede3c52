import math

import numpy as np
import pytest

from trunctail.empirical import build_sorted
from trunctail.estimators import Estimator, lb_tail_index, woodroofe_tail_index
from trunctail.models import generate_truncated_sample
from trunctail.rng import replication_seed
from trunctail.simulation import (CSV_HEADER, ExperimentConfig, aggregate, dump_config,
                                  emit_table, load_config, parse_csv_table, run_experiment,
                                  run_replication)
from trunctail.threshold import select_k_for


def small(**kw):
    base = dict(gamma1=0.6, p=0.9, sizes=(200, 400), replications=6, seed=7)
    base.update(kw)
    return ExperimentConfig(**base)


def test_single_replication_rmse_equals_abs_bias():
    table = run_experiment(small(replications=1, sizes=(500,)))
    for row in table.rows:
        assert row.rmse == pytest.approx(row.abs_bias, rel=1e-15)


def test_replication_matches_manual_pipeline():
    cfg = small()
    res = run_replication(cfg, 400, 3)
    sample = generate_truncated_sample(cfg.scheme, 400, replication_seed(7, 400, 3))
    s = build_sorted(sample)
    assert res.n == sample.n
    for tag, fn in ((Estimator.LB, lb_tail_index), (Estimator.W, woodroofe_tail_index)):
        k = select_k_for(s, tag).k_star
        assert res.outcomes[tag].k == k
        assert res.outcomes[tag].gamma1_hat == fn(s, k).gamma1_hat


def test_estimators_share_a_sample():
    cfg = small()
    both = run_replication(cfg, 200, 0)
    only_w = run_replication(small(estimators=("w",)), 200, 0)
    assert both.n == only_w.n
    assert both.outcomes[Estimator.W] == only_w.outcomes[Estimator.W]


def test_determinism_and_worker_independence():
    cfg = small()
    a = emit_table(run_experiment(cfg))
    b = emit_table(run_experiment(cfg))
    c = emit_table(run_experiment(cfg, workers=2))
    assert a == b == c
    assert emit_table(run_experiment(small(seed=8))) != a


def test_aggregate_order_independent():
    cfg = small()
    _, results = run_experiment(cfg, return_replications=True)
    t1 = aggregate(cfg, results)
    t2 = aggregate(cfg, results[::-1])
    assert t1 == t2


def test_aggregate_formulas():
    cfg = small(sizes=(300,), replications=10)
    table, results = run_experiment(cfg, return_replications=True)
    g = np.array([r.outcomes[Estimator.LB].gamma1_hat for r in results
                  if not r.failed and not r.outcomes[Estimator.LB].degenerate])
    row = table.row(300, "lb")
    assert row.abs_bias == pytest.approx(abs(g.mean() - 0.6), rel=1e-12)
    assert row.rmse == pytest.approx(math.sqrt(np.mean((g - 0.6) ** 2)), rel=1e-12)
    assert row.used + row.degenerate + row.failed == 10
    ks = [r.outcomes[Estimator.LB].k for r in results if not r.outcomes[Estimator.LB].degenerate]
    assert row.k_star == math.floor(np.mean(ks) + 0.5)


def test_failed_replications_at_tiny_N():
    cfg = small(sizes=(6, 400), replications=20, p=0.55)
    table = run_experiment(cfg)
    assert table.row(6, "lb").failed > 0
    assert table.row(400, "lb").failed == 0
    with pytest.raises(RuntimeError):
        run_experiment(small(sizes=(2,), replications=3))


def test_fixed_k_bypasses_selection():
    cfg = small(fixed_k=20, sizes=(300,), replications=4)
    _, results = run_experiment(cfg, return_replications=True)
    assert all(o.k == 20 for r in results for o in r.outcomes.values())


def test_degenerate_flag_matches_zero_factors():
    cfg = small(sizes=(5000,), replications=1, p=0.55)
    for rep in range(40):
        res = run_replication(cfg, 5000, rep)
        for o in res.outcomes.values():
            assert o.degenerate == (o.zero_factors > 0)


def test_csv_output_and_round_trip():
    table = run_experiment(small())
    text = emit_table(table, "csv")
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 1 + 2 * 2
    assert [ln.split(",")[2] for ln in lines[1:]] == ["lb", "lb", "w", "w"]
    assert emit_table(parse_csv_table(text), "csv") == text
    with pytest.raises(ValueError):
        parse_csv_table("a,b\n1,2\n")


def test_markdown_blocks():
    md = emit_table(run_experiment(small()), "md")
    assert "### Lynden-Bell (LB)" in md and "### Woodroofe (W)" in md
    assert md.count("| N | n | abs bias | rmse | k* |") == 2
    assert emit_table(run_experiment(small()), "markdown") == md
    with pytest.raises(ValueError):
        emit_table(run_experiment(small()), "html")


def test_config_round_trip():
    cfg = small(theta=0.25, estimators=("lb",))
    again = load_config(dump_config(cfg))
    assert again == cfg
    parsed = load_config("# study\ngamma1 = 0.6\np=0.9  # rate\nsizes=100,200\nreps=3\n", seed=5)
    assert parsed.sizes == (100, 200) and parsed.replications == 3 and parsed.seed == 5
    with pytest.raises(ValueError):
        load_config("gamma1=0.6\np=0.9\nwidth=3\n")
    with pytest.raises(ValueError):
        load_config("gamma1 0.6\n")


def test_config_validation():
    for bad in (dict(p=1.0), dict(gamma1=-1), dict(replications=0), dict(sizes=()),
                dict(estimators=("hill",)), dict(theta=0.9), dict(fixed_k=1)):
        with pytest.raises(ValueError):
            small(**bad)
