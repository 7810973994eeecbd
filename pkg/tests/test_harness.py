import logging
import math

import pytest

from osc_ising.graphlib import cycle_graph, gen_random
from osc_ising.harness import (
    BENCH_HEADER,
    ComparisonRow,
    ExperimentSpec,
    GraphEntry,
    Machine,
    TrialResult,
    compare_machines,
    mean_deviation,
    natural_frequency,
    run_experiment,
    run_trial,
    stable_seed,
    worker_count,
    write_bench_csv,
    write_compare_csv,
)
from osc_ising.network import SimConfig

C4 = GraphEntry("c4", cycle_graph(4), 1.0)


def result(gid, machine, trial, cut, synced=True):
    return TrialResult(gid, 4, 1.0, machine, trial, cut if synced else None, None,
                       0.0 if synced else math.nan, synced, 0.0)


@pytest.mark.parametrize("eao, shil, dev", [(9, 10, -10.0), (10, 10, 0.0), (11, 10, 10.0)])
def test_deviation_formula(eao, shil, dev):
    rows = compare_machines([result("g", Machine.EAO, 0, eao), result("g", Machine.SHIL, 0, shil)])
    assert rows[0].deviation_pct == pytest.approx(dev)


def test_comparison_uses_best_and_skips_unsynchronized():
    res = [result("g", Machine.EAO, 0, 7), result("g", Machine.EAO, 1, 9),
           result("g", Machine.EAO, 2, 0, synced=False),
           result("g", Machine.SHIL, 0, 10), result("g", Machine.SHIL, 1, 8)]
    (row,) = compare_machines(res)
    assert (row.best_eao, row.best_shil) == (9, 10)
    assert row.mean_eao == pytest.approx(8.0)
    assert row.mean_shil == pytest.approx(9.0)


def test_comparison_missing_machine_skipped(caplog):
    with caplog.at_level(logging.WARNING):
        rows = compare_machines([result("g", Machine.EAO, 0, 4)])
    assert rows == []
    assert "g" in caplog.text


def test_mean_deviation_ignores_undefined():
    rows = [ComparisonRow("a", 11, 10, 11, 10), ComparisonRow("b", 9, 10, 9, 10),
            ComparisonRow("c", 5, None, 5, math.nan)]
    assert math.isnan(rows[2].deviation_pct)
    assert mean_deviation(rows) == pytest.approx(0.0)


def test_stable_seed():
    assert stable_seed(0, "c4", 3) == stable_seed(0, "c4", 3)
    assert len({stable_seed(0, "c4", k) for k in range(100)}) == 100
    assert 0 <= stable_seed("x") < 2**64


def test_machine_parse():
    assert Machine.parse("EAO") is Machine.EAO
    assert Machine.parse("shil") is Machine.SHIL
    assert Machine.parse("Conventional_no_injection") is Machine.CONVENTIONAL
    with pytest.raises(ValueError):
        Machine.parse("quantum")


@pytest.mark.parametrize("kw", [dict(trials=0), dict(graphs=()), dict(machines=()),
                                dict(c_c_rule="magic"), dict(graphs=(C4, C4)), dict(f_inj=-1.0)])
def test_spec_validation(kw):
    base = dict(graphs=(C4,))
    base.update(kw)
    with pytest.raises(ValueError):
        ExperimentSpec(**base)


def test_shil_injection_at_twice_natural_frequency():
    spec = ExperimentSpec(graphs=(C4,))
    inj = spec.injection_for(Machine.SHIL)
    assert inj.enabled
    assert inj.f_inj == pytest.approx(2 * natural_frequency(spec.conventional))
    assert inj.f_inj == pytest.approx(3.4e3, rel=0.05)
    assert not spec.injection_for(Machine.EAO).enabled


def test_spectral_coupling_rule():
    spec = ExperimentSpec(graphs=(C4,), c_c=1e-9, c_c_rule="spectral")
    assert spec.coupling_for(cycle_graph(6)).C_c == pytest.approx(1e-9)
    assert spec.coupling_for(gen_random(6, 1.0, 0)).C_c == pytest.approx(2e-9 / 5)


@pytest.fixture(scope="module")
def small_spec():
    g = GraphEntry("r8", gen_random(8, 0.5, 4), 0.5)
    return ExperimentSpec(graphs=(C4, g), machines=(Machine.SHIL, Machine.EAO), trials=3,
                          sim=SimConfig(n_cycles=30), record_runtime=False)


@pytest.fixture(scope="module")
def small_results(small_spec):
    return run_experiment(small_spec, workers=1)


def test_run_experiment_shape_and_order(small_spec, small_results):
    assert len(small_results) == 2 * 2 * 3
    keys = [r.sort_key() for r in small_results]
    assert keys == sorted(keys)
    for r in small_results:
        assert r.optimum is not None
        if r.synchronized:
            assert 0 <= r.cut <= r.optimum
        else:
            assert r.cut is None


def test_run_experiment_deterministic_and_subset_rerun(small_spec, small_results):
    again = run_experiment(small_spec, workers=2)
    assert again == small_results
    one = small_results[4]
    entry = next(e for e in small_spec.graphs if e.graph_id == one.graph_id)
    assert run_trial(small_spec, entry, one.machine, one.trial, one.optimum) == one


def test_failures_recorded_not_raised():
    spec = ExperimentSpec(graphs=(GraphEntry("k8", gen_random(8, 1.0, 0)),), machines=(Machine.EAO,),
                          trials=2, c_c=2e-9, sim=SimConfig(n_cycles=5))
    res = run_experiment(spec, workers=1)
    assert len(res) == 2
    assert all(not r.synchronized and r.error for r in res)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("OSC_ISING_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("OSC_ISING_THREADS", "junk")
    assert worker_count() >= 1


def test_csv_outputs(tmp_path, small_results):
    write_bench_csv(small_results, tmp_path / "bench.csv")
    lines = (tmp_path / "bench.csv").read_text().splitlines()
    assert lines[0] == ",".join(BENCH_HEADER)
    assert len(lines) == len(small_results) + 1
    write_compare_csv(compare_machines(small_results), tmp_path / "compare.csv")
    lines = (tmp_path / "compare.csv").read_text().splitlines()
    assert lines[0] == "graph_id,best_eao,best_shil,deviation_pct"
    assert len(lines) == 3
