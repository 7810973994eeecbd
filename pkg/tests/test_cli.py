import pytest

from osc_ising.cli import cli_main


@pytest.fixture
def c4_file(tmp_path):
    path = tmp_path / "c4.txt"
    path.write_text("4 4\n0 1\n1 2\n2 3\n0 3\n")
    return path


def test_gen_writes_complete_graph(tmp_path):
    out = tmp_path / "g.txt"
    assert cli_main(["gen", "--n", "4", "--eta", "1.0", "--seed", "7", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "4 6"


def test_oracle_prints_maxcut(c4_file, capsys):
    assert cli_main(["oracle", str(c4_file)]) == 0
    assert "maxcut 4" in capsys.readouterr().out.splitlines()


def test_solve_prints_cut_and_residual(c4_file, tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    rc = cli_main(["solve", "--machine", "eao", "--graph", str(c4_file), "--seed", "1",
                   "--trace", str(trace), "--n-cycles", "40"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "cut 4" in out
    assert "residual_deg" in out
    assert trace.read_text().startswith("t,v0,v1,v2,v3,s0")


def test_usage_errors_exit_1(c4_file, capsys):
    assert cli_main(["bogus"]) == 1
    assert cli_main(["solve", "--machine", "eao", "--graph", str(c4_file), "--nope", "1"]) == 1
    assert cli_main(["solve", "--machine", "quantum", "--graph", str(c4_file)]) == 1
    assert cli_main(["solve", "--machine", "eao", "--graph", str(c4_file), "--trials", "2"]) == 1
    assert cli_main(["spectrum", "--grid", "0.1"]) == 1
    assert cli_main([]) == 1
    assert "usage" in capsys.readouterr().err


def test_help_exits_0():
    assert cli_main(["--help"]) == 0


def test_runtime_errors_exit_2(tmp_path):
    assert cli_main(["oracle", str(tmp_path / "missing.txt")]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("4 1\n0 9\n")
    assert cli_main(["oracle", str(bad)]) == 2
    assert cli_main(["gen", "--n", "1", "--eta", "0.5", "--out", str(tmp_path / "x")]) == 2


def test_spectrum_csv(tmp_path):
    out = tmp_path / "s.csv"
    assert cli_main(["spectrum", "--out", str(out), "--grid", "0.1:0.3:0.1"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "tA_over_T,tau1,tau2,f1,A_f1,A_2f1,ratio"
    assert len(lines) == 4


def test_bench_flags_override_config(c4_file, tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text(f"graphs = {c4_file.name}\nmachines = eao, shil\ntrials = 5\nn_cycles = 30\n")
    out = tmp_path / "out"
    rc = cli_main(["bench", "--config", str(conf), "--trials", "2", "--out-dir", str(out)])
    assert rc == 0
    bench = (out / "bench.csv").read_text().splitlines()
    assert bench[0] == "graph_id,n,eta,machine,trial,cut,optimum,residual_deg,synchronized,runtime_ms"
    assert len(bench) == 1 + 2 * 2
    assert (out / "compare.csv").read_text().splitlines()[1].startswith("c4,")


def test_bench_bad_config_key(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("colour = blue\n")
    assert cli_main(["bench", "--config", str(conf)]) == 1
