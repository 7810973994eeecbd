import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from osc_ising.graphlib import (
    Graph,
    GraphFormatError,
    brute_force_maxcut,
    complete_graph,
    cut_value,
    cycle_graph,
    gen_random,
    ising_energy,
    load_graph,
    parse_graph,
    save_graph,
)


@st.composite
def graph_and_spins(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    g = Graph(n, [p for p, keep in zip(pairs, mask) if keep])
    spins = np.array(draw(st.lists(st.sampled_from([-1, 1]), min_size=n, max_size=n)))
    return g, spins


def test_graph_canonicalizes_edges():
    g = Graph(3, [(2, 0), (1, 2)])
    assert g.edges == ((0, 2), (1, 2))
    assert g == Graph(3, [(1, 2), (0, 2)])


@pytest.mark.parametrize("edges", [[(0, 0)], [(0, 4)], [(0, 1), (1, 0)]])
def test_graph_rejects_bad_edges(edges):
    with pytest.raises(GraphFormatError):
        Graph(4, edges)


def test_gen_random_edge_counts():
    assert gen_random(32, 0.2, 5).m == 99
    assert gen_random(4, 1.0, 7) == complete_graph(4)
    assert gen_random(10, 0.0, 1).m == 0


def test_gen_random_is_seed_deterministic():
    assert gen_random(20, 0.3, 11) == gen_random(20, 0.3, 11)
    assert gen_random(20, 0.3, 11) != gen_random(20, 0.3, 12)


@pytest.mark.parametrize("n, eta", [(1, 0.5), (5, -0.1), (5, 1.5)])
def test_gen_random_rejects_bad_input(n, eta):
    with pytest.raises(ValueError):
        gen_random(n, eta, 0)


@given(st.integers(2, 30), st.floats(0, 1), st.integers(0, 2**64 - 1))
def test_gen_random_exact_density(n, eta, seed):
    g = gen_random(n, eta, seed)
    assert g.m == round(eta * n * (n - 1) / 2)
    assert len(set(g.edges)) == g.m
    assert all(u < v < n for u, v in g.edges)


def test_cut_and_energy_examples():
    c4 = cycle_graph(4)
    alt = np.array([1, -1, 1, -1])
    assert cut_value(c4, alt) == 4
    assert ising_energy(c4, alt) == -4
    assert cut_value(c4, np.ones(4)) == 0
    assert ising_energy(c4, np.ones(4)) == 4
    k3 = complete_graph(3)
    assert cut_value(k3, [1, 1, -1]) == 2
    assert ising_energy(k3, [1, 1, -1]) == -1


@pytest.mark.parametrize("spins", [[1, -1, 1], [1, 0, -1, 1], [1, 2, -1, 1]])
def test_cut_rejects_bad_spins(spins):
    with pytest.raises(ValueError):
        cut_value(cycle_graph(4), spins)


@given(graph_and_spins())
def test_cut_energy_identity_and_flip(data):
    g, s = data
    assert cut_value(g, s) == (g.m - ising_energy(g, s)) // 2
    assert 2 * cut_value(g, s) == g.m - ising_energy(g, s)
    assert cut_value(g, -s) == cut_value(g, s)
    assert ising_energy(g, -s) == ising_energy(g, s)


def test_oracle_examples():
    assert brute_force_maxcut(cycle_graph(4)).cut == 4
    assert brute_force_maxcut(Graph(2, [(0, 1)])).cut == 1
    assert brute_force_maxcut(complete_graph(4)).cut == 4


def test_oracle_size_cap():
    with pytest.raises(ValueError):
        brute_force_maxcut(Graph(25))


@given(graph_and_spins(max_n=10))
def test_oracle_dominates_and_breaks_ties_lexicographically(data):
    g, s = data
    res = brute_force_maxcut(g)
    assert res.cut >= cut_value(g, s)
    assert res.spins[0] == 1
    assert res.cut == (g.m - res.ising_energy) // 2
    # reference: first optimum in lexicographic order with -1 < +1
    best = None
    for tail in itertools.product([-1, 1], repeat=g.n - 1):
        a = np.array((1,) + tail)
        c = cut_value(g, a)
        if best is None or c > best[0]:
            best = (c, a)
    assert res.cut == best[0]
    np.testing.assert_array_equal(res.spins, best[1])


def test_oracle_chunking_matches():
    g = gen_random(12, 0.5, 3)
    a, b = brute_force_maxcut(g), brute_force_maxcut(g, chunk_bits=4)
    assert a.cut == b.cut
    np.testing.assert_array_equal(a.spins, b.spins)


def test_graph_file_round_trip(tmp_path):
    path = tmp_path / "c4.txt"
    save_graph(cycle_graph(4), path)
    assert path.read_text().splitlines()[0] == "4 4"
    assert load_graph(path) == cycle_graph(4)


def test_parse_skips_comments():
    g = parse_graph("# ring\n4 4\n0 1\n# middle\n1 2\n2 3\n3 0\n")
    assert g == cycle_graph(4)


@pytest.mark.parametrize("text", [
    "4 2\n0 1\n4 1\n",   # endpoint out of range
    "4 2\n0 1\n0 1\n",   # duplicate
    "4 3\n0 1\n1 2\n",   # header count mismatch
    "4\n",               # malformed header
    "",                  # empty
    "4 1\n0 x\n",        # non-integer
])
def test_parse_rejects_malformed(text):
    with pytest.raises(GraphFormatError):
        parse_graph(text)
