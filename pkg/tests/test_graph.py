import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irggkss.graph import (
    Graph,
    GraphParseError,
    degree_vector,
    load_graph,
    load_labels,
    num_pairs,
    pair_from_index,
    pair_index,
    with_edge,
    write_graph,
)


def test_pair_index_examples():
    assert pair_index(1, 2, 4) == 0
    assert pair_index(3, 4, 4) == 5


@pytest.mark.parametrize("bad", [(2, 2, 4), (3, 2, 4), (0, 2, 4), (1, 5, 4)])
def test_pair_index_rejects(bad):
    with pytest.raises(ValueError):
        pair_index(*bad)


def test_pair_index_lexicographic_bijection():
    for n in range(2, 51):
        pairs = list(itertools.combinations(range(1, n + 1), 2))
        idx = [pair_index(u, v, n) for u, v in pairs]
        assert idx == list(range(num_pairs(n)))
        assert [pair_from_index(s, n) for s in idx] == pairs


def test_with_edge_exhaustive_small():
    for n in range(2, 6):
        N = num_pairs(n)
        for code in range(2**N):
            x = np.array([(code >> s) & 1 for s in range(N)], dtype=np.uint8)
            g = Graph(n, x)
            for s in range(N):
                for b in (0, 1):
                    h = with_edge(g, s, b)
                    assert h.x[s] == b
                    assert np.array_equal(np.delete(h.x, s), np.delete(g.x, s))
            assert np.array_equal(g.x, x)  # input untouched


def test_with_edge_identities(rng):
    g = Graph(6, (rng.random(15) < 0.5).astype(np.uint8))
    for s in range(g.N):
        assert with_edge(g, s, g.x[s]) == g
        assert with_edge(with_edge(g, s, 1 - g.x[s]), s, g.x[s]) == g
    one = with_edge(Graph(3), 0, 1)
    assert one.num_edges == 1 and one.edges().tolist() == [[0, 1]]
    with pytest.raises(ValueError):
        with_edge(g, g.N, 1)


def test_graph_is_immutable():
    g = Graph(4)
    with pytest.raises(ValueError):
        g.x[0] = 1


def test_degree_vector_examples():
    assert degree_vector(Graph(4)).tolist() == [0, 0, 0, 0]
    assert degree_vector(Graph(4, np.ones(6, dtype=np.uint8))).tolist() == [3, 3, 3, 3]
    assert degree_vector(Graph.from_edges(3, [(0, 1), (1, 2)])).tolist() == [1, 2, 1]


def test_degree_sum(rng):
    g = Graph(12, (rng.random(66) < 0.3).astype(np.uint8))
    assert degree_vector(g).sum() == 2 * g.num_edges


def test_load_graph_dedup(tmp_path):
    f = tmp_path / "g.edges"
    f.write_text("# comment\n1 2\n2 1\n")
    g = load_graph(f, 3)
    assert g.num_edges == 1
    assert g.labels.tolist() == [1, 1, 1]


def test_load_graph_empty(tmp_path):
    f = tmp_path / "g.edges"
    f.write_text("")
    assert load_graph(f, 5) == Graph(5)


@pytest.mark.parametrize("text,line", [("1 2\n2 2\n", 2), ("1 2 3\n", 1), ("1 x\n", 1), ("1 9\n", 1)])
def test_load_graph_errors_carry_line(tmp_path, text, line):
    f = tmp_path / "g.edges"
    f.write_text(text)
    with pytest.raises(GraphParseError) as exc:
        load_graph(f, 4)
    assert exc.value.line == line


def test_load_graph_missing(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_graph(tmp_path / "nope", 3)


def test_labels(tmp_path):
    f = tmp_path / "l.txt"
    f.write_text("1\n2\n2\n")
    assert load_labels(f, 3).tolist() == [1, 2, 2]
    with pytest.raises(GraphParseError):
        load_labels(f, 4)
    f.write_text("1\n0\n1\n")
    with pytest.raises(GraphParseError):
        load_labels(f, 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.integers(0, 1), min_size=n * (n - 1) // 2,
                                             max_size=n * (n - 1) // 2),
                        st.lists(st.integers(1, 3), min_size=n, max_size=n))))
def test_write_load_roundtrip(tmp_path_factory, case):
    n, bits, labels = case
    g = Graph(n, np.array(bits, dtype=np.uint8), labels)
    d = tmp_path_factory.mktemp("rt")
    write_graph(g, d / "g.edges", d / "g.labels")
    assert load_graph(d / "g.edges", n, d / "g.labels") == g
    raw = (d / "g.edges").read_bytes()
    assert b"\r" not in raw
    write_graph(g, d / "h.edges")
    assert (d / "h.edges").read_bytes() == raw
