import networkx as nx
import pytest

from icnsim.errors import NoRoute
from icnsim.routing import build_fibs, distance_to_source, format_fibs
from icnsim.topology import gen_core, gen_line, gen_random_geometric

from test_topology import as_nx


@pytest.mark.parametrize("seed", range(5))
def test_ranks_equal_bfs_distance(seed):
    t = gen_random_geometric(seed=seed)
    g = as_nx(t)
    producers = [0, 7, 23]
    r = build_fibs(t, producers)
    for p in producers:
        dist = nx.single_source_shortest_path_length(g, p)
        for v in range(t.node_count):
            if v == p:
                assert r.fib(v, p) == []
                continue
            assert distance_to_source(r, v, p) == dist[v]
            entries = r.fib(v, p)
            # every entry is a neighbor strictly closer to the producer
            assert {e.next_hop for e in entries} == {u for u in g[v] if dist[u] == dist[v] - 1}
            assert entries == sorted(entries, key=lambda e: (e.rank, e.next_hop))
            assert len(r.path(v, p)) - 1 == dist[v]


def test_tie_break_lowest_id():
    # a square: 3 reaches 0 via 1 or 2 at equal rank
    from icnsim.topology import from_edges
    t = from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)])
    r = build_fibs(t, [0])
    assert r.next_hop(3, 0) == 1
    assert [e.next_hop for e in r.fib(3, 0)] == [1, 2]


def test_core_paths_are_unique():
    t = gen_core(4, 3, 1)
    r = build_fibs(t, [0])
    for c in t.consumers:
        assert len(r.fib(c, 0)) == 1
        assert r.rank(c, 0) == 3


def test_missing_prefix_raises():
    r = build_fibs(gen_line(3), [0])
    with pytest.raises(NoRoute):
        r.next_hop(2, 1)
    assert r.prefixes_at(2) == [0]


def test_bad_producer():
    with pytest.raises(ValueError):
        build_fibs(gen_line(3), [5])


def test_format_fibs():
    text = format_fibs(build_fibs(gen_line(3), [0]))
    assert text.splitlines() == ["# node prefix next_hop rank", "1 0 0 1", "2 0 1 2"]
