import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bearing_pose.network import (CLAUSES, Topology, TopologyError, bearing_matrix, is_acyclic,
                                  projector_sum, require_valid, spectral_report, stiffness_matrix,
                                  validate_topology)

CUBE = np.array([[0, 0, 0], [2, 0, 0], [2, 2, 0], [0, 2, 0],
                 [0, 0, 2], [2, 0, 2], [2, 2, 2], [0, 2, 2]], dtype=float)
NEIGHBORS = {1: [], 2: [], 3: [1, 2], 4: [2, 3], 5: [1, 4], 6: [2, 4, 5], 7: [3, 4, 6], 8: [1, 7]}


def topo(changes=None):
    nbrs = dict(NEIGHBORS)
    nbrs.update(changes or {})
    return Topology.from_neighbors(8, nbrs)


def test_cube_network_is_valid():
    assert validate_topology(topo(), CUBE).ok


@pytest.mark.parametrize("change, clause", [
    ({5: [4]}, "at least two neighbors"),
    ({3: [1, 4], 4: [2, 3]}, "acyclic"),
    ({1: [3]}, "acyclic"),
    ({2: [1]}, "leaders have no neighbors"),
])
def test_each_clause_is_named(change, clause):
    res = validate_topology(topo(change), CUBE)
    assert not res.ok
    assert res.clause == clause


def test_neighbors_must_precede():
    res = validate_topology(Topology.from_neighbors(4, {3: [1, 4], 4: [1, 2]}), CUBE[:4])
    assert res.clause == "neighbors precede"
    assert res.agents == (3, 4)


@given(st.integers(3, 10), st.data())
def test_ordering_and_degree_imply_leader_reachability(n, data):
    # two distinct lower-numbered neighbors each: by induction every follower hears both leaders
    nbrs = {i: data.draw(st.lists(st.integers(1, i - 1), min_size=2, max_size=i - 1, unique=True))
            for i in range(3, n + 1)}
    pos = np.random.default_rng(n).uniform(-5, 5, size=(n, 3))
    res = validate_topology(Topology.from_neighbors(n, nbrs), pos)
    assert res.ok or res.clause in ("non-collinear", "non-collocated")


def test_collinear_and_collocated():
    pos = CUBE.copy()
    pos[3] = [4, 0, 0]  # agent 4 on the line through leaders 1 and 2
    t = Topology.from_neighbors(4, {3: [1, 2], 4: [1, 2]})
    assert validate_topology(t, pos[:4]).clause == "non-collinear"
    pos = CUBE.copy()
    pos[2] = pos[0]
    assert validate_topology(Topology.from_neighbors(3, {3: [1, 2]}), pos[:3]).clause == "non-collocated"


def test_nonpositive_gain():
    t = Topology.from_neighbors(8, NEIGHBORS, {(6, 4): 0.0})
    assert validate_topology(t, CUBE).clause == "positive gains"


def test_require_valid_raises_with_clause():
    with pytest.raises(TopologyError) as exc:
        require_valid(topo({5: [4]}), CUBE)
    assert exc.value.clause == "at least two neighbors"
    assert exc.value.agents == (5,)
    assert set(CLAUSES) >= {"acyclic", "non-collinear"}


@given(st.integers(3, 9), st.lists(st.tuples(st.integers(1, 9), st.integers(1, 9)), max_size=25))
def test_acyclicity_matches_networkx(n, edges):
    nbrs: dict[int, list[int]] = {}
    for i, j in edges:
        if i <= n and j <= n and i != j:
            nbrs.setdefault(i, []).append(j)
    t = Topology.from_neighbors(n, nbrs)
    g = nx.DiGraph()
    g.add_nodes_from(range(1, n + 1))
    g.add_edges_from(t.edges)
    assert is_acyclic(t) == nx.is_directed_acyclic_graph(g)


def test_bearing_matrix_agent3():
    # bearings (0,-1,0) and (-1,-1,0)/sqrt2
    w = np.linalg.eigvalsh(bearing_matrix(3, topo(), CUBE))
    assert np.allclose(w, [0.0, 1 - 1 / math.sqrt(2), 1 + 1 / math.sqrt(2)], atol=1e-12)


def test_stiffness_is_gain_sum_minus_bearing_matrix():
    t = Topology.from_neighbors(8, NEIGHBORS, {(6, 4): 2.5, (7, 3): 0.5})
    for i in t.followers:
        k = sum(t.gain(i, j) for j in t.neighbors[i])
        assert np.allclose(stiffness_matrix(i, t, CUBE), k * np.eye(3) - bearing_matrix(i, t, CUBE))
    assert np.allclose(projector_sum(6, t, CUBE), stiffness_matrix(6, topo(), CUBE))


def test_spectral_report_on_cube():
    rep = spectral_report(topo(), CUBE)
    assert set(rep.followers) == {3, 4, 5, 6, 7, 8}
    for i in (3, 4, 5):
        assert rep[i].q_min == pytest.approx(1 - 1 / math.sqrt(2))
    s = math.sqrt(2 / 3)
    assert np.allclose(rep[6].m_eigenvalues, [1 - s, 1, 1 + s])
    # agent 8 sees 1 along a face diagonal and 7 along an edge at right angles
    assert np.allclose(rep[8].m_eigenvalues, [0, 1, 1])
    assert not rep[8].distinct
    assert all(rep[i].distinct for i in (3, 4, 5, 6, 7))
    d = rep.to_dict()
    assert d["3"]["M_eigenvalues"] == pytest.approx(list(rep[3].m_eigenvalues))


def test_truncation_is_prefix():
    t = topo().truncated(4)
    assert t.n == 4
    assert t.followers == (3, 4)
    assert validate_topology(t, CUBE[:4]).ok


def test_csr_arrays():
    ptr, nbr, gain = topo().as_arrays()
    assert ptr[0] == 0 and ptr[-1] == len(nbr) == 14
    assert list(nbr[ptr[5]:ptr[6]]) == [1, 3, 4]  # agent 6 hears 2, 4, 5
    assert np.all(gain == 1.0)
