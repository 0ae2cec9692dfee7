import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mjconsensus.graphs import (
    Digraph,
    GraphError,
    TopologyEnsemble,
    consensus_projector,
    ensemble_from_adjacencies,
    has_spanning_tree,
    is_balanced,
    laplacian,
    spectral_constants,
    union_has_spanning_tree,
)

RING4 = Digraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


def test_laplacian_single_edge():
    g = Digraph(np.array([[0, 1], [0, 0]]))
    np.testing.assert_array_equal(laplacian(g), [[1, -1], [0, 0]])


def test_laplacian_empty_graph():
    np.testing.assert_array_equal(laplacian(Digraph(np.zeros((3, 3)))), np.zeros((3, 3)))


def test_laplacian_ring_is_circulant():
    lap = laplacian(RING4)
    # node i hears from i-1: diagonal 1, -1 one position to the left (cyclic)
    expected = np.eye(4) - np.roll(np.eye(4), -1, axis=1)
    np.testing.assert_array_equal(lap, expected)
    np.testing.assert_array_equal(lap.sum(axis=1), 0)


@pytest.mark.parametrize("bad", [
    np.array([[0, -1], [1, 0]]),
    np.array([[1, 0], [0, 0]]),
    np.array([[0, np.nan], [0, 0]]),
    np.zeros((2, 3)),
])
def test_digraph_rejects_invalid(bad):
    with pytest.raises(GraphError):
        Digraph(bad)


def test_balanced_examples():
    assert is_balanced(RING4)
    assert not is_balanced(Digraph(np.array([[0, 1], [0, 0]])))
    sym = np.array([[0, 2, 0.5], [2, 0, 1], [0.5, 1, 0]])
    assert is_balanced(Digraph(sym))


def test_spanning_tree_examples():
    assert union_has_spanning_tree(TopologyEnsemble((RING4,)))
    pairs = Digraph.from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
    assert not union_has_spanning_tree(TopologyEnsemble((pairs,)))
    chords = Digraph.from_edges(4, [(0, 2), (2, 0), (1, 3), (3, 1)])
    assert union_has_spanning_tree(TopologyEnsemble((RING4, chords)))
    # a directed star from node 0 has a spanning tree but no reverse reachability
    star = Digraph.from_edges(3, [(0, 1), (0, 2)])
    assert has_spanning_tree(star.adjacency)


def test_spectral_constants_ring():
    sc = spectral_constants(TopologyEnsemble((RING4,)))
    # oracle: circulant eigenvalues of L^T L and L + L^T are 2 - 2 cos(2 pi k / 4)
    k = np.arange(4)
    circ = np.sort(2 - 2 * np.cos(2 * np.pi * k / 4))
    assert sc.lambda_max == pytest.approx(circ[-1], abs=1e-12)
    assert sc.lambda_min2 == pytest.approx(circ[1], abs=1e-12)
    assert sc.lambda_max == pytest.approx(4.0) and sc.lambda_min2 == pytest.approx(2.0)
    assert sc.kappa == 1.0


def test_spectral_constants_two_nodes():
    e = ensemble_from_adjacencies([np.array([[0, 1], [1, 0]])])
    sc = spectral_constants(e)
    # L = [[1,-1],[-1,1]]: L^T L = 2L with eigenvalues {0, 4}; L + L^T = 2L likewise
    assert sc.lambda_max == pytest.approx(4.0, abs=1e-12)
    assert sc.lambda_min2 == pytest.approx(4.0, abs=1e-12)
    assert sc.kappa == 1.0


def test_benchmark_ensemble_constants(heli):
    sc = heli["sc"]
    assert sc.lambda_max == pytest.approx(10.0, abs=1e-10)
    assert sc.lambda_min2 == pytest.approx(4.0, abs=1e-10)
    assert heli["ensemble"].all_balanced()


def test_ensemble_requires_common_node_set():
    with pytest.raises(GraphError):
        ensemble_from_adjacencies([np.zeros((2, 2)), np.zeros((3, 3))])


def _balanced_connected(draw_seed: int, n: int):
    rng = np.random.default_rng(draw_seed)
    # a weighted directed ring plus random circulations (cycles) stays balanced
    a = np.zeros((n, n))
    w = rng.uniform(0.5, 2.0)
    for i in range(n):
        a[(i + 1) % n, i] += w
    for _ in range(rng.integers(0, 4)):
        cyc = rng.permutation(n)[: rng.integers(2, n + 1)]
        w = rng.uniform(0.1, 3.0)
        for j in range(len(cyc)):
            a[cyc[(j + 1) % len(cyc)], cyc[j]] += w
    return a


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 8), parts=st.integers(1, 3))
def test_laplacian_properties(seed, n, parts):
    full = _balanced_connected(seed, n)
    # split the balanced union into cycle-free parts is not needed: any split of weights works for the sum
    rng = np.random.default_rng(seed + 1)
    fractions = rng.dirichlet(np.ones(parts))
    graphs = [Digraph(full * f) for f in fractions]
    e = TopologyEnsemble(tuple(graphs))
    for lap in e.laplacians:
        assert np.abs(lap.sum(axis=1)).max() <= 1e-14 * max(np.abs(lap).max(), 1.0)
    np.testing.assert_allclose(e.union_laplacian, laplacian(Digraph(e.union_adjacency)), atol=1e-14, rtol=0)
    lun = e.union_laplacian
    assert np.abs(lun.sum(axis=0)).max() <= 1e-12 * np.abs(lun).max()
    sc = spectral_constants(e)
    assert sc.lambda_min2 > 0
    assert sc.lambda_max >= 0
    assert sc.kappa == 1.0


@pytest.mark.parametrize("n", [2, 3, 5, 10])
def test_projector_idempotent(n):
    m = consensus_projector(n)
    np.testing.assert_allclose(m @ m, m, atol=1e-14)
