import os

import numpy as np
import pytest

from ..analysis import projected_finite_difference
from ..chain_emd import chain_emd, chain_emd_grad, cumulative_flow, \
    to_cost_matrix
from ..distributions import make_rng, normalize_l1
from ..exact_oracle import exact_emd
from ..exceptions import *
from ..tree_emd import *

test_data = os.path.join(os.path.dirname(__file__), 'test_data')
hybrid = read_tree(os.path.join(test_data, 'hybrid.tree'))

P = np.array([0.2, 0.4, 0.2, 0.2])
Q = np.array([0, 0.5, 0.5, 0])


def random_pair(rng, n):
    return normalize_l1(rng.random(n)), normalize_l1(rng.random(n))


def test_load_tree():
    assert hybrid.root == 'vehicle'
    assert len(hybrid.node_ids) == 6
    assert hybrid.leaf_order == ('giraffe', 'elephant', 'truck', 'plane')
    assert hybrid.children('animal') == ('giraffe', 'elephant')
    assert hybrid.leaf_count('vehicle') == 4
    assert hybrid.leaf_count('animal') == 2
    order = hybrid.post_order()
    assert order[-1] == 'vehicle'
    assert order.index('giraffe') < order.index('animal')


def test_load_tree_errors():
    with pytest.raises(CycleError):
        read_tree(os.path.join(test_data, 'cycle.tree'))
    with pytest.raises(TooFewLeavesError):
        read_tree(os.path.join(test_data, 'one_leaf.tree'))
    with pytest.raises(MultipleRootsError):
        read_tree(os.path.join(test_data, 'two_roots.tree'))
    with pytest.raises(TreeFormatError):
        read_tree(os.path.join(test_data, 'malformed.tree'))
    with pytest.raises(NonPositiveCostError):
        read_tree(os.path.join(test_data, 'zero_cost.tree'))
    with pytest.raises(DisconnectedNodeError):
        load_tree('a - 0\nb a 1\nc z 1\n')
    with pytest.raises(DuplicateIdError):
        load_tree('a - 0\nb a 1\nc a 1\nb a 2\n')
    with pytest.raises(TreeFormatError):
        load_tree('# nothing here\n')


def test_load_tree_zero_cost():
    tree = read_tree(os.path.join(test_data, 'zero_cost.tree'),
                     allow_zero_cost=True)
    assert tree.edge_cost['c'] == 0


def test_to_text_round_trip(tmp_path):
    path = tmp_path / 'hybrid.tree'
    write_tree(hybrid, path)
    assert read_tree(path) == hybrid


def test_subtree_flow():
    flow = subtree_flow(hybrid, P, Q)
    expected = {'giraffe': 0.2, 'elephant': -0.1, 'truck': -0.3,
                'plane': 0.2, 'animal': 0.1, 'vehicle': 0}
    for node, value in expected.items():
        assert flow[node] == pytest.approx(value, abs=1e-12)
    assert all(v == 0 for v in subtree_flow(hybrid, P, P).values())
    with pytest.raises(LengthMismatchError):
        subtree_flow(hybrid, [0.5, 0.5], [0.5, 0.5])


def test_tree_emd():
    assert tree_emd(hybrid, P, Q) == pytest.approx(0.9, abs=1e-12)
    assert tree_emd(hybrid, P, Q, 2) == pytest.approx(0.19, abs=1e-12)
    assert tree_emd(hybrid, P, P, 2) == 0
    with pytest.raises(MassMismatchError):
        tree_emd(hybrid, P, [0.5, 0.5, 0.5, 0.5])
    with pytest.raises(BadRhoError):
        tree_emd(hybrid, P, Q, 0)


def test_tree_emd_grad():
    np.testing.assert_allclose(tree_emd_grad(hybrid, P, Q),
                               [1.5, -0.5, -1.5, 0.5], rtol=0, atol=1e-12)
    np.testing.assert_allclose(tree_emd_grad(hybrid, P, Q, 2),
                               [0.5, -0.1, -0.7, 0.3], rtol=0, atol=1e-12)
    np.testing.assert_array_equal(tree_emd_grad(hybrid, P, P, 2), np.zeros(4))


def test_tree_emd_grad_finite_differences():
    rng = make_rng(8)
    for seed in range(100):
        tree = generate_random_tree(int(rng.integers(2, 20)), max_depth=5,
                                    cost_range=(0.5, 2.0), seed=seed)
        p, q = random_pair(rng, tree.n_leaves)
        numeric = projected_finite_difference(
            lambda x: tree_emd(tree, x, q, 2, check_mass=False), p)
        closed = tree_emd_grad(tree, p, q, 2)
        assert abs(closed.sum()) <= 1e-12
        scale = max(1.0, np.abs(closed).max())
        assert np.abs(numeric - closed).max() <= 1e-5 * scale


def test_reroot_hybrid():
    assert valid_roots(hybrid) == ['animal', 'vehicle']
    rerooted = reroot(hybrid, 'animal')
    assert rerooted.root == 'animal'
    assert rerooted.parent['vehicle'] == 'animal'
    assert rerooted.leaf_order == hybrid.leaf_order
    assert tree_emd(rerooted, P, Q) == pytest.approx(0.9, abs=1e-12)
    assert tree_emd(rerooted, P, Q, 2) == pytest.approx(0.19, abs=1e-12)
    assert reroot(hybrid, 'vehicle') is hybrid
    with pytest.raises(UnknownNodeError):
        reroot(hybrid, 'boat')
    with pytest.raises(LeafRootChangeError):
        reroot(hybrid, 'giraffe')


def root_invariance(n_trees, seed):
    rng = make_rng(seed)
    worst = 0.0
    for i in range(n_trees):
        tree = generate_random_tree(int(rng.integers(2, 33)), max_depth=6,
                                    cost_range=(0.5, 2.0),
                                    seed=seed * 100_000 + i)
        p, q = random_pair(rng, tree.n_leaves)
        reference = {rho: (tree_emd(tree, p, q, rho),
                           tree_emd_grad(tree, p, q, rho)) for rho in (1, 2)}
        for root in valid_roots(tree):
            other = reroot(tree, root)
            for rho, (value, grad) in reference.items():
                worst = max(worst,
                            abs(tree_emd(other, p, q, rho) - value),
                            np.abs(tree_emd_grad(other, p, q, rho)
                                   - grad).max())
    return worst


def test_root_invariance():
    assert root_invariance(50, seed=1) <= 1e-9


@pytest.mark.slow
def test_root_invariance_many():
    assert root_invariance(1000, seed=2) <= 1e-9


def test_tree_to_cost_matrix():
    m = tree_to_cost_matrix(hybrid)
    assert m[0, 1] == 2
    assert m[0, 2] == 3
    assert m[2, 3] == 2
    np.testing.assert_array_equal(m, m.T)
    np.testing.assert_array_equal(np.diag(m), 0)
    tree = generate_random_tree(12, cost_range=(0.5, 2.0), seed=4)
    m = tree_to_cost_matrix(tree)
    # m[i, k] <= m[i, j] + m[j, k]
    direct = m[:, None, :]
    detour = m[:, :, None] + m[None, :, :]
    assert np.all(direct <= detour + 1e-12)


def test_tree_to_cost_matrix_linear_in_edge_cost():
    costs = dict(hybrid.edge_cost)
    costs['animal'] = 3.0
    heavier = MetricTree(hybrid.node_ids, hybrid.parent, costs)
    delta = tree_to_cost_matrix(heavier) - tree_to_cost_matrix(hybrid)
    crosses = np.array([[0, 0, 1, 1],
                        [0, 0, 1, 1],
                        [1, 1, 0, 0],
                        [1, 1, 0, 0]])
    np.testing.assert_allclose(delta, 2 * crosses)


def test_chain_to_tree():
    costs = np.array([0.5, 2.0, 1.0, 1.5])
    tree = chain_to_tree(costs)
    assert tree.root == 's5'
    assert tree.leaf_order == ('b1', 'b2', 'b3', 'b4', 'b5')
    np.testing.assert_allclose(tree_to_cost_matrix(tree),
                               to_cost_matrix(costs))
    rng = make_rng(12)
    for _ in range(20):
        p, q = random_pair(rng, 5)
        flow = subtree_flow(tree, p, q)
        np.testing.assert_allclose([flow[f's{k}'] for k in range(1, 5)],
                                   cumulative_flow(p, q), atol=1e-15)
        for rho in (1, 2):
            assert tree_emd(tree, p, q, rho) == pytest.approx(
                chain_emd(p, q, costs, rho), abs=1e-9)
            np.testing.assert_allclose(tree_emd_grad(tree, p, q, rho),
                                       chain_emd_grad(p, q, costs, rho),
                                       atol=1e-9)


def test_generate_random_tree():
    assert generate_random_tree(4, seed=0) == generate_random_tree(4, seed=0)
    big = generate_random_tree(1000, cost_range=(0.5, 2.0), seed=9)
    assert big.n_leaves == 1000
    assert all(0.5 <= c <= 2.0 for c in big.edge_cost.values())
    shallow = generate_random_tree(32, max_depth=2, seed=1)
    assert max(len(path_to_root(shallow, leaf))
               for leaf in shallow.leaf_order) <= 2
    with pytest.raises(BadParamsError):
        generate_random_tree(1)
    with pytest.raises(BadParamsError):
        generate_random_tree(8, cost_range=(0, 1))


def path_to_root(tree, node):
    path = []
    while tree.parent[node] is not None:
        path.append(node)
        node = tree.parent[node]
    return path


def test_deep_path_tree():
    n = 100_000
    node_ids = [f'n{i}' for i in range(n)] + ['side']
    parent = {f'n{i}': (f'n{i + 1}' if i < n - 1 else None) for i in range(n)}
    parent['side'] = f'n{n - 1}'
    costs = {node: 1.0 for node in node_ids if parent[node] is not None}
    tree = MetricTree(node_ids, parent, costs)
    assert tree.n_leaves == 2
    assert tree_emd(tree, [1, 0], [0, 1]) == pytest.approx(n)


def test_tree_emd_matches_oracle():
    rng = make_rng(21)
    for i in range(100):
        tree = generate_random_tree(int(rng.integers(2, 13)), max_depth=4,
                                    cost_range=(0.5, 2.0), seed=i)
        p, q = random_pair(rng, tree.n_leaves)
        value, _ = exact_emd(p, q, tree_to_cost_matrix(tree))
        assert tree_emd(tree, p, q) == pytest.approx(value, abs=1e-9)


@pytest.mark.slow
def test_tree_emd_matches_oracle_many():
    rng = make_rng(22)
    for i in range(500):
        tree = generate_random_tree(int(rng.integers(2, 13)), max_depth=4,
                                    cost_range=(0.5, 2.0), seed=10_000 + i)
        p, q = random_pair(rng, tree.n_leaves)
        value, _ = exact_emd(p, q, tree_to_cost_matrix(tree))
        assert abs(tree_emd(tree, p, q) - value) <= 1e-9


def test_tree_emd_grad_plain_partials():
    np.testing.assert_allclose(
        tree_emd_grad(hybrid, P, Q, 2, l1_preserving=False),
        [0.6, 0.0, -0.6, 0.4], rtol=0, atol=1e-12)
    tree = chain_to_tree(np.ones(5))
    rng = make_rng(14)
    for _ in range(10):
        p, q = random_pair(rng, 6)
        for rho in (1, 2):
            plain = tree_emd_grad(tree, p, q, rho, l1_preserving=False)
            np.testing.assert_allclose(
                plain, chain_emd_grad(p, q, rho=rho, l1_preserving=False),
                atol=1e-12)
            np.testing.assert_allclose(tree_emd_grad(tree, p, q, rho),
                                       plain - plain.mean(), atol=1e-15)


def test_read_tree_exact_costs(tmp_path):
    tree = generate_random_tree(10, cost_range=(0.1, 3.0), seed=6)
    path = tmp_path / 'random.tree'
    write_tree(tree, path)
    assert read_tree(path).edge_cost == tree.edge_cost


@pytest.mark.slow
def test_tree_gradients_sum_to_zero_many():
    rng = make_rng(31)
    for i in range(10_000):
        tree = generate_random_tree(int(rng.integers(2, 33)), max_depth=6,
                                    cost_range=(0.5, 2.0), seed=i)
        p, q = random_pair(rng, tree.n_leaves)
        for rho in (1, 2):
            assert abs(tree_emd_grad(tree, p, q, rho).sum()) <= 1e-12


@pytest.mark.slow
def test_tree_emd_grad_finite_differences_many():
    rng = make_rng(80)
    for seed in range(500):
        tree = generate_random_tree(int(rng.integers(2, 33)), max_depth=6,
                                    cost_range=(0.5, 2.0), seed=20_000 + seed)
        p, q = random_pair(rng, tree.n_leaves)
        numeric = projected_finite_difference(
            lambda x: tree_emd(tree, x, q, 2, check_mass=False), p)
        closed = tree_emd_grad(tree, p, q, 2)
        scale = max(1.0, np.abs(closed).max())
        assert np.abs(numeric - closed).max() <= 1e-5 * scale
