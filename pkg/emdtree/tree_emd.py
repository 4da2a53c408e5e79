#!/usr/bin/env python3
"""Closed form EMD on tree connected spaces.

Observed bins are the leaves of a rooted tree with a transport cost on every
edge. Mass moves along the unique tree paths, so the distance is a weighted
sum over the signed excess mass leaving every subtree::

    tEMD^rho(p, q) = sum_{i != root} M_i |phi_i|^rho
    phi_i = sum_{j in leaves(i)} (p_j - q_j)

Everything is evaluated with one post-order pass (flows) and one pre-order
pass (gradients) over index arrays precomputed when the tree is built.
"""
import io
from types import MappingProxyType

import numpy as np
import pandas as pd

from .chain_emd import check_chain_metric, check_rho, edge_weights
from .distributions import check_pair, make_rng
from .exceptions import (BadParamsError, CycleError, DisconnectedNodeError,
                         DuplicateIdError, LeafRootChangeError,
                         LengthMismatchError, MultipleRootsError,
                         NonPositiveCostError, TooFewLeavesError,
                         TreeFormatError, UnknownNodeError)

ROOT_MARKER = '-'


class MetricTree:
    """Rooted tree with edge costs and distributions living on its leaves.

    Arguments:
        node_ids (list): node identifiers, order is kept
        parent (dict): node -> parent node, None for the root
        edge_cost (dict): node -> cost of the edge to its parent
        leaf_order (list): leaf ids in bin order, default is node order
        allow_zero_cost (bool): accept zero cost edges (zero cost links)
    """

    def __init__(self, node_ids, parent, edge_cost, leaf_order=None,
                 allow_zero_cost=False):
        node_ids = tuple(node_ids)
        index = {}
        for i, node in enumerate(node_ids):
            if node in index:
                raise DuplicateIdError(
                    f'node {node!r} declared more than once')
            index[node] = i

        parents = {}
        for node in node_ids:
            up = parent.get(node)
            if up is not None and up not in index:
                raise DisconnectedNodeError(f'parent {up!r} of {node!r} '
                                            f'is not a node of the tree')
            parents[node] = up
        roots = [node for node in node_ids if parents[node] is None]
        if len(roots) > 1:
            raise MultipleRootsError(f'found {len(roots)} roots: '
                                     f'{", ".join(map(str, roots[:5]))}')

        children = {node: [] for node in node_ids}
        for node in node_ids:
            if parents[node] is not None:
                children[parents[node]].append(node)
        reached = _depth_first(roots[0], children) if roots else []
        if len(reached) != len(node_ids):
            seen = set(reached)
            stuck = [node for node in node_ids if node not in seen]
            raise CycleError(f'parent map has a cycle through '
                             f'{", ".join(map(str, stuck[:5]))}')

        costs = {}
        for node in node_ids:
            if parents[node] is None:
                continue
            cost = float(edge_cost.get(node, np.nan))
            if not (np.isfinite(cost)
                    and (cost > 0 or (allow_zero_cost and cost == 0))):
                raise NonPositiveCostError(
                    f'edge {node!r} -> {parents[node]!r} has cost {cost}')
            costs[node] = cost

        leaves = [node for node in node_ids if not children[node]]
        if leaf_order is None:
            leaf_order = leaves
        leaf_order = tuple(leaf_order)
        if sorted(map(str, leaf_order)) != sorted(map(str, leaves)) \
                or len(set(leaf_order)) != len(leaf_order):
            raise BadParamsError('leaf_order must be a permutation of the '
                                 'tree leaves')
        if len(leaf_order) < 2:
            raise TooFewLeavesError(f'tree needs at least 2 leaves, '
                                    f'got {len(leaf_order)}')

        self.node_ids = node_ids
        self.parent = MappingProxyType(parents)
        self.edge_cost = MappingProxyType(costs)
        self.leaf_order = leaf_order
        self.root = roots[0]
        self.allow_zero_cost = allow_zero_cost
        self._children = MappingProxyType(
            {node: tuple(kids) for node, kids in children.items()})
        self._index = MappingProxyType(index)

        post_order = [index[node] for node in reached[::-1]]
        self._post_order = np.array(post_order)
        parent_index = np.array([-1 if parents[node] is None
                                 else index[parents[node]]
                                 for node in node_ids])
        self._parent_index = parent_index
        # (child, parent) pairs, children before parents
        self._upward = [(i, int(parent_index[i])) for i in post_order
                        if parent_index[i] >= 0]
        self._cost = np.array([costs.get(node, 0.0) for node in node_ids])
        self._leaf_index = np.array([index[leaf] for leaf in leaf_order])
        leaf_count = np.zeros(len(node_ids))
        leaf_count[self._leaf_index] = 1
        for child, up in self._upward:
            leaf_count[up] += leaf_count[child]
        self._leaf_count = leaf_count

    @property
    def n_leaves(self):
        return len(self.leaf_order)

    def children(self, node):
        """Children of node in declaration order."""
        if node not in self._index:
            raise UnknownNodeError(f'unknown node {node!r}')
        return self._children[node]

    def post_order(self):
        """Node ids with every node after all of its descendants."""
        return [self.node_ids[i] for i in self._post_order]

    def leaf_count(self, node):
        """Number of leaves in the subtree rooted at node."""
        return int(self._leaf_count[self._index[node]])

    def to_text(self):
        """Serialise in the tree file format."""
        lines = []
        for node in self.node_ids:
            if self.parent[node] is None:
                lines.append(f'{node} {ROOT_MARKER} 0')
            else:
                lines.append(f'{node} {self.parent[node]} '
                             f'{self.edge_cost[node]!r}')
        return '\n'.join(lines) + '\n'

    def __eq__(self, other):
        if not isinstance(other, MetricTree):
            return NotImplemented
        return (self.node_ids == other.node_ids
                and dict(self.parent) == dict(other.parent)
                and dict(self.edge_cost) == dict(other.edge_cost)
                and self.leaf_order == other.leaf_order)

    def __hash__(self):
        return hash((self.node_ids, self.leaf_order))

    def __repr__(self):
        return (f'MetricTree(root={self.root!r}, nodes={len(self.node_ids)}, '
                f'leaves={self.n_leaves})')


def _depth_first(root, children):
    """Pre-order node list using an explicit stack."""
    order = []
    stack = [root]
    seen = set()
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        order.append(node)
        stack.extend(reversed(children[node]))
    return order


def _parse_cost(text):
    try:
        return float(text)
    except (TypeError, ValueError):
        return np.nan


def load_tree(text, allow_zero_cost=False):
    """Parse a tree file.

    Each line is ``child parent cost``; the root is written as
    ``root - 0``. ``#`` starts a comment. Leaves are ordered by first
    appearance.

    Arguments:
        text (str): content of the tree file
        allow_zero_cost (bool): accept zero cost edges

    Returns:
        MetricTree: validated tree
    """
    try:
        df = pd.read_csv(io.StringIO(text),
                         sep=r'\s+',
                         header=None,
                         names=['child', 'parent', 'cost'],
                         comment='#',
                         dtype=str,
                         keep_default_na=False,
                         na_filter=False)
    except pd.errors.EmptyDataError:
        raise TreeFormatError('tree file is empty')
    except pd.errors.ParserError as e:
        raise TreeFormatError(f'expected "child parent cost" lines: {e}')
    if len(df) == 0:
        raise TreeFormatError('tree file is empty')
    costs = df['cost'].map(_parse_cost)
    bad = df[(df['parent'] == '') | costs.isna()]
    if len(bad) > 0:
        raise TreeFormatError(f'malformed line for node '
                              f'{bad.iloc[0]["child"]!r}, expected '
                              '"child parent cost"')
    node_ids = df['child'].tolist()
    duplicated = df['child'][df['child'].duplicated()].tolist()
    if duplicated:
        raise DuplicateIdError(f'node {duplicated[0]!r} declared more '
                               'than once')
    parent = {child: (None if up == ROOT_MARKER else up)
              for child, up in zip(df['child'], df['parent'])}
    edge_cost = dict(zip(df['child'], costs))
    return MetricTree(node_ids, parent, edge_cost,
                      allow_zero_cost=allow_zero_cost)


def read_tree(path, allow_zero_cost=False):
    """Load a tree file from disk."""
    with open(path, 'r', encoding='utf-8') as f:
        return load_tree(f.read(), allow_zero_cost)


def write_tree(tree, path):
    """Write a tree in the tree file format."""
    with open(path, 'w', encoding='utf-8') as f:
        f.write(tree.to_text())


def _leaf_differences(tree, p, q, check_mass):
    p, q = check_pair(p, q, check_mass)
    if len(p) != tree.n_leaves:
        raise LengthMismatchError(f'tree has {tree.n_leaves} leaves, '
                                  f'distributions have {len(p)} bins')
    diff = np.zeros(len(tree.node_ids))
    diff[tree._leaf_index] = p - q
    return diff


def _flows(tree, p, q, check_mass=True):
    """Subtree flows indexed like tree.node_ids (post-order pass)."""
    flow = _leaf_differences(tree, p, q, check_mass)
    for child, up in tree._upward:
        flow[up] += flow[child]
    return flow


def subtree_flow(tree, p, q, check_mass=True):
    """Signed excess mass leaving every subtree.

    Arguments:
        tree (MetricTree): metric tree
        p (array_like): source distribution in leaf order
        q (array_like): target distribution in leaf order
        check_mass (bool): require equal unit mass

    Returns:
        dict: node id -> flow; the root flow is ~0
    """
    flow = _flows(tree, p, q, check_mass)
    return dict(zip(tree.node_ids, flow.tolist()))


def tree_emd(tree, p, q, rho=1, check_mass=True):
    """Relaxed hierarchical EMD.

    Arguments:
        tree (MetricTree): metric tree
        p (array_like): source distribution in leaf order
        q (array_like): target distribution in leaf order
        rho (float): relaxation exponent >= 1
        check_mass (bool): require equal unit mass

    Returns:
        float: distance
    """
    rho = check_rho(rho)
    flow = _flows(tree, p, q, check_mass)
    return float(np.sum(tree._cost * np.abs(flow) ** rho))


def tree_emd_grad(tree, p, q, rho=1, check_mass=True, l1_preserving=True):
    """Gradient of the hierarchical EMD with respect to p.

    ``grad_k = sum_i w_i * sum_{j in leaves(i)} (delta_jk - 1/N)``: the first
    part sums edge weights on the path from leaf k up to the root, the second
    is the same constant for every leaf and is dropped when
    ``l1_preserving`` is False.

    Arguments:
        tree (MetricTree): metric tree
        p (array_like): source distribution in leaf order
        q (array_like): target distribution in leaf order
        rho (float): relaxation exponent >= 1
        check_mass (bool): require equal unit mass
        l1_preserving (bool): project onto zero sum directions

    Returns:
        numpy.ndarray: gradient in leaf order, sums to zero when projected
    """
    rho = check_rho(rho)
    flow = _flows(tree, p, q, check_mass)
    weights = edge_weights(flow, tree._cost, rho)
    along_path = weights.copy()
    for child, up in reversed(tree._upward):
        along_path[child] += along_path[up]
    leaf_sums = along_path[tree._leaf_index]
    if not l1_preserving:
        return leaf_sums
    # mean over leaves == dot(w, leaf counts) / N, centred twice
    grad = leaf_sums - leaf_sums.mean()
    return grad - grad.mean()


def valid_roots(tree):
    """Nodes the tree can be re-rooted at without changing its leaves."""
    if len(tree.children(tree.root)) < 2:
        return [tree.root]
    return [node for node in tree.node_ids if tree._children[node]]


def reroot(tree, new_root):
    """Re-orient parent pointers toward another root.

    The undirected edges and their costs are kept. Re-rooting at a leaf, or
    away from a root with a single child, would change the set of leaves
    and is refused.

    Arguments:
        tree (MetricTree): metric tree
        new_root (str): id of the new root

    Returns:
        MetricTree: re-rooted tree with the same leaf order
    """
    if new_root not in tree._index:
        raise UnknownNodeError(f'unknown node {new_root!r}')
    if new_root == tree.root:
        return tree
    neighbours = {node: [] for node in tree.node_ids}
    for node in tree.node_ids:
        up = tree.parent[node]
        if up is not None:
            cost = tree.edge_cost[node]
            neighbours[node].append((up, cost))
            neighbours[up].append((node, cost))

    parent = {new_root: None}
    edge_cost = {}
    stack = [new_root]
    while stack:
        node = stack.pop()
        for other, cost in neighbours[node]:
            if other not in parent:
                parent[other] = node
                edge_cost[other] = cost
                stack.append(other)

    has_children = {up for up in parent.values() if up is not None}
    leaves = {node for node in tree.node_ids if node not in has_children}
    if leaves != set(tree.leaf_order):
        raise LeafRootChangeError(f're-rooting at {new_root!r} changes the '
                                  f'leaf set')
    return MetricTree(tree.node_ids, parent, edge_cost,
                      leaf_order=tree.leaf_order,
                      allow_zero_cost=tree.allow_zero_cost)


def leaf_incidence(tree):
    """Node x leaf matrix with 1 where the leaf lies below the node."""
    incidence = np.zeros((len(tree.node_ids), tree.n_leaves))
    incidence[tree._leaf_index, np.arange(tree.n_leaves)] = 1
    for child, up in tree._upward:
        incidence[up] += incidence[child]
    return incidence


def tree_to_cost_matrix(tree):
    """Leaf to leaf path costs.

    An edge lies on the path between leaves a and b when exactly one of
    them is below it, so ``M = d_a + d_b - 2 * shared(a, b)`` with ``d`` the
    cost from leaf to root.

    Arguments:
        tree (MetricTree): metric tree

    Returns:
        numpy.ndarray: symmetric N x N matrix with zero diagonal
    """
    incidence = leaf_incidence(tree)
    depth = tree._cost @ incidence
    shared = (incidence.T * tree._cost) @ incidence
    matrix = depth[:, None] + depth[None, :] - 2 * shared
    matrix = np.maximum((matrix + matrix.T) / 2, 0)
    np.fill_diagonal(matrix, 0)
    return matrix


def chain_to_tree(metric=None, n=None):
    """Embed a chain in a tree with zero cost links.

    Spine nodes ``s1..sN`` are joined by the chain costs and rooted at
    ``sN``; bin k is a leaf ``bk`` hanging off ``sk`` with cost 0. The
    spine edge above ``si`` then carries exactly the chain flow phi_i.

    Arguments:
        metric (array_like or None): consecutive costs
        n (int): number of bins (needed for unit costs)

    Returns:
        MetricTree: caterpillar tree with allow_zero_cost set
    """
    if metric is not None:
        n = len(metric) + 1
    costs = check_chain_metric(metric, n)
    node_ids, parent, edge_cost, leaves = [], {}, {}, []
    for k in range(1, n + 1):
        spine, leaf = f's{k}', f'b{k}'
        node_ids += [spine, leaf]
        parent[spine] = f's{k + 1}' if k < n else None
        if k < n:
            edge_cost[spine] = costs[k - 1]
        parent[leaf] = spine
        edge_cost[leaf] = 0.0
        leaves.append(leaf)
    return MetricTree(node_ids, parent, edge_cost, leaf_order=leaves,
                      allow_zero_cost=True)


def generate_random_tree(n_leaves, max_depth=8, cost_range=(1.0, 1.0),
                         seed=0, max_children=4):
    """Generate a random metric tree.

    Leaves are split recursively between 2..max_children children until a
    subtree holds a single leaf; nodes one level above max_depth take all
    their remaining leaves as direct children.

    Arguments:
        n_leaves (int): number of leaves (>= 2)
        max_depth (int): maximum depth of a leaf (>= 1)
        cost_range (tuple): (low, high) for uniform edge costs, low > 0
        seed (int): random seed
        max_children (int): maximum split width (>= 2)

    Returns:
        MetricTree: tree with leaves ordered by creation
    """
    low, high = cost_range
    if n_leaves < 2 or max_depth < 1 or max_children < 2 \
            or not 0 < low <= high:
        raise BadParamsError(
            f'invalid tree parameters: n_leaves={n_leaves}, '
            f'max_depth={max_depth}, cost_range={cost_range}, '
            f'max_children={max_children}')
    rng = make_rng(seed)
    node_ids, parent, edge_cost = ['n0'], {'n0': None}, {}
    counter = {'n': 1, 'leaf': 0}

    def add(prefix, up):
        node = f'{prefix}{counter[prefix]}'
        counter[prefix] += 1
        node_ids.append(node)
        parent[node] = up
        edge_cost[node] = float(low + (high - low) * rng.random())
        return node

    stack = [('n0', n_leaves, 0)]
    while stack:
        node, count, depth = stack.pop()
        if depth + 1 >= max_depth:
            parts = [1] * count
        else:
            width = int(rng.integers(2, min(max_children, count) + 1))
            cuts = np.sort(rng.choice(count - 1, width - 1, replace=False) + 1)
            parts = np.diff(np.concatenate([[0], cuts, [count]])).tolist()
        for part in parts:
            if part == 1:
                add('leaf', node)
            else:
                stack.append((add('n', node), part, depth + 1))
    return MetricTree(node_ids, parent, edge_cost)
