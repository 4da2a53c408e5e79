import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ..analysis import projected_direction, projected_finite_difference
from ..chain_emd import *
from ..distributions import RandomInstanceSpec, generate_pair, make_rng
from ..exact_oracle import exact_emd
from ..exceptions import *

test_data = os.path.join(os.path.dirname(__file__), 'test_data')

P = np.array([0.2, 0.4, 0.2, 0.2])
Q = np.array([0, 0.5, 0.5, 0])


def random_instance(rng, n):
    p = rng.random(n)
    q = rng.random(n)
    costs = rng.uniform(0.5, 2.0, n - 1)
    return p / p.sum(), q / q.sum(), costs


def test_cumulative_flow():
    np.testing.assert_allclose(cumulative_flow(P, Q), [0.2, 0.1, -0.2],
                               atol=1e-15)
    np.testing.assert_array_equal(cumulative_flow([1, 0], [0, 1]), [1])
    np.testing.assert_array_equal(cumulative_flow(P, P), [0, 0, 0])
    with pytest.raises(LengthMismatchError):
        cumulative_flow(P, [0.5, 0.5])
    with pytest.raises(MassMismatchError):
        cumulative_flow(P, [0.5, 0.5, 0.5, 0.5])


def test_chain_emd():
    assert chain_emd(P, Q) == pytest.approx(0.5, abs=1e-12)
    assert chain_emd(P, Q, rho=2) == pytest.approx(0.09, abs=1e-12)
    assert chain_emd(P, P, [1, 2, 3], rho=2) == 0
    assert chain_emd(P, Q, [2, 1, 1]) == pytest.approx(0.7, abs=1e-12)
    with pytest.raises(BadRhoError):
        chain_emd(P, Q, rho=0.5)
    with pytest.raises(BadSizeError):
        chain_emd(P, Q, [1, 1])
    with pytest.raises(NonPositiveCostError):
        chain_emd(P, Q, [1, 0, 1])


def test_chain_emd_symmetric():
    rng = make_rng(5)
    for _ in range(50):
        p, q, costs = random_instance(rng, 9)
        for rho in (1, 2, 1.5):
            assert chain_emd(p, q, costs, rho) == chain_emd(q, p, costs, rho)


def test_chain_emd_grad():
    np.testing.assert_allclose(chain_emd_grad(P, Q), [1, 0, -1, 0],
                               atol=1e-12)
    np.testing.assert_allclose(chain_emd_grad(P, Q, rho=2),
                               [0.3, -0.1, -0.3, 0.1], atol=1e-12)
    np.testing.assert_array_equal(chain_emd_grad(P, P, rho=2), np.zeros(4))
    np.testing.assert_array_equal(chain_emd_grad(P, P, rho=1), np.zeros(4))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(2, 40), st.sampled_from([1, 2]))
def test_chain_emd_grad_sums_to_zero(seed, n, rho):
    p, q, costs = random_instance(make_rng(seed), n)
    assert abs(chain_emd_grad(p, q, costs, rho).sum()) <= 1e-12


def test_chain_emd_grad_finite_differences():
    rng = make_rng(17)
    for _ in range(100):
        n = int(rng.integers(2, 12))
        p, q, costs = random_instance(rng, n)
        numeric = projected_finite_difference(
            lambda x: chain_emd(x, q, costs, 2, check_mass=False), p)
        closed = chain_emd_grad(p, q, costs, 2)
        scale = max(1.0, np.abs(closed).max())
        assert np.abs(numeric - closed).max() <= 1e-5 * scale


def test_chain_emd_grad_rho1_finite_differences_away_from_kinks():
    rng = make_rng(23)
    checked = 0
    while checked < 50:
        p, q, costs = random_instance(rng, 6)
        if np.abs(cumulative_flow(p, q)).min() <= 1e-3:
            continue
        numeric = projected_finite_difference(
            lambda x: chain_emd(x, q, costs, 1, check_mass=False), p)
        np.testing.assert_allclose(numeric, chain_emd_grad(p, q, costs, 1),
                                   rtol=1e-5, atol=1e-7)
        checked += 1


def test_chain_emd2_hessian():
    np.testing.assert_array_equal(chain_emd2_hessian(None, 2),
                                  [[2, -2], [-2, 2]])
    for n in range(2, 9):
        costs = make_rng(n).uniform(0.5, 2.0, n - 1)
        hessian = chain_emd2_hessian(costs, n)
        np.testing.assert_array_equal(hessian, hessian.T)
        np.testing.assert_allclose(hessian @ np.ones(n), 0, atol=1e-9)
    with pytest.raises(BadSizeError):
        chain_emd2_hessian(None, 1)
    with pytest.raises(BadSizeError):
        chain_emd2_hessian([1, 1], 4)


def test_chain_emd2_hessian_finite_differences():
    # second differences along projected directions give H / N**2
    rng = make_rng(3)
    h = 1e-6
    for n in range(2, 9):
        p, q, costs = random_instance(rng, n)
        expected = chain_emd2_hessian(costs, n) / n ** 2
        numeric = np.empty((n, n))
        for k in range(n):
            step = h * projected_direction(n, k)
            numeric[:, k] = (chain_emd_grad(p + step, q, costs, 2, False)
                             - chain_emd_grad(p - step, q, costs, 2, False)) \
                / (2 * h)
        scale = max(1.0, np.abs(expected).max())
        assert np.abs(numeric - expected).max() <= 1e-5 * scale


def test_to_cost_matrix():
    np.testing.assert_array_equal(to_cost_matrix([1, 1]),
                                  [[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    np.testing.assert_array_equal(to_cost_matrix([2, 3]),
                                  [[0, 2, 5], [2, 0, 3], [5, 3, 0]])
    m = to_cost_matrix([0.5, 1.5, 2.0, 1.0])
    for i in range(5):
        for j in range(i + 1, 5):
            for k in range(j + 1, 5):
                assert m[i, k] == pytest.approx(m[i, j] + m[j, k])


def test_read_chain_metric():
    np.testing.assert_array_equal(
        read_chain_metric(os.path.join(test_data, 'chain_costs.txt')), [2, 3])


def test_chain_emd_matches_oracle():
    rng = make_rng(1)
    for _ in range(200):
        n = int(rng.integers(2, 17))
        p, q, costs = random_instance(rng, n)
        value, _ = exact_emd(p, q, to_cost_matrix(costs))
        assert chain_emd(p, q, costs) == pytest.approx(value, abs=1e-9)


@pytest.mark.slow
def test_chain_emd_matches_oracle_many():
    rng = make_rng(1000)
    for _ in range(1000):
        n = int(rng.integers(2, 17))
        p, q, costs = random_instance(rng, n)
        value, _ = exact_emd(p, q, to_cost_matrix(costs))
        assert abs(chain_emd(p, q, costs) - value) <= 1e-9


@pytest.mark.slow
def test_chain_gradients_sum_to_zero_many():
    for seed in range(10_000):
        p, q = generate_pair(RandomInstanceSpec(16, 'easy', seed))
        for rho in (1, 2):
            assert abs(chain_emd_grad(p, q, rho=rho).sum()) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32), st.sampled_from(['easy', 'hard']),
       st.sampled_from([1, 2]))
def test_chain_emd_grad_sums_to_zero_on_64_bins(seed, setting, rho):
    p, q = generate_pair(RandomInstanceSpec(64, setting, seed))
    costs = make_rng(seed).uniform(0.5, 2.0, 63)
    assert abs(chain_emd_grad(p, q, costs, rho).sum()) <= 1e-12
    assert abs(chain_emd_grad(p, q, rho=rho).sum()) <= 1e-12


def test_chain_emd_grad_plain_partials():
    np.testing.assert_allclose(chain_emd_grad(P, Q, rho=2,
                                              l1_preserving=False),
                               [0.2, -0.2, -0.4, 0], atol=1e-12)
    rng = make_rng(11)
    for _ in range(20):
        p, q, costs = random_instance(rng, 7)
        plain = chain_emd_grad(p, q, costs, 2, l1_preserving=False)
        np.testing.assert_allclose(chain_emd_grad(p, q, costs, 2),
                                   plain - plain.mean(), atol=1e-15)
        numeric = np.array([
            (chain_emd(p + h, q, costs, 2, check_mass=False)
             - chain_emd(p - h, q, costs, 2, check_mass=False)) / 2e-6
            for h in 1e-6 * np.eye(7)])
        np.testing.assert_allclose(numeric, plain, rtol=1e-5, atol=1e-8)


def test_read_chain_metric_exact(tmp_path):
    costs = make_rng(4).uniform(0.5, 2.0, 9)
    path = tmp_path / 'costs.txt'
    np.savetxt(path, costs, fmt='%.17g')
    np.testing.assert_array_equal(read_chain_metric(path), costs)


@pytest.mark.slow
def test_chain_emd_grad_finite_differences_many():
    rng = make_rng(170)
    for _ in range(500):
        n = int(rng.integers(2, 33))
        p, q, costs = random_instance(rng, n)
        numeric = projected_finite_difference(
            lambda x: chain_emd(x, q, costs, 2, check_mass=False), p)
        closed = chain_emd_grad(p, q, costs, 2)
        scale = max(1.0, np.abs(closed).max())
        assert np.abs(numeric - closed).max() <= 1e-5 * scale
