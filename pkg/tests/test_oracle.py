import itertools

import numpy as np
import pytest

from aloha_corr import (ComplexityError, compare, exact_stats, link_stats, mc_stats,
                        rayleigh_success_closed_form)
from aloha_corr.deployment import SlotConfig
from aloha_corr.nakagami import SuccessTable
from aloha_corr.oracle import assignment_moments, sample_powers, sample_successes
from aloha_corr.slotmodel import canonical_links

from conftest import random_setup


def test_one_slot_half_duplex_is_silent(rng):
    dep, ch, slots = random_setup(rng, 4, 1)
    ex = exact_stats("HD", ch, dep, slots)
    assert np.all(ex.p == 0) and np.all(ex.cov == 0)


@pytest.mark.parametrize("n,m", [(3, 2), (4, 2), (4, 3)])
def test_rayleigh_means(rng, n, m):
    dep, ch, slots = random_setup(rng, n, m, shapes=(1,))
    ex = exact_stats("HD", ch, dep, slots)
    want = [rayleigh_success_closed_form(i, j, ch, dep, m, slots.theta, slots.noise)
            for i, j in ex.links]
    np.testing.assert_allclose(ex.p, want, atol=1e-12, rtol=0)


def test_shared_receiver_collisions_never_both_succeed(rng):
    dep, ch, slots = random_setup(rng, 5, 3)
    table = SuccessTable(ch, dep, slots.theta, slots.noise)
    links = canonical_links(5)
    for b in itertools.product(range(3), repeat=5):
        for model in ("HD", "FD"):
            _, joint = assignment_moments(b, model, links, table)
            for a, c in itertools.combinations(range(len(links)), 2):
                (i, j), (k, l) = links[a], links[c]
                if j == l and b[i] == b[k]:
                    assert joint[a, c] == 0.0
    # the same holds for sampled powers, which never pass through the success table
    ok = sample_successes(np.random.default_rng(0), "FD", ch, dep, SlotConfig(1, 1.0, 1e-3), 20000)
    for j in range(5):
        assert ok[:, :, j].sum(axis=1).max() <= 1


def test_assignment_moments_invariant_under_slot_relabeling(rng):
    dep, ch, slots = random_setup(rng, 4, 3)
    table = SuccessTable(ch, dep, slots.theta, slots.noise)
    links = canonical_links(4)
    for perm in itertools.permutations(range(3)):
        for b in itertools.product(range(3), repeat=4):
            s1, j1 = assignment_moments(b, "HD", links, table)
            s2, j2 = assignment_moments([perm[x] for x in b], "HD", links, table)
            np.testing.assert_array_equal(s1, s2)
            np.testing.assert_array_equal(j1, j2)


def test_budget(rng):
    dep, ch, slots = random_setup(rng, 5, 3)
    with pytest.raises(ComplexityError):
        exact_stats("HD", ch, dep, slots, budget=100)


def test_gamma_sampler_mean():
    mu = np.array([[np.nan, 2.0, 5.0], [1.0, np.nan, 4.0], [3.0, 0.5, np.nan]])
    pw = sample_powers(np.random.default_rng(1), mu, [1, 2, 3], 200000)
    mean = pw.mean(axis=0)
    se = pw.std(axis=0) / np.sqrt(len(pw))
    off = ~np.eye(3, dtype=bool)
    assert np.all(np.abs(mean[off] - 1 / mu[off]) <= 4 * se[off])
    assert np.all(pw[:, np.arange(3), np.arange(3)] == 0)
    # Gamma(m, 1/(m mu)) has variance 1/(m mu**2)
    shapes = np.array([1, 2, 3])[:, None]
    var_want = 1 / (shapes * mu ** 2)
    np.testing.assert_allclose(pw.var(axis=0)[off], var_want[off], rtol=0.05)


def test_mc_determinism_and_seed_sensitivity(square4):
    dep, ch, slots = square4
    a = mc_stats("HD", ch, dep, slots, 5000, seed=3)
    b = mc_stats("HD", ch, dep, slots, 5000, seed=3)
    c = mc_stats("HD", ch, dep, slots, 5000, seed=4)
    np.testing.assert_array_equal(a.cov_hat, b.cov_hat)
    np.testing.assert_array_equal(a.p_hat, b.p_hat)
    assert not np.array_equal(a.p_hat, c.p_hat)


def test_mc_agrees_with_analytic(square4):
    dep, ch, slots = square4
    for model in ("HD", "FD"):
        rep = mc_stats(model, ch, dep, slots, 10 ** 5, seed=9)
        cmp = compare(link_stats(model, ch, dep, slots), rep)
        assert cmp.passed, cmp.as_dict()


def test_standard_errors_shrink(square4):
    dep, ch, slots = square4
    small = mc_stats("HD", ch, dep, slots, 4000, seed=1)
    big = mc_stats("HD", ch, dep, slots, 64000, seed=1)
    ratio = np.median(small.se_cov / big.se_cov)
    assert ratio == pytest.approx(4.0, rel=0.15)
    ratio_p = np.median(small.se_p / big.se_p)
    assert ratio_p == pytest.approx(4.0, rel=0.15)


def test_compare_identical_and_mismatched(square4, rng):
    dep, ch, slots = square4
    ex = exact_stats("FD", ch, dep, slots)
    cmp = compare(ex, ex)
    assert cmp.passed and cmp.max_abs_dev == 0.0
    assert cmp.as_dict()["verdict"] == "pass"
    dep3, ch3, slots3 = random_setup(rng, 3, 2)
    with pytest.raises(ValueError):
        compare(ex, exact_stats("FD", ch3, dep3, slots3))


def test_compare_localizes_a_perturbation(square4):
    dep, ch, slots = square4
    ex = exact_stats("HD", ch, dep, slots)
    an = link_stats("HD", ch, dep, slots)
    an.cov[2, 7] += 1e-6
    an.cov[7, 2] += 1e-6
    cmp = compare(an, ex)
    assert not cmp.passed
    assert cmp.max_abs_dev == pytest.approx(1e-6, rel=1e-6)
    assert set(cmp.worst) == {an.links[2], an.links[7]}
