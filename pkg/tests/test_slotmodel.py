import itertools

import numpy as np
import pytest

from aloha_corr import (CaseTag, ComplexityError, Deployment, LinkStats, Model, classify_link_pair,
                        correlation_matrix, cov_fd, cov_hd, exact_stats, expected_success,
                        link_stats, mean_power_matrix, phi_sum, psi_sum, rayleigh_success_closed_form, uhbm_from)
from aloha_corr.deployment import SlotConfig
from aloha_corr.nakagami import SuccessTable
from aloha_corr.oracle import assignment_moments
from aloha_corr.slotmodel import canonical_links

from conftest import random_setup


class Unit:
    """Success table stub: every link always succeeds."""

    def __call__(self, x, y, mask):
        return 1.0

    def mixed(self, x, y, xi):
        return 1.0


def pinned_sum(link1, link2, model, ch, dep, slots, bi, bk):
    """Sum of joint successes over assignments with ``b_i = bi`` and ``b_k = bk``."""
    (i, j), (k, l) = link1, link2
    table = SuccessTable(ch, dep, slots.theta, slots.noise)
    links = [link1, link2]
    total = 0.0
    for b in itertools.product(range(slots.m), repeat=ch.n):
        if b[i] == bi and b[k] == bk:
            total += assignment_moments(b, model, links, table)[1][0, 1]
    return total


def test_classify():
    c = classify_link_pair((0, 1), (0, 2))
    assert c.tag is CaseTag.SAME_SENDER and len(c.nodes) == 3
    c = classify_link_pair((0, 1), (1, 0))
    assert c.tag is CaseTag.REVERSED and len(c.nodes) == 2 and c.prefactor_exponent == 1
    c = classify_link_pair((0, 1), (2, 3))
    assert c.tag is CaseTag.DISJOINT and c.pinned == {0, 2}
    assert c.normalizer(6, 3) == 3 ** 3 * 2
    assert classify_link_pair((0, 1), (1, 2)).tag is CaseTag.SENDER_IS_OTHERS_RECEIVER
    assert classify_link_pair((0, 1), (2, 0)).tag is CaseTag.RECEIVER_IS_OTHERS_SENDER
    assert classify_link_pair((0, 1), (2, 1)).tag is CaseTag.SHARED_RECEIVER
    with pytest.raises(ValueError):
        classify_link_pair((0, 1), (0, 1))
    with pytest.raises(ValueError):
        classify_link_pair((0, 0), (1, 2))


def test_phi_empty_product(square4):
    dep, ch, slots = square4
    table = SuccessTable(ch, dep, slots.theta, slots.noise)
    # n = 4, disjoint HD links: no free node, one term
    want = table(0, 1, 1 << 2) * table(2, 3, 1 << 0)
    assert phi_sum((0, 1), (2, 3), ch, dep, slots, Model.HD, table) == pytest.approx(want, rel=1e-15)


def test_phi_with_one_slot_keeps_only_full_collision(rng):
    dep, ch, slots = random_setup(rng, 5, 1)
    table = SuccessTable(ch, dep, slots.theta, slots.noise)
    got = phi_sum((0, 1), (0, 2), ch, dep, slots, Model.FD, table)
    assert got == pytest.approx(table(0, 1, 0b11110) * table(0, 2, 0b11110), rel=1e-15)


@pytest.mark.parametrize("model", ["HD", "FD"])
@pytest.mark.parametrize("m", [2, 3])
def test_phi_psi_match_pinned_enumeration(rng, model, m):
    dep, ch, slots = random_setup(rng, 5, m)
    q = (m - 1) ** 2 if model == "HD" else 1
    # shared receivers never enter through the same-slot sum (mutual exclusion)
    for link1, link2 in [((0, 1), (0, 2)), ((0, 1), (2, 3))]:
        want = pinned_sum(link1, link2, model, ch, dep, slots, 0, 0)
        assert phi_sum(link1, link2, ch, dep, slots, model) * q == pytest.approx(want, abs=1e-12)
    for link1, link2 in [((0, 1), (2, 3)), ((0, 1), (1, 0)), ((0, 1), (1, 2)),
                         ((0, 1), (2, 0)), ((0, 1), (2, 1))]:
        want = pinned_sum(link1, link2, model, ch, dep, slots, 0, 1)
        assert psi_sum(link1, link2, ch, dep, slots, model) == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("model", ["HD", "FD"])
@pytest.mark.parametrize("m", [2, 3, 4])
def test_psi_counts_micro_states(model, m):
    n = 5
    dep, ch, _ = random_setup(np.random.default_rng(0), n, m)
    slots = SlotConfig(m, 1.5, 1e-3)
    for link1, link2 in [((0, 1), (2, 3)), ((0, 1), (1, 0)), ((0, 1), (1, 2)),
                         ((0, 1), (2, 0)), ((0, 1), (2, 1))]:
        (i, j), (k, l) = link1, link2
        count = 0
        for b in itertools.product(range(m), repeat=n):
            if b[i] != 0 or b[k] != 1:
                continue
            if model == "HD" and (b[j] == 0 or b[l] == 1):
                continue
            count += 1
        assert psi_sum(link1, link2, ch, dep, slots, model, Unit()) == count


def test_psi_two_slots_has_no_idle_states():
    dep, ch, _ = random_setup(np.random.default_rng(1), 5, 2)
    slots = SlotConfig(2, 1.5, 1e-3)
    assert psi_sum((0, 1), (2, 3), ch, dep, slots, "FD", Unit()) == 2 ** 3


def test_expected_success(square4, rng):
    dep, ch, slots = square4
    assert expected_success(0, 1, ch, dep, SlotConfig(1, 1.5, 1e-3), "HD") == 0.0
    ex = exact_stats("HD", ch, dep, slots)
    idx = ex.index
    for i, j in canonical_links(4):
        assert expected_success(i, j, ch, dep, slots, "HD") == pytest.approx(ex.p[idx[(i, j)]], abs=1e-12)
    dep1, ch1, slots1 = random_setup(rng, 5, 3, shapes=(1,))
    for i, j in canonical_links(5):
        assert expected_success(i, j, ch1, dep1, slots1, "HD") == pytest.approx(
            rayleigh_success_closed_form(i, j, ch1, dep1, 3, slots1.theta, slots1.noise), abs=1e-12)


def test_variance_and_one_slot(rng):
    dep, ch, slots = random_setup(rng, 4, 3)
    p = expected_success(0, 1, ch, dep, slots, "HD")
    assert cov_hd((0, 1), (0, 1), ch, dep, slots) == pytest.approx(p * (1 - p))
    p = expected_success(0, 1, ch, dep, slots, "FD")
    assert cov_fd((0, 1), (0, 1), ch, dep, slots) == pytest.approx(p * (1 - p))
    one = SlotConfig(1, slots.theta, slots.noise)
    assert np.all(link_stats("HD", ch, dep, one).cov == 0.0)


def test_full_duplex_one_slot_only_shared_receivers_correlate(rng):
    """With one slot all senders are active: only links into a common receiver
    interact, and for theta >= 1 they can never succeed together."""
    dep, ch, slots = random_setup(rng, 5, 1)
    fd = link_stats("FD", ch, dep, slots)
    np.testing.assert_allclose(fd.cov, exact_stats("FD", ch, dep, slots).cov, atol=1e-12)
    for a, b in itertools.combinations(range(len(fd.links)), 2):
        tag = classify_link_pair(fd.links[a], fd.links[b]).tag
        want = -fd.p[a] * fd.p[b] if tag is CaseTag.SHARED_RECEIVER else 0.0
        assert fd.cov[a, b] == pytest.approx(want, abs=1e-12)


ORACLE_CASES = [(n, m, seed) for n in (3, 4, 5) for m in (1, 2, 3) for seed in (0, 1)]


@pytest.mark.parametrize("n,m,seed", ORACLE_CASES)
@pytest.mark.parametrize("model", ["HD", "FD"])
def test_oracle_equivalence(n, m, seed, model):
    dep, ch, slots = random_setup(np.random.default_rng(1000 * n + 10 * m + seed), n, m)
    an = link_stats(model, ch, dep, slots)
    ex = exact_stats(model, ch, dep, slots)
    np.testing.assert_allclose(an.p, ex.p, atol=1e-10, rtol=0)
    np.testing.assert_allclose(an.cov, ex.cov, atol=1e-10, rtol=0)


def test_all_case_tags_at_five_nodes():
    pos = np.random.default_rng(55).uniform(0, 3, size=(5, 2))
    dep = Deployment(pos, np.ones(5), np.array([1, 2, 1, 2, 1]), 1.0)
    ch, slots = mean_power_matrix(dep), SlotConfig(3, 1.5, 1e-3)
    seen = set()
    for model in ("HD", "FD"):
        an = link_stats(model, ch, dep, slots)
        ex = exact_stats(model, ch, dep, slots)
        for a, b in itertools.combinations(range(len(an.links)), 2):
            seen.add(classify_link_pair(an.links[a], an.links[b]).tag)
            assert abs(an.cov[a, b] - ex.cov[a, b]) <= 1e-10
    assert seen == set(CaseTag)


def test_prefactor_identity(rng):
    """E[Y Y'] is (1 - 1/m)**(2 - [reversed]) times E[X X' | receivers avoid their senders' slots]."""
    dep, ch, slots = random_setup(rng, 4, 3)
    m = slots.m
    hd = link_stats("HD", ch, dep, slots)
    table = SuccessTable(ch, dep, slots.theta, slots.noise)
    links = hd.links
    num = np.zeros((len(links), len(links)))
    den = np.zeros((len(links), len(links)))
    snd = np.array([a for a, _ in links])
    rcv = np.array([b for _, b in links])
    for b in itertools.product(range(m), repeat=4):
        b_arr = np.array(b)
        ok = b_arr[snd] != b_arr[rcv]
        cond = np.outer(ok, ok)
        _, joint = assignment_moments(b, "FD", links, table)
        num += cond * joint
        den += cond
    second = hd.cov + np.outer(hd.p, hd.p)
    for a, b in itertools.combinations(range(len(links)), 2):
        case = classify_link_pair(links[a], links[b])
        want = (1 - 1 / m) ** case.prefactor_exponent * num[a, b] / den[a, b]
        assert second[a, b] == pytest.approx(want, abs=1e-12)


def test_printed_bookkeeping_differs_from_enumeration(rng):
    dep, ch, slots = random_setup(rng, 5, 3)
    ex = exact_stats("HD", ch, dep, slots)
    printed = link_stats("HD", ch, dep, slots, variant="printed")
    assert np.max(np.abs(printed.cov - ex.cov)) > 1e-3
    printed_fd = link_stats("FD", ch, dep, slots, variant="printed")
    assert np.max(np.abs(printed_fd.cov - exact_stats("FD", ch, dep, slots).cov)) > 1e-3


@pytest.mark.parametrize("model", ["HD", "FD"])
def test_psd_and_correlation_bounds(rng, model):
    dep, ch, slots = random_setup(rng, 5, 3)
    st = link_stats(model, ch, dep, slots)
    assert np.linalg.eigvalsh(st.cov).min() >= -1e-9 * np.trace(st.cov)
    corr, valid = correlation_matrix(st)
    assert valid.all()
    np.testing.assert_allclose(np.diag(corr), 1.0)
    np.testing.assert_allclose(corr, corr.T, atol=1e-15)
    assert np.abs(corr).max() <= 1 + 1e-12


def test_correlation_masks_dead_links(rng):
    dep, ch, slots = random_setup(rng, 4, 2)
    st = link_stats("HD", ch, dep, SlotConfig(1, slots.theta, slots.noise))
    corr, valid = correlation_matrix(st)
    assert not valid.any()
    np.testing.assert_array_equal(corr, np.eye(len(st.links)))
    assert np.all(np.isfinite(corr))


def test_uhbm(rng):
    dep, ch, slots = random_setup(rng, 4, 3)
    hd = link_stats("HD", ch, dep, slots)
    u = uhbm_from(hd)
    np.testing.assert_array_equal(u.p, hd.p)
    np.testing.assert_array_equal(u.cov, np.diag(np.diag(hd.cov)))
    u2 = uhbm_from(u)
    np.testing.assert_array_equal(u2.cov, u.cov)
    assert u.model is Model.UHBM
    np.testing.assert_array_equal(link_stats("UHBM", ch, dep, slots).cov, u.cov)


def test_labels_and_index():
    st = LinkStats(3, np.zeros(6), np.zeros((6, 6)), "HD")
    assert st.labels() == ["1->2", "1->3", "2->1", "2->3", "3->1", "3->2"]
    assert st.index[(2, 1)] == 5


def test_complexity_cap(rng):
    dep, ch, slots = random_setup(rng, 5, 2)
    with pytest.raises(ComplexityError, match="cap"):
        link_stats("HD", ch, dep, slots, max_nodes=4)
