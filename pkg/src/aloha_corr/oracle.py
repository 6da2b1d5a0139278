"""Ground truth for the link moments.

``exact_stats`` enumerates every slot assignment and multiplies per-link
conditional success probabilities; it shares only the on/off success
probability with :mod:`aloha_corr.slotmodel`. ``mc_stats`` samples slots and
Gamma powers directly and is independent of both.

Random numbers come from numpy's ``Generator`` on ``Philox`` bit generators.
Frames are split into blocks of ``BLOCK_FRAMES``; block ``b`` draws from the
``b``-th child of ``SeedSequence(seed)``, so results do not depend on how the
blocks are scheduled. Gamma variates use ``Generator.standard_gamma``
(Marsaglia-Tsang squeeze/rejection for shape >= 1).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .deployment import Channel, Deployment, SlotConfig
from .nakagami import SuccessTable
from .slotmodel import ComplexityError, LinkStats, Model, canonical_links, classify_link_pair

ENUMERATION_BUDGET = 10 ** 7
BLOCK_FRAMES = 1 << 14


def assignment_moments(b, model: Model | str, links, table: SuccessTable):
    """Conditional success probabilities and joint successes for one slot assignment.

    Given the slots ``b`` the links are independent except that a receiver
    cannot decode two senders sharing a slot (impossible for ``theta >= 1``).
    """
    b = np.asarray(b)
    n = len(b)
    snd = np.array([a for a, _ in links])
    rcv = np.array([c for _, c in links])
    slot_masks = {}
    for s in set(b.tolist()):
        slot_masks[s] = int(sum(1 << nu for nu in range(n) if b[nu] == s))
    succ = np.array([table(i, j, slot_masks[b[i]]) for i, j in links])
    if Model(model) is Model.HD:
        succ = succ * (b[snd] != b[rcv])
    joint = np.outer(succ, succ)
    collide = (rcv[:, None] == rcv[None, :]) & (snd[:, None] != snd[None, :]) \
        & (b[snd][:, None] == b[snd][None, :])
    joint[collide] = 0.0
    np.fill_diagonal(joint, succ)
    return succ, joint


def exact_stats(model: Model | str, ch: Channel, dep: Deployment, slots: SlotConfig,
                budget: int = ENUMERATION_BUDGET) -> LinkStats:
    """Exact moments by enumerating all ``m**n`` slot assignments."""
    model = Model(model)
    n, m = ch.n, slots.m
    if m ** n > budget:
        raise ComplexityError(f"m**n = {m ** n} assignments exceed the budget of {budget}")
    table = SuccessTable(ch, dep, slots.theta, slots.noise)
    links = canonical_links(n)
    L = len(links)
    first = np.zeros(L)
    second = np.zeros((L, L))
    for b in itertools.product(range(m), repeat=n):
        succ, joint = assignment_moments(b, model, links, table)
        first += succ
        second += joint
    total = m ** n
    p = first / total
    cov = second / total - np.outer(p, p)
    return LinkStats(n, p, cov, model, links)


def sample_powers(rng: np.random.Generator, mu: np.ndarray, shapes, size: int) -> np.ndarray:
    """Received powers ``P[f, i, j] ~ Gamma(shape_i, scale 1 / (shape_i mu_ij))``; zero diagonal."""
    n = len(mu)
    sh = np.repeat(np.asarray(shapes, dtype=float)[:, None], n, axis=1)
    scale = 1.0 / (sh * np.where(np.isnan(mu), 1.0, mu))
    pw = rng.standard_gamma(sh, size=(size, n, n)) * scale
    pw[:, np.arange(n), np.arange(n)] = 0.0
    return pw


def sample_successes(rng: np.random.Generator, model: Model, ch: Channel, dep: Deployment,
                     slots: SlotConfig, size: int) -> np.ndarray:
    """Success indicators for ``size`` independent frames, shape ``(size, n, n)``."""
    n = ch.n
    s = rng.integers(slots.m, size=(size, n))
    pw = sample_powers(rng, ch.mu, dep.shapes, size)
    same = (s[:, :, None] == s[:, None, :]).astype(float)
    # interference at j for sender i: sum over nu != i, j of [S_nu == S_i] P[nu, j]
    interf = np.einsum("fvi,fvj->fij", same, pw) - pw
    ok = pw >= slots.theta * (slots.noise + interf)
    if Model(model) is Model.HD:
        ok &= same == 0
    ok[:, np.arange(n), np.arange(n)] = False
    return ok


def _blocks(frames: int, seed: int):
    nblocks = -(-frames // BLOCK_FRAMES)
    children = np.random.SeedSequence(seed).spawn(nblocks)
    for b, child in enumerate(children):
        size = min(BLOCK_FRAMES, frames - b * BLOCK_FRAMES)
        yield np.random.Generator(np.random.Philox(child)), size


@dataclass
class McReport:
    frames: int
    seed: int
    model: Model
    p_hat: np.ndarray
    cov_hat: np.ndarray
    se_p: np.ndarray
    se_cov: np.ndarray
    links: list

    @property
    def n(self) -> int:
        return int(round((1 + np.sqrt(1 + 4 * len(self.links))) / 2))


def mc_stats(model: Model | str, ch: Channel, dep: Deployment, slots: SlotConfig,
             frames: int, seed: int) -> McReport:
    """Monte Carlo estimates of the link moments with CLT standard errors."""
    if frames < 2:
        raise ValueError("need at least two frames")
    model = Model(model)
    links = canonical_links(ch.n)
    snd = np.array([a for a, _ in links])
    rcv = np.array([b for _, b in links])
    y = np.empty((frames, len(links)), dtype=np.uint8)
    pos = 0
    for rng, size in _blocks(frames, seed):
        ok = sample_successes(rng, model, ch, dep, slots, size)
        y[pos:pos + size] = ok[:, snd, rcv]
        pos += size
    p_hat = y.mean(axis=0, dtype=float)
    L = len(links)
    s1 = np.zeros((L, L))
    s2 = np.zeros((L, L))
    chunk = 8192
    for a in range(0, frames, chunk):
        yc = y[a:a + chunk] - p_hat
        z = yc[:, :, None] * yc[:, None, :]
        s1 += z.sum(axis=0)
        s2 += (z * z).sum(axis=0)
    mean_z = s1 / frames
    var_z = np.maximum(s2 / frames - mean_z ** 2, 0.0)
    cov_hat = s1 / (frames - 1)
    se_cov = np.sqrt(var_z / frames)
    se_p = np.sqrt(p_hat * (1 - p_hat) / frames)
    return McReport(frames, seed, model, p_hat, cov_hat, se_p, se_cov, links)


@dataclass
class Comparison:
    passed: bool
    kind: str              # "exact" or "mc"
    max_abs_dev: float
    max_z: float
    worst: tuple | None    # (link1, link2) of the largest deviation
    per_case: dict

    def as_dict(self) -> dict:
        out = {"verdict": "pass" if self.passed else "fail", "kind": self.kind,
               "per_case": self.per_case}
        if self.kind == "exact":
            out["max_abs_dev"] = self.max_abs_dev
        else:
            out["max_z"] = self.max_z
            out["max_abs_dev"] = self.max_abs_dev
        if self.worst is not None:
            out["worst"] = [f"{i + 1}->{j + 1}" for i, j in self.worst]
        return out


def _case_labels(links) -> np.ndarray:
    L = len(links)
    tags = np.empty((L, L), dtype=object)
    for a in range(L):
        tags[a, a] = "Variance"
        for b in range(a + 1, L):
            tags[a, b] = tags[b, a] = classify_link_pair(links[a], links[b]).tag.value
    return tags


def compare(a: LinkStats, b, tol: float = 1e-10, z: float = 4.0) -> Comparison:
    """Compare analytic stats with exact stats (``tol``) or a Monte Carlo report (``z``)."""
    if list(a.links) != list(b.links):
        raise ValueError("link enumerations differ")
    tags = _case_labels(a.links)
    per_case = {}
    if isinstance(b, McReport):
        dev = np.abs(a.cov - b.cov_hat)
        dev_p = np.abs(a.p - b.p_hat)
        with np.errstate(divide="ignore", invalid="ignore"):
            zc = np.where(b.se_cov > 0, dev / b.se_cov, np.where(dev > 1e-12, np.inf, 0.0))
            zp = np.where(b.se_p > 0, dev_p / b.se_p, np.where(dev_p > 1e-12, np.inf, 0.0))
        for tag in np.unique(tags):
            per_case[tag] = float(zc[tags == tag].max())
        per_case["Mean"] = float(zp.max())
        max_z = float(max(zc.max(), zp.max()))
        ia, ib = np.unravel_index(np.argmax(zc), zc.shape)
        return Comparison(max_z <= z, "mc", float(max(dev.max(), dev_p.max())), max_z,
                          (a.links[ia], a.links[ib]), per_case)
    dev = np.abs(a.cov - b.cov)
    dev_p = np.abs(a.p - b.p)
    for tag in np.unique(tags):
        per_case[tag] = float(dev[tags == tag].max())
    per_case["Mean"] = float(dev_p.max())
    worst = float(max(dev.max(), dev_p.max()))
    ia, ib = np.unravel_index(np.argmax(dev), dev.shape)
    return Comparison(worst <= tol, "exact", worst, float("nan"),
                      (a.links[ia], a.links[ib]), per_case)
