"""Moments of packet-success indicators under framed slotted ALOHA.

Every node picks one of ``m`` slots uniformly at random. ``X[i, j]`` is the
full-duplex success of link i -> j (the receiver's own slot is ignored) and
``Y[i, j]`` the half-duplex success, which additionally needs ``S_i != S_j``.

Mixed moments are macro-state sums. For a tagged link pair with senders
``i`` and ``k`` every other node is summarised by ``c`` in {0, 1} (not in /
in the common slot) when the senders share a slot, and by ``c`` in {0, 1, 2}
(other slot / slot of ``i`` / slot of ``k``) when they do not. A state weight
counts the slot assignments behind a macro state; a state coefficient is the
conditional success probability of one link, i.e. a success probability with
on/off interferers.

Two readings of the closed forms are available through ``variant``:
``"corrected"`` (default) agrees with exhaustive slot enumeration,
``"printed"`` keeps an earlier bookkeeping of the same sums. They differ in

* the same-slot normaliser of disjoint half-duplex pairs (an extra ``m - 1``),
* the half-duplex weight of the receiver of link 1 when idle
  (``m - 1`` printed, ``m - 2`` needed), the normaliser ``m**(n-3) (m-1)``
  paired with ``(m - 1) / m``, and the dropped interference of the second
  link's remote node in the three-node cases where one link's receiver
  transmits on the other link,
* the full-duplex normalisers ``m**(n-2)`` (same sender) and ``m**n``
  (same slot, different senders), both of which should be ``m**(n-1)``.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from .deployment import Channel, Deployment, SlotConfig
from .nakagami import SuccessTable

DEFAULT_MAX_NODES = 12


class ComplexityError(RuntimeError):
    """Refusal to run an exponential-cost computation above its budget."""


class Model(str, enum.Enum):
    HD = "HD"
    FD = "FD"
    UHBM = "UHBM"


class CaseTag(str, enum.Enum):
    SAME_SENDER = "SameSender"
    REVERSED = "Reversed"
    SENDER_IS_OTHERS_RECEIVER = "SenderIsOthersReceiver"
    RECEIVER_IS_OTHERS_SENDER = "ReceiverIsOthersSender"
    SHARED_RECEIVER = "SharedReceiver"
    DISJOINT = "Disjoint"


@dataclass(frozen=True)
class LinkPairCase:
    tag: CaseTag
    nodes: frozenset           # J'  = {i, j, k, l}
    pinned: frozenset          # J'' = {i, k} for four distinct nodes, else J'
    pinned_weight: frozenset   # J''' = {i, j, k} for four distinct nodes, else J'
    prefactor_exponent: int    # 2 - delta_kj delta_li

    def normalizer(self, n: int, m: int) -> int:
        if len(self.nodes) == 4:
            return m ** (n - 3) * (m - 1)
        return m ** (n - len(self.nodes))


def classify_link_pair(link1, link2) -> LinkPairCase:
    (i, j), (k, l) = link1, link2
    if i == j or k == l:
        raise ValueError("a link needs distinct endpoints")
    if (i, j) == (k, l):
        raise ValueError("links coincide")
    if i == k:
        tag = CaseTag.SAME_SENDER
    elif k == j and l == i:
        tag = CaseTag.REVERSED
    elif k == j:
        tag = CaseTag.SENDER_IS_OTHERS_RECEIVER
    elif l == i:
        tag = CaseTag.RECEIVER_IS_OTHERS_SENDER
    elif l == j:
        tag = CaseTag.SHARED_RECEIVER
    else:
        tag = CaseTag.DISJOINT
    nodes = frozenset((i, j, k, l))
    if len(nodes) == 4:
        pinned, pinned_weight = frozenset((i, k)), frozenset((i, j, k))
    else:
        pinned = pinned_weight = nodes
    return LinkPairCase(tag, nodes, pinned, pinned_weight,
                        2 - int(k == j and l == i))


@dataclass
class LinkStats:
    """Success probabilities and covariance over all ordered links.

    Links are enumerated lexicographically: ``(0, 1), (0, 2), ..., (n-1, n-2)``.
    """

    n: int
    p: np.ndarray
    cov: np.ndarray
    model: Model
    links: list = field(default=None)

    def __post_init__(self):
        if self.links is None:
            self.links = canonical_links(self.n)
        self.model = Model(self.model)

    @property
    def index(self) -> dict:
        return {lk: a for a, lk in enumerate(self.links)}

    def labels(self) -> list[str]:
        return [f"{i + 1}->{j + 1}" for i, j in self.links]


def canonical_links(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(n) if i != j]


# -- macro-state enumeration -------------------------------------------------

def _digits(count: int, base: int) -> np.ndarray:
    """All ``base**count`` macro states as a (states, count) digit array."""
    states = np.arange(base ** count)
    return (states[:, None] // base ** np.arange(count)) % base


def _masks(digits: np.ndarray, nodes, value: int) -> np.ndarray:
    bits = np.array([1 << nu for nu in nodes], dtype=np.int64)
    if len(bits) == 0:
        return np.zeros(len(digits), dtype=np.int64)
    return ((digits == value) * bits).sum(axis=1)


def _power(base: float, exponents: np.ndarray) -> np.ndarray:
    # 0**0 = 1, 0**1 = 0
    return np.where(exponents == 0, 1.0, float(base) ** exponents)


def _table(ch, dep, slots, table):
    if table is None:
        table = SuccessTable(ch, dep, slots.theta, slots.noise)
    return table


def phi_sum(link1, link2, ch: Channel, dep: Deployment, slots: SlotConfig,
            model: Model | str = Model.HD, table: SuccessTable | None = None) -> float:
    """Same-slot macro-state sum for senders ``i`` and ``k`` transmitting in one slot.

    Summation runs over c in {0,1} for the free nodes; a free node with c = 1
    shares the senders' slot and interferes. For different senders each one
    interferes at the other link's receiver.
    """
    (i, j), (k, l) = link1, link2
    model = Model(model)
    table = _table(ch, dep, slots, table)
    n, m = ch.n, slots.m
    if model is Model.HD:
        if i != k and (k == j or l == i):
            raise ValueError("half-duplex links sharing a node cannot use a common sender slot")
        free = [nu for nu in range(n) if nu not in (i, j, k, l)]
    else:
        free = [nu for nu in range(n) if nu not in (i, k)]
    digits = _digits(len(free), 2)
    mask = _masks(digits, free, 1)
    forced1 = 0 if i == k else 1 << k
    forced2 = 0 if i == k else 1 << i
    weights = _power(m - 1, (1 - digits).sum(axis=1))
    total = 0.0
    for w, mk in zip(weights, mask):
        if w == 0:
            continue
        total += w * table(i, j, int(mk) | forced1) * table(k, l, int(mk) | forced2)
    return float(total)


def psi_sum(link1, link2, ch: Channel, dep: Deployment, slots: SlotConfig,
            model: Model | str = Model.HD, table: SuccessTable | None = None,
            variant: str = "corrected") -> float:
    """Different-slot macro-state sum for senders ``i != k``.

    Free nodes take c = 1 (slot of ``i``), c = 2 (slot of ``k``) or c = 0 (any
    of the ``m - 2`` other slots). In the half-duplex model the receiver of
    each link must avoid its sender's slot.
    """
    (i, j), (k, l) = link1, link2
    if i == k:
        raise ValueError("different-slot sum needs distinct senders")
    model = Model(model)
    table = _table(ch, dep, slots, table)
    n, m = ch.n, slots.m
    if variant == "printed" and model is Model.HD:
        return _psi_printed_hd(link1, link2, n, m, table)
    free = [nu for nu in range(n) if nu not in (i, k)]
    digits = _digits(len(free), 3)
    weights = _power(m - 2, (digits == 0).sum(axis=1))
    if model is Model.HD:
        pos = {nu: a for a, nu in enumerate(free)}
        if j in pos:
            weights = weights * (digits[:, pos[j]] != 1)
        if l in pos:
            weights = weights * (digits[:, pos[l]] != 2)
    m1 = _masks(digits, free, 1)
    m2 = _masks(digits, free, 2)
    total = 0.0
    for w, a, b in zip(weights, m1, m2):
        if w == 0:
            continue
        total += w * table(i, j, int(a) & ~(1 << k)) * table(k, l, int(b) & ~(1 << i))
    return float(total)


def _psi_printed_hd(link1, link2, n, m, table) -> float:
    (i, j), (k, l) = link1, link2
    case = classify_link_pair(link1, link2)
    free = [nu for nu in range(n) if nu not in case.pinned]
    digits = _digits(len(free), 3)
    pos = {nu: a for a, nu in enumerate(free)}
    zeros = np.zeros(len(digits), dtype=int)
    for nu in free:
        if nu not in case.pinned_weight:
            zeros += digits[:, pos[nu]] == 0
    weights = _power(m - 2, zeros)
    if len(case.nodes) == 4:
        cj, cl = digits[:, pos[j]], digits[:, pos[l]]
        weights = weights * (cl != 2) * (cj != 1) * _power(m - 1, (cj == 0).astype(int))
    m1 = _masks(digits, free, 1)
    m2 = _masks(digits, free, 2)
    total = 0.0
    for w, a, b in zip(weights, m1, m2):
        if w:
            total += w * table(i, j, int(a) & ~(1 << k)) * table(k, l, int(b) & ~(1 << i))
    return float(total)


# -- first and second moments ------------------------------------------------

def expected_success(i: int, j: int, ch: Channel, dep: Deployment, slots: SlotConfig,
                     model: Model | str = Model.HD,
                     table: SuccessTable | None = None) -> float:
    """``E[Y_ij]`` (half duplex) or ``E[X_ij]`` (full duplex)."""
    if i == j:
        raise ValueError("transmitter and receiver coincide")
    table = _table(ch, dep, slots, table)
    m = slots.m
    xi = {nu: 1.0 / m for nu in range(ch.n) if nu not in (i, j)}
    p = table.mixed(i, j, xi)
    if Model(model) is Model.HD:
        p *= 1.0 - 1.0 / m
    return p


def _check(link1, link2, ch):
    if ch.n < 3:
        raise ValueError("need at least 3 nodes")
    for a, b in (link1, link2):
        if a == b or not (0 <= a < ch.n and 0 <= b < ch.n):
            raise ValueError(f"invalid link {(a, b)}")


def cov_hd(link1, link2, ch: Channel, dep: Deployment, slots: SlotConfig,
           table: SuccessTable | None = None, variant: str = "corrected") -> float:
    """``cov(Y_ij, Y_kl)`` in the half-duplex model."""
    _check(link1, link2, ch)
    table = _table(ch, dep, slots, table)
    (i, j), (k, l) = link1, link2
    p1 = expected_success(i, j, ch, dep, slots, Model.HD, table)
    if link1 == link2:
        return p1 * (1.0 - p1)
    p2 = expected_success(k, l, ch, dep, slots, Model.HD, table)
    n, m = ch.n, slots.m
    if m == 1:
        return 0.0
    case = classify_link_pair(link1, link2)
    q = 1.0 - 1.0 / m
    if i == k:
        joint = q ** 2 * phi_sum(link1, link2, ch, dep, slots, Model.HD, table) / m ** (n - 3)
        return joint - p1 * p2
    psi = psi_sum(link1, link2, ch, dep, slots, Model.HD, table, variant)
    four = len(case.nodes) == 4
    if variant == "printed":
        phi = phi_sum(link1, link2, ch, dep, slots, Model.HD, table) if four else 0.0
        bracket = ((m - 1) / m) * four + ((m - 2) / (m - 1)) * (l == j) \
            + float(l != j and not four)
        joint = q ** case.prefactor_exponent * (
            four * (m - 1) * phi / m ** (n - 3) + bracket * psi / case.normalizer(n, m))
        return joint - p1 * p2
    joint = (m - 1) * psi / m ** (n - 1)
    if case.tag is CaseTag.DISJOINT:
        joint += q ** 2 * phi_sum(link1, link2, ch, dep, slots, Model.HD, table) / m ** (n - 3)
    return joint - p1 * p2


def cov_fd(link1, link2, ch: Channel, dep: Deployment, slots: SlotConfig,
           table: SuccessTable | None = None, variant: str = "corrected") -> float:
    """``cov(X_ij, X_kl)`` in the full-duplex model."""
    _check(link1, link2, ch)
    table = _table(ch, dep, slots, table)
    (i, j), (k, l) = link1, link2
    p1 = expected_success(i, j, ch, dep, slots, Model.FD, table)
    if link1 == link2:
        return p1 * (1.0 - p1)
    p2 = expected_success(k, l, ch, dep, slots, Model.FD, table)
    n, m = ch.n, slots.m
    printed = variant == "printed"
    if i == k:
        phi = phi_sum(link1, link2, ch, dep, slots, Model.FD, table)
        return phi / m ** (n - 2 if printed else n - 1) - p1 * p2
    joint = 0.0
    if l != j:
        phi = phi_sum(link1, link2, ch, dep, slots, Model.FD, table)
        joint += phi / m ** (n if printed else n - 1)
    if m > 1:
        joint += (m - 1) * psi_sum(link1, link2, ch, dep, slots, Model.FD, table) / m ** (n - 1)
    return joint - p1 * p2


def link_stats(model: Model | str, ch: Channel, dep: Deployment, slots: SlotConfig,
               max_nodes: int = DEFAULT_MAX_NODES, variant: str = "corrected") -> LinkStats:
    """Success probabilities and full covariance matrix over all links."""
    model = Model(model)
    if model is Model.UHBM:
        return uhbm_from(link_stats(Model.HD, ch, dep, slots, max_nodes, variant))
    n = ch.n
    if n > max_nodes:
        raise ComplexityError(
            f"analytic covariances for n = {n} exceed the cap of {max_nodes} nodes "
            f"(about 3**{n - 2} terms per link pair); raise max_nodes to force")
    table = SuccessTable(ch, dep, slots.theta, slots.noise)
    links = canonical_links(n)
    p = np.array([expected_success(i, j, ch, dep, slots, model, table) for i, j in links])
    cov_fn = cov_hd if model is Model.HD else cov_fd
    L = len(links)
    cov = np.zeros((L, L))
    for a in range(L):
        cov[a, a] = p[a] * (1.0 - p[a])
    for a, b in itertools.combinations(range(L), 2):
        cov[a, b] = cov[b, a] = cov_fn(links[a], links[b], ch, dep, slots, table, variant)
    return LinkStats(n, p, cov, model, links)


def correlation_matrix(stats: LinkStats, tol: float = 0.0):
    """Correlation matrix and a mask of links with non-zero variance.

    Rows and columns of masked-out links are zero except for a unit diagonal.
    """
    var = np.diag(stats.cov).copy()
    valid = var > tol
    sd = np.sqrt(np.where(valid, var, 1.0))
    corr = stats.cov / np.outer(sd, sd)
    corr[~valid, :] = 0.0
    corr[:, ~valid] = 0.0
    np.fill_diagonal(corr, 1.0)
    return corr, valid


def uhbm_from(stats: LinkStats) -> LinkStats:
    """Uncorrelated Bernoulli links with the same success probabilities."""
    p = stats.p.copy()
    return LinkStats(stats.n, p, np.diag(p * (1.0 - p)), Model.UHBM, list(stats.links))
