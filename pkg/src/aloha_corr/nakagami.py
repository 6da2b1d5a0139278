"""Success probability of a link under Nakagami-m fading and random interferers.

For a link x -> y the interferers nu are switched on independently with
probability ``xi[nu]``. With integer shapes the Gamma tail of the signal power
is a finite exponential sum, which turns the probability into the finite
composition sum evaluated by :func:`gamma_success`.
"""
from __future__ import annotations

import math
from collections.abc import Iterator, Mapping

import numpy as np

from .deployment import Channel, Deployment


class UnsupportedModelError(ValueError):
    """Raised for fading parameters the closed forms cannot handle."""


def weak_compositions(t: int, k: int) -> Iterator[tuple[int, ...]]:
    """Yield all ``k``-tuples of non-negative integers summing to ``t``, in lexicographic order."""
    if k == 1:
        yield (t,)
        return
    for first in range(t + 1):
        for rest in weak_compositions(t - first, k - 1):
            yield (first,) + rest


def _int_shapes(shapes) -> np.ndarray:
    shapes = np.asarray(shapes)
    if np.any(np.mod(shapes, 1) != 0) or np.any(shapes < 1):
        raise UnsupportedModelError("only integer Nakagami shapes >= 1 are supported")
    return shapes.astype(int)


def _gamma(x: int, y: int, xi: Mapping[int, float], mu: np.ndarray, shapes: np.ndarray,
           theta: float, noise: float) -> float:
    mx = int(shapes[x])
    a = theta * mx * mu[x, y]
    an = a * noise
    nodes = sorted(xi)
    # per-interferer factor g[nu][l] for l = 0 .. mx-1; the noise powers N**-t are
    # folded in per interferer so every factor stays O(1)
    g = []
    for nu in nodes:
        p = float(xi[nu])
        m_nu = int(shapes[nu])
        b = m_nu * mu[nu, y]
        base = 1.0 + a / b
        row = []
        for ell in range(mx):
            term = p * math.comb(ell + m_nu - 1, ell) * (1.0 / (noise * b)) ** ell \
                / base ** (m_nu + ell)
            if ell == 0:
                term += 1.0 - p
            row.append(term)
        g.append(row)

    total = 0.0
    for s in range(mx):
        inner = 0.0
        for t in range(s + 1):
            if nodes:
                acc = 0.0
                for comp in weak_compositions(t, len(nodes)):
                    prod = 1.0
                    for row, ell in zip(g, comp):
                        prod *= row[ell]
                    acc += prod
            else:
                acc = 1.0 if t == 0 else 0.0
            inner += acc / math.factorial(s - t)
        total += an ** s * inner
    return math.exp(-an) * total


def gamma_success(x: int, y: int, xi: Mapping[int, float], ch: Channel, dep: Deployment,
                  theta: float, noise: float) -> float:
    """Probability that link ``x -> y`` reaches SINR ``theta``.

    ``xi`` maps each potential interferer to its (independent) activity
    probability; nodes absent from ``xi`` never interfere.
    """
    if x == y:
        raise ValueError("transmitter and receiver coincide")
    if x in xi or y in xi:
        raise ValueError("activity vector must exclude transmitter and receiver")
    for p in xi.values():
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"activity probability {p} outside [0, 1]")
    shapes = _int_shapes(dep.shapes)
    return _gamma(x, y, xi, ch.mu, shapes, theta, noise)


def rayleigh_success_closed_form(i: int, j: int, ch: Channel, dep: Deployment, m: int,
                                 theta: float, noise: float) -> float:
    """Half-duplex success probability for unit shapes (includes the ``1 - 1/m`` factor)."""
    if np.any(np.asarray(dep.shapes) != 1):
        raise UnsupportedModelError("closed form needs Rayleigh fading (all shapes 1)")
    if i == j:
        raise ValueError("transmitter and receiver coincide")
    mu = ch.mu
    val = (1.0 - 1.0 / m) * math.exp(-mu[i, j] * theta * noise)
    for ell in range(ch.n):
        if ell in (i, j):
            continue
        val *= 1.0 - (1.0 / m) * theta / (theta + mu[ell, j] / mu[i, j])
    return val


class SuccessTable:
    """Memoized success probabilities for on/off interferer patterns.

    With activities in {0, 1} a link's success probability only depends on the
    set of active interferers, encoded as a bit mask over node indices.
    """

    def __init__(self, ch: Channel, dep: Deployment, theta: float, noise: float):
        self.mu = ch.mu
        self.shapes = _int_shapes(dep.shapes)
        self.theta = theta
        self.noise = noise
        self.n = ch.n
        self._cache: dict[tuple[int, int, int], float] = {}

    def __call__(self, x: int, y: int, mask: int) -> float:
        mask &= ~((1 << x) | (1 << y))
        key = (x, y, mask)
        val = self._cache.get(key)
        if val is None:
            active = {nu: 1.0 for nu in range(self.n) if mask >> nu & 1}
            val = _gamma(x, y, active, self.mu, self.shapes, self.theta, self.noise)
            self._cache[key] = val
        return val

    def mixed(self, x: int, y: int, xi: Mapping[int, float]) -> float:
        return _gamma(x, y, xi, self.mu, self.shapes, self.theta, self.noise)
