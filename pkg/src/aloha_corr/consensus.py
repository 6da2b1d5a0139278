"""Mean-square analysis of average consensus over random links.

One frame of link successes ``W`` defines the Laplacian
``L[i, i] = sum_k W[k, i]`` and ``L[i, j] = -W[j, i]``; the iteration is
``x <- (I - eps L) x``. The second-moment matrix

    R(eps) = (Pi kron Pi) [(I - eps E L) kron (I - eps E L) + eps**2 C]

with ``Pi = I - 11^T / n`` and ``C[n*i + k, n*j + l] = cov(L[i, j], L[k, l])``
governs the mean-square disagreement.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .deployment import Channel, Deployment, SlotConfig
from .oracle import sample_successes
from .slotmodel import LinkStats, Model


class NumericError(ArithmeticError):
    """An eigen- or optimisation routine failed to converge."""


@dataclass
class ConsensusMoments:
    EL: np.ndarray
    C: np.ndarray
    n: int
    vec_cov: np.ndarray   # cov(L[i, j], L[k, l]) at row n*i + j, column n*k + l

    def tensor(self) -> np.ndarray:
        """Covariance as ``T[i, j, k, l] = cov(L[i, j], L[k, l])``."""
        n = self.n
        return self.vec_cov.reshape(n, n, n, n)


@dataclass
class SpectralSummary:
    eps: float
    r2: float
    w2: float
    rho_ess: float
    n: int


@dataclass
class PerformanceBounds:
    eps: float
    k: int
    lb: float
    ub: float
    r2: float
    w2: float


class EpsRho(NamedTuple):
    eps: float
    rho: float
    flat: bool


def projector(n: int) -> np.ndarray:
    return np.eye(n) - np.ones((n, n)) / n


def _laplacian_map(n: int, links) -> np.ndarray:
    """Linear map ``A[i, j, a]`` with ``L[i, j] = sum_a A[i, j, a] W[a]``."""
    A = np.zeros((n, n, len(links)))
    for a, (s, r) in enumerate(links):
        A[r, r, a] += 1.0
        A[r, s, a] -= 1.0
    return A


def laplacian_moments(stats: LinkStats) -> ConsensusMoments:
    n = stats.n
    A = _laplacian_map(n, stats.links).reshape(n * n, -1)
    EL = (A @ stats.p).reshape(n, n)
    vec_cov = A @ stats.cov @ A.T
    T = vec_cov.reshape(n, n, n, n)
    C = T.transpose(0, 2, 1, 3).reshape(n * n, n * n)
    return ConsensusMoments(EL, C, n, vec_cov)


def r_matrix(mom: ConsensusMoments, eps: float) -> np.ndarray:
    n = mom.n
    pi = projector(n)
    pp = pi @ (np.eye(n) - eps * mom.EL)
    # (Pi kron Pi)(Pbar kron Pbar) = (Pi Pbar) kron (Pi Pbar); forming the product
    # first keeps rounding in the mean part quadratic
    return np.kron(pp, pp) + eps ** 2 * (np.kron(pi, pi) @ mom.C)


def spectral_radius(A) -> float:
    A = np.asarray(A)
    if not np.all(np.isfinite(A)):
        raise NumericError("matrix has non-finite entries")
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue computation failed: {exc}") from exc
    return float(np.max(np.abs(ev))) if ev.size else 0.0


def _hermitian_radius(A: np.ndarray, phi: float) -> float:
    H = np.exp(1j * phi) * A
    H = (H + H.conj().T) / 2
    ev = np.linalg.eigvalsh(H)
    return float(max(ev[-1], -ev[0]))


def numerical_radius(A, tol: float = 1e-8, grid: int = 64) -> float:
    """``max |x* A x|`` over unit vectors.

    Uses ``w(A) = max_phi lambda_max(Re(e^{i phi} A))``: a grid over ``phi``
    in ``[0, pi)`` (with both ends of the spectrum, which covers the other
    half period), bounded scalar refinement around the three best grid
    points, then a denser grid as a convergence check.
    """
    A = np.asarray(A, dtype=complex)
    if not np.all(np.isfinite(A)):
        raise NumericError("matrix has non-finite entries")
    if A.size == 0:
        return 0.0
    f = lambda phi: _hermitian_radius(A, phi)
    best_phi, best = 0.0, -np.inf
    pts = grid
    for _ in range(6):
        phis = np.linspace(0.0, np.pi, pts, endpoint=False)
        vals = np.array([f(p) for p in phis])
        if vals.max() <= best + tol:
            return float(best)
        h = np.pi / pts
        for idx in np.argsort(vals)[-3:]:
            res = minimize_scalar(lambda p: -f(p), bounds=(phis[idx] - h, phis[idx] + h),
                                  method="bounded", options={"xatol": 1e-12})
            cand = max(-res.fun, vals[idx])
            if cand > best:
                best, best_phi = cand, res.x
        pts *= 4
    raise NumericError(f"numerical radius did not converge to tol={tol}")


def essential_radius(EL: np.ndarray, eps: float) -> float:
    n = len(EL)
    return spectral_radius(projector(n) - eps * EL)


def radii(mom: ConsensusMoments, eps: float, tol: float = 1e-8) -> SpectralSummary:
    if eps <= 0:
        raise ValueError("gain must be positive")
    R = r_matrix(mom, eps)
    rho = spectral_radius(R)
    w = numerical_radius(R, tol)
    return SpectralSummary(eps, float(np.sqrt(rho)), float(np.sqrt(w)),
                           essential_radius(mom.EL, eps), mom.n)


def minimize_eps_rho(EL: np.ndarray, bracket: tuple[float, float] | None = None,
                     tol: float = 1e-10, grid: int = 256) -> EpsRho:
    """Gain minimising ``rho(Pi - eps E[L])``: coarse grid, then bounded golden search."""
    EL = np.asarray(EL)
    if bracket is None:
        top = spectral_radius(EL)
        if top == 0:
            raise NumericError("expected Laplacian is zero; no gain improves consensus")
        bracket = (0.0, 2.0 / top)
    lo, hi = bracket
    eps_grid = lo + (hi - lo) * np.arange(1, grid + 1) / grid
    vals = np.array([essential_radius(EL, e) for e in eps_grid])
    g = int(np.argmin(vals))
    if np.ptp(vals) < tol:
        warnings.warn("essential spectral radius is flat over the bracket", RuntimeWarning)
        return EpsRho(float(eps_grid[g]), float(vals[g]), True)
    a = eps_grid[g - 1] if g > 0 else lo
    b = eps_grid[g + 1] if g + 1 < grid else hi
    res = minimize_scalar(lambda e: essential_radius(EL, e), bounds=(a, b),
                          method="bounded", options={"xatol": tol})
    if res.fun <= vals[g]:
        return EpsRho(float(res.x), float(res.fun), False)
    return EpsRho(float(eps_grid[g]), float(vals[g]), False)


def per_step_bounds(mom: ConsensusMoments, eps: float, k: int,
                    summary: SpectralSummary | None = None) -> PerformanceBounds:
    """Per-step bounds on the ``2k``-th root of the worst mean-square disagreement."""
    if k < 1:
        raise ValueError("k must be >= 1")
    s = summary if summary is not None else radii(mom, eps)
    n = mom.n
    lb = s.r2 / n ** (1.0 / (2 * k))
    ub = (2.0 * np.sqrt(n - 1)) ** (1.0 / (2 * k)) * s.w2
    return PerformanceBounds(eps, k, float(lb), float(ub), s.r2, s.w2)


def one_step_matrix(mom: ConsensusMoments, eps: float) -> np.ndarray:
    """``E[P^T Pi P]`` for ``P = I - eps L``."""
    n = mom.n
    pi = projector(n)
    pbar = np.eye(n) - eps * mom.EL
    fluct = np.einsum("ab,aibj->ij", pi, mom.tensor())
    return pbar.T @ pi @ pbar + eps ** 2 * fluct


def one_step_bound(mom: ConsensusMoments, eps: float) -> float:
    """Worst one-step mean-square disagreement, ``||E[P^T Pi P]||_2``."""
    M = one_step_matrix(mom, eps)
    return float(np.linalg.norm((M + M.T) / 2, 2))


# -- simulation --------------------------------------------------------------

class PhysicalSampler:
    """Draws link successes from slots and fading (the correlated model)."""

    def __init__(self, ch: Channel, dep: Deployment, slots: SlotConfig,
                 model: Model | str = Model.HD):
        self.ch, self.dep, self.slots, self.model = ch, dep, slots, Model(model)
        self.n = ch.n

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return sample_successes(rng, self.model, self.ch, self.dep, self.slots, size)


class BernoulliSampler:
    """Independent links with success probabilities ``p`` (the uncorrelated model)."""

    def __init__(self, stats_or_p):
        if isinstance(stats_or_p, LinkStats):
            n = stats_or_p.n
            P = np.zeros((n, n))
            for (i, j), v in zip(stats_or_p.links, stats_or_p.p):
                P[i, j] = v
        else:
            P = np.asarray(stats_or_p, dtype=float)
        self.P = P
        self.n = len(P)

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.random((size, self.n, self.n)) < self.P


@dataclass
class Trajectory:
    msd: np.ndarray        # (k, r) mean squared disagreement per initial state
    se: np.ndarray         # standard errors of msd
    total: np.ndarray      # (k,) mean of the sum over initial states
    total_se: np.ndarray
    trials: int
    eps: float
    x0: np.ndarray


TRIAL_BLOCK = 1024


def simulate_consensus(sampler, eps: float, k: int, trials: int, x0=None,
                       seed: int = 0) -> Trajectory:
    """Monte Carlo estimate of ``E[delta_t(x0)**2]`` for ``t = 1..k``.

    ``x0`` is a vector or an ``(n, r)`` matrix of initial states (default: the
    canonical basis). Each block of trials uses its own child seed.
    """
    n = sampler.n
    X0 = np.eye(n) if x0 is None else np.asarray(x0, dtype=float)
    if X0.ndim == 1:
        X0 = X0[:, None]
    pi = projector(n)
    r = X0.shape[1]
    s1 = np.zeros((k, r))
    s2 = np.zeros((k, r))
    t1 = np.zeros(k)
    t2 = np.zeros(k)
    nblocks = -(-trials // TRIAL_BLOCK)
    for b, child in enumerate(np.random.SeedSequence(seed).spawn(nblocks)):
        rng = np.random.Generator(np.random.Philox(child))
        size = min(TRIAL_BLOCK, trials - b * TRIAL_BLOCK)
        X = np.broadcast_to(X0, (size, n, r)).copy()
        for t in range(k):
            W = sampler.draw(rng, size).astype(float)
            L = -W.transpose(0, 2, 1)
            L[:, np.arange(n), np.arange(n)] = W.sum(axis=1)
            X = X - eps * L @ X
            d2 = ((pi @ X) ** 2).sum(axis=1)
            s1[t] += d2.sum(axis=0)
            s2[t] += (d2 ** 2).sum(axis=0)
            tot = d2.sum(axis=1)
            t1[t] += tot.sum()
            t2[t] += (tot ** 2).sum()
    msd = s1 / trials
    se = np.sqrt(np.maximum(s2 / trials - msd ** 2, 0.0) / max(trials - 1, 1))
    total = t1 / trials
    total_se = np.sqrt(np.maximum(t2 / trials - total ** 2, 0.0) / max(trials - 1, 1))
    return Trajectory(msd, se, total, total_se, trials, eps, X0)
