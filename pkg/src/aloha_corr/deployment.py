"""Node deployments, mean received power and radio parameters.

All quantities are SI. Node indices are 0-based in code; link labels
written to files are 1-based.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
BOLTZMANN = 1.380649e-23


class ConfigError(ValueError):
    """Invalid deployment, radio configuration or scenario file."""


class ParameterError(ValueError):
    """Derived radio parameters violate a model precondition."""


@dataclass(frozen=True)
class Deployment:
    positions: np.ndarray
    tx_powers: np.ndarray
    shapes: np.ndarray
    wavelength: float
    path_loss_exponent: float = 2.0

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.shape[1] == 2:
            pos = np.column_stack([pos, np.zeros(len(pos))])
        q = np.asarray(self.tx_powers, dtype=float).reshape(-1)
        shapes = np.asarray(self.shapes).reshape(-1)
        n = len(pos)
        if pos.shape[1] != 3:
            raise ConfigError("positions must be 2- or 3-vectors")
        if n < 3:
            raise ConfigError(f"need at least 3 nodes, got {n}")
        if len(q) != n or len(shapes) != n:
            raise ConfigError("positions, tx_powers and shapes differ in length")
        if np.any(q <= 0):
            raise ConfigError("transmit powers must be positive")
        if not np.all(np.equal(np.mod(shapes, 1), 0)) or np.any(shapes < 1):
            raise ConfigError("Nakagami shapes must be integers >= 1")
        if not self.wavelength > 0:
            raise ConfigError("wavelength must be positive")
        if not self.path_loss_exponent >= 2:
            raise ConfigError("path loss exponent must be >= 2")
        d = pairwise_distances(pos)
        if np.any(d[~np.eye(n, dtype=bool)] <= 0):
            raise ConfigError("co-located nodes")
        pos.setflags(write=False)
        q.setflags(write=False)
        shapes = shapes.astype(int)
        shapes.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "tx_powers", q)
        object.__setattr__(self, "shapes", shapes)
        object.__setattr__(self, "wavelength", float(self.wavelength))
        object.__setattr__(self, "path_loss_exponent", float(self.path_loss_exponent))

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def reference_distance(self) -> float:
        return self.wavelength / (4 * math.pi)

    def with_shape(self, shape: int) -> "Deployment":
        return Deployment(self.positions, self.tx_powers, np.full(self.n, shape),
                          self.wavelength, self.path_loss_exponent)


@dataclass(frozen=True)
class SlotConfig:
    """Frame configuration: ``m`` slots, SINR threshold and thermal noise."""

    m: int
    theta: float
    noise: float
    tau: float | None = None

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ParameterError("slot count must be a positive integer")
        if not self.theta >= 1:
            raise ParameterError(f"threshold must satisfy theta >= 1, got {self.theta}")
        if not self.noise > 0:
            raise ParameterError("noise power must be positive")
        object.__setattr__(self, "m", int(self.m))


@dataclass(frozen=True)
class Channel:
    """Inverse mean received powers ``mu[i, j]`` for links i -> j (diagonal is nan)."""

    mu: np.ndarray = field(repr=False)

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float)
        off = ~np.eye(len(mu), dtype=bool)
        if mu.ndim != 2 or mu.shape[0] != mu.shape[1]:
            raise ConfigError("mu must be square")
        if np.any(~(mu[off] > 0)):
            raise ConfigError("mu must be positive off the diagonal")
        np.fill_diagonal(mu, np.nan)
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    @property
    def n(self) -> int:
        return len(self.mu)

    def mean_power(self) -> np.ndarray:
        return 1.0 / self.mu


def pairwise_distances(positions) -> np.ndarray:
    pos = np.asarray(positions, dtype=float)
    return np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)


def wavelength_from_carrier(carrier_hz: float) -> float:
    return SPEED_OF_LIGHT / carrier_hz


def grid_deployment(rows: int, cols: int, spacing: float, q: float = 0.5,
                    shape: int = 1, wavelength: float | None = None,
                    path_loss_exponent: float = 2.0) -> Deployment:
    """Planar ``rows x cols`` grid with node ``r*cols + c`` at ``(r*spacing, c*spacing, 0)``.

    ``wavelength`` defaults to a 5.9 GHz carrier.
    """
    if rows * cols < 3:
        raise ConfigError(f"grid {rows}x{cols} has fewer than 3 nodes")
    if not spacing > 0:
        raise ConfigError("grid spacing must be positive")
    if wavelength is None:
        wavelength = wavelength_from_carrier(5.9e9)
    pos = [(r * spacing, c * spacing, 0.0) for r in range(rows) for c in range(cols)]
    n = len(pos)
    return Deployment(np.array(pos), np.full(n, float(q)), np.full(n, shape),
                      wavelength, path_loss_exponent)


def mean_power_matrix(dep: Deployment) -> Channel:
    """``mu[i, j] = (d_ij / r0) ** alpha / q_i`` with ``r0 = wavelength / (4 pi)``."""
    d = pairwise_distances(dep.positions)
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = (d / dep.reference_distance) ** dep.path_loss_exponent / dep.tx_powers[:, None]
    return Channel(mu)


def derive_radio_params(bandwidth: float, ref_bitrate: float, m: int,
                        temperature: float = 293.0) -> tuple[float, float]:
    """Return ``(theta, noise)`` for ``m`` slots.

    The bitrate scales with the slot count (``R = m * R0``) so that the frame
    length stays fixed; ``theta`` follows from Shannon capacity and the noise
    is thermal noise over the bandwidth.
    """
    if bandwidth <= 0 or ref_bitrate <= 0 or temperature <= 0:
        raise ParameterError("bandwidth, bitrate and temperature must be positive")
    if int(m) != m or m < 1:
        raise ParameterError("slot count must be a positive integer")
    theta = 2.0 ** (m * ref_bitrate / bandwidth) - 1.0
    noise = bandwidth * BOLTZMANN * temperature
    if theta < 1:
        raise ParameterError(f"theta = {theta:.6g} < 1 for m = {m}")
    return theta, noise


# -- scenario files ---------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """Parsed scenario: deployment, radio block and the requested slot counts."""

    deployment: Deployment
    bandwidth: float
    ref_bitrate: float
    temperature: float
    slot_counts: tuple[int, ...]
    theta_override: float | None = None
    source: str | None = None

    def slots(self, m: int | None = None, theta: float | None = None) -> SlotConfig:
        m = self.slot_counts[0] if m is None else m
        theta = theta if theta is not None else self.theta_override
        if theta is None:
            theta, noise = derive_radio_params(self.bandwidth, self.ref_bitrate, m,
                                               self.temperature)
        else:
            noise = self.bandwidth * BOLTZMANN * self.temperature
        return SlotConfig(m, theta, noise)

    def channel(self) -> Channel:
        return mean_power_matrix(self.deployment)


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing key '{key}'")
    return d[key]


def parse_scenario(doc: dict[str, Any], source: str | None = None) -> Scenario:
    """Build a :class:`Scenario` from a decoded JSON document.

    Either ``nodes`` (list of ``{pos, q, shape}``) or ``grid``
    (``{rows, cols, spacing, q, shape}``) must be present, plus ``radio`` and
    ``slots``.
    """
    where = source or "<scenario>"
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: top level must be an object")
    radio = _require(doc, "radio", where)
    if "wavelength_m" in radio:
        wl = float(radio["wavelength_m"])
    elif "carrier_hz" in radio:
        wl = wavelength_from_carrier(float(radio["carrier_hz"]))
    else:
        raise ConfigError(f"{where}: radio needs carrier_hz or wavelength_m")
    alpha = float(radio.get("path_loss_exponent", 2.0))
    if ("nodes" in doc) == ("grid" in doc):
        raise ConfigError(f"{where}: exactly one of 'nodes' or 'grid' is required")
    if "grid" in doc:
        g = doc["grid"]
        dep = grid_deployment(int(_require(g, "rows", where + ".grid")),
                              int(_require(g, "cols", where + ".grid")),
                              float(_require(g, "spacing", where + ".grid")),
                              float(g.get("q", 0.5)), int(g.get("shape", 1)), wl, alpha)
    else:
        nodes = doc["nodes"]
        try:
            pos = [list(map(float, nd["pos"])) for nd in nodes]
            q = [float(nd.get("q", 0.5)) for nd in nodes]
            sh = [nd.get("shape", 1) for nd in nodes]
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{where}.nodes: malformed node entry ({exc})") from exc
        dep = Deployment(np.array(pos), np.array(q), np.array(sh), wl, alpha)
    slots = doc.get("slots", {"m": 1})
    m = slots.get("m", 1)
    counts = tuple(int(v) for v in (m if isinstance(m, list) else [m]))
    theta = radio.get("theta")
    return Scenario(
        deployment=dep,
        bandwidth=float(radio.get("bandwidth_hz", 1e7)),
        ref_bitrate=float(radio.get("ref_bitrate_bps", 0.4 * 27e6)),
        temperature=float(radio.get("temperature_k", 293.0)),
        slot_counts=counts,
        theta_override=None if theta is None else float(theta),
        source=source,
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_scenario(doc, str(path))
