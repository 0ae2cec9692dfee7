"""Exogenous disturbance signals ``w_i(t)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Zero:
    def value(self, t: float, n_agents: int, n_channels: int) -> np.ndarray:
        return np.zeros((n_agents, n_channels))

    def evaluate(self, times, n_agents: int, n_channels: int) -> np.ndarray:
        return np.zeros((np.size(times), n_agents, n_channels))

    def breakpoints(self, t_end: float, n_agents: int = 1) -> np.ndarray:
        return np.empty(0)

    piecewise_constant = True


@dataclass(frozen=True)
class SquareWave:
    """``amplitude * sign(sin(2 pi t / period + phase + i * agent_phase_step))``.

    The value is taken right-continuous at the edges.  ``amplitude`` is a
    scalar or one entry per disturbance channel.
    """

    amplitude: float | tuple = 1.0
    period: float = 2 * np.pi
    phase: float = 0.0
    agent_phase_step: float = 0.0

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("square-wave period must be positive")

    piecewise_constant = True

    def _cycles(self, t, n_agents: int) -> np.ndarray:
        phases = self.phase + self.agent_phase_step * np.arange(n_agents)
        return np.asarray(t, dtype=float)[..., None] / self.period + phases / (2 * np.pi)

    def evaluate(self, times, n_agents: int, n_channels: int) -> np.ndarray:
        frac = np.mod(self._cycles(np.atleast_1d(times), n_agents), 1.0)
        sign = np.where(frac < 0.5, 1.0, -1.0)
        amp = np.broadcast_to(np.asarray(self.amplitude, dtype=float), (n_channels,))
        return sign[..., None] * amp

    def value(self, t: float, n_agents: int, n_channels: int) -> np.ndarray:
        return self.evaluate(t, n_agents, n_channels)[0]

    def breakpoints(self, t_end: float, n_agents: int = 1) -> np.ndarray:
        out = []
        for c0 in self._cycles(0.0, n_agents).ravel():
            # edges where 2 * cycles is an integer
            k = np.arange(np.floor(2 * c0) + 1, np.ceil(2 * (c0 + t_end / self.period)) + 1)
            out.append((k / 2 - c0) * self.period)
        edges = np.unique(np.concatenate(out))
        return edges[(edges > 0) & (edges < t_end)]


@dataclass(frozen=True)
class Samples:
    """Linearly interpolated samples, held constant outside the grid.

    ``values`` is ``(T, channels)`` (shared by all agents) or ``(T, agents, channels)``.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.size < 1 or np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if v.shape[0] != t.size or v.ndim not in (2, 3):
            raise ValueError(f"values must be (T, channels) or (T, agents, channels), got {v.shape}")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    piecewise_constant = False

    def evaluate(self, times, n_agents: int, n_channels: int) -> np.ndarray:
        t = np.atleast_1d(np.asarray(times, dtype=float))
        flat = self.values.reshape(self.times.size, -1)
        out = np.stack([np.interp(t, self.times, flat[:, c]) for c in range(flat.shape[1])], axis=-1)
        if self.values.ndim == 2:
            return np.broadcast_to(out[:, None, :], (t.size, n_agents, n_channels)).copy()
        return out.reshape(t.size, n_agents, n_channels)

    def value(self, t: float, n_agents: int, n_channels: int) -> np.ndarray:
        return self.evaluate(t, n_agents, n_channels)[0]

    def breakpoints(self, t_end: float, n_agents: int = 1) -> np.ndarray:
        return self.times[(self.times > 0) & (self.times < t_end)]


DisturbanceSpec = Zero | SquareWave | Samples


def check_shape(dist, n_agents: int, n_channels: int) -> None:
    if isinstance(dist, Samples):
        v = dist.values
        ok = v.shape[-1] == n_channels and (v.ndim == 2 or v.shape[1] == n_agents)
        if not ok:
            raise ValueError(f"disturbance samples of shape {v.shape} do not fit {n_agents} agents x {n_channels} channels")
    elif isinstance(dist, SquareWave):
        amp = np.asarray(dist.amplitude)
        if amp.ndim and amp.shape != (n_channels,):
            raise ValueError(f"square-wave amplitude needs {n_channels} entries")
