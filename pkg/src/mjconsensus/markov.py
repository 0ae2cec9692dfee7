"""Continuous-time Markov switching signals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GeneratorError(ValueError):
    pass


class NegativeOffDiagonal(GeneratorError):
    pass


class RowSumNonzero(GeneratorError):
    pass


class NotErgodic(GeneratorError):
    pass


@dataclass(frozen=True)
class MarkovGenerator:
    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] == 0:
            raise GeneratorError(f"generator must be a non-empty square matrix, got shape {q.shape}")
        off = q - np.diag(np.diag(q))
        if np.any(off < 0):
            i, j = np.argwhere(off < 0)[0]
            raise NegativeOffDiagonal(f"q[{i},{j}] = {q[i, j]} < 0")
        scale = np.abs(q).max()
        sums = q.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums) > 1e-12 * max(scale, 1.0))
        if bad.size:
            raise RowSumNonzero(f"row {bad[0]} sums to {sums[bad[0]]}")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def n_states(self) -> int:
        return self.q.shape[0]


def validate_generator(q) -> MarkovGenerator:
    return MarkovGenerator(q)


@dataclass(frozen=True)
class StationaryDistribution:
    pi: np.ndarray
    pi_bar: float


def is_ergodic(g: MarkovGenerator) -> bool:
    """Strong connectivity of the rate graph (edge i -> j when q_ij > 0)."""
    s = g.n_states
    adj = g.q > 0
    np.fill_diagonal(adj, False)
    reach = np.eye(s, dtype=bool) | adj
    # transitive closure by repeated squaring; s is tiny
    for _ in range(max(1, int(np.ceil(np.log2(max(s, 2)))) + 1)):
        reach = reach | ((reach.astype(int) @ reach.astype(int)) > 0)
    return bool(reach.all())


def stationary_distribution(g: MarkovGenerator) -> StationaryDistribution:
    """Solve ``pi^T Q = 0``, ``sum(pi) = 1`` in least squares."""
    if not is_ergodic(g):
        raise NotErgodic("generator is not irreducible; invariant distribution is not unique")
    s = g.n_states
    lhs = np.vstack([g.q.T, np.ones((1, s))])
    rhs = np.zeros(s + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    pi.setflags(write=False)
    return StationaryDistribution(pi=pi, pi_bar=float(pi.min()))


@dataclass(frozen=True)
class SwitchingPath:
    """Piecewise-constant path; ``states[k]`` holds on ``[jump_times[k], jump_times[k+1])``."""

    jump_times: np.ndarray
    states: np.ndarray
    t_end: float

    def state_at(self, t: float) -> int:
        k = np.searchsorted(self.jump_times, t, side="right") - 1
        return int(self.states[max(k, 0)])

    def states_at(self, times) -> np.ndarray:
        k = np.searchsorted(self.jump_times, np.asarray(times), side="right") - 1
        return self.states[np.clip(k, 0, None)]

    def holding_times(self) -> np.ndarray:
        """Completed sojourn lengths (the last, censored one is dropped)."""
        return np.diff(self.jump_times)

    def occupation_fractions(self, n_states: int) -> np.ndarray:
        edges = np.append(self.jump_times, self.t_end)
        frac = np.zeros(n_states)
        np.add.at(frac, self.states, np.diff(edges))
        return frac / self.t_end


def sample_path(g: MarkovGenerator, initial_state: int, t_end: float, seed: int) -> SwitchingPath:
    """Exponential holding times with rate ``-q_ii``; jumps to ``j`` w.p. ``q_ij / -q_ii``.

    States are 0-based.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    s = g.n_states
    if not 0 <= initial_state < s:
        raise ValueError(f"initial state {initial_state} outside 0..{s - 1}")
    rng = np.random.default_rng(seed)
    rates = -np.diag(g.q)
    times = [0.0]
    states = [initial_state]
    t = 0.0
    i = initial_state
    while True:
        if rates[i] <= 0:
            break
        t += rng.exponential(1.0 / rates[i])
        if t >= t_end:
            break
        probs = g.q[i].copy()
        probs[i] = 0.0
        i = int(rng.choice(s, p=probs / probs.sum()))
        times.append(t)
        states.append(i)
    return SwitchingPath(np.array(times), np.array(states, dtype=int), float(t_end))


def sample_initial_state(dist: StationaryDistribution, seed: int) -> int:
    rng = np.random.default_rng([seed, 0x5EED])
    return int(rng.choice(len(dist.pi), p=dist.pi))
