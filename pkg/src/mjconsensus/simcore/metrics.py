"""Consensus errors, the finite-horizon attenuation ratio and step-response metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .simulate import Trajectory


class ZeroDenominator(ValueError):
    pass


class Unsettled(RuntimeError):
    pass


@dataclass(frozen=True)
class ConsensusSignals:
    zeta: np.ndarray
    # full order: projected estimation error; reduced order: projected (v - T x)
    delta: np.ndarray
    z_tr: np.ndarray


def consensus_signals(traj: Trajectory) -> ConsensusSignals:
    """``zeta = (M kron I) x``, ``z_tr = (I kron C2) zeta`` and the projected observer error."""
    x = traj.states
    zeta = x - x.mean(axis=1, keepdims=True)
    if traj.kind == "full":
        err = traj.observer_states - x
    else:
        err = traj.observer_states - np.einsum("kn,tin->tik", traj.protocol.t_map, x)
    delta = err - err.mean(axis=1, keepdims=True)
    z_tr = zeta @ traj.plant.c2.T
    return ConsensusSignals(zeta, delta, z_tr)


def consensus_norm(traj: Trajectory) -> np.ndarray:
    """``||zeta(t)||`` on the grid."""
    zeta = consensus_signals(traj).zeta
    return np.sqrt(np.einsum("tin,tin->t", zeta, zeta))


@dataclass
class PerformanceReport:
    jtr_ratio: float
    gamma_squared: float
    standard_error: float
    numerator: float
    denominator: float
    consensus_error_initial: float
    consensus_error_final: float
    settling_time: float | None
    n_paths: int
    tail_estimate: float
    overshoot: dict = field(default_factory=dict)
    zero_denominator: bool = False

    @property
    def passed(self) -> bool:
        return self.zero_denominator or self.jtr_ratio < self.gamma_squared

    def to_text(self) -> str:
        settle = "unsettled" if self.settling_time is None else f"{self.settling_time:.17g}"
        lines = [
            f"jtr_ratio = {self.jtr_ratio:.17g}",
            f"jtr_standard_error = {self.standard_error:.17g}",
            f"gamma_squared = {self.gamma_squared:.17g}",
            f"jtr_below_gamma_squared = {self.passed}",
            f"zero_denominator = {self.zero_denominator}",
            f"numerator = {self.numerator:.17g}",
            f"denominator = {self.denominator:.17g}",
            f"tail_estimate = {self.tail_estimate:.17g}",
            f"consensus_error_initial = {self.consensus_error_initial:.17g}",
            f"consensus_error_final = {self.consensus_error_final:.17g}",
            f"settling_time = {settle}",
            f"n_paths = {self.n_paths}",
        ]
        lines += [f"overshoot.agent{a + 1}.state{c + 1} = {v:.17g}" for (a, c), v in self.overshoot.items()]
        return "\n".join(lines) + "\n"


def _initial_energy(traj: Trajectory) -> float:
    r = traj.plant.r_weight
    x0 = traj.states[0]
    obs0 = traj.observer_states[0]
    r_obs = r if traj.kind == "full" else traj.protocol.r_obs
    return float(np.einsum("in,nm,im->", x0, r, x0) + np.einsum("ik,kl,il->", obs0, r_obs, obs0))


def _tail_estimate(times, mean_sq) -> float:
    """``||z_tr(t_end)||^2`` times a decay time constant fitted on the last half; inf if not decaying."""
    half = times.size // 2
    y = mean_sq[half:]
    if y.size < 2 or np.any(y <= 0):
        return 0.0 if np.all(y == 0) else float("inf")
    slope = np.polyfit(times[half:], np.log(y), 1)[0]
    return float(y[-1] / -slope) if slope < 0 else float("inf")


@dataclass(frozen=True)
class PathSummary:
    """Per-path reductions needed for the aggregate report."""

    numerator: float
    z_sq: np.ndarray  # ||z_tr(t)||^2
    zeta_sq: np.ndarray  # ||zeta(t)||^2
    transients: dict  # (agent, state) -> StepMetrics relative to the last sample
    state_peak: float = 0.0  # max_t ||x(t)||, the scale for roundoff-level consensus errors


def summarize_path(traj: Trajectory, band: float = 0.02, overshoot_channels: Sequence[tuple] = ()) -> PathSummary:
    sig = consensus_signals(traj)
    zz = np.einsum("tiq,tiq->t", sig.z_tr, sig.z_tr)
    trans = {(a, c): transient_metrics(traj, a, c, band, final_value=float(traj.states[-1, a, c]))
             for a, c in overshoot_channels}
    peak = float(np.sqrt(np.einsum("tin,tin->t", traj.states, traj.states).max()))
    return PathSummary(float(np.trapezoid(zz, traj.times)), zz, np.einsum("tin,tin->t", sig.zeta, sig.zeta), trans, peak)


def scenario_denominator(traj: Trajectory) -> float:
    """Disturbance energy on the horizon plus the weighted initial energies."""
    w = traj.disturbance.reshape(traj.times.size, -1)
    return float(np.trapezoid(np.einsum("tk,tk->t", w, w), traj.times)) + _initial_energy(traj)


def aggregate(summaries: Sequence[PathSummary], times, denominator: float, gamma: float,
              band: float = 0.02) -> PerformanceReport:
    """Combine per-path summaries (in path order) into a :class:`PerformanceReport`."""
    if not summaries:
        raise ValueError("need at least one path")
    nums = np.array([s.numerator for s in summaries])
    mean_norm = np.mean([np.sqrt(s.zeta_sq) for s in summaries], axis=0)
    settling = None
    try:
        settling = step_metrics(times, mean_norm, band, final_value=0.0).settling_time
    except Unsettled:
        pass
    keys = summaries[0].transients.keys()
    overs = {k: float(np.mean([s.transients[k].overshoot for s in summaries])) for k in keys}
    se = float(nums.std(ddof=1) / np.sqrt(nums.size)) if nums.size > 1 else 0.0
    common = dict(
        gamma_squared=gamma**2, numerator=float(nums.mean()), consensus_error_initial=float(mean_norm[0]),
        consensus_error_final=float(mean_norm[-1]), settling_time=settling, n_paths=len(summaries),
        tail_estimate=_tail_estimate(np.asarray(times), np.mean([s.z_sq for s in summaries], axis=0)), overshoot=overs,
    )
    if denominator <= 0:
        if np.any(nums > 0):
            raise ZeroDenominator("zero disturbance and initial energy but nonzero output")
        return PerformanceReport(0.0, standard_error=0.0, denominator=0.0, zero_denominator=True, **common)
    return PerformanceReport(float(nums.mean() / denominator), standard_error=se / denominator,
                             denominator=denominator, **common)


def jtr_ratio(
    trajs: Sequence[Trajectory],
    gamma: float,
    band: float = 0.02,
    overshoot_channels: Sequence[tuple] = (),
) -> PerformanceReport:
    """Monte-Carlo estimate of the truncated attenuation ratio.

    The numerator is the path mean of the trapezoidal integral of
    ``z_tr' z_tr``; the denominator is the disturbance energy plus the
    ``R``-weighted initial agent and observer energies, shared by all paths.

    Raises
    ------
    ZeroDenominator
        The scenario has no disturbance energy and zero initial state but a
        nonzero output.
    """
    if not trajs:
        raise ValueError("need at least one trajectory")
    ref = trajs[0]
    for tr in trajs[1:]:
        if tr.times.shape != ref.times.shape or not np.array_equal(tr.states[0], ref.states[0]):
            raise ValueError("trajectories must share the grid and initial states")
    summaries = [summarize_path(tr, band, overshoot_channels) for tr in trajs]
    return aggregate(summaries, ref.times, scenario_denominator(ref), gamma, band)


def require_denominator(trajs: Sequence[Trajectory]) -> None:
    """Raise :class:`ZeroDenominator` for scenarios outside the ratio's domain."""
    if scenario_denominator(trajs[0]) <= 0:
        raise ZeroDenominator("no disturbance energy and zero initial state")


@dataclass(frozen=True)
class StepMetrics:
    overshoot: float
    settling_time: float
    oscillation_count: int


def step_metrics(times, signal, band: float, final_value: float | None = None) -> StepMetrics:
    """Overshoot, settling time and oscillation count of a sampled scalar signal.

    Parameters
    ----------
    times, signal : array_like
        Uniform grid and samples.
    band : float
        Settling band as a fraction of ``|initial - final|``.
    final_value : float, optional
        Target value; the last sample when omitted.

    Notes
    -----
    Overshoot is the largest excursion past the final value, in the
    direction of the initial step, divided by the step size.  Settling
    time is the last grid time at which the signal lies outside the band.
    Oscillations are sign changes of ``signal - final`` after the peak
    deviation.

    Raises
    ------
    Unsettled
        The last sample lies outside the band.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(signal, dtype=float)
    final = float(y[-1]) if final_value is None else float(final_value)
    step = final - y[0]
    dev = y - final
    if step == 0:
        if np.any(dev != 0):
            # no initial step to normalise by; fall back to the largest excursion
            tol = band * np.abs(dev).max()
        else:
            return StepMetrics(0.0, 0.0, 0)
    else:
        tol = band * abs(step)
    overshoot = max(0.0, float(np.max(np.sign(step) * dev))) / abs(step) if step != 0 else 0.0
    outside = np.flatnonzero(np.abs(dev) > tol)
    if outside.size and outside[-1] == y.size - 1:
        raise Unsettled(f"signal still outside the {band:.3g} band at t = {t[-1]:.6g}")
    settling = float(t[outside[-1] + 1]) if outside.size else 0.0
    peak = int(np.argmax(np.abs(dev)))
    s = np.sign(dev[peak:])
    s = s[s != 0]
    oscillations = int(np.count_nonzero(s[1:] != s[:-1]))
    return StepMetrics(overshoot, settling, oscillations)


def transient_metrics(traj: Trajectory, agent: int, channel: int, settle_band: float = 0.02,
                      final_value: float | None = None) -> StepMetrics:
    """Step metrics of ``x_agent[channel]`` (0-based indices)."""
    if not 0 <= channel < traj.states.shape[2]:
        raise IndexError(f"channel {channel} outside 0..{traj.states.shape[2] - 1}")
    return step_metrics(traj.times, traj.states[:, agent, channel], settle_band, final_value)
