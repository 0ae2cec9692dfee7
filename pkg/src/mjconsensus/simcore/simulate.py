"""Fixed-step RK4 simulation of the switched closed loops."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..graphs import TopologyEnsemble
from ..markov import MarkovGenerator, SwitchingPath, sample_initial_state, sample_path, stationary_distribution
from ..synthesis import FullOrderProtocol, Plant, ReducedOrderProtocol
from .disturbance import Zero, check_shape

BLOWUP_NORM = 1e12


class NumericalBlowup(RuntimeError):
    def __init__(self, t: float, norm: float):
        super().__init__(f"state norm {norm:.3g} exceeded {BLOWUP_NORM:g} at t = {t:.6g} s")
        self.time = t
        self.norm = norm


@dataclass(frozen=True)
class Trajectory:
    """Closed-loop samples on a uniform grid.

    Arrays are indexed ``[step, agent, component]``; ``sigma`` holds the
    0-based topology index active at each grid time.
    """

    kind: str
    times: np.ndarray
    states: np.ndarray
    observer_states: np.ndarray
    controls: np.ndarray
    sigma: np.ndarray
    disturbance: np.ndarray
    path: SwitchingPath
    plant: Plant
    protocol: FullOrderProtocol | ReducedOrderProtocol

    @property
    def n_agents(self) -> int:
        return self.states.shape[1]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0


class _LinearModes:
    """Per-topology ``s' = M_i s + E w`` and ``u = U_i s`` on the agent-major stacked state."""

    def __init__(self, system, input_matrix, control):
        self.system = system
        self.input_matrix = input_matrix
        self.control = control


def _full_order_modes(p: Plant, proto: FullOrderProtocol, e: TopologyEnsemble) -> _LinearModes:
    n_ag = e.n_nodes
    eye = np.eye(n_ag)
    a, b, c1, d = p.a, p.b, p.c1, p.d
    k, lg, tau = proto.k_gain, proto.l_gain, proto.tau
    # x' = A x - tau B K xh + D w ;  xh' = (A + L C1 - tau B K) xh - (Lap (x) L C1) x
    systems, controls = [], []
    u_xh = np.kron(eye, -tau * k)
    for lap in e.laplacians:
        top = np.hstack([np.kron(eye, a), np.kron(eye, -tau * b @ k)])
        bottom = np.hstack([-np.kron(lap, lg @ c1), np.kron(eye, a + lg @ c1 - tau * b @ k)])
        systems.append(np.vstack([top, bottom]))
        controls.append(np.hstack([np.zeros_like(u_xh), u_xh]))
    inp = np.vstack([np.kron(eye, d), np.zeros((n_ag * p.n, n_ag * p.ell))])
    return _LinearModes(systems, inp, controls)


def _reduced_order_modes(p: Plant, proto: ReducedOrderProtocol, e: TopologyEnsemble, observer_disturbance: bool):
    n_ag = e.n_nodes
    eye = np.eye(n_ag)
    a, b, c1, d = p.a, p.b, p.c1, p.d
    kk = proto.k_gain
    t_map, f_bar, g = proto.t_map, proto.f_bar, proto.g_gain
    # u_i = -tau K sum_j a_ij (Q1 (y_i - y_j) + Q2 (v_i - v_j))
    systems, controls = [], []
    for lap in e.laplacians:
        u = np.hstack([np.kron(lap, -proto.tau * kk @ proto.q1_map @ c1), np.kron(lap, -proto.tau * kk @ proto.q2_map)])
        xdot = np.hstack([np.kron(eye, a), np.zeros((n_ag * p.n, n_ag * f_bar.shape[0]))]) + np.kron(eye, b) @ u
        vdot = np.hstack([np.kron(eye, g @ c1), np.kron(eye, f_bar)]) + np.kron(eye, t_map @ b) @ u
        systems.append(np.vstack([xdot, vdot]))
        controls.append(u)
    td = t_map @ d if observer_disturbance else np.zeros((f_bar.shape[0], p.ell))
    inp = np.vstack([np.kron(eye, d), np.kron(eye, td)])
    return _LinearModes(systems, inp, controls)


def _rk4_operators(m: np.ndarray, h: float):
    """One classical RK4 step of ``s' = M s + c`` with constant ``c``: ``s+ = Phi s + Gamma c``."""
    eye = np.eye(m.shape[0])
    z = h * m
    z2 = z @ z
    z3 = z2 @ z
    phi = eye + z + z2 / 2 + z3 / 6 + (z3 @ z) / 24
    gam = h * (eye + z / 2 + z2 / 6 + z3 / 24)
    return phi, gam


def _resolve_path(g: MarkovGenerator, t_end: float, seed: int, initial_mode: int | None) -> SwitchingPath:
    if initial_mode is None:
        initial_mode = sample_initial_state(stationary_distribution(g), seed)
    return sample_path(g, initial_mode, t_end, seed)


def _integrate(modes: _LinearModes, s0, dist, path: SwitchingPath, t_end, dt, n_ag, ell):
    n_steps = int(round(t_end / dt))
    if n_steps < 1 or not np.isclose(n_steps * dt, t_end, rtol=1e-9, atol=0):
        raise ValueError(f"t_end = {t_end} is not a whole number of steps of dt = {dt}")
    times = np.arange(n_steps + 1) * dt
    breaks = np.union1d(path.jump_times[1:], dist.breakpoints(t_end, n_ag))
    sigma = path.states_at(times)
    states = np.empty((n_steps + 1, s0.size))
    wrec = dist.evaluate(times, n_ag, ell).reshape(n_steps + 1, n_ag * ell)
    inp = modes.input_matrix
    s = np.array(s0, dtype=float)

    def w_at(t):
        return dist.value(t, n_ag, ell).reshape(-1)

    # step k has an interior cut iff some break lies in (t_k, t_{k+1})
    first = np.searchsorted(breaks, times[:-1], side="right")
    last = np.searchsorted(breaks, times[1:], side="left")
    has_cut = last > first
    full_step = {}
    for k in range(n_steps):
        states[k] = s
        t0, t1 = times[k], times[k + 1]
        if dist.piecewise_constant and not has_cut[k]:
            # constant input on the step (right-continuous, no edge inside): exact RK4 polynomial
            mode = int(sigma[k])
            if mode not in full_step:
                phi, gam = _rk4_operators(modes.system[mode], dt)
                full_step[mode] = (phi, gam @ inp)
            phi, gin = full_step[mode]
            s = phi @ s + gin @ wrec[k]
        else:
            cuts = [t0]
            for br in breaks[first[k]:last[k]]:
                if br - cuts[-1] > 1e-12 * dt:
                    cuts.append(br)
            cuts.append(t1)
            for a, b in zip(cuts[:-1], cuts[1:]):
                h = b - a
                m = modes.system[path.state_at(0.5 * (a + b))]
                if dist.piecewise_constant:
                    phi, gam = _rk4_operators(m, h)
                    s = phi @ s + gam @ (inp @ w_at(0.5 * (a + b)))
                    continue
                w0, w1, w2 = inp @ w_at(a), inp @ w_at(a + 0.5 * h), inp @ w_at(b)
                k1 = m @ s + w0
                k2 = m @ (s + 0.5 * h * k1) + w1
                k3 = m @ (s + 0.5 * h * k2) + w1
                k4 = m @ (s + h * k3) + w2
                s = s + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        nrm = np.linalg.norm(s)
        if not np.isfinite(nrm) or nrm > BLOWUP_NORM:
            raise NumericalBlowup(float(t1), float(nrm))
    states[-1] = s
    controls = np.empty((n_steps + 1, modes.control[0].shape[0]))
    for mode, u in enumerate(modes.control):
        sel = sigma == mode
        controls[sel] = states[sel] @ u.T
    return times, states, controls, wrec, sigma


def _check_common(p: Plant, e: TopologyEnsemble, g: MarkovGenerator, dt, t_end):
    if e.size != g.n_states:
        raise ValueError(f"{e.size} topologies but the generator has {g.n_states} states")
    if not dt > 0 or not t_end > 0:
        raise ValueError("dt and t_end must be positive")


def _as_agents(v, n_ag: int, dim: int, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.size != n_ag * dim:
        raise ValueError(f"{name} needs {n_ag * dim} entries, got {arr.size}")
    return arr.reshape(n_ag * dim)


def simulate_full_order(
    p: Plant,
    proto: FullOrderProtocol,
    e: TopologyEnsemble,
    g: MarkovGenerator,
    x0,
    xhat0,
    dist=None,
    t_end: float = 10.0,
    dt: float = 1e-3,
    seed: int = 0,
    initial_mode: int | None = None,
) -> Trajectory:
    """Integrate agents with the full-order observer protocol over one sampled switching path.

    Parameters
    ----------
    x0, xhat0 : array_like
        Initial agent and observer states, ``N * n`` entries (agent-major).
    dist : disturbance spec, optional
        ``Zero()`` when omitted.
    seed : int
        Seeds the switching path and, unless ``initial_mode`` is given, the
        initial topology drawn from the invariant distribution.

    Raises
    ------
    NumericalBlowup
        A state norm exceeded ``1e12``.
    """
    dist = Zero() if dist is None else dist
    _check_common(p, e, g, dt, t_end)
    n_ag, n = e.n_nodes, p.n
    check_shape(dist, n_ag, p.ell)
    s0 = np.concatenate([_as_agents(x0, n_ag, n, "x0"), _as_agents(xhat0, n_ag, n, "xhat0")])
    path = _resolve_path(g, t_end, seed, initial_mode)
    modes = _full_order_modes(p, proto, e)
    times, st, u, w, sigma = _integrate(modes, s0, dist, path, t_end, dt, n_ag, p.ell)
    T = times.size
    return Trajectory(
        "full", times,
        st[:, : n_ag * n].reshape(T, n_ag, n), st[:, n_ag * n:].reshape(T, n_ag, n),
        u.reshape(T, n_ag, p.m), sigma, w.reshape(T, n_ag, p.ell), path, p, proto,
    )


def simulate_reduced_order(
    p: Plant,
    proto: ReducedOrderProtocol,
    e: TopologyEnsemble,
    g: MarkovGenerator,
    x0,
    v0,
    dist=None,
    t_end: float = 10.0,
    dt: float = 1e-3,
    seed: int = 0,
    initial_mode: int | None = None,
    observer_disturbance: bool = True,
) -> Trajectory:
    """Integrate agents with the reduced-order observer protocol.

    ``observer_disturbance=False`` drops the ``T D w_i`` input to the local
    observers (it presumes each agent measures its own disturbance).
    """
    dist = Zero() if dist is None else dist
    _check_common(p, e, g, dt, t_end)
    n_ag, n, k = e.n_nodes, p.n, p.n - p.q1
    check_shape(dist, n_ag, p.ell)
    s0 = np.concatenate([_as_agents(x0, n_ag, n, "x0"), _as_agents(v0, n_ag, k, "v0")])
    path = _resolve_path(g, t_end, seed, initial_mode)
    modes = _reduced_order_modes(p, proto, e, observer_disturbance)
    times, st, u, w, sigma = _integrate(modes, s0, dist, path, t_end, dt, n_ag, p.ell)
    T = times.size
    return Trajectory(
        "reduced", times,
        st[:, : n_ag * n].reshape(T, n_ag, n), st[:, n_ag * n:].reshape(T, n_ag, k),
        u.reshape(T, n_ag, p.m), sigma, w.reshape(T, n_ag, p.ell), path, p, proto,
    )
