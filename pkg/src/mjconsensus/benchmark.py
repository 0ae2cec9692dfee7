"""Four-helicopter benchmark: linearised hover model, two switching topologies."""

from __future__ import annotations

import numpy as np

from .graphs import Digraph, TopologyEnsemble
from .markov import MarkovGenerator
from .synthesis.plant import Plant

STATE_NAMES = ("U", "V", "p", "q", "phi", "theta", "a_s", "b_s", "W", "r", "r_fb")
ROLL = STATE_NAMES.index("phi")
PITCH = STATE_NAMES.index("theta")

A = np.array([
    [-0.1778, 0, 0, 0, 0, -9.7807, -9.7807, 0, 0, 0, 0],
    [0, -0.3104, 0, 0, 9.7807, 0, 0, 9.7807, 0, 0, 0],
    [-0.3326, -0.5353, 0, 0, 0, 0, 75.7640, 343.8600, 0, 0, 0],
    [0.1903, -0.2940, 0, 0, 0, 0, 172.6200, -59.9580, 0, 0, 0],
    [0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, -1, 0, 0, -8.1222, 4.6535, 0, 0, 0],
    [0, 0, -1, 0, 0, 0, -0.0921, -8.1222, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 17.1680, 7.1018, -0.6821, -0.1070, 0],
    [0, 0, -0.2834, 0, 0, 0, 0, 0, -0.1446, -5.5561, -36.6740],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 2.7492, -11.1120],
])

B = np.zeros((11, 3))
B[6] = [0.0632, 3.3390, 0]
B[7] = [3.1739, 0.2216, 0]
B[9] = [0, 0, -74.364]

D = np.zeros((11, 2))
D[:4] = [[-0.1778, 0], [0, -0.3104], [-0.3326, -0.5353], [0.1903, -0.2940]]

# measured: phi, theta, r, p, q
C = np.zeros((5, 11))
for row, col in enumerate((4, 5, 9, 2, 3)):
    C[row, col] = 1.0

GENERATOR = np.array([[-1.0, 1.0], [2.0, -2.0]])
GAMMA = 4.0
TAU = 1.4
DISTURBANCE_PERIOD = 2 * np.pi

# observer dynamics: companion matrix with char. poly s^6 + 10 s^5 + ... + 8.2944
F_BAR_CHARPOLY = (10.0, 38.92, 75.36, 77.2416, 40.0896, 8.2944)

# Both graphs are unit-weight, directed and balanced: G1 is the ring 1->2->3->4->1,
# G2 the two opposite-pair exchanges 1<->3, 2<->4.  Their union is the ring plus chords.
RING = Digraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
CHORDS = Digraph.from_edges(4, [(0, 2), (2, 0), (1, 3), (3, 1)])


def plant() -> Plant:
    return Plant(A, B, C, C, D, np.eye(11))


def ensemble() -> TopologyEnsemble:
    return TopologyEnsemble((RING, CHORDS))


def generator() -> MarkovGenerator:
    return MarkovGenerator(GENERATOR)


def companion(charpoly_tail) -> np.ndarray:
    """Bottom-row companion matrix for ``s^k + c[0] s^(k-1) + ... + c[k-1]``."""
    c = np.asarray(charpoly_tail, dtype=float)
    k = c.size
    f = np.zeros((k, k))
    f[:-1, 1:] = np.eye(k - 1)
    f[-1] = -c[::-1]
    return f


def f_bar() -> np.ndarray:
    return companion(F_BAR_CHARPOLY)


# Gains printed alongside the original benchmark; reference only, never a test target.
REFERENCE_G = np.array([
    [0.3435, 0.2485, 0.6139, 0.1746, 0.3182],
    [0.6631, 0.9087, 0.6521, 0.0599, 0.9556],
    [0.5162, 0.8895, 0.6013, 0.1524, 0.0290],
    [0.7967, 0.9898, 0.7978, 0.3834, 0.3972],
    [0.5766, 0.3237, 0.6104, 0.0131, 0.2728],
    [0.0669, 0.9874, 0.3772, 0.9654, 0.3619],
])


# Design settings used for the benchmark runs.  decay_rate, observer_decay_rate
# and input_gain_bound are optional constraints on top of the plain design LMIs
# that keep the closed loop well damped and non-stiff at dt = 1e-3.
FULL_DESIGN = dict(
    rho_grid=(1.0,), tau=TAU, decay_rate=0.5, observer_decay_rate=0.5,
    input_gain_bound=300.0, step2_objective="feasibility",
)
REDUCED_DESIGN = dict(tau=TAU, decay_rate=0.5, input_gain_bound=300.0, g_seed=1)
INITIAL_STATE_SEED = 1


def full_protocol(strict: bool = False, **overrides):
    """Full-order design on the benchmark.

    The design LMIs admit no coupling interval for this plant (its A is not
    Hurwitz), so by default the best uncertified candidate is returned.
    """
    from .graphs import spectral_constants
    from .markov import stationary_distribution
    from .synthesis import synthesize_full_order

    opts = {**FULL_DESIGN, **overrides}
    pi_bar = stationary_distribution(generator()).pi_bar
    return synthesize_full_order(plant(), spectral_constants(ensemble()), pi_bar, GAMMA, strict=strict, **opts)


def reduced_protocol(**overrides):
    from .graphs import spectral_constants
    from .markov import stationary_distribution
    from .synthesis import synthesize_reduced_order

    opts = {**REDUCED_DESIGN, **overrides}
    pi_bar = stationary_distribution(generator()).pi_bar
    return synthesize_reduced_order(plant(), spectral_constants(ensemble()), pi_bar, GAMMA, f_bar_spec=f_bar(), **opts)


def initial_states(seed: int = INITIAL_STATE_SEED, n_agents: int = 4):
    """Uniform [-1, 1] draws for x0, xhat0 and v0 (in that order), agent-major."""
    rng = np.random.default_rng(seed)
    n, k = A.shape[0], A.shape[0] - C.shape[0]
    x0 = rng.uniform(-1, 1, (n_agents, n))
    xhat0 = rng.uniform(-1, 1, (n_agents, n))
    v0 = rng.uniform(-1, 1, (n_agents, k))
    return x0, xhat0, v0


def disturbance(agent_phase_step: float = np.pi / 2):
    """Unit square wave of period 2 pi, phase-shifted by ``agent_phase_step`` per agent.

    Identical disturbances on all agents cancel in the consensus error, so the
    default staggers them a quarter period apart.
    """
    from .simcore import SquareWave

    return SquareWave(amplitude=1.0, period=DISTURBANCE_PERIOD, agent_phase_step=agent_phase_step)


def write_config(directory, kind: str = "reduced") -> "Path":
    """Write the benchmark matrices and a ``kind`` run configuration into ``directory``.

    Returns the path of the configuration file.
    """
    from pathlib import Path

    from .matio import save_matrix

    if kind not in ("full", "reduced"):
        raise ValueError("kind must be full or reduced")
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for name, m in (("A", A), ("B", B), ("C", C), ("D", D), ("R", np.eye(A.shape[0])), ("Q", GENERATOR),
                    ("G1", RING.adjacency), ("G2", CHORDS.adjacency), ("F_bar", f_bar())):
        save_matrix(d / f"{name}.txt", m)
    lines = [
        "plant.a = A.txt", "plant.b = B.txt", "plant.c1 = C.txt", "plant.c2 = C.txt", "plant.d = D.txt",
        "plant.r = R.txt", "topology.graphs = G1.txt, G2.txt", "markov.generator = Q.txt",
        f"synthesis.kind = {kind}", f"synthesis.gamma = {GAMMA:g}",
    ]
    design = FULL_DESIGN if kind == "full" else REDUCED_DESIGN
    for key, val in design.items():
        if key == "rho_grid":
            val = ", ".join(f"{v:g}" for v in val)
        lines.append(f"synthesis.{key} = {val}")
    if kind == "full":
        lines.append("synthesis.strict = false")
    else:
        lines.append("synthesis.f_bar = F_bar.txt")
    lines += [
        "simulation.t_end = 20", "simulation.dt = 0.001", "simulation.n_paths = 20", "simulation.seed = 0",
        f"simulation.initial_seed = {INITIAL_STATE_SEED}", "simulation.disturbance = square",
        f"simulation.disturbance.period = {DISTURBANCE_PERIOD!r}",
        # a common wave leaves the consensus error untouched; set pi/2 to stagger the agents
        "simulation.disturbance.agent_phase_step = 0",
        f"simulation.overshoot = 4:{PITCH + 1}", "simulation.csv_stride = 10", f"output.dir = out_{kind}",
    ]
    path = d / f"{kind}.cfg"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
