"""Run configuration: flat ``key = value`` text with dotted section prefixes.

Example::

    plant.a = A.txt
    plant.b = B.txt
    plant.c1 = C.txt
    plant.c2 = C.txt
    plant.d = D.txt
    topology.graphs = G1.txt, G2.txt
    markov.generator = Q.txt
    synthesis.kind = reduced
    synthesis.gamma = 4
    synthesis.f_bar_eigenvalues = -1, -1.5, -2, -2.5, -3, -3.5
    simulation.t_end = 20
    simulation.disturbance = square

Relative file paths are resolved against the directory of the config file.
Lines starting with ``#`` are comments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graphs import TopologyEnsemble, ensemble_from_adjacencies
from .markov import MarkovGenerator
from .matio import load_matrix
from .simcore import Samples, SquareWave, Zero
from .synthesis import Plant


class ConfigError(ValueError):
    pass


def parse_config_text(text: str, source: str = "<string>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = val
    return out


def _floats(s: str) -> list:
    return [float(tok) for tok in s.replace(",", " ").split()]


def _channels(s: str) -> tuple:
    """``"4:6, 1:6"`` (1-based agent:state) -> ``((3, 5), (0, 5))``."""
    out = []
    for tok in s.split(","):
        tok = tok.strip()
        if not tok:
            continue
        agent, state = (int(v) for v in tok.split(":"))
        if agent < 1 or state < 1:
            raise ValueError(f"agent and state indices are 1-based, got {tok!r}")
        out.append((agent - 1, state - 1))
    return tuple(out)


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# key -> (attribute, parser); file-valued keys are handled separately
_FILE_KEYS = {
    "plant.a": "a_file", "plant.b": "b_file", "plant.c1": "c1_file", "plant.c2": "c2_file",
    "plant.d": "d_file", "plant.r": "r_file", "markov.generator": "generator_file",
    "synthesis.f_bar": "f_bar_file", "synthesis.g": "g_file",
    "simulation.x0": "x0_file", "simulation.xhat0": "xhat0_file", "simulation.v0": "v0_file",
    "simulation.disturbance.file": "disturbance_file",
}
_VALUE_KEYS = {
    "synthesis.kind": ("kind", str),
    "synthesis.gamma": ("gamma", float),
    "synthesis.rho_grid": ("rho_grid", lambda s: tuple(_floats(s))),
    "synthesis.tau": ("tau", float),
    "synthesis.f_bar_eigenvalues": ("f_bar_eigenvalues", lambda s: tuple(_floats(s))),
    "synthesis.g_seed": ("g_seed", int),
    "synthesis.decay_rate": ("decay_rate", float),
    "synthesis.observer_decay_rate": ("observer_decay_rate", float),
    "synthesis.input_gain_bound": ("input_gain_bound", float),
    "synthesis.step2_objective": ("step2_objective", str),
    "synthesis.strict": ("strict", _bool),
    "simulation.t_end": ("t_end", float),
    "simulation.dt": ("dt", float),
    "simulation.n_paths": ("n_paths", int),
    "simulation.seed": ("seed", int),
    "simulation.initial_seed": ("initial_seed", int),
    "simulation.observer_disturbance": ("observer_disturbance", _bool),
    "simulation.disturbance": ("disturbance", str),
    "simulation.disturbance.amplitude": ("amplitude", lambda s: tuple(_floats(s))),
    "simulation.disturbance.period": ("period", float),
    "simulation.disturbance.phase": ("phase", float),
    "simulation.disturbance.agent_phase_step": ("agent_phase_step", float),
    "simulation.settle_band": ("settle_band", float),
    "simulation.consensus_tol": ("consensus_tol", float),
    "simulation.csv_stride": ("csv_stride", int),
    "simulation.overshoot": ("overshoot_channels", _channels),
    "output.dir": ("out_dir", str),
}


@dataclass
class RunConfig:
    a_file: Path | None = None
    b_file: Path | None = None
    c1_file: Path | None = None
    c2_file: Path | None = None
    d_file: Path | None = None
    r_file: Path | None = None
    graph_files: tuple = ()
    generator_file: Path | None = None
    kind: str = "full"
    gamma: float = 4.0
    rho_grid: tuple | None = None
    tau: float | None = None
    f_bar_eigenvalues: tuple | None = None
    f_bar_file: Path | None = None
    g_file: Path | None = None
    g_seed: int = 0
    decay_rate: float = 0.0
    observer_decay_rate: float = 0.0
    input_gain_bound: float | None = None
    step2_objective: str = "max_r2"
    strict: bool = True
    t_end: float = 20.0
    dt: float = 1e-3
    n_paths: int = 20
    seed: int = 0
    initial_seed: int = 1
    x0_file: Path | None = None
    xhat0_file: Path | None = None
    v0_file: Path | None = None
    observer_disturbance: bool = True
    disturbance: str = "square"
    amplitude: tuple = (1.0,)
    period: float = 2 * np.pi
    phase: float = 0.0
    agent_phase_step: float = 0.0
    disturbance_file: Path | None = None
    settle_band: float = 0.02
    consensus_tol: float = 0.01
    csv_stride: int = 1
    overshoot_channels: tuple = ()
    out_dir: str = "out"
    base_dir: Path = field(default=Path("."), repr=False)

    # --- loading -----------------------------------------------------------
    @classmethod
    def from_mapping(cls, kv: dict, base_dir=".") -> "RunConfig":
        base = Path(base_dir)
        cfg = cls(base_dir=base)
        for key, val in kv.items():
            try:
                if key in _FILE_KEYS:
                    setattr(cfg, _FILE_KEYS[key], base / val)
                elif key == "topology.graphs":
                    cfg.graph_files = tuple(base / tok.strip() for tok in val.split(",") if tok.strip())
                elif key in _VALUE_KEYS:
                    attr, conv = _VALUE_KEYS[key]
                    setattr(cfg, attr, conv(val))
                else:
                    raise ConfigError(f"unknown config key {key!r}")
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"bad value for {key}: {exc}") from None
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        return cls.from_mapping(parse_config_text(text, str(path)), path.parent)

    def validate(self) -> None:
        if self.kind not in ("full", "reduced"):
            raise ConfigError(f"synthesis.kind must be full or reduced, got {self.kind!r}")
        if not self.gamma > 0:
            raise ConfigError("synthesis.gamma must be positive")
        if not self.dt > 0 or not self.t_end > 0:
            raise ConfigError("simulation.dt and simulation.t_end must be positive")
        if self.n_paths < 1:
            raise ConfigError("simulation.n_paths must be at least 1")
        if self.disturbance not in ("zero", "square", "samples"):
            raise ConfigError("simulation.disturbance must be zero, square or samples")
        if self.disturbance == "samples" and self.disturbance_file is None:
            raise ConfigError("simulation.disturbance = samples needs simulation.disturbance.file")
        if self.step2_objective not in ("max_r2", "feasibility"):
            raise ConfigError("synthesis.step2_objective must be max_r2 or feasibility")
        if self.kind == "reduced" and self.f_bar_eigenvalues is None and self.f_bar_file is None:
            raise ConfigError("reduced-order synthesis needs synthesis.f_bar or synthesis.f_bar_eigenvalues")
        for name in ("a_file", "b_file", "c1_file", "c2_file", "d_file", "generator_file"):
            if getattr(self, name) is None:
                key = next(k for k, v in _FILE_KEYS.items() if v == name)
                raise ConfigError(f"missing required key {key}")
        if not self.graph_files:
            raise ConfigError("missing required key topology.graphs")

    # --- materialising -----------------------------------------------------
    @staticmethod
    def _matrix(path) -> np.ndarray:
        if not Path(path).is_file():
            raise ConfigError(f"matrix file not found: {path}")
        try:
            return load_matrix(path)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def plant(self) -> Plant:
        r = self._matrix(self.r_file) if self.r_file is not None else None
        try:
            return Plant(
                self._matrix(self.a_file), self._matrix(self.b_file), self._matrix(self.c1_file),
                self._matrix(self.c2_file), self._matrix(self.d_file), r,
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid plant: {exc}") from None

    def ensemble(self) -> TopologyEnsemble:
        try:
            return ensemble_from_adjacencies([self._matrix(f) for f in self.graph_files])
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid topology: {exc}") from None

    def generator(self) -> MarkovGenerator:
        try:
            return MarkovGenerator(self._matrix(self.generator_file))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid generator: {exc}") from None

    def f_bar_spec(self):
        if self.f_bar_file is not None:
            return self._matrix(self.f_bar_file)
        return None if self.f_bar_eigenvalues is None else np.array(self.f_bar_eigenvalues)

    def g_spec(self):
        return None if self.g_file is None else self._matrix(self.g_file)

    def disturbance_spec(self):
        if self.disturbance == "zero":
            return Zero()
        if self.disturbance == "square":
            amp = self.amplitude[0] if len(self.amplitude) == 1 else tuple(self.amplitude)
            return SquareWave(amp, self.period, self.phase, self.agent_phase_step)
        data = self._matrix(self.disturbance_file)
        return Samples(data[:, 0], data[:, 1:])

    def initial_states(self, n_agents: int, n: int, k: int):
        """``x0, xhat0, v0``: from files when given, else uniform [-1, 1] from ``initial_seed``."""
        rng = np.random.default_rng(self.initial_seed)
        drawn = (rng.uniform(-1, 1, (n_agents, n)), rng.uniform(-1, 1, (n_agents, n)), rng.uniform(-1, 1, (n_agents, k)))
        out = []
        for f, default, dim in zip((self.x0_file, self.xhat0_file, self.v0_file), drawn, (n, n, k)):
            if f is None:
                out.append(default)
                continue
            m = self._matrix(f)
            if m.size != n_agents * dim:
                raise ConfigError(f"{f}: expected {n_agents} x {dim} entries, got {m.size}")
            out.append(m.reshape(n_agents, dim))
        return tuple(out)

    # --- writing -----------------------------------------------------------
    def to_text(self) -> str:
        """Effective configuration with defaults filled and absolute paths."""
        lines = []
        for key, attr in _FILE_KEYS.items():
            v = getattr(self, attr)
            if v is not None:
                lines.append(f"{key} = {Path(v).resolve()}")
        lines.append("topology.graphs = " + ", ".join(str(Path(f).resolve()) for f in self.graph_files))
        for key, (attr, _) in _VALUE_KEYS.items():
            v = getattr(self, attr)
            if v is None:
                continue
            if attr == "overshoot_channels":
                if not v:
                    continue
                v = ", ".join(f"{a + 1}:{c + 1}" for a, c in v)
            elif isinstance(v, tuple):
                v = ", ".join(f"{x:.17g}" for x in v)
            elif isinstance(v, bool):
                v = str(v).lower()
            elif isinstance(v, float):
                v = f"{v:.17g}"
            lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"
