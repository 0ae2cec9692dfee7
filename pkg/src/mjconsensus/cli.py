"""Command-line front end.

Exit codes
----------
0  success (certificates pass, performance checks met)
1  input error (bad config, missing or malformed file, inconsistent dimensions)
2  infeasible design, failed certificate or failed performance check
3  numerical blow-up during simulation
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import benchmark
from .config import RunConfig
from .graphs import has_spanning_tree, spectral_constants
from .markov import is_ergodic, stationary_distribution
from .matops import SharedEigenvalues
from .simcore import NumericalBlowup, run_paths, write_csv, Zero
from .synthesis import (
    DEFAULT_RHO_GRID,
    Infeasible,
    SingularStack,
    identity_residual,
    load_protocol,
    reduced_certificates,
    save_protocol,
    synthesize_full_order,
    synthesize_reduced_order,
    verify_full_order,
)

EXIT_OK, EXIT_INPUT, EXIT_FAILED, EXIT_BLOWUP = 0, 1, 2, 3
ROUNDOFF_TOL = 1e-9
SETTLING_BOUND = 8.0


class InputError(Exception):
    pass


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


# --- shared pipeline ----------------------------------------------------------

def _check_assumptions(e, g) -> None:
    if e.size != g.n_states:
        raise InputError(f"{e.size} topologies but the generator has {g.n_states} states")
    if not e.all_balanced():
        raise InputError("every topology must be a balanced digraph")
    if not has_spanning_tree(e.union_adjacency):
        raise InputError("the union graph has no directed spanning tree")
    if not is_ergodic(g):
        raise InputError("the switching generator is not irreducible")


def _scenario(cfg: RunConfig):
    p, e, g = cfg.plant(), cfg.ensemble(), cfg.generator()
    _check_assumptions(e, g)
    return p, e, g, spectral_constants(e), stationary_distribution(g).pi_bar


def verify_protocol(proto, p, sc, pi_bar):
    if proto.kind == "full":
        return verify_full_order(proto, p, sc, pi_bar)
    return reduced_certificates(proto, p, sc, pi_bar)


def _synthesize(cfg: RunConfig, p, sc, pi_bar):
    if cfg.kind == "full":
        return synthesize_full_order(
            p, sc, pi_bar, cfg.gamma, cfg.rho_grid or DEFAULT_RHO_GRID, tau=cfg.tau,
            decay_rate=cfg.decay_rate, observer_decay_rate=cfg.observer_decay_rate,
            input_gain_bound=cfg.input_gain_bound, step2_objective=cfg.step2_objective, strict=cfg.strict,
        )
    return synthesize_reduced_order(
        p, sc, pi_bar, cfg.gamma, cfg.rho_grid, cfg.f_bar_spec(), cfg.g_spec(), g_seed=cfg.g_seed,
        tau=cfg.tau, decay_rate=cfg.decay_rate, input_gain_bound=cfg.input_gain_bound, strict=cfg.strict,
    )


def _certificate_text(proto, report, p) -> str:
    lo, hi = report.tau_interval
    lines = [f"kind = {proto.kind}", f"certified = {str(proto.certified).lower()}", report.to_text().rstrip()]
    lines.append(f"tau_interval_nonempty = {lo < hi}")
    if proto.kind == "reduced":
        lines.append(f"identity_residual = {identity_residual(proto, p):.17g}")
    return "\n".join(lines) + "\n"


def _out_dir(args, cfg: RunConfig | None) -> Path:
    out = Path(args.out) if args.out else Path(cfg.out_dir if cfg is not None else "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _consensus_lines(result, tol: float):
    rep = result.report
    e0, e1 = rep.consensus_error_initial, rep.consensus_error_final
    if e0 == 0:
        # identical starts: any residual is roundoff, judged against the state magnitude
        met = e1 <= ROUNDOFF_TOL * result.state_peak
        lines = ["consensus_ratio = 0" if met else "consensus_ratio = inf"]
        if met:
            lines.append("consensus_note = identical initial states; consensus holds trivially")
    else:
        met = e1 <= tol * e0
        lines = [f"consensus_ratio = {e1 / e0:.17g}"]
    ms = result.mean_consensus_sq
    ms_ratio = ms[-1] / ms[0] if ms[0] > 0 else 0.0
    lines += [f"mean_square_ratio = {ms_ratio:.17g}", f"consensus_tolerance = {tol:.17g}",
              f"consensus_met = {met}"]
    if rep.zero_denominator:
        lines.append("jtr_note = zero disturbance and initial energy; scenario excluded from the ratio")
    return lines, met


# --- commands -----------------------------------------------------------------

def cmd_synthesize(args) -> int:
    cfg = RunConfig.load(args.config)
    p, e, g, sc, pi_bar = _scenario(cfg)
    out = _out_dir(args, cfg)
    (out / "effective_config.txt").write_text(cfg.to_text(), encoding="utf-8")
    try:
        proto = _synthesize(cfg, p, sc, pi_bar)
    except Infeasible as exc:
        _err(f"infeasible: {exc}")
        (out / "diagnostics.txt").write_text(str(exc) + "\n", encoding="utf-8")
        return EXIT_FAILED
    report = verify_protocol(proto, p, sc, pi_bar)
    save_protocol(out / "protocol.txt", proto)
    (out / "certificate.txt").write_text(_certificate_text(proto, report, p), encoding="utf-8")
    print(_certificate_text(proto, report, p), end="")
    if not (proto.certified and report.passed):
        _err("design did not produce a verified protocol")
        return EXIT_FAILED
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = RunConfig.load(args.config)
    p, e, g, sc, pi_bar = _scenario(cfg)
    proto = _load_protocol(args)
    report = verify_protocol(proto, p, sc, pi_bar)
    text = _certificate_text(proto, report, p)
    print(text, end="")
    if args.out:
        (_out_dir(args, cfg) / "certificate.txt").write_text(text, encoding="utf-8")
    return EXIT_OK if report.passed else EXIT_FAILED


def _load_protocol(args):
    if not args.protocol:
        raise InputError("--protocol is required")
    path = Path(args.protocol)
    if not path.is_file():
        raise InputError(f"protocol file not found: {path}")
    return load_protocol(path)


def cmd_simulate(args) -> int:
    cfg = RunConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.paths is not None:
        cfg.n_paths = args.paths
    cfg.validate()
    p, e, g, sc, pi_bar = _scenario(cfg)
    proto = _load_protocol(args)
    out = _out_dir(args, cfg)
    (out / "effective_config.txt").write_text(cfg.to_text(), encoding="utf-8")
    cert = verify_protocol(proto, p, sc, pi_bar)
    if not cert.passed:
        _err("warning: protocol certificates do not pass; simulating anyway")
    x0, xhat0, v0 = cfg.initial_states(e.n_nodes, p.n, p.n - p.q1)
    obs0 = xhat0 if proto.kind == "full" else v0
    extra = {} if proto.kind == "full" else {"observer_disturbance": cfg.observer_disturbance}

    def dump(k, tr):
        write_csv(tr, out / f"path_{k:03d}.csv", stride=cfg.csv_stride)

    header = [f"kind = {proto.kind}", f"certificate_passed = {cert.passed}"]
    try:
        result = run_paths(p, proto, e, g, x0, obs0, cfg.disturbance_spec(), cfg.n_paths, cfg.seed,
                           cfg.t_end, cfg.dt, cfg.settle_band, cfg.overshoot_channels, on_path=dump, **extra)
    except NumericalBlowup as exc:
        (out / "report.txt").write_text("\n".join(header + [f"blowup = {exc}"]) + "\n", encoding="utf-8")
        _err(f"numerical blow-up: {exc}")
        return EXIT_BLOWUP
    lines, met = _consensus_lines(result, cfg.consensus_tol)
    text = "\n".join(header) + "\n" + result.report.to_text() + "\n".join(lines) + "\n"
    (out / "report.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK if result.report.passed and met else EXIT_FAILED


# --- embedded benchmark ---------------------------------------------------------

def _demo_one(kind: str, out: Path, seed: int, n_paths: int, t_end: float, dt: float):
    """Design, certify and simulate one protocol on the benchmark; returns (summary dict, exit code)."""
    p, e, g = benchmark.plant(), benchmark.ensemble(), benchmark.generator()
    sc, pi_bar = spectral_constants(e), stationary_distribution(g).pi_bar
    proto = benchmark.full_protocol() if kind == "full" else benchmark.reduced_protocol()
    cert = verify_protocol(proto, p, sc, pi_bar)
    save_protocol(out / f"{kind}_protocol.txt", proto)
    cert_text = _certificate_text(proto, cert, p)
    (out / f"{kind}_certificate.txt").write_text(cert_text, encoding="utf-8")

    x0, xhat0, v0 = benchmark.initial_states()
    obs0 = xhat0 if kind == "full" else v0
    channel = [(3, benchmark.PITCH)]

    def dump(k, tr):
        if k == 0:
            write_csv(tr, out / f"{kind}_path000.csv", stride=10)

    quiet = run_paths(p, proto, e, g, x0, obs0, Zero(), n_paths, seed, t_end, dt, overshoot_channels=channel)
    loud = run_paths(p, proto, e, g, x0, obs0, benchmark.disturbance(), n_paths, seed, t_end, dt,
                     overshoot_channels=channel, on_path=dump)
    pitch = [s.transients[channel[0]] for s in quiet.summaries]
    settle = quiet.report.settling_time
    summary = {
        "certified": proto.certified,
        "certificate_passed": cert.passed,
        "tau": proto.tau,
        "tau_interval": cert.tau_interval,
        "settling_time": settle,
        "settled_within_bound": settle is not None and settle <= SETTLING_BOUND,
        "mean_square_ratio": quiet.mean_consensus_sq[-1] / quiet.mean_consensus_sq[0],
        "pitch_overshoot": float(np.mean([m.overshoot for m in pitch])),
        "pitch_oscillations": float(np.mean([m.oscillation_count for m in pitch])),
        "jtr_ratio": loud.report.jtr_ratio,
        "jtr_standard_error": loud.report.standard_error,
        "jtr_passed": loud.report.passed,
    }
    if kind == "reduced":
        summary["identity_residual"] = identity_residual(proto, p)
    lines = [cert_text.rstrip(), "[disturbance-free runs]", quiet.report.to_text().rstrip(),
             "[square-wave runs]", loud.report.to_text().rstrip(), "[summary]"]
    lines += [f"{k} = {_fmt(v)}" for k, v in summary.items()]
    (out / f"{kind}_report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    ok = proto.certified and cert.passed and loud.report.passed and summary["mean_square_ratio"] < 1e-4
    return summary, ok


def _fmt(v) -> str:
    if v is None:
        return "unsettled"
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, tuple):
        return "(" + ", ".join(f"{x:.6g}" for x in v) + ")"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def cmd_helicopter_demo(args) -> int:
    out = _out_dir(args, None)
    seed = 0 if args.seed is None else args.seed
    n_paths = 20 if args.paths is None else args.paths
    kinds = ("full", "reduced") if args.kind == "compare" else (args.kind,)
    results = {}
    for kind in kinds:
        try:
            results[kind] = _demo_one(kind, out, seed, n_paths, 20.0, 1e-3)
        except NumericalBlowup as exc:
            _err(f"{kind}: numerical blow-up: {exc}")
            return EXIT_BLOWUP
        except Infeasible as exc:
            _err(f"{kind}: infeasible: {exc}")
            return EXIT_FAILED
    for kind, (summary, ok) in results.items():
        print(f"[{kind}]")
        for k, v in summary.items():
            print(f"  {k} = {_fmt(v)}")
        print(f"  all_checks_passed = {_fmt(ok)}")
    if args.kind != "compare":
        return EXIT_OK if results[args.kind][1] else EXIT_FAILED
    full, red = results["full"][0], results["reduced"][0]
    rows = ("settling_time", "settled_within_bound", "pitch_overshoot", "pitch_oscillations", "jtr_ratio",
            "mean_square_ratio", "certified")
    lines = [f"{'metric':<22}{'full':>16}{'reduced':>16}"]
    lines += [f"{r:<22}{_fmt(full[r]):>16}{_fmt(red[r]):>16}" for r in rows]
    smaller = "reduced" if red["pitch_overshoot"] < full["pitch_overshoot"] else "full"
    lines += [
        f"settling_bound = {SETTLING_BOUND:g}",
        f"smaller_pitch_overshoot = {smaller}",
        "expected_smaller_pitch_overshoot = reduced (non-blocking)",
    ]
    text = "\n".join(lines) + "\n"
    (out / "compare_report.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    ok = all(ok for _, ok in results.values()) and full["settled_within_bound"] and red["settled_within_bound"]
    return EXIT_OK if ok else EXIT_FAILED


# --- entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mjconsensus", description=__doc__.split("\n", 1)[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, config=True, protocol=False):
        if config:
            sp.add_argument("--config", required=True, help="run configuration file")
        if protocol:
            sp.add_argument("--protocol", help="protocol text file")
        sp.add_argument("--out", help="output directory (default: output.dir from the config, or ./out)")

    common(sub.add_parser("synthesize", help="design a protocol and write it with its certificate report"))
    common(sub.add_parser("verify", help="re-check a protocol's certificates"), protocol=True)
    sim = sub.add_parser("simulate", help="Monte-Carlo simulation of a protocol")
    common(sim, protocol=True)
    sim.add_argument("--seed", type=int, help="master seed; path k uses seed + k")
    sim.add_argument("--paths", type=int, help="number of switching paths")
    demo = sub.add_parser("helicopter-demo", help="embedded four-helicopter benchmark")
    common(demo, config=False)
    demo.add_argument("--kind", choices=("full", "reduced", "compare"), default="compare")
    demo.add_argument("--seed", type=int)
    demo.add_argument("--paths", type=int)
    return parser


_COMMANDS = {
    "synthesize": cmd_synthesize,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "helicopter-demo": cmd_helicopter_demo,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (SingularStack, SharedEigenvalues) as exc:
        _err(f"design failed: {exc}")
        return EXIT_FAILED
    except (InputError, ValueError) as exc:
        # ConfigError, ProtocolFormatError, DimensionMismatch and argument checks are ValueErrors
        _err(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
