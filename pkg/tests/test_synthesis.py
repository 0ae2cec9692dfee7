import dataclasses

import numpy as np
import pytest

from mjconsensus.graphs import ensemble_from_adjacencies, spectral_constants
from mjconsensus.matops import SharedEigenvalues, sylvester_residual
from mjconsensus.synthesis import (
    Infeasible,
    NotStabilizableDetectable,
    Plant,
    SingularStack,
    check_stabilizable_detectable,
    companion_from_eigenvalues,
    full_order_interval,
    identity_residual,
    observer_maps,
    reduced_certificates,
    synthesize_full_order,
    synthesize_reduced_order,
    verify_full_order,
)

PAIR = ensemble_from_adjacencies([np.array([[0.0, 1.0], [1.0, 0.0]])])
PAIR_SC = spectral_constants(PAIR)


def _plant(a, b, c1, c2=None, d=None):
    a = np.atleast_2d(np.asarray(a, float))
    c1 = np.atleast_2d(np.asarray(c1, float))
    c2 = c1 if c2 is None else c2
    d = np.atleast_2d(np.asarray(b, float)) if d is None else d
    return Plant(a, np.atleast_2d(np.asarray(b, float)), c1, c2, d)


def _hurwitz_plant():
    return _plant([[-1, 1], [0, -2]], [[0], [1]], np.eye(2), d=np.array([[0.0], [1.0]]))


def _double_integrator(c1):
    return _plant([[0, 1], [0, 0]], [[0], [1]], c1, np.eye(2), np.array([[0.0], [1.0]]))


# --- prechecks -------------------------------------------------------------------

def test_pbh_examples(heli):
    assert check_stabilizable_detectable(_plant([[0.0]], [[1.0]], [[1.0]]))
    assert not check_stabilizable_detectable(_plant([[1.0]], [[0.0]], [[1.0]], d=np.array([[1.0]])))
    assert not check_stabilizable_detectable(_plant([[1.0]], [[1.0]], [[0.0]]))
    assert check_stabilizable_detectable(heli["plant"])


def test_plant_validation():
    with pytest.raises(ValueError):
        Plant(np.eye(2), np.ones((3, 1)), np.eye(2), np.eye(2), np.ones((2, 1)))
    with pytest.raises(ValueError):
        Plant(np.eye(2), np.ones((2, 1)), np.eye(2), np.eye(2), np.ones((2, 1)), -np.eye(2))


# --- full order --------------------------------------------------------------------

def test_full_order_hurwitz_plant_verifies():
    p = _hurwitz_plant()
    proto = synthesize_full_order(p, PAIR_SC, 1.0, 10.0)
    rep = verify_full_order(proto, p, PAIR_SC, 1.0)
    assert proto.certified and rep.passed
    lo, hi = proto.tau_interval
    assert 0 < lo < proto.tau < hi
    # gains reconstruct from the certificates
    np.testing.assert_allclose(proto.k_gain, p.b.T @ np.linalg.inv(proto.p1), rtol=1e-8)
    np.testing.assert_allclose(proto.l_gain, np.linalg.solve(proto.p2, proto.y), rtol=1e-8)


def test_full_order_perturbations_fail():
    p = _hurwitz_plant()
    proto = synthesize_full_order(p, PAIR_SC, 1.0, 10.0)
    assert not verify_full_order(proto.with_tau(1e3 * proto.tau), p, PAIR_SC, 1.0).passed
    big = dataclasses.replace(proto, p2=proto.p2 * 1e6, l_gain=np.linalg.solve(proto.p2 * 1e6, proto.y))
    assert not verify_full_order(big, p, PAIR_SC, 1.0).trace_cond_p2


def test_full_order_tau_override_outside_interval():
    p = _hurwitz_plant()
    with pytest.raises(Infeasible) as info:
        synthesize_full_order(p, PAIR_SC, 1.0, 10.0, tau=100.0)
    assert info.value.diagnostics


def test_full_order_undetectable_is_infeasible():
    p = _plant([[1.0]], [[1.0]], [[0.0]])
    with pytest.raises(Infeasible):
        synthesize_full_order(p, PAIR_SC, 1.0, 10.0)
    with pytest.raises(NotStabilizableDetectable):
        synthesize_full_order(p, PAIR_SC, 1.0, 10.0)


def test_full_order_rejects_bad_grid():
    with pytest.raises(ValueError):
        synthesize_full_order(_hurwitz_plant(), PAIR_SC, 1.0, 10.0, rho_grid=[2.5])
    with pytest.raises(ValueError):
        synthesize_full_order(_hurwitz_plant(), PAIR_SC, 1.0, -1.0)


def test_full_order_marginal_plant_has_empty_interval():
    # For an eigenvector v of A with Re(lambda) >= 0 the first design inequality
    # forces r1 |Kv|^2 > rho (1 + pi^2 lam) |C1 v|^2 and the second forces
    # r2 |Kv|^2 < (rho / 8) |C1 v|^2, so r2 < r1 / 8 while the interval needs r2 > 4 r1.
    p = _double_integrator(np.eye(2))
    with pytest.raises(Infeasible) as info:
        synthesize_full_order(p, PAIR_SC, 1.0, 10.0)
    for dg in info.value.diagnostics:
        if dg.r1 is not None and dg.r2 is not None:
            assert dg.r2 < dg.r1 / 8


@pytest.mark.xfail(strict=True, reason="non-Hurwitz A leaves the coupling interval empty (see test above)")
def test_full_order_double_integrator_feasible():
    p = _double_integrator(np.eye(2))
    proto = synthesize_full_order(p, PAIR_SC, 1.0, 10.0)
    assert verify_full_order(proto, p, PAIR_SC, 1.0).passed


def test_full_order_benchmark_bound(heli, heli_full):
    # the benchmark A is not Hurwitz, so the best effort candidate is uncertified and r2 < r1 / 8
    assert not heli_full.certified
    assert heli_full.r2 < heli_full.r1 / 8
    rep = verify_full_order(heli_full, heli["plant"], heli["sc"], heli["pi_bar"])
    assert not rep.tau_inside
    assert rep.trace_cond_p1 and rep.trace_cond_p2


def test_full_order_interval_formula():
    assert full_order_interval(1.0, 8.0, 1.0) == (1.0, 2.0)


def test_full_order_deterministic():
    p = _hurwitz_plant()
    a = synthesize_full_order(p, PAIR_SC, 1.0, 10.0)
    b = synthesize_full_order(p, PAIR_SC, 1.0, 10.0)
    np.testing.assert_array_equal(a.k_gain, b.k_gain)
    np.testing.assert_array_equal(a.l_gain, b.l_gain)


# --- reduced order -----------------------------------------------------------------

def test_companion_realises_eigenvalues():
    eigs = [-1.0, -2.0, -3.0 + 1j, -3.0 - 1j]
    f = companion_from_eigenvalues(eigs)
    np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(f)), np.sort_complex(eigs), atol=1e-9)


def test_benchmark_companion_matches_charpoly():
    from mjconsensus import benchmark

    f = benchmark.f_bar()
    np.testing.assert_allclose(np.poly(f)[1:], benchmark.F_BAR_CHARPOLY, rtol=1e-12)
    assert np.linalg.eigvals(f).real.max() < 0


def test_reduced_double_integrator():
    p = _double_integrator(np.array([[1.0, 0.0]]))
    proto = synthesize_reduced_order(p, PAIR_SC, 1.0, 10.0, f_bar_spec=[-2.0])
    assert proto.f_bar.shape == (1, 1)
    rep = reduced_certificates(proto, p, PAIR_SC, 1.0)
    assert rep.passed, rep.to_text()


def test_reduced_benchmark(heli, heli_reduced):
    p, pr = heli["plant"], heli_reduced
    rep = reduced_certificates(pr, p, heli["sc"], heli["pi_bar"])
    assert pr.certified and rep.passed, rep.to_text()
    assert sylvester_residual(pr.t_map, p.a, pr.f_bar, pr.g_gain @ p.c1) <= 1e-8
    assert identity_residual(pr, p) <= 1e-8
    assert np.linalg.cond(np.vstack([p.c1, pr.t_map])) < 1e8
    np.testing.assert_allclose(pr.k_gain, p.b.T @ np.linalg.inv(pr.p1), rtol=1e-8)


def test_reduced_certificate_perturbations(heli, heli_reduced):
    p, sc, pb = heli["plant"], heli["sc"], heli["pi_bar"]
    assert not reduced_certificates(heli_reduced.with_tau(10 * heli_reduced.tau_interval[1]), p, sc, pb).passed
    bent = dataclasses.replace(heli_reduced, t_map=heli_reduced.t_map * 1.01)
    rep = reduced_certificates(bent, p, sc, pb)
    assert not rep.checks["sylvester_residual"] and not rep.passed


def test_reduced_shared_eigenvalue():
    # A has eigenvalues -1 and -2; choosing F-bar = [-2] makes the Sylvester equation singular
    p = _plant([[-1, 1], [0, -2]], [[0], [1]], [[1.0, 0.0]], np.eye(2), np.array([[0.0], [1.0]]))
    with pytest.raises(SharedEigenvalues):
        synthesize_reduced_order(p, PAIR_SC, 1.0, 10.0, f_bar_spec=[-2.0])
    with pytest.raises(SharedEigenvalues):
        observer_maps(p, np.array([[-2.0]]), np.array([[1.0]]))


def test_reduced_rejects_unstable_f_bar():
    p = _double_integrator(np.array([[1.0, 0.0]]))
    with pytest.raises(ValueError):
        synthesize_reduced_order(p, PAIR_SC, 1.0, 10.0, f_bar_spec=[0.5])


def test_reduced_singular_stack():
    # G = 0 gives T = 0 and a singular [C1; T]
    p = _double_integrator(np.array([[1.0, 0.0]]))
    with pytest.raises(SingularStack):
        synthesize_reduced_order(p, PAIR_SC, 1.0, 10.0, f_bar_spec=[-2.0], g_spec=np.zeros((1, 1)))
    with pytest.raises(SingularStack):
        observer_maps(p, np.array([[-2.0]]), np.zeros((1, 1)))


def test_reduced_rho_must_be_below_lambda_min2():
    p = _double_integrator(np.array([[1.0, 0.0]]))
    with pytest.raises(ValueError):
        synthesize_reduced_order(p, PAIR_SC, 1.0, 10.0, rho_grid=[PAIR_SC.lambda_min2], f_bar_spec=[-2.0])


def test_reduced_g_scaling_preserves_loop():
    # scaling G by s scales T by s and Q2 by 1/s; Q1 and Q2 T are unchanged
    p = _double_integrator(np.array([[1.0, 0.0]]))
    f = np.array([[-2.0]])
    g = np.array([[0.7]])
    t1, q11, q21, _ = observer_maps(p, f, g)
    t2, q12, q22, _ = observer_maps(p, f, 5 * g)
    np.testing.assert_allclose(t2, 5 * t1, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(q22, q21 / 5, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(q12, q11, rtol=1e-12, atol=1e-14)


def test_reduced_deterministic(heli):
    from mjconsensus import benchmark

    a, b = benchmark.reduced_protocol(), benchmark.reduced_protocol()
    np.testing.assert_array_equal(a.k_gain, b.k_gain)
    np.testing.assert_array_equal(a.q2_map, b.q2_map)
