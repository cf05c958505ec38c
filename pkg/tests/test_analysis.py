import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bearing_pose.analysis import (enumerate_equilibria, equilibria_report, error_discrepancy,
                                   escape_time, exact_attitude_config, fitted_decay_rate,
                                   ges_envelope_check, iss_envelope_check, linearize_unforced,
                                   lyapunov, simulate_error_dynamics, simulate_unforced,
                                   unforced_field)
from bearing_pose.geom3 import angle_axis, exp_so3, rotation_distance, skew, sym_eig3
from bearing_pose.network import bearing_matrix, stiffness_matrix
from bearing_pose.sim import run


@pytest.fixture(scope="module")
def M3(ref):
    return bearing_matrix(3, ref.topology, ref.positions)


@st.composite
def unit_vectors(draw):
    v = np.array(draw(st.lists(st.floats(-1, 1), min_size=3, max_size=3)))
    n = np.linalg.norm(v)
    return v / n if n > 1e-3 else np.array([1.0, 0.0, 0.0])


def test_equilibria_are_fixed_points(M3):
    eq = enumerate_equilibria(3, M3)
    assert len(eq.points) == 4
    assert max(eq.residuals) <= 1e-10
    for R in eq.points:
        assert np.linalg.norm(unforced_field(M3, R)) <= 1e-10


def test_repeated_eigenvalues_rejected_unless_allowed(ref):
    M8 = bearing_matrix(8, ref.topology, ref.positions)
    with pytest.raises(ValueError, match="repeated"):
        enumerate_equilibria(8, M8)
    eq = enumerate_equilibria(8, M8, allow_repeated=True)
    assert max(eq.residuals) <= 1e-10


@pytest.mark.parametrize("agent", [3, 6, 7])
def test_linearization_at_identity_is_minus_stiffness(ref, agent):
    # d/dt eta = -k_R Q eta near the identity
    M = bearing_matrix(agent, ref.topology, ref.positions)
    Q = stiffness_matrix(agent, ref.topology, ref.positions)
    ev = linearize_unforced(agent, M, np.eye(3), k_R=2.0)
    assert np.allclose(np.sort(ev.real), np.sort(-2.0 * np.linalg.eigvalsh(Q)), atol=1e-6)
    assert np.allclose(ev.imag, 0.0, atol=1e-8)


def test_linearization_scales_with_gain(M3):
    at = enumerate_equilibria(3, M3).points[2]
    a = linearize_unforced(3, M3, at, k_R=1.0)
    b = linearize_unforced(3, M3, at, k_R=3.0)
    assert np.allclose(b, 3.0 * a, atol=1e-6)


def test_linearization_refuses_non_equilibria(M3):
    with pytest.raises(ValueError, match="not an equilibrium"):
        linearize_unforced(3, M3, exp_so3([0.3, 0.0, 0.0]))


def test_escape_from_half_turns(M3):
    for R in enumerate_equilibria(3, M3).points[1:]:
        t = escape_time(M3, R)
        assert math.isfinite(t) and t > 0


def test_unforced_flow_descends_lyapunov(M3):
    R0 = angle_axis(2.5, np.array([0.0, 0.6, 0.8]))
    _, Rs = simulate_unforced(M3, R0, horizon=20.0, h=1e-2)
    V = np.array([lyapunov(M3, R) for R in Rs])
    assert np.all(np.diff(V) <= 1e-12)
    assert rotation_distance(Rs[-1]) < 1e-2


@given(st.floats(0.01, math.pi - 0.01), unit_vectors())
def test_dissipation_rate_identity(ref, M3, theta, v):
    # along the unforced flow d/dt |R|^2 = -k_R sin^2(theta) v^T Q v / 2 at R = exp(theta v)
    Q = stiffness_matrix(3, ref.topology, ref.positions)
    R = angle_axis(theta, v)
    w = unforced_field(M3, R, 1.0)
    rate = -0.25 * np.trace(R @ skew(w))
    assert rate == pytest.approx(-0.5 * math.sin(theta) ** 2 * v @ Q @ v, abs=1e-12)
    # hence the guaranteed bound is -2 k_R lq (1 - |R|^2) |R|^2
    lq = sym_eig3(Q)[0][0]
    d2 = rotation_distance(R) ** 2
    assert rate <= -2.0 * lq * (1 - d2) * d2 + 1e-12


def test_dissipation_bound_with_factor_four_is_not_guaranteed(ref, M3):
    Q = stiffness_matrix(3, ref.topology, ref.positions)
    lq, V = sym_eig3(Q)
    R = angle_axis(1.0, V[:, 0])  # rotation about the weakest stiffness direction
    rate = -0.25 * np.trace(R @ skew(unforced_field(M3, R, 1.0)))
    d2 = rotation_distance(R) ** 2
    assert rate > -4.0 * lq[0] * (1 - d2) * d2


def test_error_oracle_agrees_with_observers(ref):
    c = ref.with_overrides(horizon=3.0)
    d = error_discrepancy(run(c), simulate_error_dynamics(c))
    assert d["R_tilde"] < 1e-11 and d["p_tilde"] < 1e-10


def test_error_oracle_independent_of_truth_attitudes(ref, rng):
    c = ref.with_overrides(horizon=1.0)
    R0 = np.array([exp_so3(rng.standard_normal(3)) for _ in range(c.n)])
    d = error_discrepancy(run(c, R_truth0=R0), simulate_error_dynamics(c, R_truth0=R0))
    assert d["R_tilde"] < 1e-11


def test_discrepancy_needs_same_grid(ref):
    c = ref.with_overrides(horizon=0.2)
    with pytest.raises(ValueError):
        error_discrepancy(run(c), simulate_error_dynamics(c, stride=5))


def test_fitted_rate():
    t = np.linspace(0, 5, 50)
    assert fitted_decay_rate(t, 3.0 * np.exp(-0.7 * t)) == pytest.approx(0.7)
    assert math.isnan(fitted_decay_rate(t, np.zeros_like(t)))


def test_ges_envelope_single_agent(ref):
    c = exact_attitude_config(ref, 3).with_overrides(horizon=5.0)
    env = ges_envelope_check(run(c), 3, c)
    assert env.ok
    assert env.fitted_rate >= 1 - 1 / math.sqrt(2)
    with pytest.raises(ValueError):
        exact_attitude_config(ref, 1)


def test_iss_check_and_reports(ref, ref_run):
    for i in ref.followers:
        assert iss_envelope_check(ref_run, i, ref).ok
    report = equilibria_report(ref.with_overrides(k_R=2.0), horizon=50.0)
    assert report["8"]["distinct"] is False
    assert all(entry["ok"] for entry in report.values())
    assert report["3"]["equilibria"][0]["eigenvalues_real"][0] == pytest.approx(-4.0, abs=1e-6)
