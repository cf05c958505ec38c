import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bearing_pose.analysis import _error_terms
from bearing_pose.geom3 import exp_so3, random_rotation, skew
from bearing_pose.network import bearing_matrix
from bearing_pose.observers import (Gains, NeighborPacket, ObserverState, _observer_step,
                                    attitude_rate, correction_vector, f_term, position_rate)
from bearing_pose.world import _measure, edge_bearings, inertial_bearing


def _inputs(config, R, R_hat, p_hat, i):
    """Packets and own bearings of follower ``i`` given true attitudes ``R``."""
    state = ObserverState(R_hat, p_hat)
    own, packets = {}, []
    for j in config.topology.neighbors[i]:
        b = inertial_bearing(config.positions, i, j)
        own[j] = R[i - 1].T @ b
        packets.append(state.packet(j, R[j - 1].T @ (-b)))
    return state, packets, own


def _random_state(config, rng, spread=1.0):
    n = config.n
    R = np.array([random_rotation(rng) for _ in range(n)])
    R_hat = np.array([R[a] @ exp_so3(spread * rng.standard_normal(3)) for a in range(n)])
    R_hat[:2] = R[:2]
    p_hat = config.positions + spread * rng.standard_normal((n, 3))
    p_hat[:2] = config.positions[:2]
    return R, R_hat, p_hat


def test_exact_estimates_are_a_fixed_point(ref, rng):
    R = np.array([random_rotation(rng) for _ in range(ref.n)])
    gains = Gains(2.0, 3.0)
    omega = np.array([0.1, 0.2, -0.3])
    for i in ref.followers:
        state, packets, own = _inputs(ref, R, R.copy(), ref.positions.copy(), i)
        assert np.allclose(correction_vector(i, state, packets, own, gains), 0.0, atol=1e-14)
        assert np.allclose(attitude_rate(i, state, packets, own, omega, gains), omega, atol=1e-14)
        assert np.allclose(position_rate(i, state, packets, own, gains), 0.0, atol=1e-13)


@given(st.integers(0, 10_000))
def test_correction_in_error_coordinates(ref, seed):
    # measurement form of the correction equals -2 psi(M R_tilde) + sum k (R_tilde_j^T - I) b x R_tilde_i^T b
    rng = np.random.default_rng(seed)
    R, R_hat, p_hat = _random_state(ref, rng)
    Rt = np.einsum("aij,akj->aik", R, R_hat)
    pt = ref.positions - np.einsum("aij,aj->ai", Rt, p_hat)
    ptr, nbr, gain = ref.topology.as_arrays()
    B = edge_bearings(ref.positions, ptr, nbr)
    M = np.array([bearing_matrix(i, ref.topology, ref.positions) for i in range(1, ref.n + 1)])
    C, _ = _error_terms(Rt, pt, ref.positions, B, M, ptr, nbr, gain, 1.0)
    for i in ref.followers:
        state, packets, own = _inputs(ref, R, R_hat, p_hat, i)
        c = correction_vector(i, state, packets, own, Gains())
        assert np.allclose(c, C[i - 1], atol=1e-12)


def test_single_neighbor_term_by_hand():
    R_i, R_j = exp_so3([0.1, 0.2, 0.3]), exp_so3([-0.4, 0.0, 0.2])
    Rh_i, Rh_j = exp_so3([0.3, -0.1, 0.0]), exp_so3([0.0, 0.5, 0.1])
    b = np.array([0.6, 0.0, 0.8])
    state = ObserverState(np.array([np.eye(3), Rh_j, Rh_i]), np.zeros((3, 3)))
    own = {2: R_i.T @ b}
    pk = [state.packet(2, R_j.T @ (-b))]
    c = correction_vector(3, state, pk, own, Gains(k_ij={(3, 2): 2.0}))
    expected = 2.0 * np.cross(Rh_j @ R_j.T @ b, Rh_i @ R_i.T @ b)
    assert np.allclose(c, expected, atol=1e-15)
    # the attitude rate is expressed in the estimate's body frame
    u = attitude_rate(3, state, pk, own, np.zeros(3), Gains(k_R=0.5, k_ij={(3, 2): 2.0}))
    assert np.allclose(Rh_i @ skew(u) @ Rh_i.T, -0.5 * skew(c), atol=1e-15)


def test_position_rate_with_exact_attitudes_projects_offsets(ref):
    R = np.tile(np.eye(3), (ref.n, 1, 1))
    p_hat = ref.positions.copy()
    p_hat[2] += [0.3, -0.2, 0.5]
    state, packets, own = _inputs(ref, R, R.copy(), p_hat, 3)
    rate = position_rate(3, state, packets, own, Gains(k_p=2.0))
    P = sum(np.eye(3) - np.outer(b, b) for b in own.values())
    assert np.allclose(rate, -2.0 * P @ [0.3, -0.2, 0.5], atol=1e-14)


def test_packets_must_match_measured_neighbors(ref, rng):
    R, R_hat, p_hat = _random_state(ref, rng)
    state, packets, own = _inputs(ref, R, R_hat, p_hat, 6)
    with pytest.raises(ValueError, match="do not match"):
        correction_vector(6, state, packets[:-1], own, Gains())
    with pytest.raises(ValueError, match="duplicate"):
        correction_vector(6, state, packets + packets[:1], own, Gains())
    with pytest.raises(ValueError):
        NeighborPacket(2, np.eye(3), np.zeros(3), np.array([1.0, 1.0, 0.0]))


def test_gains_must_be_positive():
    with pytest.raises(ValueError):
        Gains(0.0, 1.0)
    with pytest.raises(ValueError):
        Gains(k_ij={(3, 1): -1.0})


def test_f_term_with_exact_attitudes_is_neighbor_error():
    p_j, pt_j = np.array([1.0, 2.0, 3.0]), np.array([0.1, -0.2, 0.05])
    assert np.allclose(f_term(pt_j, np.eye(3), np.eye(3), p_j), pt_j)
    Rt = exp_so3([0.2, 0.1, -0.3])
    # identical attitude errors on both ends also leave only the neighbor's error
    assert np.allclose(f_term(pt_j, Rt, Rt, p_j), pt_j, atol=1e-15)


def test_observer_step_ignores_follower_truth(ref, rng):
    # information hygiene: truth rows of followers are never read
    n = ref.n
    R, R_hat, p_hat = _random_state(ref, rng)
    ptr, nbr, gain = ref.topology.as_arrays()
    B = edge_bearings(ref.positions, ptr, nbr)
    own, recv = _measure(R, B, ptr, nbr)
    w = rng.standard_normal((n, 3))
    args = (R_hat, p_hat, w, w, own, recv, own, recv)
    clean = _observer_step(*args, R, R, ref.positions, ptr, nbr, gain, 1.0, 1.0, 1e-3)
    Rbad, Pbad = R.copy(), ref.positions.copy()
    Rbad[2:] = np.nan
    Pbad[2:] = np.nan
    dirty = _observer_step(*args, Rbad, Rbad, Pbad, ptr, nbr, gain, 1.0, 1.0, 1e-3)
    assert np.array_equal(clean[0], dirty[0]) and np.array_equal(clean[1], dirty[1])
