"""Distributed attitude and position observers.

A follower ``i`` only ever sees its own gyro reading ``omega_i``, its own
body-frame bearings ``b_ij^i`` and one :class:`NeighborPacket` per neighbor.
Both laws share the correction vector

    c_i = sum_j k_ij (Rhat_j b_ij^j) x (Rhat_i b_ij^i),    b_ij^j = -b_ji^j,

which rotates the attitude estimate and transports the position estimate.

Discrete step
-------------
One step of length ``h`` is a two-stage geometric midpoint scheme.  The
correction acts on the left of ``Rhat`` (an inertial-frame rotation) and the
gyro on the right, and ``phat`` is transported by the same left factor::

    Rhat <- exp(-h kR [c]) Rhat exp(h omega)
    phat <- exp(-h kR [c]) (phat + h T d)

where ``c`` and ``d`` (the bearing-projection term of the position law) are
evaluated at the half step and ``T`` carries ``d`` back from the half-step
frame.  Because the truth uses the same right factor ``exp(h omega)`` the
attitude error ``R Rhat^T`` evolves without any dependence on ``omega``, as in
the continuous error dynamics.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numba import njit

from .geom3 import _cross, _exp, _mm, _mtv, _mv, _skew, _vec, as_rotation, is_rotation


@dataclass(frozen=True)
class Gains:
    k_R: float = 1.0
    k_p: float = 1.0
    k_ij: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.k_R > 0 and self.k_p > 0):
            raise ValueError(f"observer gains must be positive (k_R={self.k_R}, k_p={self.k_p})")
        for e, k in self.k_ij.items():
            if not k > 0:
                raise ValueError(f"edge gain {e} = {k} must be positive")

    def edge(self, i: int, j: int) -> float:
        return self.k_ij.get((i, j), 1.0)


@dataclass(frozen=True)
class NeighborPacket:
    """What neighbor ``sender`` broadcasts: its estimate and its bearing back to the receiver."""

    sender: int
    R_hat: np.ndarray
    p_hat: np.ndarray
    bearing_to_receiver: np.ndarray

    def __post_init__(self):
        if abs(np.linalg.norm(self.bearing_to_receiver) - 1.0) > 1e-9:
            raise ValueError("packet bearing must be a unit vector")


@dataclass
class ObserverState:
    """Estimates ``(n, 3, 3)`` and ``(n, 3)``; row ``k`` is agent ``k + 1``.

    Leader rows always hold the leaders' true pose.
    """

    R_hat: np.ndarray
    p_hat: np.ndarray

    def attitude(self, i: int) -> np.ndarray:
        return self.R_hat[i - 1]

    def position(self, i: int) -> np.ndarray:
        return self.p_hat[i - 1]

    def copy(self) -> "ObserverState":
        return ObserverState(self.R_hat.copy(), self.p_hat.copy())

    def packet(self, j: int, bearing_to_receiver) -> NeighborPacket:
        return NeighborPacket(j, self.R_hat[j - 1], self.p_hat[j - 1], np.asarray(bearing_to_receiver, float))


# ---------------------------------------------------------------- kernels

@njit(cache=True)
def _edge_terms(R_i, p_i, R_j, p_j, own, recv, k, kp, c, d):
    """Add edge ``(i, j)``'s share of the correction ``c`` and projection term ``d``."""
    a = -_mv(R_j, recv)
    b = _mv(R_i, own)
    c += k * _cross(a, b)
    # R_i P_own R_i^T (p_i - p_j) = P_b (p_i - p_j) with b = R_i own
    dp = p_i - p_j
    d -= kp * (dp - b * (b[0] * dp[0] + b[1] * dp[1] + b[2] * dp[2]))


@njit(cache=True)
def _agent_terms(R_i, p_i, R_nb, p_nb, own, recv, k, kp):
    """Correction ``c`` and projection term ``d`` of one follower from its inputs."""
    c = np.zeros(3)
    d = np.zeros(3)
    for m in range(own.shape[0]):
        _edge_terms(R_i, p_i, R_nb[m], p_nb[m], own[m], recv[m], k[m], kp, c, d)
    return c, d


@njit(cache=True)
def _network_terms(R_hat, p_hat, own, recv, ptr, nbr, gain, kp):
    n = R_hat.shape[0]
    C = np.zeros((n, 3))
    D = np.zeros((n, 3))
    for i in range(2, n):
        for e in range(ptr[i], ptr[i + 1]):
            j = nbr[e]
            _edge_terms(R_hat[i], p_hat[i], R_hat[j], p_hat[j], own[e], recv[e], gain[e], kp,
                        C[i], D[i])
    return C, D


@njit(cache=True)
def _observer_step(R_hat, p_hat, w_quarter, w_mid, own0, recv0, own1, recv1,
                   R_truth_half, R_truth_next, p_truth, ptr, nbr, gain, kR, kp, h):
    """One synchronous network step; truth arrays are read for the leader rows only."""
    n = R_hat.shape[0]
    C0, D0 = _network_terms(R_hat, p_hat, own0, recv0, ptr, nbr, gain, kp)

    R_half = np.empty_like(R_hat)
    p_half = np.empty_like(p_hat)
    for l in range(2):
        R_half[l] = R_truth_half[l]
        p_half[l] = p_truth[l]
    for i in range(2, n):
        L = _exp(-0.5 * h * kR * C0[i])
        R_half[i] = _mm(_mm(L, R_hat[i]), _exp(0.5 * h * w_quarter[i]))
        p_half[i] = _mv(L, p_hat[i] + 0.5 * h * D0[i])

    C1, D1 = _network_terms(R_half, p_half, own1, recv1, ptr, nbr, gain, kp)

    R_next = np.empty_like(R_hat)
    p_next = np.empty_like(p_hat)
    for l in range(2):
        R_next[l] = R_truth_next[l]
        p_next[l] = p_truth[l]
    for i in range(2, n):
        L = _exp(-h * kR * C1[i])
        back = _exp(0.5 * h * kR * C0[i])
        R_next[i] = _mm(_mm(L, R_hat[i]), _exp(h * w_mid[i]))
        p_next[i] = _mv(L, p_hat[i] + h * _mv(back, D1[i]))
    return R_next, p_next


@njit(cache=True)
def _f_term(pt_j, Rt_j, Rt_i, p_j):
    q = _mtv(Rt_j, p_j - pt_j)
    return _mv(Rt_j, q) - _mv(Rt_i, q) + pt_j


# ---------------------------------------------------------------- public API

def _gather(i: int, state: ObserverState, packets: Sequence[NeighborPacket],
            own_bearings: Mapping[int, np.ndarray], gains: Gains):
    senders = [pk.sender for pk in packets]
    if len(set(senders)) != len(senders):
        raise ValueError(f"duplicate neighbor packets for agent {i}: {senders}")
    if set(senders) != set(own_bearings):
        raise ValueError(f"agent {i}: packets from {sorted(senders)} do not match measured "
                         f"neighbors {sorted(own_bearings)}")
    by_sender = {pk.sender: pk for pk in packets}
    order = sorted(own_bearings)
    R_nb = np.array([as_rotation(by_sender[j].R_hat) for j in order]).reshape(-1, 3, 3)
    p_nb = np.array([_vec(by_sender[j].p_hat) for j in order]).reshape(-1, 3)
    recv = np.array([_vec(by_sender[j].bearing_to_receiver) for j in order]).reshape(-1, 3)
    own = np.array([_vec(own_bearings[j]) for j in order]).reshape(-1, 3)
    k = np.array([gains.edge(i, j) for j in order], dtype=float)
    R_i = state.attitude(i)
    if not is_rotation(R_i):
        raise ValueError(f"estimate of agent {i} left SO(3)")
    return R_i, state.position(i).astype(float), R_nb, p_nb, own, recv, k


def correction_vector(i: int, state: ObserverState, packets: Sequence[NeighborPacket],
                      own_bearings: Mapping[int, np.ndarray], gains: Gains) -> np.ndarray:
    """``sum_j k_ij (Rhat_j b_ij^j) x (Rhat_i b_ij^i)`` for follower ``i``.

    ``own_bearings`` maps each neighbor ``j`` to the body-frame bearing
    ``b_ij^i``; exactly one packet per measured neighbor is required.
    """
    R_i, p_i, R_nb, p_nb, own, recv, k = _gather(i, state, packets, own_bearings, gains)
    c, _ = _agent_terms(R_i, p_i, R_nb, p_nb, own, recv, k, gains.k_p)
    return c


def attitude_rate(i: int, state: ObserverState, packets: Sequence[NeighborPacket],
                  own_bearings: Mapping[int, np.ndarray], omega_i, gains: Gains) -> np.ndarray:
    """Body-frame angular rate ``u_i`` of the estimate: ``dRhat_i/dt = Rhat_i [u_i]x``."""
    c = correction_vector(i, state, packets, own_bearings, gains)
    return _vec(omega_i) - gains.k_R * state.attitude(i).T @ c


def position_rate(i: int, state: ObserverState, packets: Sequence[NeighborPacket],
                  own_bearings: Mapping[int, np.ndarray], gains: Gains) -> np.ndarray:
    """Time derivative of the position estimate ``phat_i``."""
    R_i, p_i, R_nb, p_nb, own, recv, k = _gather(i, state, packets, own_bearings, gains)
    c, d = _agent_terms(R_i, p_i, R_nb, p_nb, own, recv, k, gains.k_p)
    return -gains.k_R * (_skew(c) @ p_i) + d


def f_term(p_tilde_j, R_tilde_j, R_tilde_i, p_j) -> np.ndarray:
    """Input a neighbor feeds into the position error dynamics of agent ``i``."""
    return _f_term(_vec(p_tilde_j), as_rotation(R_tilde_j), as_rotation(R_tilde_i), _vec(p_j))
