"""Ground truth: fixed agent positions, rotating attitudes, bearing measurements."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np
from numba import njit

from .geom3 import _exp, _mm, _mtv, _vec

KINDS = ("const", "sin", "cos")
_KIND_CODE = {k: c for c, k in enumerate(KINDS)}


@dataclass(frozen=True)
class Term:
    kind: str
    amp: float
    freq: float = 0.0

    def __post_init__(self):
        if self.kind not in _KIND_CODE:
            raise ValueError(f"unknown signal term {self.kind!r}; expected one of {KINDS}")
        if not (math.isfinite(self.amp) and math.isfinite(self.freq)):
            raise ValueError("signal amplitude and frequency must be finite")

    def __call__(self, t: float) -> float:
        if self.kind == "const":
            return self.amp
        if self.kind == "sin":
            return self.amp * math.sin(self.freq * t)
        return self.amp * math.cos(self.freq * t)


@dataclass(frozen=True)
class OmegaSignal:
    """Body angular velocity as a per-axis sum of constant/sin/cos terms (rad/s)."""

    axes: tuple[tuple[Term, ...], tuple[Term, ...], tuple[Term, ...]]

    @classmethod
    def constant(cls, w) -> "OmegaSignal":
        return cls(tuple((Term("const", float(a)),) for a in w))

    @classmethod
    def zero(cls) -> "OmegaSignal":
        return cls(((), (), ()))

    def __call__(self, t: float) -> np.ndarray:
        return np.array([sum(term(t) for term in axis) for axis in self.axes], dtype=float)

    def bound(self) -> float:
        """Upper bound on the Euclidean norm of the signal over all time."""
        return math.sqrt(sum(sum(abs(term.amp) for term in axis) ** 2 for axis in self.axes))


def eval_omega(sig: OmegaSignal, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError("signals are defined for t >= 0")
    return sig(t)


def signal_table(signals: Sequence[OmegaSignal]) -> np.ndarray:
    """Flatten signals into rows ``(agent, axis, kind, amp, freq)`` for the kernels."""
    rows = [(a, ax, _KIND_CODE[term.kind], term.amp, term.freq)
            for a, sig in enumerate(signals)
            for ax, axis in enumerate(sig.axes)
            for term in axis]
    return np.array(rows, dtype=float).reshape(-1, 5)


@njit(cache=True)
def _omega_all(table, n, t):
    out = np.zeros((n, 3))
    for r in range(table.shape[0]):
        a = int(table[r, 0])
        ax = int(table[r, 1])
        kind = int(table[r, 2])
        amp = table[r, 3]
        if kind == 0:
            out[a, ax] += amp
        elif kind == 1:
            out[a, ax] += amp * math.sin(table[r, 4] * t)
        else:
            out[a, ax] += amp * math.cos(table[r, 4] * t)
    return out


def _pos(positions, i: int) -> np.ndarray:
    if isinstance(positions, Mapping):
        return np.asarray(positions[i], dtype=float)
    return np.asarray(positions[i - 1], dtype=float)


def inertial_bearing(positions, i: int, j: int) -> np.ndarray:
    """Unit vector from agent ``i`` towards agent ``j`` in the inertial frame."""
    if i == j:
        raise ValueError("bearing from an agent to itself is undefined")
    d = _pos(positions, j) - _pos(positions, i)
    r = np.linalg.norm(d)
    if r <= 1e-9:
        raise ValueError(f"agents {i} and {j} are collocated")
    return d / r


@dataclass(frozen=True)
class BearingMeasurement:
    frm: int
    to: int
    body_bearing: np.ndarray


@dataclass(frozen=True)
class WorldState:
    """Time, fixed positions ``(n, 3)`` and attitudes ``(n, 3, 3)``; row ``k`` is agent ``k + 1``."""

    t: float
    positions: np.ndarray
    attitudes: np.ndarray

    @classmethod
    def initial(cls, positions, attitudes=None) -> "WorldState":
        P = np.array([_vec(p) for p in positions], dtype=float)
        n = len(P)
        R = np.tile(np.eye(3), (n, 1, 1)) if attitudes is None else np.array(attitudes, dtype=float)
        return cls(0.0, P, R)

    @property
    def n(self) -> int:
        return len(self.positions)

    def position(self, i: int) -> np.ndarray:
        return self.positions[i - 1]

    def attitude(self, i: int) -> np.ndarray:
        return self.attitudes[i - 1]


def body_bearing(world: WorldState, i: int, j: int) -> BearingMeasurement:
    """Bearing from ``i`` to ``j`` expressed in ``i``'s body frame."""
    b = inertial_bearing(world.positions, i, j)
    return BearingMeasurement(i, j, world.attitude(i).T @ b)


@njit(cache=True)
def _step_attitudes(R, omega_mid, h):
    out = np.empty_like(R)
    for a in range(R.shape[0]):
        out[a] = _mm(R[a], _exp(h * omega_mid[a]))
    return out


def step_truth(world: WorldState, signals: Sequence[OmegaSignal], h: float) -> WorldState:
    """Advance attitudes by one geometric midpoint step ``R <- R exp(h w(t + h/2))``."""
    if not h > 0:
        raise ValueError("step size must be positive")
    w = np.array([sig(world.t + 0.5 * h) for sig in signals])
    R = _step_attitudes(world.attitudes, w, h)
    return replace(world, t=world.t + h, attitudes=R)


def edge_bearings(positions, ptr, nbr) -> np.ndarray:
    """Inertial bearing for every edge of the CSR arrays, shape ``(E, 3)``."""
    P = np.asarray(positions, dtype=float)
    B = np.empty((len(nbr), 3))
    for i in range(len(ptr) - 1):
        for e in range(ptr[i], ptr[i + 1]):
            B[e] = inertial_bearing(P, i + 1, nbr[e] + 1)
    return B


@njit(cache=True)
def _measure(R, B, ptr, nbr):
    """Body-frame bearings per edge ``(i, j)``: ``b_ij^i`` and ``b_ji^j``."""
    own = np.empty_like(B)
    recv = np.empty_like(B)
    for i in range(ptr.shape[0] - 1):
        for e in range(ptr[i], ptr[i + 1]):
            j = nbr[e]
            own[e] = _mtv(R[i], B[e])
            recv[e] = -_mtv(R[j], B[e])
    return own, recv
