"""Leader-follower interaction graphs and their bearing matrices.

Agents are numbered from 1; agents 1 and 2 are the leaders.  An edge ``(i, j)``
means ``j`` is a neighbor of ``i``: agent ``i`` measures the bearing to ``j`` and
receives ``j``'s estimate.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .geom3 import orthogonal_projector, sym_eig3
from .world import _pos, inertial_bearing

LEADERS = (1, 2)
GEOMETRY_TOL = 1e-9
DISTINCT_GAP = 1e-6


class TopologyError(ValueError):
    """Raised when a topology fails validation; ``clause`` names the rule."""

    def __init__(self, clause: str, agents: tuple[int, ...], message: str):
        super().__init__(f"{clause}: {message}")
        self.clause = clause
        self.agents = agents


# Clause names, in the order they are checked.
CLAUSES = (
    "agents",
    "positive gains",
    "acyclic",
    "leaders have no neighbors",
    "neighbors precede",
    "at least two neighbors",
    "leader reachability",
    "non-collocated",
    "non-collinear",
)


@dataclass(frozen=True)
class Topology:
    n: int
    neighbors: Mapping[int, tuple[int, ...]]
    gains: Mapping[tuple[int, int], float] = field(default_factory=dict)

    @classmethod
    def from_neighbors(cls, n: int, neighbors: Mapping[int, list[int]],
                       gains: Mapping[tuple[int, int], float] | None = None,
                       default_gain: float = 1.0) -> "Topology":
        nbrs = {i: tuple(int(j) for j in neighbors.get(i, ())) for i in range(1, n + 1)}
        g = {(i, j): float(default_gain) for i, js in nbrs.items() for j in js}
        if gains:
            g.update({(int(i), int(j)): float(k) for (i, j), k in gains.items()})
        return cls(n=n, neighbors=nbrs, gains=g)

    @property
    def followers(self) -> tuple[int, ...]:
        return tuple(range(3, self.n + 1))

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(1, self.n + 1) for j in self.neighbors.get(i, ())]

    def gain(self, i: int, j: int) -> float:
        return self.gains.get((i, j), 1.0)

    def with_edge(self, i: int, j: int, gain: float = 1.0) -> "Topology":
        nbrs = dict(self.neighbors)
        nbrs[i] = tuple(nbrs.get(i, ())) + (j,)
        gains = dict(self.gains)
        gains[(i, j)] = gain
        return Topology(self.n, nbrs, gains)

    def truncated(self, n: int) -> "Topology":
        """The sub-network of agents ``1..n`` (a prefix of the ordering)."""
        nbrs = {i: tuple(j for j in self.neighbors.get(i, ()) if j <= n) for i in range(1, n + 1)}
        gains = {e: k for e, k in self.gains.items() if e[0] <= n and e[1] <= n}
        return Topology(n, nbrs, gains)

    def as_arrays(self):
        """0-based CSR arrays ``(ptr, nbr, gain)`` over all agents, for the kernels."""
        ptr = np.zeros(self.n + 1, dtype=np.int64)
        nbr, gain = [], []
        for i in range(1, self.n + 1):
            for j in self.neighbors.get(i, ()):
                nbr.append(j - 1)
                gain.append(self.gain(i, j))
            ptr[i] = len(nbr)
        return ptr, np.array(nbr, dtype=np.int64), np.array(gain, dtype=float)


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    clause: str | None = None
    agents: tuple[int, ...] = ()
    message: str = ""

    def to_dict(self) -> dict:
        return {"ok": self.ok, "clause": self.clause, "agents": list(self.agents),
                "message": self.message}


def _has_cycle(t: Topology) -> tuple[int, ...]:
    """Agents left over by Kahn's algorithm (empty iff acyclic)."""
    indeg = {i: 0 for i in range(1, t.n + 1)}
    for i, j in t.edges:
        if 1 <= j <= t.n:
            indeg[i] += 1
    users = {j: [] for j in range(1, t.n + 1)}
    for i, j in t.edges:
        if 1 <= j <= t.n:
            users[j].append(i)
    queue = deque(i for i, d in indeg.items() if d == 0)
    while queue:
        j = queue.popleft()
        for i in users[j]:
            indeg[i] -= 1
            if indeg[i] == 0:
                queue.append(i)
    return tuple(sorted(i for i, d in indeg.items() if d > 0))


def is_acyclic(t: Topology) -> bool:
    return not _has_cycle(t)


def _ancestors(t: Topology, i: int) -> set[int]:
    out, stack = set(), list(t.neighbors.get(i, ()))
    while stack:
        j = stack.pop()
        if j not in out:
            out.add(j)
            stack.extend(t.neighbors.get(j, ()))
    return out


def _check(t: Topology, positions, tol: float) -> None:
    if t.n < 3:
        raise TopologyError("agents", (), f"need two leaders and at least one follower, got n={t.n}")
    for i, j in t.edges:
        if not (1 <= j <= t.n) or i == j:
            raise TopologyError("agents", (i, j), f"edge ({i}, {j}) refers to an invalid agent")
    for i in range(1, t.n + 1):
        try:
            p = _pos(positions, i)
        except (KeyError, IndexError):
            raise TopologyError("agents", (i,), f"no position for agent {i}") from None
        if p.shape != (3,) or not np.all(np.isfinite(p)):
            raise TopologyError("agents", (i,), f"position of agent {i} is not a finite 3-vector")
    for (i, j), k in t.gains.items():
        if not k > 0:
            raise TopologyError("positive gains", (i, j), f"gain k_{i}{j} = {k} is not positive")

    cyc = _has_cycle(t)
    if cyc:
        raise TopologyError("acyclic", cyc, f"agents {list(cyc)} lie on or behind a directed cycle")
    for l in LEADERS:
        if t.neighbors.get(l):
            raise TopologyError("leaders have no neighbors", (l,), f"leader {l} has neighbors")
    for i in t.followers:
        nbrs = t.neighbors.get(i, ())
        late = [j for j in nbrs if j >= i]
        if late:
            raise TopologyError("neighbors precede", (i, *late),
                                f"agent {i} has neighbors {late} not numbered below it")
        if len(set(nbrs)) < 2:
            raise TopologyError("at least two neighbors", (i,),
                                f"agent {i} has {len(set(nbrs))} neighbor(s)")
    for i in t.followers:
        anc = _ancestors(t, i)
        for l in LEADERS:
            if l not in anc:
                raise TopologyError("leader reachability", (l, i),
                                    f"no directed path from leader {l} to agent {i}")
    for i, j in t.edges:
        if np.linalg.norm(_pos(positions, j) - _pos(positions, i)) <= tol:
            raise TopologyError("non-collocated", (i, j), f"agents {i} and {j} are collocated")
    for i in t.followers:
        nbrs = t.neighbors[i]
        bs = [inertial_bearing(positions, i, j) for j in nbrs]
        if not any(np.linalg.norm(np.cross(bs[a], bs[b])) > tol
                   for a in range(len(bs)) for b in range(a + 1, len(bs))):
            raise TopologyError("non-collinear", (i, *nbrs),
                                f"all bearings measured by agent {i} are collinear")


def validate_topology(t: Topology, positions, tol: float = GEOMETRY_TOL) -> ValidationResult:
    """Check the leader-follower assumptions; returns the first violated clause."""
    try:
        _check(t, positions, tol)
    except TopologyError as exc:
        return ValidationResult(False, exc.clause, exc.agents, str(exc))
    return ValidationResult(True)


def require_valid(t: Topology, positions, tol: float = GEOMETRY_TOL) -> None:
    _check(t, positions, tol)


def bearing_matrix(i: int, t: Topology, positions) -> np.ndarray:
    """Gain-weighted Gram matrix of the bearings measured by agent ``i``."""
    M = np.zeros((3, 3))
    for j in t.neighbors.get(i, ()):
        b = inertial_bearing(positions, i, j)
        M += t.gain(i, j) * np.outer(b, b)
    return M


def stiffness_matrix(i: int, t: Topology, positions) -> np.ndarray:
    """``sum_j k_ij skew(b_ij)^T skew(b_ij)``; equals ``(sum k_ij) I - M_i``."""
    Q = np.zeros((3, 3))
    for j in t.neighbors.get(i, ()):
        b = inertial_bearing(positions, i, j)
        Q += t.gain(i, j) * orthogonal_projector(b)
    return Q


def projector_sum(i: int, t: Topology, positions) -> np.ndarray:
    """Unweighted sum of bearing projectors; drives the position error decay."""
    P = np.zeros((3, 3))
    for j in t.neighbors.get(i, ()):
        P += orthogonal_projector(inertial_bearing(positions, i, j))
    return P


@dataclass
class FollowerSpectrum:
    agent: int
    M: np.ndarray
    Q: np.ndarray
    m_eigenvalues: np.ndarray
    m_eigenvectors: np.ndarray
    q_eigenvalues: np.ndarray
    distinct: bool
    q_min: float
    p_min: float

    def to_dict(self) -> dict:
        return {
            "agent": self.agent,
            "M": self.M.tolist(),
            "Q": self.Q.tolist(),
            "M_eigenvalues": self.m_eigenvalues.tolist(),
            "Q_eigenvalues": self.q_eigenvalues.tolist(),
            "distinct": self.distinct,
            "Q_min_eigenvalue": self.q_min,
            "projector_sum_min_eigenvalue": self.p_min,
        }


@dataclass
class SpectralReport:
    followers: dict[int, FollowerSpectrum]

    def __getitem__(self, i: int) -> FollowerSpectrum:
        return self.followers[i]

    def to_dict(self) -> dict:
        return {str(i): s.to_dict() for i, s in self.followers.items()}


def distinct_eigenvalues(eigs, gap: float = DISTINCT_GAP) -> bool:
    return bool(np.all(np.diff(np.sort(eigs)) > gap))


def spectral_report(t: Topology, positions, gap: float = DISTINCT_GAP) -> SpectralReport:
    out = {}
    for i in t.followers:
        M = bearing_matrix(i, t, positions)
        Q = stiffness_matrix(i, t, positions)
        mw, mv = sym_eig3(M)
        qw, _ = sym_eig3(Q)
        pw, _ = sym_eig3(projector_sum(i, t, positions))
        out[i] = FollowerSpectrum(i, M, Q, mw, mv, qw, distinct_eigenvalues(mw, gap),
                                  float(qw[0]), float(pw[0]))
    return SpectralReport(out)


def check_distinct_eigenvalues(report: SpectralReport, gap: float = DISTINCT_GAP) -> dict[int, bool]:
    """Per follower: do consecutive eigenvalues of ``M_i`` differ by more than ``gap``?"""
    return {i: distinct_eigenvalues(s.m_eigenvalues, gap) for i, s in report.followers.items()}
