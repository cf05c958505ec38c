"""Stability checks: equilibria, linearizations, decay envelopes, error-coordinate oracle.

The error-coordinate simulator integrates ``R_tilde_i = R_i Rhat_i^T`` and
``p_tilde_i = p_i - R_tilde_i phat_i`` from their closed-form dynamics using
inertial bearings only.  It never forms a measurement, so comparing it with
:func:`bearing_pose.sim.run` checks the measurement-driven observers against
an independent evaluation of the same vector field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .geom3 import _cross, _distance_sq, _exp, _mm, _mtv, _mv, _projector, _psi, angle_axis, exp_so3, sym_eig3
from .network import (bearing_matrix, distinct_eigenvalues, projector_sum, spectral_report,
                      stiffness_matrix)
from .observers import _f_term
from .sim import ScenarioConfig, TimeSeries
from .world import edge_bearings

RESIDUAL_TOL = 1e-10
FD_STEP = 1e-6


# ---------------------------------------------------------------- unforced attitude error

def unforced_field(M, R_tilde, k_R: float = 1.0) -> np.ndarray:
    """Body rate of the isolated attitude error: ``dR/dt = R [v]x`` with ``v = -2 k_R psi(M R)``."""
    return -2.0 * k_R * _psi(np.asarray(M, float) @ np.asarray(R_tilde, float))


def lyapunov(M, R_tilde) -> float:
    """``tr(M (I - R_tilde)) / 4``."""
    return 0.25 * float(np.trace(np.asarray(M) @ (np.eye(3) - np.asarray(R_tilde))))


@dataclass
class EquilibriumSet:
    agent: int
    labels: list[str]
    points: list[np.ndarray]
    residuals: list[float]

    def to_dict(self) -> dict:
        return {"agent": self.agent,
                "equilibria": [{"label": l, "R": R.tolist(), "residual": r}
                               for l, R, r in zip(self.labels, self.points, self.residuals)]}


def enumerate_equilibria(i: int, M, gap: float = 1e-6, allow_repeated: bool = False) -> EquilibriumSet:
    """Identity plus the half-turns about the three unit eigenvectors of ``M``.

    With repeated eigenvalues the half-turns about a repeated eigenspace form
    a continuum; ``allow_repeated=True`` returns one representative per
    eigenvector column instead of raising.
    """
    M = np.asarray(M, dtype=float)
    w, V = sym_eig3(M)
    if not allow_repeated and not distinct_eigenvalues(w, gap):
        raise ValueError(f"agent {i}: bearing matrix has repeated eigenvalues {w}; "
                         "equilibria are not isolated")
    labels = ["identity"] + [f"pi about v{k} (eigenvalue {w[k]:.4f})" for k in range(3)]
    points = [np.eye(3)] + [angle_axis(math.pi, V[:, k]) for k in range(3)]
    residuals = [float(np.linalg.norm(_psi(M @ R))) for R in points]
    return EquilibriumSet(i, labels, points, residuals)


def unforced_jacobian(M, at, k_R: float = 1.0, step: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of the unforced field in coordinates ``at exp(eta)``."""
    M = np.asarray(M, float)
    at = np.asarray(at, float)
    J = np.empty((3, 3))
    for k in range(3):
        e = np.zeros(3)
        e[k] = step
        J[:, k] = (unforced_field(M, at @ exp_so3(e), k_R)
                   - unforced_field(M, at @ exp_so3(-e), k_R)) / (2 * step)
    return J


def linearize_unforced(i: int, M, at, k_R: float = 1.0, step: float = FD_STEP,
                       residual_tol: float = 1e-8) -> np.ndarray:
    """Eigenvalues (complex, sorted by real part) of the linearized unforced attitude error at ``at``."""
    r = np.linalg.norm(unforced_field(M, at, 1.0))
    if r > residual_tol:
        raise ValueError(f"agent {i}: base point is not an equilibrium (field residual {r:.3g})")
    ev = np.linalg.eigvals(unforced_jacobian(M, at, k_R, step))
    return ev[np.argsort(ev.real)]


def unstable_direction(M, at, k_R: float = 1.0) -> tuple[float, np.ndarray]:
    """Largest real eigenvalue of the linearization and its (real) eigenvector."""
    J = unforced_jacobian(M, at, k_R)
    ev, vec = np.linalg.eig(J)
    k = int(np.argmax(ev.real))
    v = np.real(vec[:, k])
    return float(ev[k].real), v / np.linalg.norm(v)


@njit(cache=True)
def _unforced_escape(M, at, R0, kR, h, n_steps, radius2):
    R = R0.copy()
    for k in range(n_steps):
        c0 = -2.0 * kR * _psi(M @ R)
        Rh = R @ _exp(0.5 * h * c0)
        c1 = -2.0 * kR * _psi(M @ Rh)
        R = R @ _exp(h * c1)
        if _distance_sq(at.T @ R) > radius2:
            return (k + 1) * h, R
    return -1.0, R


def escape_time(M, at, k_R: float = 1.0, perturbation: float = 1e-6, radius: float = 0.1,
                horizon: float = 200.0, h: float = 1e-3) -> float:
    """Time for a ``perturbation`` along the most unstable direction to leave the
    ``radius``-ball (in ``rotation_distance``) around ``at``; ``inf`` if it never does."""
    _, v = unstable_direction(M, at, k_R)
    R0 = np.asarray(at, float) @ exp_so3(perturbation * v)
    t, _ = _unforced_escape(np.asarray(M, float), np.asarray(at, float), R0, k_R, h,
                            int(round(horizon / h)), radius * radius)
    return math.inf if t < 0 else t


def simulate_unforced(M, R0, k_R: float = 1.0, horizon: float = 10.0, h: float = 1e-3):
    """Samples ``(t, R)`` of the isolated attitude error flow (every step)."""
    M = np.asarray(M, float)
    n = int(round(horizon / h))
    ts = np.arange(n + 1) * h
    Rs = np.empty((n + 1, 3, 3))
    R = np.asarray(R0, float).copy()
    Rs[0] = R
    for k in range(n):
        c0 = unforced_field(M, R, k_R)
        Rh = R @ exp_so3(0.5 * h * c0)
        R = R @ exp_so3(h * unforced_field(M, Rh, k_R))
        Rs[k + 1] = R
    return ts, Rs


def equilibria_report(config: ScenarioConfig, horizon: float = 200.0) -> dict:
    """Per follower: equilibria, residuals, linearization spectra, escape times and verdicts.

    A follower whose bearing matrix has repeated eigenvalues is flagged
    ``distinct: false``; its equilibria are then a continuum and the report
    uses one representative per eigenvector column.
    """
    out = {}
    for i in config.followers:
        M = bearing_matrix(i, config.topology, config.positions)
        w = sym_eig3(M)[0]
        distinct = distinct_eigenvalues(w, config.distinct_gap)
        eq = enumerate_equilibria(i, M, config.distinct_gap, allow_repeated=True)
        entries = []
        for k, (label, R, res) in enumerate(zip(eq.labels, eq.points, eq.residuals)):
            ev = linearize_unforced(i, M, R, config.k_R)
            entry = {"label": label, "residual": res, "residual_ok": res <= RESIDUAL_TOL,
                     "eigenvalues_real": ev.real.tolist(), "eigenvalues_imag": ev.imag.tolist()}
            if k == 0:
                entry.update(expected="stable", verdict_ok=bool(np.all(ev.real < 0)))
            else:
                t_esc = escape_time(M, R, config.k_R, horizon=horizon)
                entry.update(expected="unstable", verdict_ok=bool(np.any(ev.real > 1e-6)),
                             escape_time=None if math.isinf(t_esc) else t_esc,
                             escape_ok=not math.isinf(t_esc))
            entries.append(entry)
        out[str(i)] = {"eigenvalues": w.tolist(), "distinct": distinct, "equilibria": entries,
                       "ok": all(e["residual_ok"] and e["verdict_ok"] and e.get("escape_ok", True)
                                 for e in entries)}
    return out


# ---------------------------------------------------------------- error-coordinate oracle

@njit(cache=True)
def _error_terms(Rt, pt, P, B, M, ptr, nbr, gain, kp):
    n = Rt.shape[0]
    C = np.zeros((n, 3))
    D = np.zeros((n, 3))
    for i in range(2, n):
        c = -2.0 * _psi(_mm(M[i], Rt[i]))
        d = np.zeros(3)
        for e in range(ptr[i], ptr[i + 1]):
            j = nbr[e]
            b = B[e]
            c += gain[e] * _cross(_mtv(Rt[j], b) - b, _mtv(Rt[i], b))
            d += kp * _mv(_projector(b), _f_term(pt[j], Rt[j], Rt[i], P[j]) - pt[i])
        C[i] = c
        D[i] = d
    return C, D


@njit(cache=True)
def _simulate_errors(Rt, pt, P, B, M, ptr, nbr, gain, kR, kp, h, n_steps, stride):
    n = Rt.shape[0]
    n_samples = n_steps // stride + 1
    if n_steps % stride:
        n_samples += 1
    ts = np.empty(n_samples)
    Rt_s = np.empty((n_samples, n, 3, 3))
    pt_s = np.empty((n_samples, n, 3))
    ts[0] = 0.0
    Rt_s[0] = Rt
    pt_s[0] = pt
    s = 1
    for k in range(n_steps):
        C0, D0 = _error_terms(Rt, pt, P, B, M, ptr, nbr, gain, kp)
        Rh = Rt.copy()
        ph = pt.copy()
        for i in range(2, n):
            Rh[i] = _mm(Rt[i], _exp(0.5 * h * kR * C0[i]))
            ph[i] = pt[i] + 0.5 * h * D0[i]
        C1, D1 = _error_terms(Rh, ph, P, B, M, ptr, nbr, gain, kp)
        for i in range(2, n):
            Rt[i] = _mm(Rt[i], _exp(h * kR * C1[i]))
            pt[i] = pt[i] + h * D1[i]
        if (k + 1) % stride == 0 or k + 1 == n_steps:
            ts[s] = (k + 1) * h
            Rt_s[s] = Rt
            pt_s[s] = pt
            s += 1
    return ts, Rt_s, pt_s


def initial_errors(config: ScenarioConfig, R_truth0=None) -> tuple[np.ndarray, np.ndarray]:
    n = config.n
    R0 = np.tile(np.eye(3), (n, 1, 1)) if R_truth0 is None else np.asarray(R_truth0, float)
    R_hat, p_hat = config.initial_estimates()
    Rt = np.einsum("aij,akj->aik", R0, R_hat)
    Rt[:2] = np.eye(3)
    pt = config.positions - np.einsum("aij,aj->ai", Rt, p_hat)
    pt[:2] = 0.0
    return Rt, pt


def simulate_error_dynamics(config: ScenarioConfig, horizon: float | None = None,
                            h: float | None = None, stride: int | None = None,
                            R_truth0=None) -> TimeSeries:
    """Integrate the closed-form error dynamics directly (no measurements, no ``omega``)."""
    h = config.step if h is None else h
    horizon = config.horizon if horizon is None else horizon
    stride = config.stride if stride is None else stride
    ptr, nbr, gain = config.topology.as_arrays()
    B = edge_bearings(config.positions, ptr, nbr)
    M = np.zeros((config.n, 3, 3))
    for i in config.followers:
        M[i - 1] = bearing_matrix(i, config.topology, config.positions)
    Rt, pt = initial_errors(config, R_truth0)
    ts, Rt_s, pt_s = _simulate_errors(Rt, pt, config.positions, B, M, ptr, nbr, gain,
                                      config.k_R, config.k_p, h, int(round(horizon / h)), stride)
    p_hat = np.einsum("saji,saj->sai", Rt_s, config.positions[None] - pt_s)
    return TimeSeries(ts, Rt_s, pt_s, p_hat, config.positions.copy(), config.followers)


def error_discrepancy(a: TimeSeries, b: TimeSeries) -> dict:
    """Sup-norm differences between two runs' error coordinates (sampled identically)."""
    if a.t.shape != b.t.shape or np.max(np.abs(a.t - b.t)) > 1e-12:
        raise ValueError("time series are not sampled on the same grid")
    f = np.array(a.followers) - 1
    return {
        "R_tilde": float(np.max(np.abs(a.R_tilde[:, f] - b.R_tilde[:, f]))),
        "p_tilde": float(np.max(np.abs(a.p_tilde[:, f] - b.p_tilde[:, f]))),
        "rerr": float(np.max(np.abs(a.rerr - b.rerr))),
        "perr": float(np.max(np.abs(a.perr - b.perr))),
    }


# ---------------------------------------------------------------- decay envelopes

@dataclass
class DecayEnvelope:
    agent: int
    t: np.ndarray
    measured: np.ndarray
    envelope: np.ndarray
    fitted_rate: float
    violations: int
    max_excess: float

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {"agent": self.agent, "fitted_rate": self.fitted_rate, "violations": self.violations,
                "max_excess": self.max_excess, "samples": int(len(self.t))}


def fitted_decay_rate(t, y, floor: float = 1e-12) -> float:
    """Least-squares slope of ``-log y`` over samples above ``floor``."""
    t = np.asarray(t)
    y = np.asarray(y)
    keep = y > floor
    if keep.sum() < 2:
        return math.nan
    return float(-np.polyfit(t[keep], np.log(y[keep]), 1)[0])


def _dt_sq_distance(run: TimeSeries, col: int) -> np.ndarray:
    return np.gradient(run.rerr[:, col] ** 2, run.t)


def iss_envelope_check(run: TimeSeries, i: int, config: ScenarioConfig,
                       slack: float = 1e-3) -> DecayEnvelope:
    """Check the attitude ISS differential inequality along ``run``.

    Compares the central-difference derivative of ``|R_tilde_i|_I^2`` with
    ``-4 kR lq |R_i|^2 + 4 kR lq + sqrt(2) kR sum_j k_ij |R_tilde_j|_I``,
    ``lq`` the smallest eigenvalue of the stiffness matrix; leaders pass trivially.
    """
    if i in (1, 2):
        z = np.zeros_like(run.t)
        return DecayEnvelope(i, run.t, z, z, math.nan, 0, 0.0)
    col = run.followers.index(i)
    lq = sym_eig3(stiffness_matrix(i, config.topology, config.positions))[0][0]
    kR = config.k_R
    r = run.rerr
    nbr_term = np.zeros_like(run.t)
    for j in config.topology.neighbors[i]:
        if j >= 3:
            nbr_term += config.topology.gain(i, j) * r[:, run.followers.index(j)]
    lhs = _dt_sq_distance(run, col)
    rhs = -4 * kR * lq * r[:, col] ** 2 + 4 * kR * lq + math.sqrt(2) * kR * nbr_term
    excess = lhs - rhs
    return DecayEnvelope(i, run.t, lhs, rhs, fitted_decay_rate(run.t, r[:, col]),
                         int(np.sum(excess > slack)), float(excess.max()))


def isolated_attitude_check(run: TimeSeries, i: int, config: ScenarioConfig, slack: float = 1e-3,
                            factor: float = 4.0) -> DecayEnvelope:
    """Dissipation bound with exact neighbors:
    ``d/dt |R_i|^2 <= -factor kR lq (1 - |R_i|^2) |R_i|^2``.
    """
    col = run.followers.index(i)
    lq = sym_eig3(stiffness_matrix(i, config.topology, config.positions))[0][0]
    d2 = run.rerr[:, col] ** 2
    lhs = _dt_sq_distance(run, col)
    rhs = -factor * config.k_R * lq * (1 - d2) * d2
    excess = lhs - rhs
    return DecayEnvelope(i, run.t, lhs, rhs, fitted_decay_rate(run.t, run.rerr[:, col]),
                         int(np.sum(excess > slack)), float(excess.max()))


def ges_envelope_check(run: TimeSeries, i: int, config: ScenarioConfig,
                       slack: float = 0.05, atol: float = 1e-10) -> DecayEnvelope:
    """``|p_tilde_i(t)| <= (1 + slack) |p_tilde_i(0)| exp(-k_p lp t)`` with ``lp`` the
    smallest eigenvalue of the bearing projector sum.

    Excesses up to ``atol`` metres are round-off once the error has reached
    machine level and do not count as violations.
    """
    col = run.followers.index(i)
    lp = sym_eig3(projector_sum(i, config.topology, config.positions))[0][0]
    y = run.perr[:, col]
    env = (1 + slack) * y[0] * np.exp(-config.k_p * lp * run.t)
    excess = y - env
    return DecayEnvelope(i, run.t, y, env, fitted_decay_rate(run.t, y),
                         int(np.sum(excess > atol)), float(excess.max()))


def exact_attitude_config(config: ScenarioConfig, agent: int) -> ScenarioConfig:
    """Every estimate exact except ``agent``'s initial position estimate.

    With exact attitudes and exact neighbors the position error of ``agent``
    follows the unforced linear flow ``-k_p P_i p_tilde_i``.
    """
    if agent not in config.followers:
        raise ValueError(f"agent {agent} is not a follower")
    rots = {j: np.eye(3) for j in config.followers}
    pos = {j: config.positions[j - 1] for j in config.followers}
    pos[agent] = np.asarray(config.initial[agent].position, float)
    return config.with_initial(rots, pos)


def analysis_report(config: ScenarioConfig, run: TimeSeries | None = None) -> dict:
    """JSON-ready spectra, equilibria and (given a run) ISS checks keyed by agent id."""
    report = {"spectra": spectral_report(config.topology, config.positions).to_dict(),
              "equilibria": equilibria_report(config)}
    if run is not None:
        report["iss"] = {str(i): iss_envelope_check(run, i, config).to_dict() for i in config.followers}
    return report
