"""Scenario configs, the coupled truth/observer time loop, and run artifacts."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema
import numpy as np
import yaml
from numba import njit

from .geom3 import _mmt, _mv, angle_axis, random_rotation
from .network import Topology, require_valid
from .observers import _observer_step
from .world import OmegaSignal, Term, _measure, _omega_all, _step_attitudes, edge_bearings, signal_table

DIVERGENCE_LIMIT = 1e6


class ConfigError(ValueError):
    """Invalid scenario document; ``field`` is a dotted path to the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class DivergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------- configuration

@dataclass(frozen=True)
class InitialEstimate:
    angle: float
    axis: tuple[float, float, float]
    position: tuple[float, float, float]

    def rotation(self) -> np.ndarray:
        return angle_axis(self.angle, np.array(self.axis, dtype=float))


@dataclass(frozen=True)
class ScenarioConfig:
    n: int
    positions: np.ndarray
    signals: tuple[OmegaSignal, ...]
    topology: Topology
    k_R: float
    k_p: float
    initial: Mapping[int, InitialEstimate]
    step: float = 1e-3
    horizon: float = 30.0
    stride: int = 10
    seed: int = 0
    name: str = "scenario"
    attitude_tol: float = 1e-4
    position_tol: float = 1e-3
    sweep_trials: int = 100
    sweep_box: float = 5.0
    sweep_tol: float = 1e-3
    sweep_step: float = 1e-2
    sweep_horizon: float = 80.0
    geometry_tol: float = 1e-9
    distinct_gap: float = 1e-6
    # initial attitude estimates given directly as matrices (sweeps, witnesses)
    initial_rotations: Mapping[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError("integration.step", f"must be positive, got {self.step}")
        if not self.horizon > 0:
            raise ConfigError("integration.horizon", f"must be positive, got {self.horizon}")
        if not (self.sweep_step > 0 and self.sweep_horizon > 0):
            raise ConfigError("sweep", "step and horizon must be positive")
        if self.stride < 1:
            raise ConfigError("integration.stride", "must be at least 1")
        if not self.k_R > 0:
            raise ConfigError("gains.k_R", f"must be positive, got {self.k_R}")
        if not self.k_p > 0:
            raise ConfigError("gains.k_p", f"must be positive, got {self.k_p}")
        for (i, j), k in self.topology.gains.items():
            if not k > 0:
                raise ConfigError("gains.edges", f"k_{i}{j} = {k} must be positive")
        for i in self.topology.followers:
            if i not in self.initial and i not in self.initial_rotations:
                raise ConfigError(f"initial_estimates.{i}", "missing initial estimate")
        require_valid(self.topology, self.positions, self.geometry_tol)

    @property
    def followers(self) -> tuple[int, ...]:
        return self.topology.followers

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.step))

    def initial_estimates(self) -> tuple[np.ndarray, np.ndarray]:
        """Initial ``(R_hat, p_hat)`` arrays; leaders start at their true pose."""
        R = np.tile(np.eye(3), (self.n, 1, 1))
        p = self.positions.copy()
        for i in self.followers:
            if i in self.initial:
                p[i - 1] = self.initial[i].position
                R[i - 1] = self.initial[i].rotation()
            if i in self.initial_rotations:
                R[i - 1] = self.initial_rotations[i]
        return R, p

    def with_overrides(self, step=None, horizon=None, k_R=None, k_p=None, k_ij=None,
                       stride=None) -> "ScenarioConfig":
        """Copy with command-line style overrides applied (``None`` keeps the file value)."""
        topo = self.topology
        if k_ij is not None:
            topo = Topology.from_neighbors(topo.n, topo.neighbors, default_gain=k_ij)
        return replace(
            self,
            step=self.step if step is None else step,
            horizon=self.horizon if horizon is None else horizon,
            stride=self.stride if stride is None else stride,
            k_R=self.k_R if k_R is None else k_R,
            k_p=self.k_p if k_p is None else k_p,
            topology=topo,
        )

    def truncated(self, n: int) -> "ScenarioConfig":
        """Scenario restricted to agents ``1..n``."""
        return replace(
            self,
            n=n,
            positions=self.positions[:n].copy(),
            signals=self.signals[:n],
            topology=self.topology.truncated(n),
            initial={i: e for i, e in self.initial.items() if i <= n},
            initial_rotations={i: R for i, R in self.initial_rotations.items() if i <= n},
            name=f"{self.name}[:{n}]",
        )

    def with_initial(self, rotations: Mapping[int, np.ndarray] | None = None,
                     positions: Mapping[int, Any] | None = None) -> "ScenarioConfig":
        """Copy with some follower initial estimates replaced."""
        initial = dict(self.initial)
        rots = dict(self.initial_rotations)
        for i, p in (positions or {}).items():
            e = initial.get(i, InitialEstimate(0.0, (1.0, 0.0, 0.0), (0.0, 0.0, 0.0)))
            initial[i] = replace(e, position=tuple(float(x) for x in p))
        for i, R in (rotations or {}).items():
            rots[i] = np.asarray(R, dtype=float)
            if i not in initial:
                initial[i] = InitialEstimate(0.0, (1.0, 0.0, 0.0), tuple(self.positions[i - 1]))
        return replace(self, initial=initial, initial_rotations=rots)

    def to_document(self) -> dict:
        """Canonical key-value form (as loaded); used for hashing and round trips."""
        doc = {
            "name": self.name,
            "agents": self.n,
            "positions": {str(i + 1): [float(x) for x in p] for i, p in enumerate(self.positions)},
            "omega": {str(i + 1): {ax: [{t.kind: t.amp} if t.kind == "const" else {t.kind: [t.amp, t.freq]}
                                        for t in terms]
                                   for ax, terms in zip("xyz", sig.axes)}
                      for i, sig in enumerate(self.signals)},
            "neighbors": {str(i): list(js) for i, js in self.topology.neighbors.items()},
            "gains": {"k_R": self.k_R, "k_p": self.k_p,
                      "edges": [[i, j, float(k)] for (i, j), k in sorted(self.topology.gains.items())]},
            "initial_estimates": {str(i): {"angle": float(e.angle), "axis": [float(x) for x in e.axis],
                                            "position": [float(x) for x in e.position]}
                                  for i, e in sorted(self.initial.items())},
            "integration": {"step": self.step, "horizon": self.horizon, "stride": self.stride},
            "seed": self.seed,
            "convergence": {"attitude": self.attitude_tol, "position": self.position_tol},
            "sweep": {"trials": self.sweep_trials, "box_half_width": self.sweep_box,
                      "tolerance": self.sweep_tol, "step": self.sweep_step,
                      "horizon": self.sweep_horizon},
            "tolerances": {"geometry": self.geometry_tol, "distinct_gap": self.distinct_gap},
        }
        if self.initial_rotations:
            doc["initial_rotations"] = {str(i): np.asarray(R).tolist()
                                        for i, R in sorted(self.initial_rotations.items())}
        return doc

    def digest(self) -> str:
        blob = json.dumps(self.to_document(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _schema() -> dict:
    return json.loads(resources.files("bearing_pose").joinpath("scenarios/scenario.schema.json").read_text())


def _stringify_keys(obj):
    if isinstance(obj, dict):
        return {str(k): _stringify_keys(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_stringify_keys(v) for v in obj]
    return obj


def _parse_axis(entry, where: str) -> tuple[Term, ...]:
    if isinstance(entry, (int, float)):
        return (Term("const", float(entry)),)
    terms = []
    for term in entry:
        (kind, val), = term.items()
        if kind == "const":
            terms.append(Term("const", float(val)))
        else:
            terms.append(Term(kind, float(val[0]), float(val[1])))
    return tuple(terms)


def load_scenario(document) -> ScenarioConfig:
    """Build a validated :class:`ScenarioConfig` from a mapping, a YAML path, or a bundled name.

    Raises :class:`ConfigError` naming the first offending field, or
    :class:`~bearing_pose.network.TopologyError` when the graph/geometry is invalid.
    """
    if isinstance(document, (str, Path)):
        document = _read_document(document)
    doc = _stringify_keys(document)
    errors = sorted(jsonschema.Draft202012Validator(_schema()).iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.path) or "<root>"
        raise ConfigError(path, err.message)

    n = doc["agents"]
    agent_keys = [str(i) for i in range(1, n + 1)]
    for section in ("positions", "omega"):
        for key in doc[section]:
            if key not in agent_keys:
                raise ConfigError(f"{section}.{key}", f"no such agent (agents: {n})")
        for key in agent_keys:
            if key not in doc[section]:
                raise ConfigError(f"{section}.{key}", f"missing entry for agent {key}")
    positions = np.array([doc["positions"][k] for k in agent_keys], dtype=float)
    signals = tuple(OmegaSignal(tuple(_parse_axis(doc["omega"][k][ax], f"omega.{k}.{ax}") for ax in "xyz"))
                    for k in agent_keys)

    for key in doc["neighbors"]:
        if key not in agent_keys:
            raise ConfigError(f"neighbors.{key}", f"no such agent (agents: {n})")
    neighbors = {int(k): v for k, v in doc["neighbors"].items()}
    gains_doc = doc["gains"]
    k_default = float(gains_doc.get("k_ij", 1.0))
    if not k_default > 0:
        raise ConfigError("gains.k_ij", f"must be positive, got {k_default}")
    edge_gains = {}
    for i, j, k in gains_doc.get("edges", []):
        if j not in neighbors.get(i, []):
            raise ConfigError("gains.edges", f"({i}, {j}) is not an edge")
        edge_gains[(i, j)] = k
    topology = Topology.from_neighbors(n, neighbors, edge_gains, default_gain=k_default)

    initial = {}
    for key, est in doc["initial_estimates"].items():
        i = int(key)
        if not 3 <= i <= n:
            raise ConfigError(f"initial_estimates.{key}", "initial estimates are given for followers only")
        angle = est["angle"] if "angle" in est else math.pi * est["angle_pi"]
        axis = np.array(est["axis"], dtype=float)
        if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
            raise ConfigError(f"initial_estimates.{key}.axis", "must be a unit vector")
        initial[i] = InitialEstimate(float(angle), tuple(float(x) for x in axis),
                                     tuple(float(x) for x in est["position"]))

    integ = doc["integration"]
    conv = doc.get("convergence", {})
    sweep = doc.get("sweep", {})
    tols = doc.get("tolerances", {})
    return ScenarioConfig(
        n=n, positions=positions, signals=signals, topology=topology,
        k_R=float(gains_doc["k_R"]), k_p=float(gains_doc["k_p"]), initial=initial,
        step=float(integ["step"]), horizon=float(integ["horizon"]), stride=int(integ.get("stride", 10)),
        seed=int(doc.get("seed", 0)), name=doc.get("name", "scenario"),
        attitude_tol=float(conv.get("attitude", 1e-4)), position_tol=float(conv.get("position", 1e-3)),
        sweep_trials=int(sweep.get("trials", 100)), sweep_box=float(sweep.get("box_half_width", 5.0)),
        sweep_tol=float(sweep.get("tolerance", 1e-3)),
        sweep_step=float(sweep.get("step", 1e-2)), sweep_horizon=float(sweep.get("horizon", 80.0)),
        geometry_tol=float(tols.get("geometry", 1e-9)), distinct_gap=float(tols.get("distinct_gap", 1e-6)),
    )


def bundled_scenarios() -> list[str]:
    root = resources.files("bearing_pose").joinpath("scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def _read_document(source) -> dict:
    path = Path(source)
    if not path.exists() and str(source) in bundled_scenarios():
        text = resources.files("bearing_pose").joinpath(f"scenarios/{source}.yaml").read_text()
    else:
        try:
            text = path.read_text()
        except OSError as exc:
            raise OSError(f"cannot read scenario {source!s}: {exc.strerror}") from exc
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "scenario document must be a mapping")
    return doc


def reference_scenario() -> ScenarioConfig:
    """The bundled eight-agent scenario."""
    return load_scenario("paper_sec5")


# ---------------------------------------------------------------- time series

@dataclass
class TimeSeries:
    """Sampled error coordinates of a run; row ``k`` of the agent axes is agent ``k + 1``."""

    t: np.ndarray
    R_tilde: np.ndarray
    p_tilde: np.ndarray
    p_hat: np.ndarray
    positions: np.ndarray
    followers: tuple[int, ...]
    so3_drift: float = 0.0

    @property
    def _f(self) -> np.ndarray:
        return np.array(self.followers, dtype=int) - 1

    @property
    def rerr(self) -> np.ndarray:
        """``|R_tilde_i|_I`` per sample and follower."""
        Rt = self.R_tilde[:, self._f]
        d2 = 0.25 * (3.0 - np.trace(Rt, axis1=-2, axis2=-1))
        return np.sqrt(np.clip(d2, 0.0, 1.0))

    @property
    def perr(self) -> np.ndarray:
        """``|p_i - R_tilde_i p_hat_i|`` per sample and follower."""
        return np.linalg.norm(self.p_tilde[:, self._f], axis=-1)

    @property
    def phat_err(self) -> np.ndarray:
        """``|p_i - p_hat_i|`` per sample and follower."""
        return np.linalg.norm(self.positions[self._f] - self.p_hat[:, self._f], axis=-1)

    @property
    def rerr_avg(self) -> np.ndarray:
        return self.rerr.mean(axis=1) if len(self.t) else np.zeros(0)

    @property
    def perr_avg(self) -> np.ndarray:
        return self.perr.mean(axis=1) if len(self.t) else np.zeros(0)

    @property
    def phat_err_avg(self) -> np.ndarray:
        return self.phat_err.mean(axis=1) if len(self.t) else np.zeros(0)

    def column(self, name: str) -> np.ndarray:
        return dict(zip(self.header(), self.table().T))[name]

    def at(self, time: float) -> int:
        """Index of the sample closest to ``time``."""
        return int(np.argmin(np.abs(self.t - time)))

    def header(self) -> list[str]:
        f = self.followers
        return (["t"] + [f"rerr_{i}" for i in f] + [f"perr_{i}" for i in f]
                + [f"phat_err_{i}" for i in f] + ["rerr_avg", "perr_avg"])

    def table(self) -> np.ndarray:
        if not len(self.t):
            return np.zeros((0, len(self.header())))
        return np.column_stack([self.t, self.rerr, self.perr, self.phat_err,
                                self.rerr_avg, self.perr_avg])

    @classmethod
    def empty(cls, followers, positions) -> "TimeSeries":
        n = len(positions)
        return cls(np.zeros(0), np.zeros((0, n, 3, 3)), np.zeros((0, n, 3)), np.zeros((0, n, 3)),
                   np.asarray(positions, float), tuple(followers))


def export(series: TimeSeries, path) -> Path:
    """Write the series as CSV (17 significant digits); returns the path."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(series.header())
            for row in series.table():
                w.writerow([f"{x:.17g}" for x in row])
    except OSError as exc:
        raise OSError(f"cannot write time series to {path}: {exc.strerror}") from exc
    return path


# ---------------------------------------------------------------- time loop

@njit(cache=True)
def _so3_error(R):
    acc = 0.0
    for i in range(3):
        for j in range(3):
            e = R[0, i] * R[0, j] + R[1, i] * R[1, j] + R[2, i] * R[2, j] - (1.0 if i == j else 0.0)
            acc += e * e
    return math.sqrt(acc)


@njit(cache=True)
def _record(s, R, R_hat, p_hat, P, Rt_s, pt_s, ph_s):
    for a in range(R.shape[0]):
        Rt = _mmt(R[a], R_hat[a])
        Rt_s[s, a] = Rt
        pt_s[s, a] = P[a] - _mv(Rt, p_hat[a])
        ph_s[s, a] = p_hat[a]


@njit(cache=True)
def _simulate(R, R_hat, p_hat, P, B, table, ptr, nbr, gain, kR, kp, h, n_steps, stride, limit):
    n = R.shape[0]
    n_samples = n_steps // stride + 1
    if n_steps % stride:
        n_samples += 1
    ts = np.empty(n_samples)
    Rt_s = np.empty((n_samples, n, 3, 3))
    pt_s = np.empty((n_samples, n, 3))
    ph_s = np.empty((n_samples, n, 3))
    ts[0] = 0.0
    _record(0, R, R_hat, p_hat, P, Rt_s, pt_s, ph_s)
    s = 1
    drift = 0.0
    for k in range(n_steps):
        t = k * h
        w_quarter = _omega_all(table, n, t + 0.25 * h)
        w_mid = _omega_all(table, n, t + 0.5 * h)
        R_half = _step_attitudes(R, w_quarter, 0.5 * h)
        R_next = _step_attitudes(R, w_mid, h)
        own0, recv0 = _measure(R, B, ptr, nbr)
        own1, recv1 = _measure(R_half, B, ptr, nbr)
        R_hat, p_hat = _observer_step(R_hat, p_hat, w_quarter, w_mid, own0, recv0, own1, recv1,
                                      R_half, R_next, P, ptr, nbr, gain, kR, kp, h)
        R = R_next
        for a in range(n):
            drift = max(drift, _so3_error(R[a]), _so3_error(R_hat[a]))
            if np.sqrt(np.sum(p_hat[a] * p_hat[a])) > limit:
                return ts[:s], Rt_s[:s], pt_s[:s], ph_s[:s], drift, k + 1
        if (k + 1) % stride == 0 or k + 1 == n_steps:
            ts[s] = (k + 1) * h
            _record(s, R, R_hat, p_hat, P, Rt_s, pt_s, ph_s)
            s += 1
    return ts, Rt_s, pt_s, ph_s, drift, -1


def run(config: ScenarioConfig, R_truth0: np.ndarray | None = None,
        stride: int | None = None) -> TimeSeries:
    """Simulate truth and observers from ``t = 0`` to the horizon.

    True attitudes start at the identity unless ``R_truth0`` (``(n, 3, 3)``)
    is given; the result is a deterministic function of the config.
    """
    n = config.n
    ptr, nbr, gain = config.topology.as_arrays()
    B = edge_bearings(config.positions, ptr, nbr)
    table = signal_table(config.signals)
    R0 = np.tile(np.eye(3), (n, 1, 1)) if R_truth0 is None else np.array(R_truth0, dtype=float)
    R_hat0, p_hat0 = config.initial_estimates()
    for l in (0, 1):
        R_hat0[l] = R0[l]
    ts, Rt, pt, ph, drift, bad = _simulate(
        R0, R_hat0, p_hat0, config.positions, B, table, ptr, nbr, gain,
        config.k_R, config.k_p, config.step, config.n_steps, stride or config.stride, DIVERGENCE_LIMIT)
    if bad >= 0:
        raise DivergenceError(f"position estimate exceeded {DIVERGENCE_LIMIT:g} m at step {bad}")
    return TimeSeries(ts, Rt, pt, ph, config.positions.copy(), config.followers, drift)


def summarize(config: ScenarioConfig, series: TimeSeries) -> dict:
    """Final errors and per-follower convergence flags, as a JSON-ready dict."""
    rerr, perr, phat = series.rerr[-1], series.perr[-1], series.phat_err[-1]
    flags = {str(i): bool(rerr[k] < config.attitude_tol and perr[k] < config.position_tol
                          and phat[k] < config.position_tol)
             for k, i in enumerate(series.followers)}
    return {
        "scenario": config.name,
        "config_sha256": config.digest(),
        "config": config.to_document(),
        "step": config.step,
        "horizon": config.horizon,
        "final_time": float(series.t[-1]),
        "final": {
            "rerr": {str(i): float(v) for i, v in zip(series.followers, rerr)},
            "perr": {str(i): float(v) for i, v in zip(series.followers, perr)},
            "phat_err": {str(i): float(v) for i, v in zip(series.followers, phat)},
            "rerr_avg": float(series.rerr_avg[-1]),
            "perr_avg": float(series.perr_avg[-1]),
            "phat_err_avg": float(series.phat_err_avg[-1]),
        },
        "converged": flags,
        "all_converged": all(flags.values()),
        "so3_drift": series.so3_drift,
    }


# ---------------------------------------------------------------- sweeps

def _trial_initials(config: ScenarioConfig, seed_seq: np.random.SeedSequence):
    rng = np.random.default_rng(seed_seq)
    rots, pos = {}, {}
    for i in config.followers:
        rots[i] = random_rotation(rng)
        pos[i] = rng.uniform(-config.sweep_box, config.sweep_box, size=3)
    return rots, pos


def _trial(args) -> tuple[int, bool, float, float]:
    config, index, seed_seq, tol = args
    rots, pos = _trial_initials(config, seed_seq)
    trial = config.with_initial(rots, pos).with_overrides(step=config.sweep_step,
                                                          horizon=config.sweep_horizon)
    series = run(trial, stride=trial.n_steps)
    r, p, q = series.rerr[-1].max(), series.perr[-1].max(), series.phat_err[-1].max()
    return index, bool(max(r, p, q) < tol), float(r), float(max(p, q))


def basin_sweep(config: ScenarioConfig, trials: int | None = None, seed: int | None = None,
                workers: int = 1) -> dict:
    """Run ``trials`` simulations from Haar-random attitude estimates and box-uniform positions.

    Trial ``k`` draws from ``SeedSequence(seed).spawn(trials)[k]``, so any single
    trial can be replayed.  Convergence means every follower's attitude and
    position errors are below ``config.sweep_tol`` at the horizon.
    """
    trials = config.sweep_trials if trials is None else trials
    seed = config.seed if seed is None else seed
    if trials < 1:
        raise ValueError("trials must be at least 1")
    seqs = np.random.SeedSequence(seed).spawn(trials)
    jobs = [(config, k, seqs[k], config.sweep_tol) for k in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_trial, jobs))
    else:
        results = [_trial(j) for j in jobs]
    results.sort()
    failed = [k for k, ok, _, _ in results if not ok]
    return {
        "scenario": config.name,
        "config_sha256": config.digest(),
        "seed": seed,
        "sampler": "SO(3): normalized Gaussian quaternion (Haar); positions: uniform box",
        "box_half_width": config.sweep_box,
        "tolerance": config.sweep_tol,
        "horizon": config.sweep_horizon,
        "step": config.sweep_step,
        "trials": trials,
        "converged": trials - len(failed),
        "fraction": (trials - len(failed)) / trials,
        "failed_trials": failed,
        "final_attitude_error": [r for _, _, r, _ in results],
        "final_position_error": [p for _, _, _, p in results],
    }


def planted_equilibrium_trial(config: ScenarioConfig, agent: int = 3, which: int = 0,
                              radius: float = 0.1) -> dict:
    """Start ``agent`` exactly at an undesired attitude equilibrium (all else exact).

    ``which`` selects the eigenvector of the agent's bearing matrix (ascending
    eigenvalue order).  In exact arithmetic the error stays there forever; in
    floating point, round-off seeds the unstable mode, so the report gives the
    residence time inside a ``radius`` ball around the equilibrium as well as
    the final error.
    """
    from .analysis import enumerate_equilibria
    from .network import bearing_matrix

    M = bearing_matrix(agent, config.topology, config.positions)
    eq = enumerate_equilibria(agent, M, allow_repeated=True)
    R_star = eq.points[which + 1]
    rots = {i: np.eye(3) for i in config.followers}
    rots[agent] = R_star.T  # true attitudes start at the identity
    pos = {i: config.positions[i - 1] for i in config.followers}
    trial = config.with_initial(rots, pos).with_overrides(step=config.sweep_step,
                                                          horizon=config.sweep_horizon)
    series = run(trial, stride=max(1, int(round(0.1 / trial.step))))
    k = config.followers.index(agent)
    away = 0.25 * (3.0 - np.einsum("ji,sji->s", R_star, series.R_tilde[:, agent - 1]))
    left = np.flatnonzero(np.sqrt(np.clip(away, 0.0, None)) > radius)
    return {
        "agent": agent,
        "equilibrium": eq.labels[which + 1],
        "initial_rerr": float(series.rerr[0, k]),
        "residence_time": float(series.t[left[0]]) if len(left) else None,
        "final_rerr": float(series.rerr[-1, k]),
        "converged": bool(series.rerr[-1, k] < config.sweep_tol),
    }


# ---------------------------------------------------------------- random scenarios

def random_scenario(rng: np.random.Generator, n: int = 6, step: float = 1e-3,
                    horizon: float = 30.0) -> ScenarioConfig:
    """A random valid scenario: spread positions, DAG with 2-3 earlier neighbors each."""
    while True:
        positions = rng.uniform(-3.0, 3.0, size=(n, 3))
        nbrs = {1: [], 2: [], 3: [1, 2]}
        for i in range(4, n + 1):
            m = int(rng.integers(2, min(3, i - 1) + 1))
            nbrs[i] = sorted(int(j) for j in rng.choice(np.arange(1, i), size=m, replace=False))
        gains = {(i, j): float(rng.uniform(0.5, 2.0)) for i, js in nbrs.items() for j in js}
        topo = Topology.from_neighbors(n, nbrs, gains)
        signals = []
        for _ in range(n):
            axes = []
            for _ax in range(3):
                kind = ("const", "sin", "cos")[int(rng.integers(3))]
                axes.append((Term(kind, float(rng.uniform(-2, 2)), float(rng.uniform(0.5, 6))),))
            signals.append(OmegaSignal(tuple(axes)))
        initial = {}
        for i in range(3, n + 1):
            ax = rng.standard_normal(3)
            initial[i] = InitialEstimate(float(rng.uniform(0, 0.8 * math.pi)), tuple(ax / np.linalg.norm(ax)),
                                         tuple(positions[i - 1] + rng.uniform(-3, 3, size=3)))
        try:
            cfg = ScenarioConfig(n=n, positions=positions, signals=tuple(signals), topology=topo,
                                 k_R=float(rng.uniform(0.5, 2.0)), k_p=float(rng.uniform(0.5, 2.0)),
                                 initial=initial, step=step, horizon=horizon, name="random")
        except ValueError:
            continue
        # keep geometries whose bearing sets are comfortably non-degenerate
        from .network import spectral_report
        rep = spectral_report(cfg.topology, cfg.positions)
        if min(s.q_min for s in rep.followers.values()) > 0.1 and all(s.distinct for s in rep.followers.values()):
            return cfg
