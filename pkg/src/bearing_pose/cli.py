"""Command-line entry point: ``bearing-pose {validate,run,equilibria,sweep} CONFIG``.

CONFIG is a YAML path or the name of a bundled scenario.  Flags override file
values, which override defaults.  Every printed check line is mirrored in a
JSON report written to ``--out``; the exit status is 0 iff every check passed.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


from . import analysis, network, sim

EXIT_FAIL = 1
EXIT_ERROR = 2


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {text}")
    return v


class Report:
    """Collects check lines for stdout and the JSON mirror."""

    def __init__(self, command: str, config_name: str):
        self.data: dict = {"command": command, "scenario": config_name, "checks": [], "notes": []}

    def check(self, name: str, ok: bool, detail: str = "", **extra) -> bool:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))
        self.data["checks"].append({"name": name, "ok": bool(ok), "detail": detail, **extra})
        return ok

    def note(self, text: str) -> None:
        print(f"[NOTE] {text}")
        self.data["notes"].append(text)

    @property
    def ok(self) -> bool:
        return all(c["ok"] for c in self.data["checks"])

    def write(self, out: Path, filename: str) -> Path:
        self.data["ok"] = self.ok
        path = out / filename
        path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")
        return path


def _load(args) -> sim.ScenarioConfig:
    config = sim.load_scenario(args.config)
    return config.with_overrides(step=getattr(args, "step", None), horizon=getattr(args, "horizon", None),
                                 k_R=args.kR, k_p=args.kp, k_ij=args.kij)


def _fmt(values) -> str:
    return "{" + ", ".join(f"{v:.4f}" for v in values) + "}"


# ---------------------------------------------------------------- subcommands

def cmd_validate(args, out: Path) -> int:
    doc = sim._read_document(args.config)
    name = doc.get("name", str(args.config))
    report = Report("validate", name)
    try:
        config = sim.load_scenario(doc).with_overrides(k_R=args.kR, k_p=args.kp, k_ij=args.kij)
    except network.TopologyError as exc:
        report.check(f"topology: {exc.clause}", False, str(exc), agents=list(exc.agents))
        report.write(out, "validate.json")
        return EXIT_FAIL
    for clause in network.CLAUSES:
        report.check(f"topology: {clause}", True)
    spectra = network.spectral_report(config.topology, config.positions, config.distinct_gap)
    report.data["spectra"] = spectra.to_dict()
    for i, s in spectra.followers.items():
        print(f"  agent {i}: M eigenvalues {_fmt(s.m_eigenvalues)}, Q eigenvalues {_fmt(s.q_eigenvalues)}, "
              f"min Q eigenvalue {s.q_min:.4f}, distinct {s.distinct}")
        if not s.distinct:
            report.note(f"agent {i}: bearing matrix eigenvalues {_fmt(s.m_eigenvalues)} are not distinct; "
                        "its undesired attitude equilibria form a continuum")
    report.write(out, "validate.json")
    return 0 if report.ok else EXIT_FAIL


def cmd_run(args, out: Path) -> int:
    config = _load(args)
    report = Report("run", config.name)
    try:
        series = sim.run(config)
    except sim.DivergenceError as exc:
        report.check("no divergence", False, str(exc))
        report.write(out, "run_summary.json")
        return EXIT_FAIL
    csv_path = sim.export(series, out / f"{config.name}.csv")
    summary = sim.summarize(config, series)
    report.data.update(summary, csv=str(csv_path))
    final = summary["final"]
    print(f"t = {summary['final_time']:g} s: average attitude error {final['rerr_avg']:.3e}, "
          f"average position error {final['perr_avg']:.3e}")
    for i in config.followers:
        report.check(f"agent {i} converged", summary["converged"][str(i)],
                     f"rerr {final['rerr'][str(i)]:.3e} (< {config.attitude_tol:g}), "
                     f"perr {final['perr'][str(i)]:.3e}, phat_err {final['phat_err'][str(i)]:.3e} "
                     f"(< {config.position_tol:g})")
    report.check("SO(3) drift", summary["so3_drift"] <= 1e-9, f"{summary['so3_drift']:.2e} (<= 1e-9)")
    report.write(out, "run_summary.json")
    print(f"wrote {csv_path} and {out / 'run_summary.json'}")
    return 0 if report.ok else EXIT_FAIL


def cmd_equilibria(args, out: Path) -> int:
    config = _load(args)
    report = Report("equilibria", config.name)
    eq = analysis.equilibria_report(config)
    report.data["followers"] = eq
    for i, entry in eq.items():
        if not entry["distinct"]:
            report.note(f"agent {i}: precondition failed, eigenvalues {_fmt(entry['eigenvalues'])} are "
                        "not distinct; undesired equilibria are a continuum, one representative each shown")
        for e in entry["equilibria"]:
            re = _fmt(e["eigenvalues_real"])
            detail = f"residual {e['residual']:.1e}, Re(eig) {re}"
            if "escape_time" in e:
                t = e["escape_time"]
                detail += f", escape {'never' if t is None else f'{t:.2f} s'}"
            report.check(f"agent {i} {e['label']} is {e['expected']}",
                         e["residual_ok"] and e["verdict_ok"] and e.get("escape_ok", True), detail)
    report.write(out, "equilibria.json")
    return 0 if report.ok else EXIT_FAIL


def cmd_sweep(args, out: Path) -> int:
    config = _load(args)
    report = Report("sweep", config.name)
    result = sim.basin_sweep(config, trials=args.trials, seed=args.seed, workers=args.workers)
    report.data["sweep"] = result
    print(f"{result['converged']}/{result['trials']} trials converged "
          f"(seed {result['seed']}, h = {result['step']:g}, T = {result['horizon']:g} s)")
    if result["failed_trials"]:
        print(f"  failed trials (replay with SeedSequence({result['seed']}).spawn(n)[k]): "
              f"{result['failed_trials']}")
    report.check("convergence fraction", result["fraction"] >= 0.99, f"{result['fraction']:.2f} (>= 0.99)")
    witness = sim.planted_equilibrium_trial(config)
    report.data["planted_equilibrium"] = witness
    stay = witness["residence_time"]
    report.note(f"planted start at agent {witness['agent']} {witness['equilibrium']}: "
                + ("held for the whole horizon" if stay is None else
                   f"held until t = {stay:.1f} s, then round-off seeded the unstable mode")
                + f"; final attitude error {witness['final_rerr']:.2e}")
    report.write(out, "sweep.json")
    return 0 if report.ok else EXIT_FAIL


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bearing-pose", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, simulate: bool):
        p.add_argument("config", help="scenario YAML path or bundled scenario name")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
        p.add_argument("--kR", type=_positive_float, help="attitude gain override")
        p.add_argument("--kp", type=_positive_float, help="position gain override")
        p.add_argument("--kij", type=_positive_float, help="uniform edge gain override")
        if simulate:
            p.add_argument("--step", type=_positive_float, help="integration step override [s]")
            p.add_argument("--horizon", type=_positive_float, help="horizon override [s]")

    common(sub.add_parser("validate", help="check topology and geometry, print spectra"), False)
    common(sub.add_parser("run", help="simulate and write CSV plus summary JSON"), True)
    common(sub.add_parser("equilibria", help="enumerate and classify attitude equilibria"), False)
    sw = sub.add_parser("sweep", help="random-initialization convergence sweep")
    common(sw, False)
    sw.add_argument("--trials", type=_positive_int, help="number of trials (default: from config)")
    sw.add_argument("--seed", type=int, help="root seed (default: from config)")
    sw.add_argument("--workers", type=_positive_int, default=1, help="worker processes")
    return parser


COMMANDS = {"validate": cmd_validate, "run": cmd_run, "equilibria": cmd_equilibria, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, args.out)
    except (OSError, sim.ConfigError, network.TopologyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
