"""Command-line front end.

A single JSON config file selects the command and its parameters; the
tool emits a deterministic JSON report (or a CSV trajectory) and encodes
the outcome in its exit status:

    0  analysis completed with a pass / supported verdict
    1  a condition was falsified or counterevidence was found
    2  configuration or schema error
    3  numeric failure (blow-up, divergence)

Wall-clock timing goes to standard error only, keeping reports
byte-identical across replays of the same config and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .comparison import KLFunction, linear
from .cones import finite_dim_battery
from .discrete import TrajectoryOverflowError, iterate
from .network import (
    PERIODIC,
    AggregatedISSData,
    Finite,
    GainFamily,
    StateVector,
)
from .odenet import (
    OdeRun,
    kind_from_json,
    simulate,
    threshold_scan,
    write_trajectory_csv,
)
from .operators import GainOperator, kleene_star, spectral_radius
from .reports import canonical_json, make_report, write_atomic
from .verifier import NetworkSpec, cubic_chain_network, linear_chain_network, verify

__all__ = ["main", "run"]

EXIT_PASS = 0
EXIT_FALSIFIED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

SAMPLING_COMMANDS = {"analyze", "battery"}
COMMANDS = ("analyze", "spectral", "closure", "simulate-discrete",
            "simulate-ode", "threshold-scan", "battery")


class ConfigError(ValueError):
    pass


# -- config helpers ---------------------------------------------------

def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"missing config key {key!r}")
    return cfg[key]


def _load_family(cfg: dict) -> GainFamily:
    try:
        return GainFamily.from_json(_require(cfg, "gains"))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad gain family: {e}") from e


def _load_operator(cfg: dict) -> GainOperator:
    fam = _load_family(cfg)
    window = cfg.get("window")
    boundary = cfg.get("boundary", PERIODIC)
    try:
        return GainOperator(fam, window, boundary)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad operator config: {e}") from e


def _load_vector(cfg, key: str, n: int, boundary: str) -> StateVector:
    spec = _require(cfg, key)
    try:
        if isinstance(spec, dict) and "value" in spec:
            return StateVector(np.full(n, float(spec["value"])), boundary=boundary)
        if isinstance(spec, dict):
            return StateVector.from_json(spec)
        return StateVector(np.asarray(spec, dtype=float), boundary=boundary)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad vector {key!r}: {e}") from e


def _load_network_spec(cfg: dict) -> NetworkSpec:
    net = _require(cfg, "network")
    preset = net.get("preset")
    if preset is not None:
        kind = preset.get("kind")
        kwargs = {k: preset[k] for k in ("window", "boundary") if k in preset}
        if kind == "linear":
            return linear_chain_network(preset["a"], preset["b"], **kwargs)
        if kind == "cubic":
            if "eps" in preset:
                kwargs["eps"] = preset["eps"]
            return cubic_chain_network(preset["a"], preset["b"], **kwargs)
        raise ConfigError(f"unknown preset kind {preset.get('kind')!r}")
    fam = _load_family(net)
    # raw gain families get neutral subsystem data: exponential unit
    # transients and unit static/input envelopes
    beta = KLFunction(1.0, 1.0)
    data = AggregatedISSData(betas=(beta,), external_gains=(linear(1.0),),
                             beta_max=beta, sigma_max=linear(1.0),
                             gamma_max=linear(1.0))
    return NetworkSpec(fam, data, window=net.get("window"),
                       boundary=net.get("boundary", PERIODIC),
                       name=net.get("name", ""))


# -- command handlers: return (body, verdict, exit_code, artifacts) ----

def _cmd_analyze(cfg, seed, plots_dir):
    spec = _load_network_spec(cfg)
    verdict = verify(spec, samples=int(cfg.get("samples", 300)), seed=seed)
    body = {"network": spec.to_json(), "verdict": verdict.to_json()}
    if plots_dir and "eta" in verdict.sub_reports:
        from .plotting import plot_eta_envelope
        body["plots"] = [plot_eta_envelope(
            verdict.sub_reports["eta"], os.path.join(plots_dir, "eta_envelope.png"))]
    code = EXIT_PASS if verdict.conclusion in ("ISS", "UGS") else EXIT_FALSIFIED
    return body, verdict.conclusion, code


def _cmd_spectral(cfg, seed, plots_dir):
    op = _load_operator(cfg)
    est = spectral_radius(op, tol=float(cfg.get("tol", 1e-9)),
                          n_max=int(cfg.get("k_max", 10_000)))
    body = {"spectral": est.to_json()}
    if plots_dir:
        from .plotting import plot_spectral_history
        body["plots"] = [plot_spectral_history(
            est, os.path.join(plots_dir, "spectral_history.png"))]
    verdict = "subcritical" if est.value < 1.0 else "supercritical"
    return body, verdict, EXIT_PASS if est.value < 1.0 else EXIT_FALSIFIED


def _cmd_closure(cfg, seed, plots_dir):
    op = _load_operator(cfg)
    s = _load_vector(cfg, "s", op.n, op.boundary)
    res = kleene_star(op, s, k_max=int(cfg.get("k_max", 10_000)))
    body = {"closure": res.to_json()}
    if res.diverged:
        return body, "diverged", EXIT_NUMERIC
    return body, "converged", EXIT_PASS


def _cmd_simulate_discrete(cfg, seed, plots_dir):
    op = _load_operator(cfg)
    x0 = _load_vector(cfg, "x0", op.n, op.boundary)
    u = cfg.get("u")
    K = int(cfg.get("K", 100))
    code, verdict = EXIT_PASS, "completed"
    try:
        traj = iterate(op, x0, u, K)
    except TrajectoryOverflowError as e:
        traj = e.trajectory
        code, verdict = EXIT_NUMERIC, "overflow"
    body = {"steps": traj.K, "norms": [float(v) for v in traj.norms()],
            "final": traj.states[-1].to_json()}
    if plots_dir:
        from .plotting import plot_discrete_norms
        body["plots"] = [plot_discrete_norms(
            traj, os.path.join(plots_dir, "discrete_norms.png"))]
    return body, verdict, code, ("discrete", traj)


def _cmd_simulate_ode(cfg, seed, plots_dir):
    try:
        kind = kind_from_json(_require(cfg, "kind"))
        n = int(cfg.get("N", 64))
        boundary = cfg.get("boundary", PERIODIC)
        x0_spec = _require(cfg, "x0")
        if isinstance(x0_spec, dict) and "value" in x0_spec:
            x0 = StateVector(np.full(n, float(x0_spec["value"])), boundary=boundary)
        else:
            x0 = StateVector(np.asarray(x0_spec, dtype=float), boundary=boundary)
        u = cfg.get("u")
        if isinstance(u, list) and u and isinstance(u[0], list):
            u = [(float(t0), v) for t0, v in u]
        run = OdeRun(kind, x0, u, T=float(cfg.get("T", 10.0)),
                     dt=float(cfg.get("dt", 1e-3)),
                     store_every=int(cfg.get("store_every", 1)))
    except (TypeError, ValueError, ConfigError) as e:
        raise ConfigError(f"bad ode run: {e}") from e
    traj = simulate(run)
    body = {"run": run.to_json(), "samples": len(traj.ts),
            "final_sup_norm": traj.final_sup_norm(),
            "sup_norms": [float(v) for v in traj.sup_norms()[:: max(1, len(traj.ts) // 200)]],
            "escaped": traj.escaped, "escape_time": traj.escape_time}
    if plots_dir:
        from .plotting import plot_ode_trajectory
        body["plots"] = [plot_ode_trajectory(
            traj, os.path.join(plots_dir, "ode_trajectory.png"))]
    code = EXIT_NUMERIC if traj.escaped else EXIT_PASS
    return body, "escaped" if traj.escaped else "completed", code, ("ode", traj)


def _cmd_threshold_scan(cfg, seed, plots_dir):
    kind = _require(cfg, "kind")
    grid = [(float(a), float(b)) for a, b in _require(cfg, "grid")]
    n = int(cfg.get("N", 64))
    x0 = StateVector(np.full(n, float(cfg.get("x0_value", 1.0))),
                     boundary=cfg.get("boundary", PERIODIC))
    try:
        scan = threshold_scan(kind, grid, x0, T=float(cfg.get("T", 10.0)),
                              dt=float(cfg.get("dt", 1e-3)))
    except ValueError as e:
        raise ConfigError(str(e)) from e
    body = {"scan": scan.to_json()}
    if plots_dir:
        from .plotting import plot_threshold_scan
        body["plots"] = [plot_threshold_scan(
            scan, os.path.join(plots_dir, "threshold_scan.png"))]
    return body, "completed", EXIT_PASS


def _cmd_battery(cfg, seed, plots_dir):
    op = _load_operator(cfg)
    if not isinstance(op.family.structure, Finite):
        raise ConfigError("the battery command needs a finite gain structure")
    report = finite_dim_battery(op, samples=int(cfg.get("samples", 400)), seed=seed)
    body = {"battery": report.to_json()}
    holds = all(report.verdicts.values())
    verdict = "holds" if holds else "falsified"
    if not report.consistent:
        verdict = "inconsistent"
    return body, verdict, EXIT_PASS if holds else EXIT_FALSIFIED


_HANDLERS = {
    "analyze": _cmd_analyze,
    "spectral": _cmd_spectral,
    "closure": _cmd_closure,
    "simulate-discrete": _cmd_simulate_discrete,
    "simulate-ode": _cmd_simulate_ode,
    "threshold-scan": _cmd_threshold_scan,
    "battery": _cmd_battery,
}


# -- entry point ------------------------------------------------------

def run(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="smallgain",
        description="Small-gain analysis of networked monotone systems.")
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--seed", type=int, help="overrides the config seed")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--plots", metavar="DIR",
                        help="also render figures into this directory")
    args = parser.parse_args(argv)

    t0 = time.perf_counter()
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except OSError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as e:
        print(f"error: malformed JSON config: {e}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        command = _require(cfg, "command")
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}; choose from {COMMANDS}")
        seed = args.seed if args.seed is not None else cfg.get("seed")
        if seed is None:
            if command in SAMPLING_COMMANDS:
                raise ConfigError(f"command {command!r} samples and requires a seed")
            seed = 0
        seed = int(seed)
        if args.plots:
            os.makedirs(args.plots, exist_ok=True)
        if args.format == "csv" and command not in ("simulate-discrete", "simulate-ode"):
            raise ConfigError("csv output is only available for simulation commands")

        result = _HANDLERS[command](cfg, seed, args.plots)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC

    body, verdict, code = result[:3]
    artifact = result[3] if len(result) > 3 else None

    if args.format == "csv":
        if artifact is None:
            print("error: no trajectory to export", file=sys.stderr)
            return EXIT_CONFIG
        _write_csv(artifact, args.out)
    else:
        report = make_report(command, cfg, body, verdict)
        text = canonical_json(report)
        if args.out:
            write_atomic(args.out, text)
        else:
            sys.stdout.write(text)
    print(f"{command}: verdict={verdict} wall_time={time.perf_counter() - t0:.3f}s",
          file=sys.stderr)
    return code


def _write_csv(artifact, out):
    kind, traj = artifact
    if out is None:
        raise ConfigError("csv output requires --out")
    if kind == "ode":
        write_trajectory_csv(traj, out)
        return
    import csv as _csv
    with open(out, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["k", "i", "x_i", "u_i"])
        for row in traj.to_csv_rows():
            w.writerow(row)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
