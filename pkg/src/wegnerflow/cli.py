"""
Command-line front end.

    wegnerflow [--config FILE] <command> [options]

Commands: classify, flow, portrait, spectrum, find-unstable, fock-oracle,
matrix-flow. Exit status is 0 on success, 2 on invalid input and 3 when an
integration fails to converge. Flags override values from ``--config`` (a JSON
object keyed by option name), which override built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from . import analytic_oracles as ao
from . import fock_matrix_oracle as fmo
from .core_model import (
    BranchLabel,
    ConvergenceError,
    QuadraticCoefficients,
    Regime,
    WegnerFlowError,
    classify_regime,
)
from .flow_engine import (
    Direction,
    HyperbolicState,
    IntegratorConfig,
    find_unstable_points,
    integrate_generalized,
    integrate_unitary,
    predict_fixed_point,
    to_hyperbolic,
)
from .serialization import (
    TRAJECTORY_COLUMNS,
    dumps,
    fmt,
    spectrum_to_dict,
    terminal_to_dict,
    trajectory_rows,
    trajectory_to_csv,
    trajectory_to_dict,
)

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED = 0, 2, 3

DEFAULTS = {
    "omega0": 1.0,
    "lambda0": 0.25,
    "v0": 0.0,
    "rtol": 1e-10,
    "atol": None,  # 1e-12; 1e-13 for matrix-flow
    "l_max": None,
    "convergence_tol": 1e-10,
    "max_steps": 1_000_000,
    "n_samples": 200,
    "record_steps": False,
    "format": None,
    "output": None,
    # command specific
    "generalized": False,
    "direction": "forward",
    "epsilon": 1e-6,
    "alpha": math.pi / 2,
    "n_max": 5,
    "branch": "+",
    "omega_range": [0.5, 2.0, 4],
    "lambda_range": [0.1, 1.0, 4],
    "N": 200,
    "levels": 5,
    "matrix": None,
}

INTEGRATOR_KEYS = ("rtol", "atol", "l_max", "convergence_tol", "max_steps", "n_samples",
                   "record_steps")


def _common(p: argparse.ArgumentParser, physical: bool = True):
    if physical:
        g = p.add_argument_group("Hamiltonian")
        g.add_argument("--omega0", type=float, help="coefficient of a^dag a (default 1)")
        g.add_argument("--lambda0", type=float, help="coefficient of a^dag^2 + a^2 (default 0.25)")
        g.add_argument("--v0", type=float, help="scalar offset (default 0)")
    g = p.add_argument_group("integrator")
    g.add_argument("--rtol", type=float, help="relative tolerance (default 1e-10)")
    g.add_argument("--atol", type=float,
                   help="absolute tolerance (default 1e-12; 1e-13 for matrix-flow)")
    g.add_argument("--l-max", dest="l_max", type=float,
                   help="flow-parameter limit (default: from the attractor rate)")
    g.add_argument("--convergence-tol", dest="convergence_tol", type=float,
                   help="scaled flow-velocity threshold for arrival (default 1e-10)")
    g.add_argument("--max-steps", dest="max_steps", type=int, help="step budget (default 1e6)")
    g.add_argument("--n-samples", dest="n_samples", type=int,
                   help="log-spaced samples per trajectory (default 200)")
    g.add_argument("--record-steps", dest="record_steps", action="store_const", const=True,
                   help="also record every accepted integrator step")
    p.add_argument("--format", choices=("csv", "json"), help="output format")
    p.add_argument("-o", "--output", help="output file (default: standard output)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wegnerflow",
        description="Flow-equation diagonalization of H = w a^dag a + l (a^dag^2 + a^2) + v.",
    )
    parser.add_argument("--config", help="JSON file with option defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="regime, invariant and predicted fixed point")
    _common(p)

    p = sub.add_parser("flow", help="integrate one flow and write its trajectory (csv default)")
    _common(p)
    p.add_argument("--generalized", action="store_const", const=True,
                   help="integrate the complex chart flow instead of the unitary one")
    p.add_argument("--direction", choices=("forward", "backward"),
                   help="generalized only: forward from (omega0, lambda0), or backward "
                        "from the shifted attractor epsilon*exp(i alpha) (default forward)")
    p.add_argument("--epsilon", type=float, help="shift size for backward runs (default 1e-6)")
    p.add_argument("--alpha", type=float, help="shift direction angle (default pi/2)")

    p = sub.add_parser("portrait", help="trajectories over a grid of initial points")
    _common(p)
    p.add_argument("--omega-range", dest="omega_range", nargs=3, type=float,
                   metavar=("LO", "HI", "N"), help="grid in omega0 (default 0.5 2 4)")
    p.add_argument("--lambda-range", dest="lambda_range", nargs=3, type=float,
                   metavar=("LO", "HI", "N"), help="grid in lambda0 (default 0.1 1 4)")
    p.add_argument("--generalized", action="store_const", const=True,
                   help="emit the three branch flows 0, +, - for (omega0, lambda0, v0) instead")
    p.add_argument("--epsilon", type=float, help="shift size for the +- branches (default 1e-6)")
    p.add_argument("--alpha", type=float, help="shift direction angle (default pi/2)")

    p = sub.add_parser("spectrum", help="analytic levels E_n (json)")
    _common(p)
    p.add_argument("--n-max", dest="n_max", type=int, help="highest level index (default 5)")
    p.add_argument("--branch", choices=("+", "-"), help="unbounded branch (default +)")

    p = sub.add_parser("find-unstable", help="locate the two unstable fixed points")
    _common(p)
    p.add_argument("--epsilon", type=float, help="shift size (default 1e-6)")
    p.add_argument("--alpha", type=float, help="shift direction angle (default pi/2)")

    p = sub.add_parser("fock-oracle", help="lowest eigenvalues of the truncated matrix")
    _common(p)
    p.add_argument("--N", type=int, help="highest number state kept (default 200)")
    p.add_argument("--levels", type=int, help="number of eigenvalues reported (default 5)")

    p = sub.add_parser("matrix-flow", help="double-bracket flow of a Hermitian matrix")
    _common(p, physical=False)
    p.add_argument("--matrix", help="matrix text file (default: packaged 2x2 example)")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise WegnerFlowError(f"cannot read config file: {exc}") from None
        if not isinstance(loaded, dict):
            raise WegnerFlowError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise WegnerFlowError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            cfg[key] = value
    if cfg["atol"] is None:
        cfg["atol"] = 1e-13 if args.command == "matrix-flow" else 1e-12
    cfg["command"] = args.command
    return cfg


def integrator_config(cfg: dict) -> IntegratorConfig:
    return IntegratorConfig(**{k: cfg[k] for k in INTEGRATOR_KEYS})


def _physical(cfg: dict) -> QuadraticCoefficients:
    return QuadraticCoefficients.physical(cfg["omega0"], cfg["lambda0"], cfg["v0"])


def _emit(text: str, cfg: dict, path: Optional[str] = None):
    target = path or cfg["output"]
    if target:
        Path(target).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_classify(cfg: dict) -> int:
    c = _physical(cfg)
    regime = classify_regime(c)
    inv = c.invariant.real
    report = {"regime": regime.value, "invariant": inv}
    if regime is not Regime.DEGENERATE:
        report["fixed_point"] = terminal_to_dict(predict_fixed_point(c))
    if regime in (Regime.BOUNDED, Regime.FREE):
        report["Omega"] = ao.omega_closed_form(c.omega.real, c.lam.real)
    elif regime is Regime.UNBOUNDED:
        report["gamma"] = ao.decay_width(c.omega.real, c.lam.real)
    if cfg["format"] == "json":
        report["config"] = cfg
        _emit(dumps(report), cfg)
        return EXIT_OK
    line = regime.value
    if "Omega" in report:
        line += f", Ω={fmt(report['Omega'])}"
    if "gamma" in report:
        line += f", γ={fmt(report['gamma'])}"
    lines = [line, f"invariant omega0^2 - 4 lambda0^2 = {fmt(inv)}"]
    if "fixed_point" in report:
        fp = predict_fixed_point(c)
        fc = fp.coefficients
        lines.append(f"fixed point ({fp.stability.value}): omega={fmt(fc.omega.real)} "
                     f"lambda={fmt(fc.lam.real)} v={fmt(fc.v.real)}")
    _emit("\n".join(lines) + "\n", cfg)
    return EXIT_OK


def _flow_trajectory(cfg: dict):
    c = _physical(cfg)
    icfg = integrator_config(cfg)
    if not cfg["generalized"]:
        return integrate_unitary(c, icfg)
    direction = Direction(cfg["direction"])
    if direction is Direction.FORWARD:
        return integrate_generalized(to_hyperbolic(c), (c.v.real, c.omega.real), direction, icfg)
    if classify_regime(c) is not Regime.UNBOUNDED:
        raise WegnerFlowError("backward generalized flow needs Unbounded parameters")
    fp = predict_fixed_point(c)
    lam_inf = fp.coefficients.lam.real
    seed = HyperbolicState(cfg["epsilon"] * complex(math.cos(cfg["alpha"]), math.sin(cfg["alpha"])),
                           abs(lam_inf), -1 if lam_inf < 0 else 1)
    return integrate_generalized(seed, (c.v.real, c.omega.real), direction, icfg)


def cmd_flow(cfg: dict) -> int:
    traj = _flow_trajectory(cfg)
    if (cfg["format"] or "csv") == "csv":
        _emit(trajectory_to_csv(traj), cfg)
    else:
        _emit(dumps({"config": cfg, "trajectory": trajectory_to_dict(traj)}), cfg)
    return EXIT_OK if traj.converged else EXIT_NONCONVERGED


def _grid(bounds) -> np.ndarray:
    lo, hi, n = bounds
    n = int(n)
    if n < 1:
        raise WegnerFlowError("grid size must be >= 1")
    return np.linspace(lo, hi, n)


def _portrait_task(task):
    omega0, lambda0, v0, icfg = task
    c = QuadraticCoefficients.physical(omega0, lambda0, v0)
    return integrate_unitary(c, icfg)


def worker_count() -> int:
    env = os.environ.get("WEGNERFLOW_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            raise WegnerFlowError("WEGNERFLOW_THREADS must be an integer") from None
    return n


def portrait(cfg: dict) -> list[dict]:
    """Tagged trajectories for the portrait; order is grid order (omega outer)."""
    icfg = integrator_config(cfg)
    blocks = []
    if cfg["generalized"]:
        c = _physical(cfg)
        if classify_regime(c) is not Regime.UNBOUNDED:
            raise WegnerFlowError("generalized portrait needs Unbounded parameters")
        zero = integrate_unitary(c, icfg)
        res = find_unstable_points(c, cfg["epsilon"], cfg["alpha"], icfg)
        for traj in (zero, res.plus_trajectory, res.minus_trajectory):
            blocks.append({"omega0": c.omega.real, "lambda0": c.lam.real,
                           "regime": classify_regime(c).value, "branch": traj.branch.value,
                           "trajectory": traj})
        return blocks

    tasks = [(float(w), float(g), float(cfg["v0"]), icfg)
             for w in _grid(cfg["omega_range"]) for g in _grid(cfg["lambda_range"])]
    workers = min(worker_count(), len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trajs = list(pool.map(_portrait_task, tasks))
    else:
        trajs = [_portrait_task(t) for t in tasks]
    for (w, g, _, _), traj in zip(tasks, trajs):
        blocks.append({"omega0": w, "lambda0": g, "regime": traj.regime.value,
                       "branch": traj.branch.value, "trajectory": traj})
    return blocks


def cmd_portrait(cfg: dict) -> int:
    blocks = portrait(cfg)
    if (cfg["format"] or "csv") == "csv":
        lines = [",".join(("trajectory", "omega0", "lambda0", "regime", "branch")
                          + TRAJECTORY_COLUMNS)]
        for i, b in enumerate(blocks):
            prefix = [str(i), fmt(b["omega0"]), fmt(b["lambda0"]), b["regime"], b["branch"]]
            lines += [",".join(prefix + row) for row in trajectory_rows(b["trajectory"])]
        _emit("\n".join(lines) + "\n", cfg)
    else:
        out = [{k: v for k, v in b.items() if k != "trajectory"}
               | {"trajectory": trajectory_to_dict(b["trajectory"])} for b in blocks]
        _emit(dumps({"config": cfg, "trajectories": out}), cfg)
    # Critical points never converge; they are tagged rather than treated as failures
    failed = [b for b in blocks
              if not b["trajectory"].converged and b["regime"] != Regime.CRITICAL.value]
    return EXIT_NONCONVERGED if failed else EXIT_OK


def cmd_spectrum(cfg: dict) -> int:
    c = _physical(cfg)
    regime = classify_regime(c)
    w, g, v = c.omega.real, c.lam.real, c.v.real
    if regime is Regime.UNBOUNDED:
        spec = ao.complex_spectrum(w, g, v, BranchLabel.parse(cfg["branch"]), cfg["n_max"])
    else:
        spec = ao.bounded_spectrum(w, g, v, cfg["n_max"])
    if cfg["format"] == "csv":
        lines = ["n,re_E,im_E"] + [f"{n},{fmt(e.real)},{fmt(e.imag)}"
                                   for n, e in enumerate(spec.levels)]
        _emit("\n".join(lines) + "\n", cfg)
    else:
        _emit(dumps({"config": cfg, "spectrum": spectrum_to_dict(spec)}), cfg)
    return EXIT_OK


def cmd_find_unstable(cfg: dict) -> int:
    c = _physical(cfg)
    res = find_unstable_points(c, cfg["epsilon"], cfg["alpha"], integrator_config(cfg))
    summary = []
    for fp in (res.plus, res.minus):
        co = fp.coefficients
        summary.append(f"{fp.branch.value}: omega={fmt(co.omega.real)}{co.omega.imag:+.17g}j "
                       f"lambda={fmt(co.lam.real)}{co.lam.imag:+.17g}j "
                       f"v={fmt(co.v.real)}{co.v.imag:+.17g}j")
    fmt_kind = cfg["format"] or "json"
    if fmt_kind == "json":
        doc = {
            "config": cfg,
            "unstable_points": [terminal_to_dict(res.plus), terminal_to_dict(res.minus)],
            "trajectories": {"+": trajectory_to_dict(res.plus_trajectory),
                             "-": trajectory_to_dict(res.minus_trajectory)},
        }
        if cfg["output"]:
            Path(cfg["output"]).write_text(dumps(doc))
            sys.stdout.write("\n".join(summary) + "\n")
        else:
            sys.stdout.write(dumps(doc))
    else:
        sys.stdout.write("\n".join(summary) + "\n")
        if cfg["output"]:
            out = Path(cfg["output"])
            for tag, traj in (("plus", res.plus_trajectory), ("minus", res.minus_trajectory)):
                out.with_name(f"{out.stem}_{tag}{out.suffix or '.csv'}").write_text(
                    trajectory_to_csv(traj))
    return EXIT_OK


def cmd_fock_oracle(cfg: dict) -> int:
    m = fmo.build_fock_matrix(cfg["omega0"], cfg["lambda0"], cfg["v0"], cfg["N"])
    k = cfg["levels"]
    if not 1 <= k <= m.dim:
        raise WegnerFlowError("levels must be between 1 and N + 1")
    w = fmo.hermitian_eigenvalues(m)[:k]
    if cfg["format"] == "csv":
        _emit("\n".join(["n,E"] + [f"{n},{fmt(e)}" for n, e in enumerate(w)]) + "\n", cfg)
    else:
        _emit(dumps({"config": cfg, "N": cfg["N"], "eigenvalues": [float(e) for e in w]}), cfg)
    return EXIT_OK


def example_matrix_text() -> str:
    return resources.files("wegnerflow").joinpath("data/example_2x2.txt").read_text()


def cmd_matrix_flow(cfg: dict) -> int:
    if cfg["matrix"]:
        try:
            text = Path(cfg["matrix"]).read_text()
        except OSError as exc:
            raise WegnerFlowError(f"cannot read matrix file: {exc}") from None
    else:
        text = example_matrix_text()
    m0 = fmo.read_matrix_text(text)
    traj, diag = fmo.integrate_matrix_flow(m0, integrator_config(cfg))
    final = traj.final
    if cfg["format"] == "json":
        doc = {
            "config": cfg,
            "converged": traj.converged,
            "final_diagonal": [float(x) for x in final.diagonal()],
            "eigenvalues": [float(x) for x in fmo.hermitian_eigenvalues(m0)],
            "diagnostics": asdict(diag),
            "integrator_stats": asdict(traj.stats),
        }
        _emit(dumps(doc), cfg)
    else:
        _emit(fmo.write_matrix_text(final), cfg)
    return EXIT_OK if traj.converged else EXIT_NONCONVERGED


COMMANDS = {
    "classify": cmd_classify,
    "flow": cmd_flow,
    "portrait": cmd_portrait,
    "spectrum": cmd_spectrum,
    "find-unstable": cmd_find_unstable,
    "fock-oracle": cmd_fock_oracle,
    "matrix-flow": cmd_matrix_flow,
}


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except WegnerFlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
