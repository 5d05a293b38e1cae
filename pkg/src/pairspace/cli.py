"""Command-line front end.

Every command writes one JSON report (stdout unless ``--output``) with sorted
keys, the tool version and the resolved configuration. Exit codes: 0 success,
2 invalid input, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .central import DEFAULT_TOL, classify
from .collinear import (
    ConvergenceError,
    alpha_bound,
    effective_E,
    effective_root,
    euler_E,
    length_bound,
    quartic_bound_roots,
    solution_brackets,
    solve_moulton,
    three_body_bracket,
)
from .configs import rotation_period, encounter_period
from .core import MassVector, PairConfiguration, load_state
from .dynamics import Method, conservation_report, integrate
from .dziobek import DEFAULT_SEED, shape_admissible

COMMANDS = ("classify", "solve-collinear", "bounds", "dziobek", "simulate", "sweep")
EXIT_OK, EXIT_INVALID, EXIT_NOCONVERGE = 0, 2, 3


@dataclass
class RunConfig:
    command: str
    input_path: str | None = None
    output_path: str | None = None
    tol: float = DEFAULT_TOL
    seed: int = DEFAULT_SEED
    masses: list[float] | None = None
    ordering: list[int] | None = None
    dt: float | None = None
    steps: int = 20000
    method: str = "rk4"
    csv_path: str | None = None
    trials: int = 8
    n: int = 3
    count: int = 100
    grid: int = 0
    jobs: int = 1

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command '{self.command}'")
        if not self.tol > 0:
            raise ValueError("--tol must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("--dt must be positive")
        if self.steps < 1 or self.count < 1 or self.jobs < 1 or self.trials < 0:
            raise ValueError("--steps, --count and --jobs must be >= 1")
        Method(self.method)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _resolve_input(path: str | None) -> Path:
    if path is None:
        raise ValueError("--input is required for this command")
    p = Path(path)
    if p.exists():
        return p
    bundled = resources.files("pairspace") / "data" / p.name
    if bundled.is_file():
        return Path(str(bundled))
    raise ValueError(f"input file '{path}' not found")


def _read_state(path: str | None):
    p = _resolve_input(path)
    try:
        return load_state(p)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{p}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except (TypeError, KeyError) as exc:
        raise ValueError(f"{p}: invalid state: {exc}") from exc


def _masses(cfg: RunConfig) -> MassVector:
    if cfg.masses is not None:
        return MassVector(cfg.masses)
    mv, _ = _read_state(cfg.input_path)
    return mv


def _write(cfg: RunConfig, report: dict) -> None:
    text = dumps(report)
    if cfg.output_path:
        Path(cfg.output_path).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_classify(cfg: RunConfig) -> dict:
    mv, state = _read_state(cfg.input_path)
    return classify(mv, state, cfg.tol).to_dict()


def _e_samples_csv(mv: MassVector, path: str, count: int = 200) -> None:
    m = mv.masses
    xs = np.geomspace(0.05, 20.0, count)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "E", "E_N_star", "E_3_star"])
        for x in xs:
            x = float(x)
            e3 = euler_E(x, m[0], m[1], m[2]) if m.size == 3 else math.nan
            w.writerow([repr(float(v)) for v in
                        (x, e3, effective_E(x, m, "BETA"), effective_E(x, m, "ALPHA"))])


def _cmd_solve(cfg: RunConfig) -> dict:
    mv = _masses(cfg)
    sol = solve_moulton(mv, cfg.ordering)
    out = sol.to_dict()
    out["brackets"] = {k: b.to_dict() for k, b in solution_brackets(sol).items()}
    out["beta_star"] = out["alpha_star"] = effective_root(sol.masses)
    if cfg.csv_path:
        _e_samples_csv(MassVector(sol.masses), cfg.csv_path)
    return out


def _cmd_bounds(cfg: RunConfig) -> dict:
    mv = _masses(cfg)
    m = mv.masses if cfg.ordering is None else mv.masses[list(cfg.ordering)]
    out = {
        "masses_in_line_order": m,
        "length": length_bound(m).to_dict(),
        "alpha": alpha_bound(m).to_dict(),
        "effective_root": effective_root(m),
    }
    if m.size == 3:
        out["three_body"] = three_body_bracket(m).to_dict()
        out["quartic_roots"] = {str(k): list(quartic_bound_roots(m, k)) for k in range(3)}
    return out


def _cmd_dziobek(cfg: RunConfig) -> dict:
    _, state = _read_state(cfg.input_path)
    pc = PairConfiguration.from_positions(state.positions)
    return shape_admissible(pc, cfg.trials, cfg.tol, cfg.seed).to_dict()


def _cmd_simulate(cfg: RunConfig) -> dict:
    mv, state = _read_state(cfg.input_path)
    dt = cfg.dt
    if dt is None:
        try:
            period = rotation_period(mv, state)
        except ValueError:
            period = encounter_period(mv, state)
        dt = period / 2000.0
    traj = integrate(mv, state, dt, cfg.steps, cfg.method)
    if cfg.csv_path:
        traj.write_csv(cfg.csv_path)
    rep = conservation_report(mv, traj) if len(traj) >= 2 else None
    return {
        "dt": dt,
        "samples": len(traj),
        "t_final": float(traj.times[-1]),
        "collided": traj.collided,
        "message": traj.message,
        "conservation": rep.to_dict() if rep is not None else None,
    }


def _sweep_row(masses: tuple[float, ...]) -> list:
    sol = solve_moulton(MassVector(masses))
    star = effective_root(sol.masses)
    lb, ab = length_bound(sol.masses), alpha_bound(sol.masses)
    row = list(masses) + [sol.alpha, sol.beta, sol.length_ratio, star,
                          lb.case_id, lb.lower, ab.case_id, ab.upper, sol.residual_norm]
    if len(masses) == 3:
        tb = three_body_bracket(sol.masses)
        row += [tb.case_id, tb.lower, tb.upper]
    return row


def _sweep_masses(cfg: RunConfig) -> list[tuple[float, ...]]:
    if cfg.grid:
        if cfg.n != 3:
            raise ValueError("--grid is only defined for --n 3")
        ratios = np.geomspace(0.1, 10.0, cfg.grid)
        return [(float(a), 1.0, float(b)) for a in ratios for b in ratios]
    rng = np.random.default_rng(cfg.seed)
    draws = np.exp(rng.uniform(math.log(0.1), math.log(10.0), size=(cfg.count, cfg.n)))
    return [tuple(float(v) for v in row) for row in draws]


def _cmd_sweep(cfg: RunConfig) -> dict:
    if cfg.n < 3:
        raise ValueError("--n must be >= 3")
    mass_sets = _sweep_masses(cfg)
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            rows = list(pool.map(_sweep_row, mass_sets))
    else:
        rows = [_sweep_row(m) for m in mass_sets]
    header = [f"m{k + 1}" for k in range(cfg.n)] + [
        "alpha", "beta", "length_ratio", "effective_root",
        "length_case", "length_lower", "alpha_case", "alpha_upper", "residual"]
    if cfg.n == 3:
        header += ["bracket_case", "bracket_lower", "bracket_upper"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    target = cfg.csv_path or (str(Path(cfg.output_path).with_suffix(".csv")) if cfg.output_path else None)
    if target:
        Path(target).write_text(buf.getvalue())
    violations = sum(
        1 for r in rows
        if r[cfg.n + 1] < r[cfg.n + 3] - 1e-9 or r[cfg.n] > r[cfg.n + 3] + 1e-9
    )
    return {"rows": len(rows), "csv": target, "bound_violations": violations}


_HANDLERS = {
    "classify": _cmd_classify,
    "solve-collinear": _cmd_solve,
    "bounds": _cmd_bounds,
    "dziobek": _cmd_dziobek,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
}


def run(cfg: RunConfig) -> int:
    try:
        cfg.validate()
        result = _HANDLERS[cfg.command](cfg)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONVERGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    config = {k: v for k, v in asdict(cfg).items() if k != "output_path"}
    _write(cfg, {"tool": "pairspace", "version": __version__, "config": config, "result": result})
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pairspace", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--input")
        p.add_argument("--output")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL)
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--masses", type=_float_list, help="comma-separated masses")
        p.add_argument("--ordering", type=_int_list, help="comma-separated 0-based body order along the line")
        p.add_argument("--dt", type=float)
        p.add_argument("--steps", type=int, default=20000)
        p.add_argument("--method", choices=[m.value for m in Method], default="rk4")
        p.add_argument("--csv", dest="csv_path")
        p.add_argument("--trials", type=int, default=8)
        p.add_argument("--n", type=int, default=3)
        p.add_argument("--count", type=int, default=100)
        p.add_argument("--grid", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        command=args.command,
        input_path=args.input,
        output_path=args.output,
        tol=args.tol,
        seed=args.seed,
        masses=args.masses,
        ordering=args.ordering,
        dt=args.dt,
        steps=args.steps,
        method=args.method,
        csv_path=args.csv_path,
        trials=args.trials,
        n=args.n,
        count=args.count,
        grid=args.grid,
        jobs=args.jobs,
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
