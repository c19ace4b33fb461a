"""Configuration-driven experiment runner.

Usage::

    pevolab <command> --config run.cfg [--out DIR] [--allow-illposed]

The run directory is ``--out``, else ``run.output`` from the config, else
``$PEVOLAB_OUT/<command>``, else ``./pevolab-runs/<command>``. It always
receives ``manifest.cfg``: the resolved configuration (re-runnable as is)
headed by comment lines with the library version, seed, exit status and any
diagnostic.

Exit codes: 0 pass, 1 check failed, 2 usage or configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import COMMANDS, ConfigError, ExperimentConfig, load_config, serialize_config
from .data import forcing_suite, make_datum, schwartz_suite
from .errors import (BlowUpError, DivergenceError, InconsistencyError, NoConvergenceError, ParameterError,
                     PevoError, PreconditionError, StabilityError)
from .grid import BoundaryMassWarning, Grid1D, l2_norm_values
from .linear import check_hypotheses, exact_constant_solution, preset_coefficients, solve_linear, write_trajectory
from .nonlinear import mass, model_preset, select_indices, solve_nonlinear
from .smoothing import (conjugation_diagnostics, energy_functionals, suite_constant, verify_estimate_i,
                        verify_estimate_ii)

ENV_OUT = "PEVOLAB_OUT"

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
_STATUS = {EXIT_PASS: "pass", EXIT_FAIL: "check failed", EXIT_USAGE: "usage error", EXIT_NUMERIC: "numerical failure"}

NUMERICAL_ERRORS = (StabilityError, BlowUpError, DivergenceError, NoConvergenceError, InconsistencyError,
                    FloatingPointError)


# --------------------------------------------------------------------------- reports

@dataclass
class Table:
    """Generic CSV report: a header and rows of already-formatted cells."""

    header: list
    rows: list = field(default_factory=list)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        w.writerows(self.rows)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def emit_outputs(reports: dict, directory, summary: str = "") -> list:
    """Write ``<name>.csv`` for every report and ``summary.txt``; returns the paths written."""
    directory = Path(directory)
    written = []
    try:
        directory.mkdir(parents=True, exist_ok=True)
        for name, report in reports.items():
            path = directory / f"{name}.csv"
            report.to_csv(path)
            written.append(path)
        if summary:
            path = directory / "summary.txt"
            path.write_text(summary)
            written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write outputs under {directory}: {exc}") from exc
    return written


@dataclass
class RunResult:
    code: int
    reports: dict = field(default_factory=dict)
    summary: str = ""
    info: dict = field(default_factory=dict)


# --------------------------------------------------------------------------- builders

def build_grid(cfg: ExperimentConfig) -> Grid1D:
    return Grid1D(cfg.L, cfg.N)


def build_coefficients(cfg: ExperimentConfig):
    params = dict(cfg.coefficient_params)
    if cfg.sigma is not None:
        params.setdefault("sigma", cfg.sigma)
    return preset_coefficients(cfg.coefficients, **params)


def build_nonlinearity(cfg: ExperimentConfig):
    if cfg.nonlinearity == "none":
        return None
    return model_preset(cfg.nonlinearity)[1]


def build_datum(cfg: ExperimentConfig, grid: Grid1D):
    return make_datum(cfg.data, grid, np.random.default_rng(cfg.seed), **cfg.data_params)


def build_suite(cfg: ExperimentConfig, grid: Grid1D) -> list:
    """The configured datum followed by ``suite - 1`` seeded Schwartz fields."""
    out = [build_datum(cfg, grid)]
    if cfg.smoothing_suite > 1:
        out += schwartz_suite(grid, cfg.seed + 1, cfg.smoothing_suite - 1)
    return out


def _suite_label(cfg: ExperimentConfig) -> str:
    return f"datum {cfg.data} plus {cfg.smoothing_suite - 1} Schwartz fields (seed {cfg.seed + 1})"


# --------------------------------------------------------------------------- commands

def cmd_check_hypotheses(cfg: ExperimentConfig) -> RunResult:
    c = build_coefficients(cfg)
    rep = check_hypotheses(c, build_grid(cfg), T=cfg.T)
    table = Table(["condition", "passed", "empirical", "declared", "witness_x", "witness_t"],
                  [[r.name, _num(r.passed), _num(r.constant), _num(r.declared), _num(r.witness_x), _num(r.witness_t)]
                   for r in rep.conditions])
    text = str(rep) + "\n"
    return RunResult(EXIT_PASS if rep.passed else EXIT_FAIL, {"hypotheses": table}, text)


def cmd_solve_linear(cfg: ExperimentConfig, out: Path) -> RunResult:
    grid = build_grid(cfg)
    c = build_coefficients(cfg)
    g = build_datum(cfg, grid)
    traj = solve_linear(c, g, T=cfg.T, dt=cfg.dt, allow_illposed=cfg.allow_illposed)
    write_trajectory(traj, out / "snapshots")
    norms = Table(["t", "l2"], [[_num(t), _num(l2_norm_values(grid, traj.values[k]))]
                                for k, t in enumerate(traj.times)])
    lines = [f"coefficients: {c.name}", f"steps: {len(traj) - 1}", f"T: {_num(traj.T)}",
             f"final l2: {_num(l2_norm_values(grid, traj.values[-1]))}",
             f"boundary mass: {_num(traj.boundary_mass)}"]
    if c.x_independent:
        exact = exact_constant_solution(c, g, traj.T).values
        err = l2_norm_values(grid, traj.values[-1] - exact) / l2_norm_values(grid, exact)
        lines.append(f"relative error vs exact multiplier solution: {_num(err)}")
    return RunResult(EXIT_PASS, {"norms": norms}, "\n".join(lines) + "\n")


def cmd_solve_nonlinear(cfg: ExperimentConfig, out: Path) -> RunResult:
    grid = build_grid(cfg)
    c = build_coefficients(cfg)
    spec = build_nonlinearity(cfg)
    g = build_datum(cfg, grid)
    sigma = cfg.sigma if cfg.sigma is not None else c.sigma
    idx = select_indices(sigma, c.p, cfg.m, cfg.m_tilde)
    try:
        traj, rep = solve_nonlinear(g, c, spec, cfg.T, cfg.dt, cfg.tol_picard, cfg.max_iter, idx=idx,
                                    check=not cfg.allow_illposed)
    except NoConvergenceError as exc:
        if exc.report is not None:
            emit_outputs({"contraction": exc.report}, out, exc.report.summary())
        raise
    write_trajectory(traj, out / "snapshots")
    m0, m1 = mass(traj.field(0)), mass(traj.final)
    drift = abs(m1 - m0) / max(abs(m0), 1e-300)
    text = (rep.summary() + f"indices: N = {idx.N}, m = {idx.m:g}, m_tilde = {idx.m_tilde:g}\n"
            + f"contraction factor: {_num(rep.contraction_factor())}\n" + f"relative mass drift: {_num(drift)}\n")
    ok = rep.converged and rep.residual <= cfg.tol_residual and rep.contraction_factor() < 1
    return RunResult(EXIT_PASS if ok else EXIT_FAIL, {"contraction": rep}, text)


def cmd_verify_smoothing(cfg: ExperimentConfig, out: Path) -> RunResult:
    grid = build_grid(cfg)
    c = build_coefficients(cfg)
    if not c.compliant and not cfg.allow_illposed:
        raise PreconditionError(f"verify-smoothing refuses {c.name!r}, which violates the decay hypothesis; "
                                "use --allow-illposed to run it anyway")
    suite = build_suite(cfg, grid)
    forcings = forcing_suite(grid, cfg.seed + 2, len(suite))
    m, h = cfg.smoothing_m, cfg.smoothing_h
    sigma = cfg.sigma if cfg.sigma is not None else c.sigma
    est = Table(["run", "estimate", "ratio"])
    res_i, res_ii, energy = [], [], None
    for k, (g, f) in enumerate(zip(suite, forcings)):
        traj = solve_linear(c, g, f, T=cfg.T, dt=cfg.dt, allow_illposed=cfg.allow_illposed)
        if k == 0:
            energy = energy_functionals(traj, m, sigma, h)
        r1 = verify_estimate_i(traj, f, g, m, sigma, h)
        r2 = verify_estimate_ii(traj, f, g, m, sigma, h)
        res_i.append(r1)
        res_ii.append(r2)
        est.rows += [[str(k), "i", _num(r1.ratio)], [str(k), "ii", _num(r2.ratio)]]
    C1, C2 = suite_constant(res_i), suite_constant(res_ii)
    text = (energy.summary() + f"suite: {_suite_label(cfg)}\n" + f"C_suite (i): {_num(C1)}\n"
            + f"C_suite (ii): {_num(C2)}\n")
    ok = math.isfinite(C1) and math.isfinite(C2)
    return RunResult(EXIT_PASS if ok else EXIT_FAIL, {"energy": energy, "estimates": est}, text)


def _conjugation_trajectories(cfg: ExperimentConfig):
    grid = build_grid(cfg)
    c = build_coefficients(cfg)
    if not c.compliant and not cfg.allow_illposed:
        raise PreconditionError(f"diagnose-conjugation refuses {c.name!r}; use --allow-illposed")
    trajs = [solve_linear(c, g, T=cfg.T, dt=cfg.dt, allow_illposed=cfg.allow_illposed)
             for g in build_suite(cfg, grid)]
    return c, trajs


def _conjugation_run(cfg: ExperimentConfig, c, trajs) -> RunResult:
    h = cfg.conjugation_h
    try:
        rep = conjugation_diagnostics(c, trajs, h=h, eps=cfg.conjugation_eps, slack=cfg.tol_envelope)
    except ParameterError as exc:  # no admissible M at this h
        table = Table(["run", "t", "V", "S", "F"])
        return RunResult(EXIT_FAIL, {"conjugation": table}, f"h: {h:g}\ncalibration failed: {exc}\n")
    table = Table(["run", "t", "V", "S", "F"])
    for k, (times, V, S, F) in enumerate(rep.series):
        table.rows += [[str(k), _num(t), _num(v), _num(s), _num(f)] for t, v, s, f in zip(times, V, S, F)]
    neumann = rep.rho is None or rep.rho < 1
    ok = rep.passed and neumann and rep.identity_defect <= cfg.tol_identity
    text = "\n".join([
        f"h: {h:g}", "M: " + ", ".join(f"{m:g}" for m in rep.M), f"kappa: {_num(rep.kappa)}",
        f"rho: {_num(rep.rho) if rep.rho is not None else 'n/a'}",
        f"inverse: {'neumann' if neumann else 'direct'}",
        f"identity defect: {_num(rep.identity_defect)}", f"C: {_num(rep.C)}",
        f"max envelope excess: {_num(float(np.max(rep.excess)))}", f"passed: {_num(ok)}",
    ]) + "\n"
    info = {"rho": rep.rho, "defect": rep.identity_defect, "C": rep.C, "passed": ok, "M": rep.M}
    return RunResult(EXIT_PASS if ok else EXIT_FAIL, {"conjugation": table}, text, info)


def cmd_diagnose_conjugation(cfg: ExperimentConfig, out: Path) -> RunResult:
    c, trajs = _conjugation_trajectories(cfg)
    return _conjugation_run(cfg, c, trajs)


def cmd_sweep(cfg: ExperimentConfig, out: Path) -> RunResult:
    """Conjugation diagnostics for every ``h`` in ``sweep.h``, one sub-directory each."""
    c, trajs = _conjugation_trajectories(cfg)

    def child(h):
        sub_cfg = replace(cfg, command="diagnose-conjugation", conjugation_h=float(h))
        sub = out / f"h_{h:g}"
        try:
            res = _conjugation_run(sub_cfg, c, trajs)
            diag = ""
        except NUMERICAL_ERRORS as exc:
            res, diag = RunResult(EXIT_NUMERIC), f"{type(exc).__name__}: {exc}"
        emit_outputs(res.reports, sub, res.summary)
        write_manifest(sub, sub_cfg, res.code, diag)
        return h, res

    with ThreadPoolExecutor(max_workers=cfg.sweep_workers) as pool:
        results = list(pool.map(child, cfg.sweep_h))
    table = Table(["h", "M", "rho", "identity_defect", "C", "passed", "exit_code"])
    for h, res in results:
        info = res.info
        M = " ".join(f"{m:g}" for m in info.get("M", ()))
        table.rows.append([f"{h:g}", M, _num(info.get("rho")), _num(info.get("defect")), _num(info.get("C")),
                           _num(info.get("passed", False)), str(res.code)])
    good = [h for h, res in results if res.code == EXIT_PASS]
    text = (f"h values: {', '.join(f'{h:g}' for h in cfg.sweep_h)}\n"
            + f"passing h: {', '.join(f'{h:g}' for h in good) if good else 'none'}\n")
    return RunResult(EXIT_PASS if good else EXIT_FAIL, {"summary": table}, text)


_RUNNERS = {
    "solve-linear": cmd_solve_linear,
    "solve-nonlinear": cmd_solve_nonlinear,
    "verify-smoothing": cmd_verify_smoothing,
    "diagnose-conjugation": cmd_diagnose_conjugation,
    "sweep": cmd_sweep,
}


# --------------------------------------------------------------------------- orchestration

def write_manifest(directory, cfg: ExperimentConfig, code: int, diagnostic: str = "") -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    head = [f"# pevolab {__version__}", f"# seed {cfg.seed}", f"# exit {code} ({_STATUS[code]})"]
    head += [f"# diagnostic: {line}" for line in diagnostic.splitlines()]
    path = directory / "manifest.cfg"
    path.write_text("\n".join(head) + "\n" + serialize_config(cfg))
    return path


def resolve_output(cfg: ExperimentConfig, out: str | None = None) -> Path:
    if out:
        return Path(out)
    if cfg.output:
        return Path(cfg.output)
    root = os.environ.get(ENV_OUT)
    return Path(root or "pevolab-runs") / cfg.command


def run_experiment(cfg: ExperimentConfig, out=None) -> tuple[int, Path]:
    """Run ``cfg`` into its run directory; returns ``(exit code, directory)``.

    Module errors become nonzero exit codes with the diagnostic recorded in
    the manifest.
    """
    directory = resolve_output(cfg, out)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"output directory {directory} is not writable: {exc}") from exc
    diagnostic = ""
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", BoundaryMassWarning)
            if cfg.command == "check-hypotheses":
                res = cmd_check_hypotheses(cfg)
            else:
                res = _RUNNERS[cfg.command](cfg, directory)
        notes = sorted({str(w.message) for w in caught if issubclass(w.category, BoundaryMassWarning)})
        if notes:
            res.summary += "".join(f"warning: {n}\n" for n in notes)
        emit_outputs(res.reports, directory, res.summary)
        code = res.code
    except PreconditionError as exc:
        code, diagnostic = EXIT_FAIL, f"{type(exc).__name__}: {exc}"
    except NUMERICAL_ERRORS as exc:
        code, diagnostic = EXIT_NUMERIC, f"{type(exc).__name__}: {exc}"
    except PevoError as exc:
        code, diagnostic = EXIT_USAGE, f"{type(exc).__name__}: {exc}"
    write_manifest(directory, cfg, code, diagnostic)
    return code, directory


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pevolab", description="Smoothing-estimate experiments for p-evolution equations.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="line-based experiment configuration")
    ap.add_argument("--out", help=f"run directory (default: run.output, then ${ENV_OUT}/<command>)")
    ap.add_argument("--allow-illposed", action="store_true", help="run coefficient sets that fail the hypotheses")
    ap.add_argument("--version", action="version", version=f"pevolab {__version__}")
    return ap


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config, args.command)
    except OSError as exc:
        print(f"pevolab: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"pevolab: invalid config {args.config}:\n{exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.allow_illposed:
        cfg = replace(cfg, allow_illposed=True)
    try:
        code, directory = run_experiment(cfg, args.out)
    except OSError as exc:
        print(f"pevolab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    summary = directory / "summary.txt"
    if summary.exists():
        sys.stdout.write(summary.read_text())
    print(f"{_STATUS[code]}: {directory}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
