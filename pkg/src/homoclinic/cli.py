"""Command-line front end: ``homoclinic <verb> --config run.json --out DIR``.

Verbs run a prefix of the pipeline
``validate -> admissible -> scan -> kernel -> check -> branch``; ``all`` runs
every stage.  Exit status is 0 when every requested stage completed, 2 for a
bad configuration and 3 when a stage failed or output could not be written.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .bifurcation import DEFAULT_SEED, admissibility, bifurcation_report
from .continuation import Branch, branch_switch, continue_branch
from .errors import ConfigInvalid, HomoclinicError, IoFailure
from .linop import Grid, kernel_basis, scan_bifurcations
from .model import MODEL_REGISTRY, build_model, validate_hypotheses

__all__ = [
    "STAGES",
    "DEFAULT_CONFIG",
    "RunConfig",
    "RunReport",
    "load_config",
    "parse_config",
    "run_pipeline",
    "write_outputs",
    "main",
]

log = logging.getLogger("homoclinic")

STAGES = ("validate", "admissible", "scan", "kernel", "check", "branch")
VERBS = STAGES + ("all",)

DEFAULT_CONFIG: dict[str, Any] = {
    "model": {"name": "section6", "params": {}},
    "grid": {"half_length": 20.0, "n_cells": 4000, "bc_kind": "projection"},
    "lambda_window": {"lo": -3.0, "hi": -0.1, "n_scan": 30, "n_check": 16},
    "regularity": {"mode_plus": "a", "mode_minus": "a", "C_matrix": [[0.0, 1.0], [1.0, 0.0]]},
    "continuation": {
        "epsilon": 1e-2,
        "step0": 1e-2,
        "step_min": 1e-6,
        "step_max": 0.05,
        "norm_cap": 1e3,
        "max_steps": 50,
    },
    "tolerances": {"newton_tol": 1e-10, "rank_tol": 1e-5, "tol_axis": 1e-8, "tol_G": 1e-6},
    "output": {"directory": "out", "formats": ["json", "csv"], "solutions": 3},
}

# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    model_name: str
    model_params: dict
    half_length: float
    n_cells: int
    bc_kind: str
    lo: float
    hi: float
    n_scan: int
    n_check: int
    mode_plus: str
    mode_minus: str
    C_matrix: np.ndarray
    epsilon: float
    step0: float
    step_min: float
    step_max: float
    norm_cap: float
    max_steps: int
    newton_tol: float
    rank_tol: float
    tol_axis: float
    tol_G: float
    directory: str
    formats: tuple[str, ...]
    solutions: int
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def grid(self) -> Grid:
        return Grid(self.half_length, self.n_cells)


def _merge(base: dict, over: Mapping, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        where = f"{path}.{k}" if path else k
        if k not in base:
            raise ConfigInvalid(where, "unknown key")
        if isinstance(base[k], dict) and k != "params":
            if not isinstance(v, Mapping):
                raise ConfigInvalid(where, "expected an object")
            out[k] = _merge(base[k], v, where)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _num(sec, key, where, *, positive=False, integer=False, minimum=None):
    v = sec[key]
    name = f"{where}.{key}"
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigInvalid(name, "expected a number")
    if integer and (not isinstance(v, int) and not float(v).is_integer()):
        raise ConfigInvalid(name, "expected an integer")
    v = int(v) if integer else float(v)
    if not math.isfinite(v):
        raise ConfigInvalid(name, "must be finite")
    if positive and v <= 0:
        raise ConfigInvalid(name, "must be > 0")
    if minimum is not None and v < minimum:
        raise ConfigInvalid(name, f"must be >= {minimum}")
    return v


def parse_config(doc: Mapping | None = None, directory: str | None = None) -> RunConfig:
    """Merge ``doc`` over :data:`DEFAULT_CONFIG` and check every invariant.

    Raises
    ------
    ConfigInvalid
        Naming the offending field.
    """
    if doc is not None and not isinstance(doc, Mapping):
        raise ConfigInvalid("config", "top level must be an object")
    raw = _merge(DEFAULT_CONFIG, doc or {})
    m, g, w, r = raw["model"], raw["grid"], raw["lambda_window"], raw["regularity"]
    c, t, o = raw["continuation"], raw["tolerances"], raw["output"]

    if m["name"] not in MODEL_REGISTRY:
        raise ConfigInvalid("model.name", f"unknown model {m['name']!r}; known: {sorted(MODEL_REGISTRY)}")
    if not isinstance(m["params"], Mapping):
        raise ConfigInvalid("model.params", "expected an object")
    if g["bc_kind"] not in ("projection", "dirichlet_half"):
        raise ConfigInvalid("grid.bc_kind", "must be 'projection' or 'dirichlet_half'")
    half_length = _num(g, "half_length", "grid", positive=True)
    n_cells = _num(g, "n_cells", "grid", integer=True, minimum=100)
    lo = _num(w, "lo", "lambda_window")
    hi = _num(w, "hi", "lambda_window")
    if not lo < hi:
        raise ConfigInvalid("lambda_window", "lo must be < hi")
    n_scan = _num(w, "n_scan", "lambda_window", integer=True, minimum=10)
    n_check = _num(w, "n_check", "lambda_window", integer=True, minimum=2)
    for side in ("mode_plus", "mode_minus"):
        if r[side] not in ("a", "b", "c"):
            raise ConfigInvalid(f"regularity.{side}", "must be 'a', 'b' or 'c'")
    try:
        C = np.asarray(r["C_matrix"], dtype=float)
    except (TypeError, ValueError):
        raise ConfigInvalid("regularity.C_matrix", "expected a square numeric matrix") from None
    if C.ndim != 2 or C.shape[0] != C.shape[1] or C.shape[0] % 2 or not np.all(np.isfinite(C)):
        raise ConfigInvalid("regularity.C_matrix", "expected a finite square matrix of even size")
    if "a" in (r["mode_plus"], r["mode_minus"]) and not np.allclose(C, C.T, rtol=0, atol=1e-14):
        raise ConfigInvalid("regularity.C_matrix", "must be symmetric for mode 'a'")
    epsilon = _num(c, "epsilon", "continuation")
    step0 = _num(c, "step0", "continuation", positive=True)
    step_min = _num(c, "step_min", "continuation", positive=True)
    step_max = _num(c, "step_max", "continuation", positive=True)
    if not step_min <= step0 <= step_max:
        raise ConfigInvalid("continuation.step0", "need step_min <= step0 <= step_max")
    norm_cap = _num(c, "norm_cap", "continuation", positive=True)
    max_steps = _num(c, "max_steps", "continuation", integer=True, minimum=0)
    tols = {k: _num(t, k, "tolerances", positive=True) for k in ("newton_tol", "rank_tol", "tol_axis", "tol_G")}
    formats = o["formats"]
    if isinstance(formats, str) or not all(f in ("json", "csv") for f in formats):
        raise ConfigInvalid("output.formats", "expected a list drawn from 'json', 'csv'")
    if not isinstance(o["directory"], str) or not o["directory"]:
        raise ConfigInvalid("output.directory", "expected a nonempty path")
    solutions = _num(o, "solutions", "output", integer=True, minimum=0)
    if directory is not None:
        raw["output"]["directory"] = directory
    return RunConfig(
        model_name=m["name"],
        model_params=dict(m["params"]),
        half_length=half_length,
        n_cells=n_cells,
        bc_kind=g["bc_kind"],
        lo=lo,
        hi=hi,
        n_scan=n_scan,
        n_check=n_check,
        mode_plus=r["mode_plus"],
        mode_minus=r["mode_minus"],
        C_matrix=C,
        epsilon=epsilon,
        step0=step0,
        step_min=step_min,
        step_max=step_max,
        norm_cap=norm_cap,
        max_steps=max_steps,
        directory=raw["output"]["directory"],
        formats=tuple(formats),
        solutions=solutions,
        raw=raw,
        **tols,
    )


def load_config(path: str | os.PathLike | None, directory: str | None = None) -> RunConfig:
    if path is None:
        return parse_config({}, directory)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigInvalid("config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid("config", f"invalid JSON in {path}: {exc}") from None
    return parse_config(doc, directory)


# ---------------------------------------------------------------------------
# pipeline


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    return obj


@dataclass
class RunReport:
    config: dict
    requested: list[str]
    seed: int = DEFAULT_SEED
    stages: list[dict] = field(default_factory=list)
    validation: dict | None = None
    admissibility: dict | None = None
    candidates: list[dict] = field(default_factory=list)
    sigma_min_profile: list[tuple[float, float]] = field(default_factory=list)
    kernels: list[dict] = field(default_factory=list)
    bifurcation: list[dict] = field(default_factory=list)
    branches: list[dict] = field(default_factory=list)
    wall_times: dict = field(default_factory=dict)
    manifest: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(s["status"] == "ok" for s in self.stages)

    def to_dict(self) -> dict:
        return _jsonable({
            "config": self.config,
            "requested_stages": self.requested,
            "seed": self.seed,
            "stages": self.stages,
            "validation": self.validation,
            "admissibility": self.admissibility,
            "candidates": self.candidates,
            "sigma_min_profile": [list(p) for p in self.sigma_min_profile],
            "kernels": self.kernels,
            "bifurcation": self.bifurcation,
            "branches": self.branches,
            "manifest": self.manifest,
            "wall_times": self.wall_times,
            "disclaimer": (
                "Hypothesis checks are sampled and can only refute. Branch termination tags are "
                "numerical proxies for the global alternatives, not proofs."
            ),
        })


def _requested(verb: str) -> list[str]:
    if verb == "all":
        return list(STAGES)
    return list(STAGES[: STAGES.index(verb) + 1])


def _validation_samples(cfg: RunConfig, dim: int):
    rng = np.random.default_rng(DEFAULT_SEED)
    L = max(60.0, 3 * cfg.half_length)
    t = np.linspace(-L, L, 241)
    xi = rng.normal(size=(24, dim))
    lams = np.linspace(cfg.lo, cfg.hi, 5)
    R_list = [L / 6, L / 3, L / 2, 2 * L / 3]
    return t, xi, lams, R_list


def run_pipeline(cfg: RunConfig, verb: str = "all", jobs: int = 1) -> tuple[RunReport, list[Branch]]:
    """Run the stages named by ``verb``; stage errors are recorded, not raised.

    A failed stage marks every later requested stage as skipped with a reason.
    """
    requested = _requested(verb)
    report = RunReport(config=cfg.raw, requested=requested)
    branches: list[Branch] = []
    grid = cfg.grid
    state: dict[str, Any] = {}
    blocked: str | None = None

    try:
        model = build_model(cfg.model_name, cfg.model_params)
    except HomoclinicError as exc:
        report.stages.append({"stage": "validate", "status": "failed", "reason": f"model construction: {exc}"})
        for s in requested[1:]:
            report.stages.append({"stage": s, "status": "skipped", "reason": "model construction failed"})
        return report, branches
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigInvalid("model.params", str(exc)) from None
    if cfg.C_matrix.shape[0] != model.dim:
        raise ConfigInvalid("regularity.C_matrix", f"expected size {model.dim}")

    def stage_validate():
        t, xi, lams, R = _validation_samples(cfg, model.dim)
        rep = validate_hypotheses(model, t, xi, lams, R, seed=DEFAULT_SEED, raise_on_failure=False)
        report.validation = rep.to_dict()
        if not rep.passed:
            return f"hypothesis {rep.first_failure.tag} refuted on samples"
        return None

    def stage_admissible():
        rep = admissibility(
            model, cfg.lo, cfg.hi, cfg.n_check,
            modes={"+": cfg.mode_plus, "-": cfg.mode_minus},
            C_matrices={"+": cfg.C_matrix, "-": cfg.C_matrix},
            tol_axis=cfg.tol_axis, jobs=jobs, seed=DEFAULT_SEED,
        )
        report.admissibility = rep.to_dict()
        if not rep.admissible:
            bad = [lam for lam, ok in zip(rep.lambda_grid, rep.admissible_at()) if not ok]
            return f"{len(bad)} of {len(rep.lambda_grid)} sampled lambda values not admissible"
        return None

    def stage_scan():
        res = scan_bifurcations(model, cfg.lo, cfg.hi, cfg.n_scan, grid, bc_kind=cfg.bc_kind,
                                tol_axis=cfg.tol_axis, jobs=jobs)
        report.sigma_min_profile = res.profile
        report.candidates = [{"lambda": c.lam, "sigma_min": c.sigma_min} for c in res]
        state["candidates"] = [c.lam for c in res]
        return None

    def stage_kernel():
        state["kernels"] = []
        errors = []
        for lam0 in state["candidates"]:
            try:
                kd = kernel_basis(model, lam0, grid, cfg.rank_tol, bc_kind=cfg.bc_kind, tol_axis=cfg.tol_axis)
            except HomoclinicError as exc:
                report.kernels.append({"lambda0": lam0, "error": f"{type(exc).__name__}: {exc}"})
                errors.append(lam0)
                continue
            state["kernels"].append(kd)
            report.kernels.append({
                "lambda0": kd.lambda0,
                "dimension": kd.dimension,
                "singular_values": kd.singular_values,
                "threshold": kd.threshold,
                "sigma_min_profile": [list(p) for p in kd.sigma_min_profile],
            })
        return f"kernel extraction failed at lambda0 = {errors}" if errors else None

    def stage_check():
        state["certified"] = []
        for kd in state["kernels"]:
            rep = bifurcation_report(kd, model, grid, tol_G=cfg.tol_G)
            report.bifurcation.append(rep.to_dict())
            if rep.all_hypotheses_met:
                state["certified"].append(kd)
        return None

    def stage_branch():
        errors = []
        for kd in state["certified"]:
            entry: dict[str, Any] = {"origin_lambda0": kd.lambda0}
            if kd.dimension != 1:
                entry["skipped"] = f"kernel dimension {kd.dimension}: no constructive branch direction"
                report.branches.append(entry)
                continue
            try:
                start = branch_switch(model, kd.lambda0, kd, grid, cfg.epsilon, tol=cfg.newton_tol,
                                      bc_kind=cfg.bc_kind)
            except HomoclinicError as exc:
                entry["error"] = f"{type(exc).__name__}: {exc}"
                report.branches.append(entry)
                errors.append(kd.lambda0)
                continue
            br = continue_branch(
                model, start, grid, cfg.step0, cfg.step_min, cfg.step_max, cfg.norm_cap,
                (cfg.lo, cfg.hi), cfg.max_steps, origin_lambda0=kd.lambda0, tol=cfg.newton_tol,
                bc_kind=cfg.bc_kind,
            )
            branches.append(br)
            entry.update(br.summary())
            entry["points"] = [p.summary() for p in br.points]
            report.branches.append(entry)
        return f"branch switching failed at lambda0 = {errors}" if errors else None

    runners = {
        "validate": stage_validate,
        "admissible": stage_admissible,
        "scan": stage_scan,
        "kernel": stage_kernel,
        "check": stage_check,
        "branch": stage_branch,
    }
    for name in requested:
        if blocked is not None:
            report.stages.append({"stage": name, "status": "skipped", "reason": blocked})
            continue
        log.info("stage %s", name)
        t0 = time.perf_counter()
        try:
            failure = runners[name]()
        except HomoclinicError as exc:
            failure = f"{type(exc).__name__}: {exc}"
        report.wall_times[name] = time.perf_counter() - t0
        if failure:
            log.warning("stage %s failed: %s", name, failure)
            report.stages.append({"stage": name, "status": "failed", "reason": failure})
            blocked = f"upstream stage {name!r} failed"
        else:
            report.stages.append({"stage": name, "status": "ok", "reason": None})
    return report, branches


# ---------------------------------------------------------------------------
# output


def _fmt(v: float) -> str:
    return "%.17g" % v


def _write_text(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from None


def _solution_indices(n_points: int, count: int) -> list[int]:
    if count <= 0 or n_points == 0:
        return []
    if count >= n_points:
        return list(range(n_points))
    return sorted({round(i * (n_points - 1) / (count - 1)) for i in range(count)}) if count > 1 else [n_points - 1]


def write_outputs(report: RunReport, branches: list[Branch], directory: str | os.PathLike,
                  formats=("json", "csv"), grid: Grid | None = None, solutions: int = 3) -> list[str]:
    """Write ``report.json`` and the CSV files; return the manifest of file names.

    Raises
    ------
    IoFailure
        If the directory or a file cannot be written.
    """
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(out, exc.strerror or str(exc)) from None
    manifest: list[str] = []
    if "csv" in formats:
        if report.sigma_min_profile:
            lines = ["lambda,sigma_min"] + [f"{_fmt(l)},{_fmt(s)}" for l, s in report.sigma_min_profile]
            _write_text(out / "sigma_min.csv", "\n".join(lines) + "\n")
            manifest.append("sigma_min.csv")
        for i, br in enumerate(branches):
            lines = ["lambda,sup_norm,l2_norm,h1_norm,residual,gamma_plus,gamma_minus"]
            for p in br.points:
                vals = (p.lam, p.sup_norm, p.l2_norm, p.h1_norm, p.residual, p.gamma_plus, p.gamma_minus)
                lines.append(",".join(_fmt(v) for v in vals))
            _write_text(out / f"branch_{i}.csv", "\n".join(lines) + "\n")
            manifest.append(f"branch_{i}.csv")
            if grid is None:
                continue
            for j in _solution_indices(len(br.points), solutions):
                X = br.points[j].x
                head = "t," + ",".join(f"x{c + 1}" for c in range(X.shape[1]))
                rows = [head] + [
                    ",".join(_fmt(v) for v in (t, *row)) for t, row in zip(grid.nodes, X)
                ]
                _write_text(out / f"solution_{i}_{j}.csv", "\n".join(rows) + "\n")
                manifest.append(f"solution_{i}_{j}.csv")
    if "json" in formats:
        manifest.append("report.json")
        report.manifest = list(manifest)
        text = json.dumps(report.to_dict(), indent=2, allow_nan=False)
        _write_text(out / "report.json", text + "\n")
    report.manifest = list(manifest)
    return manifest


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="homoclinic", description=__doc__.splitlines()[0])
    p.add_argument("verb", choices=VERBS, help="pipeline prefix to run")
    p.add_argument("--config", help="JSON run configuration (defaults apply to missing keys)")
    p.add_argument("--out", help="output directory (overrides output.directory)")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for the lambda scans")
    p.add_argument("--verbose", action="store_true", help="log progress to stderr")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config, args.out)
        report, branches = run_pipeline(cfg, args.verb, jobs=args.jobs)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        write_outputs(report, branches, cfg.directory, cfg.formats, cfg.grid, cfg.solutions)
    except IoFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    for s in report.stages:
        line = f"{s['stage']:<11} {s['status']}"
        print(line + (f"  ({s['reason']})" if s["reason"] else ""))
    return 0 if report.ok else 3
