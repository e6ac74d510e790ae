"""Newton solves, branch switching and pseudo-arclength continuation of
nontrivial solutions of the discretized ``J x' - grad H(t, x, lam) = 0``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FactorizationFailure, KernelNotSimple, NoConvergence, SingularJacobian, TailUnderflow
from .floquet import TOL_AXIS, asymptotic_floquet
from .linop import BandedOperator, Grid, KernelData, assemble_blocks, boundary_rows, decay_rate, trapezoid_weights
from .model import HamiltonianModel, eval_dlambda_grad_h, eval_grad_h, eval_hessian

__all__ = [
    "BranchPoint",
    "Branch",
    "DecayReport",
    "TERMINATIONS",
    "residual",
    "jacobian",
    "dlambda_residual",
    "solve_bordered",
    "newton_correct",
    "branch_switch",
    "continue_branch",
    "verify_decay",
    "make_point",
]

log = logging.getLogger(__name__)

TERMINATIONS = ("norm_cap_reached", "left_interval", "returned_to_zero", "step_failure", "max_steps_reached")


@dataclass
class BranchPoint:
    lam: float
    x: np.ndarray  # (n+1, 2N)
    sup_norm: float
    l2_norm: float
    h1_norm: float
    residual: float
    gamma_plus: float
    gamma_minus: float
    newton_iters: int
    arclength: float = 0.0

    def summary(self) -> dict:
        return {
            "lambda": self.lam,
            "sup_norm": self.sup_norm,
            "l2_norm": self.l2_norm,
            "h1_norm": self.h1_norm,
            "residual": self.residual,
            "gamma_plus": _nan_to_none(self.gamma_plus),
            "gamma_minus": _nan_to_none(self.gamma_minus),
            "newton_iters": self.newton_iters,
            "arclength": self.arclength,
        }


def _nan_to_none(v):
    return None if v is None or not math.isfinite(v) else v


@dataclass
class Branch:
    points: list[BranchPoint]
    origin_lambda0: float
    termination: str | None = None
    notes: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        lams = [p.lam for p in self.points]
        return {
            "origin_lambda0": self.origin_lambda0,
            "termination": self.termination,
            "n_points": len(self.points),
            "lambda_min": min(lams) if lams else None,
            "lambda_max": max(lams) if lams else None,
            "max_sup_norm": max((p.sup_norm for p in self.points), default=None),
            "max_residual": max((p.residual for p in self.points), default=None),
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------------------
# discrete operator


def _nodes(x, grid, d):
    return np.asarray(x, dtype=float).reshape(grid.n_nodes, d)


def residual(model: HamiltonianModel, lam: float, x, grid: Grid, bc_kind: str = "projection",
             tol_axis: float = TOL_AXIS) -> np.ndarray:
    """Discrete ``F(lam, x)`` in the row order of :func:`linop.assemble`."""
    d = model.dim
    X = _nodes(x, grid, d)
    h = grid.step
    xm = 0.5 * (X[1:] + X[:-1])
    interior = (X[1:] - X[:-1]) / h @ model.J.T - eval_grad_h(model, grid.midpoints, xm, lam)
    Rm, Rp = boundary_rows(model, lam, grid, bc_kind, tol_axis)
    s = 1.0 / math.sqrt(h)
    return np.concatenate([s * (Rm @ X[0]), interior.ravel(), s * (Rp @ X[-1])])


def jacobian(model: HamiltonianModel, lam: float, x, grid: Grid, bc_kind: str = "projection",
             tol_axis: float = TOL_AXIS) -> BandedOperator:
    """``D_x F(lam, x)``: midpoint Hessians split evenly over both node blocks."""
    X = _nodes(x, grid, model.dim)
    xm = 0.5 * (X[1:] + X[:-1])
    M = eval_hessian(model, grid.midpoints, xm, lam)
    Rm, Rp = boundary_rows(model, lam, grid, bc_kind, tol_axis)
    return assemble_blocks(M, grid, model.J, Rm, Rp, bc_kind)


def dlambda_residual(model: HamiltonianModel, lam: float, x, grid: Grid, bc_kind: str = "projection",
                     tol_axis: float = TOL_AXIS, step: float = 1e-6) -> np.ndarray:
    """``D_lam F(lam, x)``; the closure rows are differentiated by central differences."""
    d = model.dim
    X = _nodes(x, grid, d)
    xm = 0.5 * (X[1:] + X[:-1])
    interior = -eval_dlambda_grad_h(model, grid.midpoints, xm, lam)
    out = np.concatenate([np.zeros(d // 2), interior.ravel(), np.zeros(d // 2)])
    if bc_kind == "projection":
        dl = step * max(1.0, abs(lam))
        Rm1, Rp1 = boundary_rows(model, lam + dl, grid, bc_kind, tol_axis)
        Rm0, Rp0 = boundary_rows(model, lam - dl, grid, bc_kind, tol_axis)
        s = 1.0 / math.sqrt(grid.step)
        out[: d // 2] = s * ((Rm1 - Rm0) @ X[0]) / (2 * dl)
        out[-(d // 2):] = s * ((Rp1 - Rp0) @ X[-1]) / (2 * dl)
    return out


def _weights(grid: Grid, d: int) -> np.ndarray:
    return np.repeat(trapezoid_weights(grid), d)


def _norms(X: np.ndarray, grid: Grid) -> tuple[float, float, float]:
    w = trapezoid_weights(grid)
    pt = np.einsum("ij,ij->i", X, X)
    l2 = math.sqrt(float(w @ pt))
    dX = np.diff(X, axis=0) / grid.step
    h1 = math.sqrt(l2**2 + grid.step * float(np.sum(dX * dX)))
    return float(np.sqrt(pt.max())), l2, h1


def make_point(model: HamiltonianModel, lam: float, x, grid: Grid, *, bc_kind: str = "projection",
               newton_iters: int = 0, arclength: float = 0.0, tail_fraction: float = 0.2) -> BranchPoint:
    X = _nodes(x, grid, model.dim).copy()
    sup, l2, h1 = _norms(X, grid)
    res = float(np.max(np.abs(residual(model, lam, X, grid, bc_kind))))
    try:
        gp, gm = decay_rate(X, grid, tail_fraction)
    except TailUnderflow:
        gp = gm = float("nan")
    return BranchPoint(float(lam), X, sup, l2, h1, res, gp, gm, int(newton_iters), float(arclength))


# ---------------------------------------------------------------------------
# linear algebra


def solve_bordered(op: BandedOperator, b: np.ndarray, c: np.ndarray, dd: float, f: np.ndarray, g: float,
                   refine: int = 2, lu=None) -> tuple[np.ndarray, float]:
    """Solve ``[[A, b], [c^T, dd]] [x; y] = [f; g]`` by block elimination.

    ``A`` is factored once (banded LU); iterative refinement on the full
    bordered system recovers the accuracy lost when ``A`` is nearly singular.
    """
    try:
        lu = lu or op.factor()
    except FactorizationFailure as exc:
        raise SingularJacobian(str(exc)) from exc
    Z = lu.solve(np.column_stack([f, b]))
    zb = Z[:, 1]

    def eliminate(rf, rg, zf):
        denom = dd - c @ zb
        if denom == 0.0 or not math.isfinite(denom):
            raise SingularJacobian("bordered Schur complement vanishes")
        y = (rg - c @ zf) / denom
        return zf - zb * y, y

    x, y = eliminate(f, g, Z[:, 0])
    for _ in range(refine):
        rf = f - op.matvec(x) - b * y
        rg = g - c @ x - dd * y
        dx, dy = eliminate(rf, rg, lu.solve(rf))
        x, y = x + dx, y + dy
    return x, y


def newton_correct(
    model: HamiltonianModel,
    lam: float,
    x_init,
    grid: Grid,
    tol: float = 1e-10,
    max_iters: int = 25,
    *,
    bc_kind: str = "projection",
    full_output: bool = False,
):
    """Damped Newton for ``F(lam, x) = 0`` at fixed ``lam``.

    Each step is halved (at most 8 times) until the Euclidean residual norm
    decreases.  Success means max-norm residual below ``tol``.

    Raises
    ------
    NoConvergence
        With the final residual when ``max_iters`` is exhausted or the line search fails.
    SingularJacobian
        When the banded factorization hits an exact zero pivot.
    """
    if tol <= 0 or max_iters < 1:
        raise ValueError("tol must be positive and max_iters >= 1")
    x = np.asarray(x_init, dtype=float).ravel().copy()
    F = residual(model, lam, x, grid, bc_kind)
    it = 0
    while np.max(np.abs(F)) >= tol:
        if it >= max_iters:
            raise NoConvergence(float(np.max(np.abs(F))), it)
        op = jacobian(model, lam, x, grid, bc_kind)
        try:
            dx = op.factor().solve(-F)
        except FactorizationFailure as exc:
            raise SingularJacobian(str(exc)) from exc
        it += 1
        fn = np.linalg.norm(F)
        alpha = 1.0
        for _ in range(9):
            x_new = x + alpha * dx
            F_new = residual(model, lam, x_new, grid, bc_kind)
            if np.linalg.norm(F_new) < fn:
                break
            alpha *= 0.5
        else:
            raise NoConvergence(float(np.max(np.abs(F))), it)
        x, F = x_new, F_new
    X = x.reshape(grid.n_nodes, model.dim)
    return (X, it, float(np.max(np.abs(F)))) if full_output else X


def _bordered_newton(model, grid, x0, lam0, c, c_lam, rhs, tol, max_iters, bc_kind):
    """Newton on ``{F(lam, x) = 0, c.x + c_lam lam = rhs}`` with halving line search."""
    x = np.asarray(x0, dtype=float).ravel().copy()
    lam = float(lam0)

    def full(x, lam):
        return residual(model, lam, x, grid, bc_kind), float(c @ x + c_lam * lam - rhs)

    F, g = full(x, lam)
    it = 0
    while max(np.max(np.abs(F)), abs(g)) >= tol:
        if it >= max_iters:
            raise NoConvergence(float(max(np.max(np.abs(F)), abs(g))), it)
        op = jacobian(model, lam, x, grid, bc_kind)
        Fl = dlambda_residual(model, lam, x, grid, bc_kind)
        dx, dl = solve_bordered(op, Fl, c, c_lam, -F, -g)
        if not (np.all(np.isfinite(dx)) and math.isfinite(dl)):
            raise SingularJacobian("non-finite Newton update")
        it += 1
        fn = math.hypot(np.linalg.norm(F), g)
        alpha = 1.0
        for _ in range(9):
            try:
                F_new, g_new = full(x + alpha * dx, lam + alpha * dl)
            except Exception:  # noqa: BLE001 - e.g. trial lam outside the hyperbolic range
                F_new, g_new = None, None
            if F_new is not None and math.hypot(np.linalg.norm(F_new), g_new) < fn:
                break
            alpha *= 0.5
        else:
            raise NoConvergence(float(max(np.max(np.abs(F)), abs(g))), it)
        x, lam, F, g = x + alpha * dx, lam + alpha * dl, F_new, g_new
    return x, lam, it


def branch_switch(
    model: HamiltonianModel,
    lam0: float,
    kernel,
    grid: Grid,
    eps: float,
    *,
    tol: float = 1e-10,
    max_iters: int = 25,
    bc_kind: str = "projection",
) -> BranchPoint:
    """First nontrivial point on the branch bifurcating at ``lam0``.

    Solves ``F(lam, x) = 0`` together with ``<u0, x>_{L^2} = eps`` for
    ``(x, lam)``, starting from ``(eps u0, lam0)``.

    Raises
    ------
    KernelNotSimple
        If ``kernel`` is a :class:`KernelData` with dimension other than 1.
    NoConvergence
        Usually means ``eps`` is too large.
    """
    if isinstance(kernel, KernelData):
        if kernel.dimension != 1:
            raise KernelNotSimple(f"branch switching needs a simple kernel, got k={kernel.dimension}")
        u0 = kernel.basis[0]
    else:
        u0 = kernel
    d = model.dim
    u0 = np.asarray(u0, dtype=float).ravel()
    w = _weights(grid, d)
    if eps == 0.0:
        return make_point(model, lam0, np.zeros_like(u0), grid, bc_kind=bc_kind)
    c = w * u0
    x, lam, it = _bordered_newton(model, grid, eps * u0, lam0, c, 0.0, eps, tol, max_iters, bc_kind)
    return make_point(model, lam, x, grid, bc_kind=bc_kind, newton_iters=it)


def _scaled_norm(dx, dl, w):
    return math.sqrt(float(dx @ (w * dx)) + dl * dl)


def continue_branch(
    model: HamiltonianModel,
    start: BranchPoint,
    grid: Grid,
    step0: float = 1e-2,
    step_min: float = 1e-6,
    step_max: float = 0.1,
    norm_cap: float = 1e3,
    lam_bounds: tuple[float, float] = (-np.inf, np.inf),
    max_steps: int = 50,
    *,
    origin_lambda0: float | None = None,
    tol: float = 1e-10,
    max_iters: int = 25,
    bc_kind: str = "projection",
    grow_after: int = 3,
    grow_factor: float = 1.3,
) -> Branch:
    """Pseudo-arclength continuation in ``(lam, x)`` from a nontrivial point.

    Arclength is measured as ``|dx|_{L^2}^2 + dlam^2``.  The first tangent
    points in the direction of growing ``<x_start, x>``; later predictors use
    the secant through the last two points.  The step is halved on corrector
    failure and grown by ``grow_factor`` after ``grow_after`` successes.

    The run ends with exactly one termination tag from :data:`TERMINATIONS`.
    ``norm_cap_reached`` stands in for an unbounded branch and
    ``returned_to_zero`` for a return to the trivial line; neither is a proof.
    """
    if start.residual >= max(tol, 1e-8):
        raise ValueError(f"start point residual {start.residual:.3e} is not converged")
    d = model.dim
    w = _weights(grid, d)
    lam0 = start.lam if origin_lambda0 is None else float(origin_lambda0)
    branch = Branch([start], lam0)
    lo, hi = lam_bounds

    def terminal(p: BranchPoint, first: bool = False) -> str | None:
        if p.h1_norm >= norm_cap:
            return "norm_cap_reached"
        if not lo <= p.lam <= hi:
            return "left_interval"
        if not first and p.sup_norm < 1e-6 and abs(p.lam - lam0) > 1e-6:
            return "returned_to_zero"
        return None

    tag = terminal(start, first=True)
    if tag:
        branch.termination = tag
        return branch

    x_k = start.x.ravel().copy()
    lam_k = start.lam
    op = jacobian(model, lam_k, x_k, grid, bc_kind)
    Fl = dlambda_residual(model, lam_k, x_k, grid, bc_kind)
    tx, tl = solve_bordered(op, Fl, w * x_k, 0.0, np.zeros_like(x_k), 1.0)
    nrm = _scaled_norm(tx, tl, w)
    tx, tl = tx / nrm, tl / nrm

    s = float(np.clip(step0, step_min, step_max))
    streak = 0
    arc = start.arclength
    while len(branch.points) - 1 < max_steps:
        xp = x_k + s * tx
        lp = lam_k + s * tl
        rhs = float((w * tx) @ x_k + tl * lam_k + s)
        try:
            x_new, lam_new, it = _bordered_newton(model, grid, xp, lp, w * tx, tl, rhs, tol, max_iters, bc_kind)
        except (NoConvergence, SingularJacobian) as exc:
            log.debug("corrector failed at step %.3e: %s", s, exc)
            s *= 0.5
            streak = 0
            if s < step_min:
                branch.termination = "step_failure"
                return branch
            continue
        dx, dl = x_new - x_k, lam_new - lam_k
        chord = _scaled_norm(dx, dl, w)
        arc += chord
        p = make_point(model, lam_new, x_new, grid, bc_kind=bc_kind, newton_iters=it, arclength=arc)
        branch.points.append(p)
        tx, tl = dx / chord, dl / chord
        x_k, lam_k = x_new, lam_new
        streak += 1
        if streak >= grow_after:
            s = min(s * grow_factor, step_max)
            streak = 0
        tag = terminal(p)
        if tag:
            branch.termination = tag
            return branch
    branch.termination = "max_steps_reached"
    return branch


# ---------------------------------------------------------------------------
# decay diagnostics


@dataclass
class DecayReport:
    lam: float
    gamma_plus: float
    gamma_minus: float
    expected_plus: float
    expected_minus: float
    mismatch_plus: float
    mismatch_minus: float
    flagged: bool

    def to_dict(self):
        return {k: _nan_to_none(v) if isinstance(v, float) else v for k, v in self.__dict__.items()}


def _expected_rate(model, side, lam):
    data = asymptotic_floquet(model, side, lam)
    if data.generator is not None:
        re = np.linalg.eigvals(data.generator).real
        sel = re[re < 0] if side == "+" else re[re > 0]
        return float(np.min(np.abs(sel))) if sel.size else 0.0
    logs = np.log(np.abs(data.multipliers)) / data.period_used
    sel = logs[logs < 0] if side == "+" else logs[logs > 0]
    return float(np.min(np.abs(sel))) if sel.size else 0.0


def verify_decay(point: BranchPoint, model: HamiltonianModel, grid: Grid, *, tail_fraction: float = 0.2,
                 rel_tol: float = 0.05) -> DecayReport:
    """Compare fitted tail decay rates with the slowest rate of the asymptotic systems.

    Raises
    ------
    TailUnderflow
        If a tail is below the noise floor.
    """
    gp, gm = decay_rate(point.x, grid, tail_fraction)
    ep = _expected_rate(model, "+", point.lam)
    em = _expected_rate(model, "-", point.lam)
    mp = abs(gp - ep) / ep if ep > 0 else float("inf")
    mm = abs(gm - em) / em if em > 0 else float("inf")
    return DecayReport(point.lam, gp, gm, ep, em, mp, mm, bool(mp > rel_tol or mm > rel_tol))
