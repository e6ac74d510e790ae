"""Checks for admissible intervals and for the bifurcation conditions at ``lam0``."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateKernel, ModeMismatch, SymplecticDriftExceeded
from .floquet import TOL_AXIS, asymptotic_floquet
from .linop import Grid, KernelData, trapezoid_weights
from .model import HamiltonianModel, eval_dlambda_hessian

__all__ = [
    "BifurcationReport",
    "AdmissibilityReport",
    "transversality",
    "bifurcation_report",
    "det_shortcut",
    "regularity_samples",
    "check_regularity",
    "admissibility",
    "DEFAULT_RADII",
    "DEFAULT_SEED",
]

DEFAULT_RADII = (0.01, 0.1, 1.0, 10.0)
DEFAULT_SEED = 0xB1F0
MODES = ("a", "b", "c")


@dataclass
class BifurcationReport:
    lambda0: float
    k: int
    k_odd: bool
    transversality_matrix: list[list[float]]
    g_nonsingular: bool
    g_condition: float
    image_gram: list[list[float]]
    image_rank: int
    det_shortcut: float | None
    parity: int
    all_hypotheses_met: bool
    notes: list[str] = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


@dataclass
class AdmissibilityReport:
    lambda_grid: list[float]
    hyperbolicity_margins_plus: list[float]
    hyperbolicity_margins_minus: list[float]
    regularity_mode_plus: str
    regularity_mode_minus: str
    regularity_margins_plus: list[float]
    regularity_margins_minus: list[float]
    admissible: bool
    tol_axis: float = TOL_AXIS

    @property
    def regularity_margins(self) -> list[float]:
        return [min(p, m) for p, m in zip(self.regularity_margins_plus, self.regularity_margins_minus)]

    def admissible_at(self) -> list[bool]:
        return [
            hp > self.tol_axis and hm > self.tol_axis and rp > 0 and rm > 0
            for hp, hm, rp, rm in zip(
                self.hyperbolicity_margins_plus,
                self.hyperbolicity_margins_minus,
                self.regularity_margins_plus,
                self.regularity_margins_minus,
            )
        ]

    def to_dict(self):
        d = asdict(self)
        d["regularity_margins"] = self.regularity_margins
        return d


def _stack_basis(kernel: KernelData, grid: Grid, dim: int) -> np.ndarray:
    return np.stack([np.asarray(u, dtype=float).reshape(grid.n_nodes, dim) for u in kernel.basis])


def transversality(kernel: KernelData, model: HamiltonianModel, grid: Grid, tol_G: float = 1e-6):
    """Pairing matrix ``G_ij = int <T u_i, u_j> dt``, image Gram matrix and parity.

    Returns ``(G, image_gram, parity, g_ok, image_rank, cond)``.  Condition
    (ii) holds iff ``sigma_min(G) > tol_G * scale`` and condition (iii) iff
    the Gram matrix of ``{T u_i}`` has full rank at the same relative
    tolerance.  ``scale`` is the larger of ``sigma_max(G)`` and
    ``sup_t |T(t)| * max_i |u_i|^2`` so a vanishing ``G`` is never accepted.
    """
    k = kernel.dimension
    if k < 1 or not kernel.basis:
        raise DegenerateKernel("kernel is empty")
    U = _stack_basis(kernel, grid, model.dim)  # (k, n+1, d)
    w = trapezoid_weights(grid)
    norms = np.sqrt(np.einsum("kid,kid,i->k", U, U, w))
    if np.any(norms < 1e-12):
        raise DegenerateKernel(f"basis vector with L2 norm {norms.min():.3e}")
    T = eval_dlambda_hessian(model, grid.nodes, kernel.lambda0)  # (n+1, d, d)
    TU = np.einsum("ide,kie->kid", T, U)
    G = np.einsum("kid,jid,i->kj", TU, U, w)
    gram = np.einsum("kid,jid,i->kj", TU, TU, w)

    t_sup = float(np.max(np.linalg.norm(T, axis=(1, 2))))
    u_sq = float(np.max(norms) ** 2)
    sv = np.linalg.svd(G, compute_uv=False)
    scale = max(float(sv[0]), t_sup * u_sq)
    g_ok = bool(sv[-1] > tol_G * scale) if scale > 0 else False
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")

    gsv = np.linalg.svd(gram, compute_uv=False)
    gscale = max(float(gsv[0]), (t_sup * u_sq) ** 2)
    rank = int(np.sum(gsv > tol_G * gscale)) if gscale > 0 else 0
    parity = -1 if k % 2 else 1
    return G, gram, parity, g_ok, rank, cond


def det_shortcut(model: HamiltonianModel, lam0: float, t0: float = 0.0) -> float:
    """``det D_lam D^2_xi H(t0, 0, lam0)``; nonzero certifies the image-rank condition."""
    return float(np.linalg.det(eval_dlambda_hessian(model, float(t0), lam0)))


def bifurcation_report(kernel: KernelData, model: HamiltonianModel, grid: Grid, *, tol_G: float = 1e-6,
                       t0: float = 0.0) -> BifurcationReport:
    k = kernel.dimension
    notes = []
    if k == 0:
        return BifurcationReport(kernel.lambda0, 0, False, [], False, float("inf"), [], 0,
                                 det_shortcut(model, kernel.lambda0, t0), 1, False, ["trivial kernel"])
    G, gram, parity, g_ok, rank, cond = transversality(kernel, model, grid, tol_G)
    det = det_shortcut(model, kernel.lambda0, t0)
    if k > 1:
        T = eval_dlambda_hessian(model, grid.nodes, kernel.lambda0)
        if not np.allclose(T, np.swapaxes(T, 1, 2)):
            notes.append("k > 1 with non-symmetric T: G-nonsingularity may not match the pointwise condition")
        else:
            notes.append("k > 1: no constructive branch direction for branch switching")
    if det != 0.0:
        notes.append("det shortcut nonzero: image-rank condition certified pointwise")
    met = bool(k % 2 == 1 and g_ok and rank == k)
    return BifurcationReport(
        lambda0=kernel.lambda0,
        k=k,
        k_odd=bool(k % 2),
        transversality_matrix=G.tolist(),
        g_nonsingular=g_ok,
        g_condition=cond,
        image_gram=gram.tolist(),
        image_rank=rank,
        det_shortcut=det,
        parity=parity,
        all_hypotheses_met=met,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# regularity of the asymptotic bundles


def regularity_samples(model: HamiltonianModel, side: str, lam: float, *, n_t: int = 32, n_dir: int = 24,
                       radii: Sequence[float] = DEFAULT_RADII, seed: int = DEFAULT_SEED):
    """Times over one period and states on spheres of the given radii.

    Directions are the signed coordinate axes plus seeded random unit vectors;
    for ``2N = 2`` they are evenly spaced angles instead.
    """
    T = model.period(side, lam)
    ts = np.linspace(0.0, T, n_t, endpoint=False)
    d = model.dim
    if d == 2:
        ang = np.linspace(0.0, 2 * np.pi, n_dir, endpoint=False)
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    else:
        rng = np.random.default_rng(seed)
        eye = np.eye(d)
        rnd = rng.standard_normal((n_dir, d))
        dirs = np.vstack([eye, -eye, rnd / np.linalg.norm(rnd, axis=1, keepdims=True)])
    xis = np.vstack([r * dirs for r in radii])
    return ts, xis


def _pairs(ts, xis):
    tt = np.repeat(ts, len(xis))
    XX = np.tile(xis, (len(ts), 1))
    return tt, XX


def _potential(g, t, X, lam, nodes: int = 8):
    # H^{+-}(t, xi) - H(t, 0) = int_0^1 <g(t, s xi), xi> ds
    s, wq = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * (s + 1.0)
    wq = 0.5 * wq
    out = np.zeros(len(t))
    for si, wi in zip(s, wq):
        out += wi * np.einsum("ij,ij->i", np.asarray(g(t, si * X, lam)), X)
    return out


def check_regularity(
    model: HamiltonianModel,
    side: str,
    lam: float,
    mode: str,
    C: np.ndarray | None = None,
    samples=None,
    *,
    tol_lin: float = 1e-10,
    tol_autonomy: float = 1e-12,
    small_radii: Sequence[float] = (0.01, 0.1),
) -> float:
    """Margin for one of the no-homoclinic criteria of the asymptotic bundle.

    mode ``"a"``: ``min <g(t, xi), J C xi> / |xi|^2`` (positive passes).
    mode ``"b"``: ``tol_lin - max |g(t, xi) - D g(t, 0) xi| / |xi|`` (linear bundle).
    mode ``"c"``: ``min |H^{+-}(xi)| / |xi|^2`` over the small radii, after
    checking that ``g`` does not depend on ``t``.

    Raises
    ------
    ModeMismatch
        For mode ``"a"`` without a symmetric ``C`` or mode ``"c"`` on a time-dependent bundle.
    """
    if side not in "+-" or len(side) != 1:
        raise ValueError("side must be '+' or '-'")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    ts, xis = samples if samples is not None else regularity_samples(model, side, lam)
    g = model.g(side)
    tt, XX = _pairs(ts, xis)
    r2 = np.einsum("ij,ij->i", XX, XX)

    if mode == "a":
        if C is None:
            raise ModeMismatch("criterion (a) needs a symmetric matrix C")
        C = np.asarray(C, dtype=float)
        if not np.allclose(C, C.T):
            raise ModeMismatch("criterion (a) needs a symmetric matrix C")
        JC = model.J @ C
        vals = np.einsum("ij,ij->i", np.asarray(g(tt, XX, lam)), XX @ JC.T)
        return float(np.min(vals / r2))

    if mode == "b":
        A0 = np.asarray(model.dxi_g(side)(tt, np.zeros_like(XX), lam))
        lin = np.einsum("ijk,ik->ij", A0, XX)
        res = np.linalg.norm(np.asarray(g(tt, XX, lam)) - lin, axis=1) / np.sqrt(r2)
        return float(tol_lin - np.max(res))

    # mode c
    ref = np.asarray(g(np.zeros_like(tt), XX, lam))
    var = float(np.max(np.abs(np.asarray(g(tt, XX, lam)) - ref)))
    if var > tol_autonomy * max(1.0, float(np.max(np.abs(ref)))):
        raise ModeMismatch(f"criterion (c) needs an autonomous bundle; t-variation {var:.3e}")
    radius = np.linalg.norm(xis, axis=1)
    X0 = xis[np.any(np.isclose(radius[:, None], np.asarray(small_radii, dtype=float)[None, :]), axis=1)]
    if X0.size == 0:
        raise ValueError("criterion (c) needs samples on the small radii")
    t0 = np.zeros(len(X0))
    Hv = _potential(g, t0, X0, lam)
    return float(np.min(np.abs(Hv) / np.einsum("ij,ij->i", X0, X0)))


def _hyperbolicity_margin(model, side, lam, tol_axis):
    try:
        return float(asymptotic_floquet(model, side, lam, tol_axis=tol_axis).margin)
    except SymplecticDriftExceeded:
        return float("nan")


def admissibility(
    model: HamiltonianModel,
    lam_lo: float,
    lam_hi: float,
    n_grid: int,
    modes: Mapping[str, str] | Sequence[str] = ("a", "a"),
    C_matrices: Mapping[str, np.ndarray] | None = None,
    *,
    tol_axis: float = TOL_AXIS,
    jobs: int = 1,
    seed: int = DEFAULT_SEED,
) -> AdmissibilityReport:
    """Sampled check that every ``lam`` on a grid of ``[lam_lo, lam_hi]`` meets
    the hyperbolicity and no-homoclinic conditions on both sides.

    Non-hyperbolic points show up as nonpositive margins, never as exceptions.
    """
    if not lam_lo < lam_hi:
        raise ValueError("lam_lo must be < lam_hi")
    if isinstance(modes, Mapping):
        mode_p, mode_m = modes["+"], modes["-"]
    else:
        mode_p, mode_m = modes
    C_matrices = C_matrices or {}
    lams = np.linspace(lam_lo, lam_hi, n_grid)

    def one(lam):
        lam = float(lam)
        hp = _hyperbolicity_margin(model, "+", lam, tol_axis)
        hm = _hyperbolicity_margin(model, "-", lam, tol_axis)
        regs = []
        for side, mode in (("+", mode_p), ("-", mode_m)):
            try:
                samples = regularity_samples(model, side, lam, seed=seed)
                regs.append(check_regularity(model, side, lam, mode, C_matrices.get(side), samples))
            except ModeMismatch:
                regs.append(float("-inf"))
        return hp, hm, regs[0], regs[1]

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, lams))
    else:
        rows = [one(l) for l in lams]
    hp, hm, rp, rm = (list(map(float, col)) for col in zip(*rows))
    ok = all(a > tol_axis and b > tol_axis and c > 0 and d > 0 for a, b, c, d in rows)
    return AdmissibilityReport([float(l) for l in lams], hp, hm, mode_p, mode_m, rp, rm, ok, tol_axis)
