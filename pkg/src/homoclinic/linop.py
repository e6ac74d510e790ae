"""Truncated-line discretization of ``u -> J u' - A(t) u`` and its kernel.

Unknowns are the node values ``x_0, ..., x_n`` on a uniform grid of
``[-L, L]``, stored row-major as ``x.reshape(n + 1, 2N)``.  Equation rows
are ordered so the matrix is banded:

* ``N`` rows closing the left end (``x_0`` in the growing subspace of the
  asymptotic system at ``-inf``),
* ``n`` blocks of ``2N`` midpoint rows
  ``J (x_{i+1} - x_i) / h - A(t_{i+1/2}) (x_i + x_{i+1}) / 2``,
* ``N`` rows closing the right end (``x_n`` in the decaying subspace at ``+inf``).
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.linalg.lapack import dgbtrf, dgbtrs
from scipy.sparse.linalg import LinearOperator, eigsh

from .errors import FactorizationFailure, NoNegativeEigenvalue, NotHyperbolic, RankAmbiguous, TailUnderflow
from .floquet import TOL_AXIS, asymptotic_floquet
from .model import HamiltonianModel, eval_hessian

__all__ = [
    "Grid",
    "BandedOperator",
    "BandedLU",
    "KernelData",
    "Candidate",
    "ScanResult",
    "trapezoid_weights",
    "l2_inner",
    "boundary_rows",
    "assemble_blocks",
    "assemble",
    "smallest_singular_values",
    "smallest_singular_triplets",
    "median_singular_value",
    "sigma_min",
    "golden_section",
    "scan_bifurcations",
    "kernel_basis",
    "rayleigh_lambda0",
    "decay_rate",
]

BC_KINDS = ("projection", "dirichlet_half")


@dataclass(frozen=True)
class Grid:
    half_length: float
    n_cells: int

    def __post_init__(self):
        if self.half_length <= 0:
            raise ValueError("half_length must be positive")
        if self.n_cells < 2:
            raise ValueError("n_cells must be >= 2")

    @property
    def step(self) -> float:
        return 2.0 * self.half_length / self.n_cells

    @functools.cached_property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.half_length, self.half_length, self.n_cells + 1)

    @functools.cached_property
    def midpoints(self) -> np.ndarray:
        t = self.nodes
        return 0.5 * (t[1:] + t[:-1])

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1


def trapezoid_weights(grid: Grid) -> np.ndarray:
    w = np.full(grid.n_nodes, grid.step)
    w[0] = w[-1] = 0.5 * grid.step
    return w


def l2_inner(u: np.ndarray, v: np.ndarray, grid: Grid) -> float:
    """Trapezoid-rule ``int <u(t), v(t)> dt`` for node arrays of shape ``(n+1, 2N)``."""
    u = np.asarray(u).reshape(grid.n_nodes, -1)
    v = np.asarray(v).reshape(grid.n_nodes, -1)
    return float(trapezoid_weights(grid) @ np.einsum("ij,ij->i", u, v))


# ---------------------------------------------------------------------------
# banded storage


class BandedLU:
    """LAPACK ``gbtrf`` factorization with solves for ``A`` and ``A^T``."""

    def __init__(self, ab: np.ndarray, l: int, u: int):
        n = ab.shape[1]
        work = np.zeros((2 * l + u + 1, n))
        work[l:, :] = ab
        lu, piv, info = dgbtrf(work, l, u, overwrite_ab=1)
        if info > 0:
            raise FactorizationFailure(f"exact zero pivot at position {info}")
        if info < 0:
            raise FactorizationFailure(f"illegal argument {-info} to dgbtrf")
        self.lu, self.piv, self.l, self.u, self.n = lu, piv, l, u, n

    def solve(self, b: np.ndarray, trans: bool = False) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        vec = b.ndim == 1
        x, info = dgbtrs(self.lu, self.l, self.u, b.reshape(self.n, -1), self.piv, trans=1 if trans else 0)
        if info != 0:
            raise FactorizationFailure(f"dgbtrs returned info={info}")
        if not np.all(np.isfinite(x)):
            raise FactorizationFailure("solve produced non-finite values")
        return x.ravel() if vec else x


@dataclass
class BandedOperator:
    """Square banded matrix in ``solve_banded`` layout: ``ab[u + i - j, j] = a[i, j]``."""

    ab: np.ndarray
    l: int
    u: int
    bc_kind: str
    dim_half: int

    @property
    def dimension(self) -> int:
        return self.ab.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.l + self.u + 1

    @functools.cached_property
    def sparse(self) -> sp.csr_matrix:
        offsets = np.arange(self.u, -self.l - 1, -1)
        return sp.dia_matrix((self.ab, offsets), shape=(self.dimension, self.dimension)).tocsr()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.sparse @ np.asarray(x, dtype=float).ravel()

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        return self.sparse.T @ np.asarray(y, dtype=float).ravel()

    def to_dense(self) -> np.ndarray:
        return self.sparse.toarray()

    def factor(self) -> BandedLU:
        return BandedLU(self.ab, self.l, self.u)


def _canonical_complement(basis: np.ndarray) -> np.ndarray:
    """Orthonormal rows spanning the orthogonal complement of ``span(basis)``.

    Pivoted QR of the complementary projector with positive ``R`` diagonal
    makes the rows a deterministic, locally continuous function of the subspace.
    """
    n, k = basis.shape
    P = np.eye(n) - basis @ basis.T
    Q, R, _ = sla.qr(P, pivoting=True)
    signs = np.sign(np.diag(R)[: n - k])
    signs[signs == 0] = 1.0
    return (Q[:, : n - k] * signs).T


@functools.lru_cache(maxsize=512)
def _boundary_rows_cached(model, lam, L, bc_kind, tol_axis):
    N = model.structure.dim_half
    if bc_kind == "dirichlet_half":
        row = np.hstack([np.eye(N), np.zeros((N, N))])
        return row, row.copy()
    if bc_kind != "projection":
        raise ValueError(f"unknown bc_kind {bc_kind!r}; expected one of {BC_KINDS}")
    right = asymptotic_floquet(model, "+", lam, t0=L, tol_axis=tol_axis)
    if not right.hyperbolic:
        raise NotHyperbolic("+", right.margin)
    left = asymptotic_floquet(model, "-", lam, t0=-L, tol_axis=tol_axis)
    if not left.hyperbolic:
        raise NotHyperbolic("-", left.margin)
    return _canonical_complement(left.unstable_basis), _canonical_complement(right.stable_basis)


def boundary_rows(model: HamiltonianModel, lam: float, grid: Grid, bc_kind: str = "projection",
                  tol_axis: float = TOL_AXIS) -> tuple[np.ndarray, np.ndarray]:
    """``(R_minus, R_plus)``, each ``N x 2N`` with orthonormal rows.

    ``R_minus x(-L) = 0`` forces ``x(-L)`` into the growing subspace of the
    system at ``-inf``; ``R_plus x(L) = 0`` forces ``x(L)`` into the decaying
    subspace at ``+inf``.
    """
    Rm, Rp = _boundary_rows_cached(model, float(lam), float(grid.half_length), bc_kind, float(tol_axis))
    return Rm.copy(), Rp.copy()


def assemble_blocks(M_mid: np.ndarray, grid: Grid, J: np.ndarray, R_minus: np.ndarray, R_plus: np.ndarray,
                    bc_kind: str = "projection") -> BandedOperator:
    """Banded matrix from midpoint coefficient matrices ``M_mid`` of shape ``(n, 2N, 2N)``."""
    n = grid.n_cells
    d = J.shape[0]
    N = d // 2
    h = grid.step
    l = u = 3 * N - 1
    size = d * (n + 1)
    ab = np.zeros((l + u + 1, size))

    left = -J / h - 0.5 * M_mid  # (n, d, d) acting on x_i
    right = J / h - 0.5 * M_mid  # acting on x_{i+1}
    block = np.concatenate([left, right], axis=2)  # (n, d, 2d)
    cell = np.arange(n)[:, None, None]
    a = np.arange(d)[None, :, None]
    b = np.arange(2 * d)[None, None, :]
    rows = N + d * cell + a
    cols = d * cell + b
    rows, cols = np.broadcast_arrays(rows, cols)
    ab[u + rows - cols, cols] = block

    # closures weighted like an L^2 trace so they do not create O(sqrt(h)) singular values
    scale = 1.0 / math.sqrt(h)
    r0 = np.arange(N)[:, None]
    c0 = np.arange(d)[None, :]
    ab[u + r0 - c0, c0] = scale * R_minus
    r1 = N + d * n + r0
    c1 = d * n + c0
    ab[u + r1 - c1, c1] = scale * R_plus
    return BandedOperator(ab, l, u, bc_kind, N)


def assemble(model: HamiltonianModel, lam: float, grid: Grid, bc_kind: str = "projection",
             tol_axis: float = TOL_AXIS) -> BandedOperator:
    """Discretized ``D_x F(lam, 0) u = J u' - A_lam(t) u`` with boundary closures.

    Raises
    ------
    NotHyperbolic
        For projection closures when an asymptotic system is not hyperbolic.
    """
    Rm, Rp = boundary_rows(model, lam, grid, bc_kind, tol_axis)
    tm = grid.midpoints
    A_mid = eval_hessian(model, tm, np.zeros((tm.size, model.dim)), lam)
    return assemble_blocks(A_mid, grid, model.J, Rm, Rp, bc_kind)


# ---------------------------------------------------------------------------
# singular values


def _start_vector(n: int) -> np.ndarray:
    v = 1.0 + 0.5 * np.cos(0.7 * np.arange(n))
    return v / np.linalg.norm(v)


def smallest_singular_triplets(op: BandedOperator, count: int, tol: float = 1e-13):
    """Smallest singular values (ascending) and right singular vectors.

    Lanczos iteration on ``(A^T A)^{-1} = A^{-1} A^{-T}`` using one banded LU.
    """
    n = op.dimension
    if not 1 <= count < n - 1:
        raise ValueError(f"count must be in [1, {n - 2}]")
    lu = op.factor()

    def apply(x):
        return lu.solve(lu.solve(np.ravel(x), trans=True))

    inv = LinearOperator((n, n), matvec=apply, dtype=float)
    theta, vecs = eigsh(inv, k=count, which="LA", v0=_start_vector(n), tol=tol,
                        ncv=min(n - 1, max(2 * count + 1, 20)))
    theta = np.maximum(theta, np.finfo(float).tiny)
    sig = 1.0 / np.sqrt(theta)
    order = np.argsort(sig)
    return sig[order], vecs[:, order]


def smallest_singular_values(op: BandedOperator, count: int = 1) -> list[float]:
    sig, _ = smallest_singular_triplets(op, count)
    return [float(s) for s in sig]


def median_singular_value(op: BandedOperator) -> float:
    """Median of the full singular spectrum via a selected banded eigensolve of ``A^T A``."""
    S = (op.sparse.T @ op.sparse).tocsr()
    b = op.l + op.u
    n = op.dimension
    band = np.zeros((b + 1, n))
    for k in range(b + 1):
        band[b - k, k:] = S.diagonal(k)
    lo, hi = (n - 1) // 2, n // 2
    ev = sla.eig_banded(band, lower=False, eigvals_only=True, select="i", select_range=(lo, hi))
    return float(np.mean(np.sqrt(np.maximum(ev, 0.0))))


def sigma_min(model: HamiltonianModel, lam: float, grid: Grid, bc_kind: str = "projection",
              tol_axis: float = TOL_AXIS) -> float:
    op = assemble(model, lam, grid, bc_kind, tol_axis)
    try:
        return smallest_singular_values(op, 1)[0]
    except FactorizationFailure:
        return 0.0


# ---------------------------------------------------------------------------
# locating lambda_0

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, a: float, b: float, xtol: float = 1e-6, max_iter: int = 200) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[a, b]`` to absolute tolerance ``xtol``."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


@dataclass
class Candidate:
    lam: float
    sigma_min: float


@dataclass
class ScanResult:
    candidates: list[Candidate]
    profile: list[tuple[float, float]]

    def __iter__(self):
        return iter(self.candidates)

    def __len__(self):
        return len(self.candidates)

    def __getitem__(self, i):
        return self.candidates[i]


def scan_bifurcations(
    model: HamiltonianModel,
    lam_lo: float,
    lam_hi: float,
    n_scan: int,
    grid: Grid,
    *,
    bc_kind: str = "projection",
    threshold_dip: float = 1e-2,
    xtol: float = 1e-6,
    tol_axis: float = TOL_AXIS,
    jobs: int = 1,
) -> ScanResult:
    """Scan ``sigma_min(lam)`` and refine every interior local minimum.

    Each discrete local minimum is refined by golden-section search between
    its neighbours; it is kept when the refined ``sigma_min`` is below
    ``threshold_dip``.
    """
    if n_scan < 10:
        raise ValueError("n_scan must be >= 10")
    if not lam_lo < lam_hi:
        raise ValueError("lam_lo must be < lam_hi")
    lams = np.linspace(lam_lo, lam_hi, n_scan)

    def s(lam):
        return sigma_min(model, float(lam), grid, bc_kind, tol_axis)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            sig = np.array(list(pool.map(s, lams)))
    else:
        sig = np.array([s(l) for l in lams])
    profile = [(float(l), float(v)) for l, v in zip(lams, sig)]

    found: list[Candidate] = []
    for i in range(1, n_scan - 1):
        if sig[i] <= sig[i - 1] and sig[i] <= sig[i + 1]:
            lam_star, s_star = golden_section(s, lams[i - 1], lams[i + 1], xtol)
            if s_star < threshold_dip and not any(abs(c.lam - lam_star) < 10 * xtol for c in found):
                found.append(Candidate(float(lam_star), float(s_star)))
    return ScanResult(found, profile)


@dataclass
class KernelData:
    lambda0: float
    dimension: int
    basis: list[np.ndarray]
    sigma_min_profile: list[tuple[float, float]] = field(default_factory=list)
    singular_values: list[float] = field(default_factory=list)
    threshold: float = float("nan")
    grid: Grid | None = None


def _sign_convention(u: np.ndarray, rel: float = 0.1) -> np.ndarray:
    """Flip ``u`` so its dominant component is positive at its first significant extremum."""
    c = int(np.argmax(np.max(np.abs(u), axis=0)))
    comp = u[:, c]
    top = np.max(np.abs(comp))
    a = np.abs(comp)
    for i in range(1, len(comp) - 1):
        if a[i] >= rel * top and a[i] >= a[i - 1] and a[i] >= a[i + 1]:
            return u if comp[i] > 0 else -u
    i = int(np.argmax(a))
    return u if comp[i] > 0 else -u


def kernel_basis(
    model: HamiltonianModel,
    lam0: float,
    grid: Grid,
    rank_tol: float = 1e-5,
    *,
    bc_kind: str = "projection",
    tol_axis: float = TOL_AXIS,
    profile_offset: float = 1e-3,
) -> KernelData:
    """Numerical kernel of the discretized ``D_x F(lam0, 0)``.

    The rank threshold is ``rank_tol * sigma_ref`` where ``sigma_ref`` is the
    median singular value of the whole matrix.  Basis vectors are returned as
    ``(n+1, 2N)`` arrays, orthonormal in the trapezoid ``L^2`` product.

    Raises
    ------
    RankAmbiguous
        If a computed singular value lies within a factor 2 of the threshold.
    """
    op = assemble(model, lam0, grid, bc_kind, tol_axis)
    d = model.dim
    sigma_ref = median_singular_value(op)
    threshold = rank_tol * sigma_ref
    try:
        sig, vecs = smallest_singular_triplets(op, d + 1)
    except FactorizationFailure:
        # exactly singular: fall back to a slightly shifted operator for the vectors
        op = assemble(model, lam0 * (1 + 1e-14) + 1e-14, grid, bc_kind, tol_axis)
        sig, vecs = smallest_singular_triplets(op, d + 1)
    ambiguous = [float(s) for s in sig if 0.5 * threshold <= s <= 2.0 * threshold]
    if ambiguous:
        raise RankAmbiguous(sig, threshold)
    k = int(np.sum(sig < threshold))
    basis: list[np.ndarray] = []
    if k:
        V = vecs[:, :k]
        w = np.repeat(trapezoid_weights(grid), d)
        G = V.T @ (w[:, None] * V)
        Lc = np.linalg.cholesky(G)
        V = sla.solve_triangular(Lc, V.T, lower=True).T
        basis = [_sign_convention(V[:, j].reshape(grid.n_nodes, d)) for j in range(k)]
    prof = [
        (float(lam0 + off), sigma_min(model, lam0 + off, grid, bc_kind, tol_axis) if off else float(sig[0]))
        for off in (-profile_offset, 0.0, profile_offset)
    ]
    return KernelData(float(lam0), k, basis, prof, [float(s) for s in sig], float(threshold), grid)


def rayleigh_lambda0(a_profile, grid: Grid, tol: float = 1e-13, tol_neg: float = 1e-8,
                     max_iter: int = 20000) -> tuple[float, np.ndarray]:
    """Ground state of ``-phi'' - a(t) phi`` with zero boundary values.

    Three-point finite differences on the interior nodes, solved by shifted
    inverse iteration from the Gershgorin lower bound.  Returns ``lam0`` and
    ``phi0`` on all nodes, normalized to ``int phi0^2 = 1`` and positive.
    """
    t = grid.nodes
    h = grid.step
    a = np.asarray(a_profile(t[1:-1]), dtype=float)
    m = a.size
    diag = 2.0 / h**2 - a
    off = -1.0 / h**2
    shift = float(np.min(diag) - 2.0 / h**2)
    shift -= 1e-3 * max(1.0, abs(shift))
    # upper form for solveh_banded: row 0 holds the superdiagonal
    band = np.zeros((2, m))
    band[0, 1:] = off
    band[1, :] = diag - shift
    cho = sla.cholesky_banded(band)

    def apply(x):
        y = diag * x
        y[1:] += off * x[:-1]
        y[:-1] += off * x[1:]
        return y

    x = np.ones(m) / math.sqrt(m)
    mu = float(x @ apply(x))
    for _ in range(max_iter):
        y = sla.cho_solve_banded((cho, False), x)
        x = y / np.linalg.norm(y)
        mu_new = float(x @ apply(x))
        res = np.linalg.norm(apply(x) - mu_new * x)
        done = abs(mu_new - mu) <= tol * max(1.0, abs(mu_new)) and res <= 1e-6 * max(1.0, abs(mu_new))
        mu = mu_new
        if done:
            break
    if mu >= -tol_neg:
        raise NoNegativeEigenvalue(f"smallest eigenvalue {mu:.3e} is not negative")
    phi = np.zeros(t.size)
    phi[1:-1] = x
    if phi.sum() < 0:
        phi = -phi
    phi /= math.sqrt(float(trapezoid_weights(grid) @ phi**2))
    return mu, phi


def decay_rate(x: np.ndarray, grid: Grid, tail_fraction: float = 0.2, floor: float = 1e-13,
               min_nodes: int = 20) -> tuple[float, float]:
    """Exponential decay rates ``(gamma_plus, gamma_minus)`` of a node array.

    Least-squares slope of ``log|x(t)|`` over the outermost ``tail_fraction``
    of the nodes on each side, ignoring values at or below ``floor``.
    """
    if not 0 < tail_fraction < 0.5:
        raise ValueError("tail_fraction must lie in (0, 0.5)")
    X = np.asarray(x, dtype=float).reshape(grid.n_nodes, -1)
    norms = np.linalg.norm(X, axis=1)
    t = grid.nodes
    m = max(int(math.ceil(tail_fraction * grid.n_nodes)), 2)
    out = []
    for sl, sgn in ((slice(grid.n_nodes - m, None), -1.0), (slice(0, m), 1.0)):
        tt, nn = t[sl], norms[sl]
        keep = nn > floor
        if np.count_nonzero(keep) < min_nodes:
            raise TailUnderflow(f"only {np.count_nonzero(keep)} tail nodes above {floor:g}")
        slope = np.polyfit(tt[keep], np.log(nn[keep]), 1)[0]
        out.append(float(sgn * slope))
    return out[0], out[1]
