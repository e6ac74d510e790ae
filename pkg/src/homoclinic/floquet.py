"""Monodromy matrices and characteristic multipliers of ``J x' = A(t) x``.

Since ``J^{-1} = -J`` the fundamental solution solves ``Phi' = -J A(t) Phi``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .errors import EigenSolverFailure, NotHyperbolic, SymplecticDriftExceeded
from .model import HamiltonianModel, SymplecticStructure

__all__ = [
    "FloquetData",
    "monodromy",
    "symplectic_defect",
    "multipliers",
    "constant_spectrum",
    "floquet_data",
    "constant_floquet_data",
    "hyperbolic_splitting",
    "asymptotic_floquet",
]

TOL_AXIS = 1e-8


@dataclass
class FloquetData:
    monodromy: np.ndarray
    multipliers: np.ndarray
    hyperbolic: bool
    margin: float
    stable_basis: np.ndarray | None
    unstable_basis: np.ndarray | None
    period_used: float
    symplectic_defect: float = 0.0
    generator: np.ndarray | None = None  # -J A for constant systems


def _j(structure, n):
    if structure is None:
        return SymplecticStructure.standard(n // 2).j_matrix
    return structure.j_matrix


def symplectic_defect(phi: np.ndarray, J: np.ndarray) -> float:
    """Frobenius norm of ``Phi^T J Phi - J``."""
    return float(np.linalg.norm(phi.T @ J @ phi - J))


def monodromy(
    A: Callable[[float, float], np.ndarray],
    T: float,
    steps: int,
    lam: float,
    *,
    t0: float = 0.0,
    structure: SymplecticStructure | None = None,
    tol_symp: float = 1e-8,
    return_defect: bool = False,
):
    """Fundamental solution over one period by classical fixed-step RK4.

    Parameters
    ----------
    A : callable
        ``A(t, lam)`` returning a symmetric ``2N x 2N`` matrix, ``T``-periodic in ``t``.
    T : float
        Period.
    steps : int
        Number of RK4 steps (at least 100).
    lam : float
        Parameter forwarded to ``A``.
    t0 : float
        Start time; the result is ``Phi(t0 + T, t0)``.
    tol_symp : float
        Largest accepted ``|Phi^T J Phi - J|_F / max(1, |Phi|_F^2)``.

    Raises
    ------
    SymplecticDriftExceeded
        When the scaled symplectic defect exceeds ``tol_symp``.
    """
    if T <= 0:
        raise ValueError("period must be positive")
    if steps < 100:
        raise ValueError("steps must be >= 100")
    A0 = np.asarray(A(t0, lam), dtype=float)
    n = A0.shape[0]
    J = _j(structure, n)
    h = T / steps

    def f(t, phi):
        return -J @ (np.asarray(A(t, lam), dtype=float) @ phi)

    phi = np.eye(n)
    t = t0
    for i in range(steps):
        t = t0 + i * h
        k1 = f(t, phi)
        k2 = f(t + h / 2, phi + h / 2 * k1)
        k3 = f(t + h / 2, phi + h / 2 * k2)
        k4 = f(t + h, phi + h * k3)
        phi = phi + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    defect = symplectic_defect(phi, J)
    scaled = defect / max(1.0, float(np.linalg.norm(phi)) ** 2)
    if scaled > tol_symp:
        raise SymplecticDriftExceeded(scaled, tol_symp)
    return (phi, defect) if return_defect else phi


def multipliers(mono: np.ndarray) -> np.ndarray:
    """Eigenvalues of the monodromy matrix, sorted by modulus (descending)."""
    mono = np.asarray(mono, dtype=float)
    if not np.all(np.isfinite(mono)):
        raise EigenSolverFailure("monodromy contains non-finite entries")
    try:
        w = np.linalg.eigvals(mono)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverFailure(str(exc)) from exc
    order = np.lexsort((-w.imag, -np.abs(w)))
    return w[order]


def constant_spectrum(A_const: np.ndarray, structure: SymplecticStructure | None = None) -> np.ndarray:
    """Eigenvalues of ``J A`` (hyperbolic iff none lies on the imaginary axis)."""
    A_const = np.asarray(A_const, dtype=float)
    if not np.allclose(A_const, A_const.T, atol=1e-12 * max(1.0, np.abs(A_const).max())):
        raise ValueError("A_const must be symmetric")
    J = _j(structure, A_const.shape[0])
    try:
        w = np.linalg.eigvals(J @ A_const)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverFailure(str(exc)) from exc
    order = np.lexsort((-w.imag, -w.real))
    return w[order]


def _margin(mults: np.ndarray) -> float:
    return float(np.min(np.abs(np.abs(mults) - 1.0)))


def _schur_basis(M: np.ndarray, sort: str) -> tuple[np.ndarray, int]:
    _, Z, sdim = sla.schur(M, output="real", sort=sort)
    return Z[:, :sdim], sdim


def _finish(data: FloquetData, tol_axis: float) -> FloquetData:
    data.hyperbolic = data.margin > tol_axis
    if data.hyperbolic:
        try:
            data.stable_basis, data.unstable_basis = hyperbolic_splitting(data)
        except NotHyperbolic:
            data.hyperbolic = False
    return data


def floquet_data(
    A: Callable[[float, float], np.ndarray],
    T: float,
    steps: int,
    lam: float,
    *,
    t0: float = 0.0,
    structure: SymplecticStructure | None = None,
    tol_axis: float = TOL_AXIS,
    tol_symp: float = 1e-8,
) -> FloquetData:
    phi, defect = monodromy(A, T, steps, lam, t0=t0, structure=structure, tol_symp=tol_symp, return_defect=True)
    mults = multipliers(phi)
    data = FloquetData(phi, mults, False, _margin(mults), None, None, float(T), defect)
    return _finish(data, tol_axis)


def constant_floquet_data(
    A_const: np.ndarray,
    T: float,
    structure: SymplecticStructure | None = None,
    tol_axis: float = TOL_AXIS,
) -> FloquetData:
    """Closed-form Floquet data for a constant coefficient matrix.

    The monodromy is ``expm(-J A T)``; multipliers are ``exp(mu T)`` over the
    eigenvalues ``mu`` of ``-J A``.
    """
    A_const = np.asarray(A_const, dtype=float)
    J = _j(structure, A_const.shape[0])
    gen = -J @ A_const
    mu = np.linalg.eigvals(gen)
    mults = np.exp(mu * T)
    order = np.lexsort((-mults.imag, -np.abs(mults)))
    mults = mults[order]
    data = FloquetData(sla.expm(gen * T), mults, False, _margin(mults), None, None, float(T), 0.0, gen)
    return _finish(data, tol_axis)


def hyperbolic_splitting(data: FloquetData) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases of the decaying and growing invariant subspaces.

    Raises
    ------
    NotHyperbolic
        If the data is not hyperbolic or the subspaces are not both ``N``-dimensional.
    """
    if not data.hyperbolic:
        raise NotHyperbolic(margin=data.margin)
    n = data.monodromy.shape[0]
    if data.generator is not None:
        S, ds = _schur_basis(data.generator, "lhp")
        U, du = _schur_basis(data.generator, "rhp")
    else:
        S, ds = _schur_basis(data.monodromy, "iuc")
        U, du = _schur_basis(data.monodromy, "ouc")
    if ds != n // 2 or du != n // 2:
        raise NotHyperbolic(margin=data.margin)
    return S, U


def asymptotic_floquet(
    model: HamiltonianModel,
    side: str,
    lam: float,
    *,
    t0: float = 0.0,
    steps: int = 2000,
    tol_axis: float = TOL_AXIS,
) -> FloquetData:
    """Floquet data of ``J x' = A^{side}_lam(t) x`` at phase ``t0``.

    Constant asymptotic matrices take the closed-form route; periodic ones
    are integrated over one period starting at ``t0``.
    """
    T = model.period(side, lam)
    if model.kind(side).value == "constant":
        return constant_floquet_data(model.asymptotic_matrix(side, t0, lam), T, model.structure, tol_axis)
    return floquet_data(
        lambda t, l: model.asymptotic_matrix(side, t, l),
        T,
        steps,
        lam,
        t0=t0,
        structure=model.structure,
        tol_axis=tol_axis,
    )
