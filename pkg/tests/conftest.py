from __future__ import annotations

import numpy as np
import pytest

from homoclinic.continuation import branch_switch, continue_branch
from homoclinic.linop import Grid, kernel_basis
from homoclinic.model import (
    AsymptoticKind,
    HamiltonianModel,
    Section6Params,
    SechSquared,
    SymplecticStructure,
    section6_model,
)

COARSE = (20.0, 4000)
FINE = (25.0, 8000)


def sech(t):
    return 1.0 / np.cosh(t)


def analytic_kernel(grid: Grid) -> np.ndarray:
    t = grid.nodes
    return np.column_stack([sech(t), -sech(t) * np.tanh(t)])


def linear_model(A_of_t, *, T_of_t=None, name="linear") -> HamiltonianModel:
    """Linear Hamiltonian ``H = <A(t) xi, xi>/2 + lam <T xi, xi>/2`` with constant asymptotics ``A(inf)``."""
    A_inf = np.asarray(A_of_t(1e6), dtype=float)
    d = A_inf.shape[0]
    T = np.zeros((d, d)) if T_of_t is None else np.asarray(T_of_t, dtype=float)

    def mats(t, lam):
        t = np.atleast_1d(t)
        return np.stack([np.asarray(A_of_t(s), dtype=float) + lam * T for s in t])

    def grad_h(t, xi, lam):
        return np.einsum("kij,kj->ki", mats(t, lam), xi)

    def hessian(t, xi, lam):
        return mats(t, lam)

    def dl_hess(t, lam):
        return np.broadcast_to(T, (np.size(t), d, d)).copy()

    def g(t, xi, lam):
        return xi @ (A_inf + lam * T).T

    def dg(t, xi, lam):
        return np.broadcast_to(A_inf + lam * T, (np.size(t), d, d)).copy()

    return HamiltonianModel(
        structure=SymplecticStructure.standard(d // 2),
        grad_h=grad_h,
        hessian=hessian,
        dlambda_hessian=dl_hess,
        g_plus=g,
        g_minus=g,
        dxi_g_plus=dg,
        dxi_g_minus=dg,
        asymptotic_kind_plus=AsymptoticKind.CONSTANT,
        asymptotic_kind_minus=AsymptoticKind.CONSTANT,
        name=name,
    )


@pytest.fixture(scope="session")
def model():
    return section6_model()


@pytest.fixture(scope="session")
def linear6():
    return section6_model(Section6Params(A=0.0, B=0.0))


@pytest.fixture(scope="session")
def model6():
    return section6_model(Section6Params(a_profile=SechSquared(6.0)))


@pytest.fixture(scope="session")
def grid():
    return Grid(*COARSE)


@pytest.fixture(scope="session")
def fine_grid():
    return Grid(*FINE)


@pytest.fixture(scope="session")
def kernel(model, grid):
    return kernel_basis(model, -1.0, grid)


@pytest.fixture(scope="session")
def branches(model, grid, fine_grid):
    """The default branch traced from lambda0 = -1 on both grids."""
    out = {}
    for key, g in (("coarse", grid), ("fine", fine_grid)):
        kd = kernel_basis(model, -1.0, g)
        start = branch_switch(model, kd.lambda0, kd, g, 1e-2)
        out[key] = continue_branch(model, start, g, step_max=0.05, max_steps=50, lam_bounds=(-3.0, -0.1),
                                   origin_lambda0=kd.lambda0)
    return out


@pytest.fixture(scope="session")
def branch6(model6, grid):
    """Branch of the deeper well from lambda0 = -4; it passes through lambda in [-1.5, -1.05]."""
    kd = kernel_basis(model6, -4.0, grid)
    start = branch_switch(model6, kd.lambda0, kd, grid, 1e-2)
    return continue_branch(model6, start, grid, max_steps=200, lam_bounds=(-5.0, -0.1), origin_lambda0=kd.lambda0)


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion, printed after the run

ACCEPTANCE: dict[int, str] = {}


def record(number: int, title: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2} {title}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
