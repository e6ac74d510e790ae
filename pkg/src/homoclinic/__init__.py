"""Numerical bifurcation of homoclinic solutions of parameter-dependent
Hamiltonian systems ``J x' = grad H(t, x, lam)``.

The pipeline checks the structural hypotheses on samples, locates
bifurcation points of the trivial branch, certifies the transversality and
parity conditions on the kernel, and traces the bifurcating branch.
"""

from __future__ import annotations

from .bifurcation import AdmissibilityReport, BifurcationReport, admissibility, bifurcation_report, transversality
from .continuation import Branch, BranchPoint, branch_switch, continue_branch, newton_correct, verify_decay
from .floquet import FloquetData, constant_spectrum, floquet_data, monodromy
from .linop import Grid, KernelData, assemble, kernel_basis, rayleigh_lambda0, scan_bifurcations, sigma_min
from .model import HamiltonianModel, Section6Params, build_model, register_model, section6_model, validate_hypotheses

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityReport",
    "BifurcationReport",
    "Branch",
    "BranchPoint",
    "FloquetData",
    "Grid",
    "HamiltonianModel",
    "KernelData",
    "Section6Params",
    "admissibility",
    "assemble",
    "bifurcation_report",
    "branch_switch",
    "build_model",
    "constant_spectrum",
    "continue_branch",
    "floquet_data",
    "kernel_basis",
    "monodromy",
    "newton_correct",
    "rayleigh_lambda0",
    "register_model",
    "scan_bifurcations",
    "section6_model",
    "sigma_min",
    "transversality",
    "validate_hypotheses",
    "verify_decay",
]
