"""Hamiltonian systems ``J x' = grad H(t, x, lam)`` and sampled hypothesis checks.

All model callbacks are batched: ``t`` has shape ``(m,)``, ``xi`` has shape
``(m, 2N)`` and ``lam`` is a scalar.  Gradients come back as ``(m, 2N)`` and
matrices as ``(m, 2N, 2N)``.  The ``eval_*`` wrappers also accept a scalar
time with a single state vector and then return unbatched arrays.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import expit

from .errors import AsymmetryDetected, NonFiniteOutput, ValidationFailed

__all__ = [
    "AsymptoticKind",
    "SymplecticStructure",
    "HamiltonianModel",
    "Section6Params",
    "SechSquared",
    "Gaussian",
    "ZeroProfile",
    "PolynomialQ",
    "section6_model",
    "validate_section6_params",
    "eval_grad_h",
    "eval_hessian",
    "eval_dlambda_hessian",
    "eval_dlambda_grad_h",
    "HypothesisCheck",
    "ValidationReport",
    "validate_hypotheses",
    "register_model",
    "build_model",
    "MODEL_REGISTRY",
]

GradCallback = Callable[[np.ndarray, np.ndarray, float], np.ndarray]
MatrixCallback = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


class AsymptoticKind(str, enum.Enum):
    CONSTANT = "constant"
    PERIODIC = "periodic"
    AUTONOMOUS_NONLINEAR = "autonomous-nonlinear"


@dataclass(frozen=True, eq=False)
class SymplecticStructure:
    dim_half: int
    j_matrix: np.ndarray

    def __post_init__(self):
        J = np.asarray(self.j_matrix, dtype=float)
        n = 2 * self.dim_half
        if J.shape != (n, n):
            raise ValueError(f"j_matrix must be {n}x{n}, got {J.shape}")
        if not np.allclose(J.T, -J, atol=1e-14) or not np.allclose(J.T @ J, np.eye(n), atol=1e-14):
            raise ValueError("j_matrix must satisfy J^T = J^{-1} = -J")
        object.__setattr__(self, "j_matrix", J)

    @property
    def dim(self) -> int:
        return 2 * self.dim_half

    @classmethod
    def standard(cls, dim_half: int = 1) -> "SymplecticStructure":
        """Block-diagonal copies of [[0, -1], [1, 0]] acting on (u_k, v_k) pairs."""
        block = np.array([[0.0, -1.0], [1.0, 0.0]])
        return cls(dim_half, np.kron(np.eye(dim_half), block))


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    """Callbacks describing ``H`` and its asymptotic bundles ``g+`` / ``g-``.

    ``dlambda_grad_h`` is optional; when absent the lambda-derivative of the
    gradient is taken by central differences.  Instances hash by identity so
    they can key per-model caches.
    """

    structure: SymplecticStructure
    grad_h: GradCallback
    hessian: MatrixCallback
    dlambda_hessian: Callable[[np.ndarray, float], np.ndarray]
    g_plus: GradCallback
    g_minus: GradCallback
    dxi_g_plus: MatrixCallback
    dxi_g_minus: MatrixCallback
    period_plus: float | Callable[[float], float] = 2 * np.pi
    period_minus: float | Callable[[float], float] = 2 * np.pi
    asymptotic_kind_plus: AsymptoticKind = AsymptoticKind.CONSTANT
    asymptotic_kind_minus: AsymptoticKind = AsymptoticKind.CONSTANT
    dlambda_grad_h: GradCallback | None = None
    name: str = "custom"
    params: Mapping[str, object] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.structure.dim

    @property
    def J(self) -> np.ndarray:
        return self.structure.j_matrix

    def period(self, side: str, lam: float) -> float:
        p = self.period_plus if side == "+" else self.period_minus
        return float(p(lam)) if callable(p) else float(p)

    def kind(self, side: str) -> AsymptoticKind:
        return AsymptoticKind(self.asymptotic_kind_plus if side == "+" else self.asymptotic_kind_minus)

    def g(self, side: str) -> GradCallback:
        return self.g_plus if side == "+" else self.g_minus

    def dxi_g(self, side: str) -> MatrixCallback:
        return self.dxi_g_plus if side == "+" else self.dxi_g_minus

    def asymptotic_matrix(self, side: str, t: float, lam: float) -> np.ndarray:
        """``A^{+-}_lam(t) = D_xi g^{+-}(t, 0, lam)`` at a single time."""
        tt = np.array([float(t)])
        return np.asarray(self.dxi_g(side)(tt, np.zeros((1, self.dim)), lam))[0]


# ---------------------------------------------------------------------------
# evaluation wrappers


def _batch(t, xi, dim):
    t = np.asarray(t, dtype=float)
    xi = np.asarray(xi, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    if xi.ndim == 1:
        xi = np.broadcast_to(xi, (t.size, dim))
    if xi.shape != (t.size, dim):
        raise ValueError(f"state batch has shape {xi.shape}, expected {(t.size, dim)}")
    return t, xi, scalar


def _finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteOutput(f"{what} returned non-finite values")
    return arr


def eval_grad_h(model: HamiltonianModel, t, xi, lam: float) -> np.ndarray:
    t, xi, scalar = _batch(t, xi, model.dim)
    out = _finite(np.asarray(model.grad_h(t, xi, lam), dtype=float), "grad_h")
    return out[0] if scalar else out


def eval_hessian(model: HamiltonianModel, t, xi, lam: float, asym_tol: float = 1e-10) -> np.ndarray:
    t, xi, scalar = _batch(t, xi, model.dim)
    out = _finite(np.asarray(model.hessian(t, xi, lam), dtype=float), "hessian")
    asym = np.linalg.norm(out - np.swapaxes(out, -1, -2), axis=(-2, -1))
    scale = np.maximum(np.linalg.norm(out, axis=(-2, -1)), 1.0)
    worst = float(np.max(asym / scale)) if asym.size else 0.0
    if worst > asym_tol:
        raise AsymmetryDetected(f"hessian relative asymmetry {worst:.3e}")
    return out[0] if scalar else out


def eval_dlambda_hessian(model: HamiltonianModel, t, lam: float) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    out = np.asarray(model.dlambda_hessian(np.atleast_1d(t), lam), dtype=float)
    return out[0] if scalar else out


def eval_dlambda_grad_h(model: HamiltonianModel, t, xi, lam: float, step: float = 1e-6) -> np.ndarray:
    """``D_lam grad_xi H``; central differences when the model has no callback."""
    t, xi, scalar = _batch(t, xi, model.dim)
    if model.dlambda_grad_h is not None:
        out = np.asarray(model.dlambda_grad_h(t, xi, lam), dtype=float)
    else:
        d = step * max(1.0, abs(lam))
        out = (np.asarray(model.grad_h(t, xi, lam + d)) - np.asarray(model.grad_h(t, xi, lam - d))) / (2 * d)
    out = _finite(out, "dlambda_grad_h")
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# the two-dimensional example family


@dataclass(frozen=True)
class SechSquared:
    amplitude: float = 2.0

    def __call__(self, t):
        # 4 e^{-2|t|} / (1 + e^{-2|t|})^2 == sech^2(t), overflow-free
        e = np.exp(-2.0 * np.abs(np.asarray(t, dtype=float)))
        return self.amplitude * 4.0 * e / (1.0 + e) ** 2

    def describe(self):
        return {"kind": "sech2", "amplitude": self.amplitude}


@dataclass(frozen=True)
class Gaussian:
    amplitude: float = 1.0
    width: float = 1.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.exp(-((t / self.width) ** 2))

    def describe(self):
        return {"kind": "gaussian", "amplitude": self.amplitude, "width": self.width}


@dataclass(frozen=True)
class ZeroProfile:
    def __call__(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def describe(self):
        return {"kind": "zero"}


@dataclass(frozen=True)
class PolynomialQ:
    """``Q(u, v, lam) = sum c * u**i * v**j * lam**p`` over ``terms = ((i, j, p, c), ...)``."""

    terms: tuple = ()

    def value(self, u, v, lam):
        out = np.zeros_like(u)
        for i, j, p, c in self.terms:
            out = out + c * lam**p * u**i * v**j
        return out

    def grad(self, u, v, lam):
        qu = np.zeros_like(u)
        qv = np.zeros_like(u)
        for i, j, p, c in self.terms:
            k = c * lam**p
            if i:
                qu = qu + k * i * u ** (i - 1) * v**j
            if j:
                qv = qv + k * j * u**i * v ** (j - 1)
        return qu, qv

    def dlambda_grad(self, u, v, lam):
        qu = np.zeros_like(u)
        qv = np.zeros_like(u)
        for i, j, p, c in self.terms:
            if p == 0:
                continue
            k = c * p * lam ** (p - 1)
            if i:
                qu = qu + k * i * u ** (i - 1) * v**j
            if j:
                qv = qv + k * j * u**i * v ** (j - 1)
        return qu, qv

    def hessian(self, u, v, lam):
        quu = np.zeros_like(u)
        quv = np.zeros_like(u)
        qvv = np.zeros_like(u)
        for i, j, p, c in self.terms:
            k = c * lam**p
            if i >= 2:
                quu = quu + k * i * (i - 1) * u ** (i - 2) * v**j
            if i and j:
                quv = quv + k * i * j * u ** (i - 1) * v ** (j - 1)
            if j >= 2:
                qvv = qvv + k * j * (j - 1) * u**i * v ** (j - 2)
        return quu, quv, qvv

    def describe(self):
        return {"terms": [list(tm) for tm in self.terms]}


@dataclass(frozen=True)
class Section6Params:
    """Parameters of the scalar example
    ``H = (v^2 + lam u^2 + a u^2)/2 + A(2+cos t)|u|^(s+2)/((s+2)(1+e^-t))
    + B(2+cos wt) u^2 v^2 / (2(1+e^t)) + r(t) Q(u, v, lam)``.
    """

    A: float = -1.0
    B: float = 0.0
    sigma: float = 2.0
    omega: float = 1.0
    a_profile: Callable = SechSquared(2.0)
    r_profile: Callable = ZeroProfile()
    q_term: PolynomialQ = PolynomialQ()

    def describe(self) -> dict:
        return {
            "A": self.A,
            "B": self.B,
            "sigma": self.sigma,
            "omega": self.omega,
            "a_profile": self.a_profile.describe(),
            "r_profile": self.r_profile.describe(),
            "q_term": self.q_term.describe(),
        }


def validate_section6_params(p: Section6Params, t_probe: float = 60.0, fd_step: float = 1e-4) -> None:
    """Raise :class:`ValidationFailed` if the example parameters are out of range."""
    if p.sigma < 1:
        raise ValidationFailed("section6-sigma", message=f"sigma={p.sigma} < 1 (Hessian must be continuous)")
    if p.A > 0:
        raise ValidationFailed("section6-A", message=f"A={p.A} must be <= 0")
    ts = np.linspace(-t_probe, t_probe, 2001)
    a = np.asarray(p.a_profile(ts))
    if np.any(a < 0) or not np.any(a > 0):
        raise ValidationFailed("section6-a", message="a must be nonnegative and not identically zero")
    for name, prof in (("section6-a", p.a_profile), ("section6-r", p.r_profile)):
        tails = np.abs(np.asarray(prof(np.array([-t_probe, t_probe]))))
        if np.max(tails) > 1e-8:
            raise ValidationFailed(name, message=f"profile does not decay (|f(+-{t_probe})| = {tails})")
    # Q and its first/second derivatives must vanish at the origin
    d = fd_step
    q = lambda u, v: float(p.q_term.value(np.array([u]), np.array([v]), 0.7)[0])  # noqa: E731
    vals = [
        q(0, 0),
        (q(d, 0) - q(-d, 0)) / (2 * d),
        (q(0, d) - q(0, -d)) / (2 * d),
        (q(d, 0) - 2 * q(0, 0) + q(-d, 0)) / d**2,
        (q(0, d) - 2 * q(0, 0) + q(0, -d)) / d**2,
        (q(d, d) - q(d, -d) - q(-d, d) + q(-d, -d)) / (4 * d**2),
    ]
    if max(abs(v) for v in vals) > 1e-6:
        raise ValidationFailed("section6-Q", message=f"Q derivatives up to order 2 do not vanish at 0: {vals}")


def section6_model(p: Section6Params | None = None) -> HamiltonianModel:
    p = p or Section6Params()
    A, B, s, w = float(p.A), float(p.B), float(p.sigma), float(p.omega)
    a_prof, r_prof, Q = p.a_profile, p.r_profile, p.q_term

    def grad_h(t, xi, lam):
        u, v = xi[:, 0], xi[:, 1]
        cp = A * (2 + np.cos(t)) * expit(t)
        cm = B * (2 + np.cos(w * t)) * expit(-t)
        r = r_prof(t)
        qu, qv = Q.grad(u, v, lam)
        gu = (lam + a_prof(t)) * u + cp * np.abs(u) ** s * u + cm * u * v**2 + r * qu
        gv = v + cm * u**2 * v + r * qv
        return np.stack([gu, gv], axis=-1)

    def hessian(t, xi, lam):
        u, v = xi[:, 0], xi[:, 1]
        cp = A * (2 + np.cos(t)) * expit(t)
        cm = B * (2 + np.cos(w * t)) * expit(-t)
        r = r_prof(t)
        quu, quv, qvv = Q.hessian(u, v, lam)
        huu = lam + a_prof(t) + cp * (s + 1) * np.abs(u) ** s + cm * v**2 + r * quu
        huv = 2 * cm * u * v + r * quv
        hvv = 1 + cm * u**2 + r * qvv
        return np.stack([np.stack([huu, huv], -1), np.stack([huv, hvv], -1)], -2)

    def dlambda_hessian(t, lam):
        out = np.zeros((np.size(t), 2, 2))
        out[:, 0, 0] = 1.0
        return out

    def dlambda_grad_h(t, xi, lam):
        u, v = xi[:, 0], xi[:, 1]
        qu, qv = Q.dlambda_grad(u, v, lam)
        r = r_prof(t)
        return np.stack([u + r * qu, r * qv], axis=-1)

    def g_plus(t, xi, lam):
        u, v = xi[:, 0], xi[:, 1]
        c = A * (2 + np.cos(t))
        return np.stack([lam * u + c * np.abs(u) ** s * u, v], axis=-1)

    def dxi_g_plus(t, xi, lam):
        u = xi[:, 0]
        c = A * (2 + np.cos(t))
        out = np.zeros((np.size(t), 2, 2))
        out[:, 0, 0] = lam + c * (s + 1) * np.abs(u) ** s
        out[:, 1, 1] = 1.0
        return out

    def g_minus(t, xi, lam):
        u, v = xi[:, 0], xi[:, 1]
        c = B * (2 + np.cos(w * t))
        return np.stack([lam * u + c * u * v**2, v + c * u**2 * v], axis=-1)

    def dxi_g_minus(t, xi, lam):
        u, v = xi[:, 0], xi[:, 1]
        c = B * (2 + np.cos(w * t))
        out = np.empty((np.size(t), 2, 2))
        out[:, 0, 0] = lam + c * v**2
        out[:, 0, 1] = out[:, 1, 0] = 2 * c * u * v
        out[:, 1, 1] = 1 + c * u**2
        return out

    # A^{+-}_lam(t) = diag(lam, 1) regardless of A, B: both linearizations are constant
    period_minus = 2 * np.pi / abs(w) if w != 0 else 2 * np.pi
    return HamiltonianModel(
        structure=SymplecticStructure.standard(1),
        grad_h=grad_h,
        hessian=hessian,
        dlambda_hessian=dlambda_hessian,
        g_plus=g_plus,
        g_minus=g_minus,
        dxi_g_plus=dxi_g_plus,
        dxi_g_minus=dxi_g_minus,
        period_plus=2 * np.pi,
        period_minus=period_minus,
        asymptotic_kind_plus=AsymptoticKind.CONSTANT,
        asymptotic_kind_minus=AsymptoticKind.CONSTANT,
        dlambda_grad_h=dlambda_grad_h,
        name="section6",
        params=p.describe(),
    )


# ---------------------------------------------------------------------------
# registry used by the CLI

MODEL_REGISTRY: dict[str, Callable[[Mapping], HamiltonianModel]] = {}


def register_model(name: str):
    def deco(factory):
        MODEL_REGISTRY[name] = factory
        return factory

    return deco


def _profile_from_config(cfg: Mapping | None, default):
    if cfg is None:
        return default
    kind = cfg.get("kind", "zero")
    if kind == "sech2":
        return SechSquared(float(cfg.get("amplitude", 2.0)))
    if kind == "gaussian":
        return Gaussian(float(cfg.get("amplitude", 1.0)), float(cfg.get("width", 1.0)))
    if kind == "zero":
        return ZeroProfile()
    raise ValueError(f"unknown profile kind {kind!r}")


def section6_params_from_config(cfg: Mapping) -> Section6Params:
    q = cfg.get("q_term") or {}
    terms = tuple((int(i), int(j), int(pw), float(c)) for i, j, pw, c in q.get("terms", []))
    return Section6Params(
        A=float(cfg.get("A", -1.0)),
        B=float(cfg.get("B", 0.0)),
        sigma=float(cfg.get("sigma", 2.0)),
        omega=float(cfg.get("omega", 1.0)),
        a_profile=_profile_from_config(cfg.get("a_profile"), SechSquared(2.0)),
        r_profile=_profile_from_config(cfg.get("r_profile"), ZeroProfile()),
        q_term=PolynomialQ(terms),
    )


@register_model("section6")
def _section6_factory(cfg: Mapping) -> HamiltonianModel:
    params = section6_params_from_config(cfg)
    validate_section6_params(params)
    return section6_model(params)


def build_model(name: str, cfg: Mapping) -> HamiltonianModel:
    try:
        factory = MODEL_REGISTRY[name]
    except KeyError:
        raise KeyError(f"no model registered under {name!r}; known: {sorted(MODEL_REGISTRY)}") from None
    return factory(cfg)


# ---------------------------------------------------------------------------
# sampled hypothesis validation


@dataclass
class HypothesisCheck:
    tag: str
    passed: bool
    worst: float
    detail: str = ""

    def to_dict(self):
        return {"tag": self.tag, "passed": self.passed, "worst": self.worst, "detail": self.detail}


@dataclass
class ValidationReport:
    checks: list[HypothesisCheck]
    asymptotic_profile: list[tuple[float, float]]
    seed: int | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, tag: str) -> HypothesisCheck:
        for c in self.checks:
            if c.tag == tag:
                return c
        raise KeyError(tag)

    def first_failure(self) -> str | None:
        for c in self.checks:
            if not c.passed:
                return c.tag
        return None

    def to_dict(self):
        return {
            "passed": self.passed,
            "seed": self.seed,
            "checks": [c.to_dict() for c in self.checks],
            "asymptotic_profile": [{"R": R, "e": e} for R, e in self.asymptotic_profile],
        }


def _rel(diff, ref):
    return float(np.max(diff / np.maximum(ref, 1.0))) if np.size(diff) else 0.0


def validate_hypotheses(
    model: HamiltonianModel,
    t_samples: Sequence[float],
    xi_samples: Sequence[Sequence[float]],
    lam_samples: Sequence[float],
    R_list: Sequence[float],
    *,
    tol_zero: float = 1e-12,
    tol_symmetry: float = 1e-12,
    tol_fd: float = 1e-5,
    tol_h3: float = 1e-4,
    tol_asymptotic: float = 1e-10,
    tol_period: float = 1e-12,
    bound_cap: float = 1e12,
    seed: int | None = None,
    raise_on_failure: bool = True,
) -> ValidationReport:
    """Check the structural assumptions on the Hamiltonian on finite sample sets.

    The checks cover: a vanishing gradient at zero, a symmetric Hessian that
    matches finite differences, local Lipschitz continuity of the Hessian,
    bounded linearizations, and convergence to the asymptotic systems.  Each
    check is reported under its tag (``H1``, ``H2-symmetry``, ...).

    Sampling can only refute the hypotheses, never certify them.  The
    ``Hinf-2`` entry records ``e(R)``, the worst ``|D^2H - D g^{+-}|`` over
    samples with ``|t| >= R``, for every ``R`` in ``R_list``.
    """
    t = np.asarray(t_samples, dtype=float)
    xis = np.atleast_2d(np.asarray(xi_samples, dtype=float))
    lams = np.asarray(lam_samples, dtype=float)
    R_list = [float(R) for R in R_list]
    if t.size == 0 or xis.size == 0 or lams.size == 0:
        raise ValueError("sample sets must be nonempty")
    if any(R <= 0 for R in R_list) or any(b <= a for a, b in zip(R_list, R_list[1:])):
        raise ValueError("R_list must be increasing positive reals")
    n = model.dim
    if xis.shape[1] != n:
        raise ValueError(f"state samples must have {n} components")
    m = t.size
    zero = np.zeros((m, n))

    h1 = sym = fd = fd_lam = h3 = h4 = inf1 = per = 0.0
    e_plus = {R: 0.0 for R in R_list}
    e_minus = {R: 0.0 for R in R_list}

    for lam in lams:
        g0 = np.asarray(model.grad_h(t, zero, lam))
        h1 = max(h1, float(np.max(np.abs(g0))))
        for side in "+-":
            inf1 = max(inf1, float(np.max(np.abs(model.g(side)(t, zero, lam)))))

        # lambda-derivative of the Hessian at xi = 0 against central differences
        d = 1e-5 * max(1.0, abs(lam))
        T = np.asarray(model.dlambda_hessian(t, lam))
        T_fd = (np.asarray(model.hessian(t, zero, lam + d)) - np.asarray(model.hessian(t, zero, lam - d))) / (2 * d)
        fd_lam = max(fd_lam, _rel(np.linalg.norm(T - T_fd, axis=(1, 2)), np.linalg.norm(T, axis=(1, 2))))

        for xi in xis:
            X = np.broadcast_to(xi, (m, n)).copy()
            Hs = np.asarray(model.hessian(t, X, lam))
            nrm = np.linalg.norm(Hs, axis=(1, 2))
            sym = max(sym, _rel(np.linalg.norm(Hs - np.swapaxes(Hs, 1, 2), axis=(1, 2)), nrm))

            step = 1e-5 * max(1.0, float(np.linalg.norm(xi)))
            H_fd = np.empty_like(Hs)
            for k in range(n):
                e = np.zeros(n)
                e[k] = step
                H_fd[:, :, k] = (np.asarray(model.grad_h(t, X + e, lam)) - np.asarray(model.grad_h(t, X - e, lam))) / (
                    2 * step
                )
            fd = max(fd, _rel(np.linalg.norm(Hs - H_fd, axis=(1, 2)), nrm))

            # equicontinuity in xi, uniformly over the sampled t
            dx = np.full(n, 1e-6)
            Hs2 = np.asarray(model.hessian(t, X + dx, lam))
            h3 = max(h3, float(np.max(np.linalg.norm(Hs2 - Hs, axis=(1, 2)))))

            for side, sgn, store in (("+", 1.0, e_plus), ("-", -1.0, e_minus)):
                Dg = np.asarray(model.dxi_g(side)(t, X, lam))
                diff = np.linalg.norm(Hs - Dg, axis=(1, 2))
                for R in R_list:
                    mask = sgn * t >= R
                    if np.any(mask):
                        store[R] = max(store[R], float(np.max(diff[mask])))
                Tp = model.period(side, lam)
                gt = np.asarray(model.g(side)(t, X, lam))
                gtp = np.asarray(model.g(side)(t + Tp, X, lam))
                scale = np.maximum(np.linalg.norm(gt, axis=1), 1.0)
                per = max(per, float(np.max(np.linalg.norm(gtp - gt, axis=1) / scale)))

    H0 = np.asarray(model.hessian(t, zero, 0.0))
    T0 = np.asarray(model.dlambda_hessian(t, 0.0))
    if np.all(np.isfinite(H0)) and np.all(np.isfinite(T0)):
        h4 = float(max(np.max(np.linalg.norm(H0, axis=(1, 2))), np.max(np.linalg.norm(T0, axis=(1, 2)))))
    else:
        h4 = np.inf

    profile = [(R, max(e_plus[R], e_minus[R])) for R in R_list]
    es = [e for _, e in profile]
    monotone = all(b <= a * (1 + 1e-12) + 1e-300 for a, b in zip(es, es[1:]))

    checks = [
        HypothesisCheck("H1", h1 <= tol_zero, h1, "max |grad_xi H(t,0,lam)|"),
        HypothesisCheck("H2-symmetry", sym <= tol_symmetry, sym, "relative Frobenius asymmetry of D^2 H"),
        HypothesisCheck("H2-derivative", max(fd, fd_lam) <= tol_fd, max(fd, fd_lam),
                        "D^2 H and D_lam D^2 H against central differences"),
        HypothesisCheck("H3", h3 <= tol_h3, h3, "sup_t |D^2H(t, xi+d) - D^2H(t, xi)| for |d| ~ 1e-6"),
        HypothesisCheck("H4", h4 <= bound_cap, h4, "sup_t of |D^2H(t,0,0)| and |D_lam D^2H(t,0,0)|"),
        HypothesisCheck("Hinf-1", inf1 <= tol_zero, inf1, "max |g+-(t,0,lam)|"),
        HypothesisCheck("Hinf-2", monotone and es[-1] < tol_asymptotic, es[-1],
                        f"e(R) over R={R_list}; nonincreasing={monotone}"),
        HypothesisCheck("Hinf-3", per <= tol_period, per, "relative |g(t+T) - g(t)|"),
    ]
    report = ValidationReport(checks, profile, seed)
    if raise_on_failure and not report.passed:
        raise ValidationFailed(report.first_failure(), report)
    return report
