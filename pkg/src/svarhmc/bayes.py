"""Normal–inverse-Wishart prior/posterior machinery and fast density evaluation.

The conjugate update keeps the posterior in NIW form; the unnormalized log
density is evaluated without ever forming Σ⊗Ω, using the cached Cholesky
factors of Ω and S and two triangular solves per call. All values are
unnormalized: only differences matter for Metropolis-type acceptance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from . import linalg
from .errors import DegeneratePosterior, NotPositiveDefinite, SingularImpact
from .varmodel import ModelShape, StructuralParams, stack_coefficients, structural_to_reduced


@dataclass(frozen=True)
class NIWParams:
    """NIW parameters (ν, Ω, Φ, S) with cached Cholesky factors.

    Serves as both prior and posterior. Immutable after construction; the
    cached factors are computed once and shared across chains.
    """

    nu: float
    omega: NDArray  # (m, m) SPD
    phi: NDArray    # (m, N)
    s: NDArray      # (N, N) SPD
    chol_omega: NDArray = field(init=False, repr=False)
    chol_s: NDArray = field(init=False, repr=False)

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        s = np.asarray(self.s, dtype=float)
        n = s.shape[0]
        if self.nu <= n - 1:
            raise ValueError(f"nu must exceed N-1 = {n - 1}, got {self.nu}")
        if phi.shape != (omega.shape[0], n):
            raise ValueError(f"phi has shape {phi.shape}, expected {(omega.shape[0], n)}")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "chol_omega", linalg.cholesky(omega))
        object.__setattr__(self, "chol_s", linalg.cholesky(s))

    @property
    def n_vars(self) -> int:
        return self.s.shape[0]

    @property
    def n_coeffs(self) -> int:
        return self.omega.shape[0]


@dataclass(frozen=True)
class FlatPrior:
    """Improper prior ∝ |Σ|^{−(N+1)/2} with flat coefficients (Ω₀⁻¹ = 0)."""

    n_vars: int
    n_coeffs: int


@dataclass(frozen=True)
class DataMatrices:
    """Stacked regression data: Y (T×N) observations, X (T×m) regressors.

    Column layout of X is fixed as [intercept | exog | lag 1 | … | lag p].
    """

    y: NDArray
    x: NDArray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if y.shape[0] != x.shape[0]:
            raise ValueError("Y and X must have equal row counts")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def n_obs(self) -> int:
        return self.y.shape[0]


def build_data_matrices(data: NDArray, shape: ModelShape, exog: NDArray | None = None) -> DataMatrices:
    """Lay out (Y, X) from a raw T₀×N series, losing the first p rows to lags."""
    data = np.asarray(data, dtype=float)
    t0, n = data.shape
    p = shape.n_lags
    if n != shape.n_vars:
        raise ValueError(f"data has {n} columns, shape expects {shape.n_vars}")
    if t0 <= p:
        raise ValueError("not enough observations for the requested lag length")
    t = t0 - p
    y = data[p:]
    cols = [np.ones((t, 1))]
    if shape.n_exog:
        if exog is None or exog.shape != (t0, shape.n_exog):
            raise ValueError("exogenous matrix must be T×n_exog aligned with data")
        cols.append(np.asarray(exog, dtype=float)[p:])
    for lag in range(1, p + 1):
        cols.append(data[p - lag:t0 - lag])
    return DataMatrices(y=y, x=np.concatenate(cols, axis=1))


def posterior_update(prior: NIWParams | FlatPrior, data: DataMatrices) -> NIWParams:
    """Conjugate NIW update.

    ν̃ = ν₀+T; Ω̃ = (X'X+Ω₀⁻¹)⁻¹; Φ̃ = Ω̃(X'Y+Ω₀⁻¹Φ₀);
    S̃ = Y'Y+S₀+Φ₀'Ω₀⁻¹Φ₀−Φ̃'Ω̃⁻¹Φ̃. The flat prior is the Ω₀⁻¹ → 0,
    ν₀ = 0, S₀ = 0 limit, which lands on OLS quantities.
    """
    x, y = data.x, data.y
    m = x.shape[1]
    n = y.shape[1]
    if isinstance(prior, FlatPrior):
        if prior.n_coeffs != m or prior.n_vars != n:
            raise ValueError("flat prior dimensions do not match data")
        nu0 = 0.0
        omega0_inv = np.zeros((m, m))
        s0 = np.zeros((n, n))
        phi0 = np.zeros((m, n))
        if data.n_obs == 0:
            raise DegeneratePosterior("flat prior requires data")
    else:
        if prior.n_coeffs != m or prior.n_vars != n:
            raise ValueError("prior dimensions do not match data")
        if data.n_obs == 0:
            return prior
        nu0 = prior.nu
        omega0_inv = _spd_inverse(prior.omega)
        s0 = prior.s
        phi0 = prior.phi

    xtx = x.T @ x
    precision = xtx + omega0_inv
    try:
        l_prec = linalg.cholesky(0.5 * (precision + precision.T))
    except NotPositiveDefinite as exc:
        raise DegeneratePosterior("X'X + Ω₀⁻¹ is not positive definite") from exc
    rhs = x.T @ y + omega0_inv @ phi0
    phi_post = linalg.solve_upper(l_prec.T, linalg.solve_lower(l_prec, rhs))
    omega_post = linalg.solve_upper(l_prec.T, linalg.solve_lower(l_prec, np.eye(m)))
    omega_post = 0.5 * (omega_post + omega_post.T)
    # Φ̃'Ω̃⁻¹Φ̃ = Φ̃'(X'Y + Ω₀⁻¹Φ₀): avoids a second explicit inverse.
    s_post = y.T @ y + s0 + phi0.T @ omega0_inv @ phi0 - phi_post.T @ rhs
    s_post = 0.5 * (s_post + s_post.T)
    nu_post = nu0 + data.n_obs
    try:
        return NIWParams(nu=nu_post, omega=omega_post, phi=phi_post, s=s_post)
    except (NotPositiveDefinite, ValueError) as exc:
        raise DegeneratePosterior(str(exc)) from exc


def _spd_inverse(a: NDArray) -> NDArray:
    l_mat = linalg.cholesky(a)
    inv = linalg.solve_upper(l_mat.T, linalg.solve_lower(l_mat, np.eye(a.shape[0])))
    return 0.5 * (inv + inv.T)


def niw_log_density(params: NIWParams, sigma_chol: NDArray, a_coeffs: NDArray) -> float:
    """Unnormalized NIW log density evaluated from Cholesky factors.

    −(ν+N+1)/2·log|Σ| − ½ tr(SΣ⁻¹) − m/2·log|Σ| − ½ vec(Ã−Φ)'(Σ⊗Ω)⁻¹vec(Ã−Φ),
    with the trace term as ‖Z‖² for L_Σ Z = L_S and the quadratic form as
    ‖W‖² for C L_Σ' = Ã−Φ, L_Ω W = C.
    """
    n = params.n_vars
    m = params.n_coeffs
    log_det_sigma = linalg.log_det_from_cholesky(sigma_chol)
    z = linalg.solve_lower(sigma_chol, params.chol_s)
    c = linalg.solve_right_upper(a_coeffs - params.phi, sigma_chol)
    w = linalg.solve_lower(params.chol_omega, c)
    return (
        -0.5 * (params.nu + n + 1 + m) * log_det_sigma
        - 0.5 * float(np.sum(z * z))
        - 0.5 * float(np.sum(w * w))
    )


def structural_log_posterior(s: StructuralParams, post: NIWParams, shape: ModelShape) -> float:
    """Unnormalized log posterior of Π_k: NIW(Σ(B), Ã(Π_k)) + (−kN+1)·log|det B|.

    log|det B| is recovered as ½·log|Σ| from the Cholesky factor of B·Bᵀ,
    so no separate determinant evaluation is needed.
    """
    b = s.impact
    sign, _ = np.linalg.slogdet(b)
    if sign <= 0.0:
        raise SingularImpact("det(B) must be positive")
    sigma = b @ b.T
    sigma_chol = linalg.cholesky(sigma)
    a_coeffs = stack_coefficients(structural_to_reduced(s))
    k, n = shape.restricted_horizon, shape.n_vars
    log_det_b = 0.5 * linalg.log_det_from_cholesky(sigma_chol)
    return niw_log_density(post, sigma_chol, a_coeffs) + (-k * n + 1) * log_det_b


def noncentered_to_coeffs(z: NDArray, post: NIWParams, sigma_chol: NDArray) -> NDArray:
    """Map the auxiliary standard-normal block to coefficients: Φ + L_Ω Z L_Σᵀ."""
    return post.phi + post.chol_omega @ z @ sigma_chol.T


def noncentered_log_kernel(z: NDArray) -> float:
    """Standard-normal log kernel of the auxiliary block: −½ Σ zᵢⱼ²."""
    return -0.5 * float(np.sum(z * z))
