"""Differentiable SVAR posterior targets over the unconstrained vector θ.

Value and gradient are computed together by composing hand-derived adjoints
stage by stage: elementwise restriction transforms, the IRF-recursion
inverse, Σ = BBᵀ, and the NIW density evaluated through triangular solves.
Invalid regions (det(B) ≤ 0 with no free column, failed factorization)
return −∞ so the trajectory builder can treat them as divergence boundaries.

The centered target parameterizes (B, Ψ₁..Ψ_k, c̃, D̃, Ã_{k+1..p}); the
non-centered variant (impact restrictions only, k = 0) replaces every VAR
coefficient with a standard-normal auxiliary block Z and rescales through
Ã = Φ + L_Ω Z L_Σᵀ, which removes the funnel between Σ and the coefficients.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import get_lapack_funcs

from . import transforms
from .bayes import NIWParams
from .errors import OutsideRestrictedSet
from .transforms import CompiledSchema, RestrictionSchema
from .varmodel import ModelShape, StructuralParams, unstack_coefficients

REJECTED = -np.inf


def _chol_or_none(a: NDArray) -> NDArray | None:
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return None


_TRTRS = get_lapack_funcs(("trtrs",), (np.empty((1, 1)), np.empty((1, 1))))[0]


def _solve_lo(l_mat, b):
    """L x = b via dtrtrs; skips scipy's validation layer (hot path)."""
    x, _ = _TRTRS(l_mat, b, lower=1)
    return x


def _solve_lo_t(l_mat, b):
    """Lᵀ x = b via dtrtrs with trans."""
    x, _ = _TRTRS(l_mat, b, lower=1, trans=1)
    return x


def flatten_structural(comp: CompiledSchema, st: StructuralParams) -> NDArray:
    """Flatten structural parameters into θ-layout order (one value per name)."""
    mats = np.concatenate([st.impact[None], st.irfs]) if st.irfs.size else st.impact[None]
    vals_irf = np.empty(comp.n_irf)
    for h, (positions, rows, cols) in enumerate(comp.horizon_scatter):
        vals_irf[positions] = mats[h][rows, cols]
    return np.concatenate([
        vals_irf, st.intercept.ravel(), st.exog.ravel(), st.free_lags.ravel(),
    ])


def unflatten_structural(comp: CompiledSchema, row: NDArray) -> StructuralParams:
    """Inverse of flatten_structural; zero-restricted cells come back as 0.0."""
    shape = comp.schema.shape
    n, k, p = shape.n_vars, shape.restricted_horizon, shape.n_lags
    row = np.asarray(row, dtype=float)
    if row.shape != (comp.dim,):
        raise ValueError(f"structural row has shape {row.shape}, expected ({comp.dim},)")
    mats = np.zeros((k + 1, n, n))
    for h, (positions, rows_idx, cols_idx) in enumerate(comp.horizon_scatter):
        mats[h, rows_idx, cols_idx] = row[positions]
    ofs = comp.n_irf
    intercept = row[ofs:ofs + n]
    ofs += n
    exog = row[ofs:ofs + n * shape.n_exog].reshape(n, shape.n_exog)
    ofs += n * shape.n_exog
    free_lags = row[ofs:].reshape(p - k, n, n)
    return StructuralParams(
        intercept=intercept, exog=exog, impact=mats[0], irfs=mats[1:], free_lags=free_lags,
    )


class SvarTarget:
    """Centered target: p(θ) ∝ NIW(Σ(θ), Ã(θ)) · |B|^{−kN+1} · |J(θ)|."""

    def __init__(self, schema: RestrictionSchema, posterior: NIWParams, shape: ModelShape):
        if shape != schema.shape:
            raise ValueError("schema shape and model shape disagree")
        if posterior.n_coeffs != shape.n_coeffs or posterior.n_vars != shape.n_vars:
            raise ValueError("posterior dimensions do not match the model shape")
        self.schema = schema
        self.posterior = posterior
        self.shape = shape
        self.comp: CompiledSchema = transforms.compile_schema(schema)
        self.dimension = self.comp.dim
        n, m = shape.n_vars, shape.n_coeffs
        self._coef_logdet = -0.5 * (posterior.nu + n + 1 + m) + 0.5 * (
            -shape.restricted_horizon * n + 1
        )
        self.parameter_names = list(self.comp.names) + self.comp.coeff_names()
        self.structural_names = list(self.parameter_names)

    @property
    def preferred_metric(self) -> str:
        return "dense" if self.dimension <= 200 else "diag"

    def structural(self, theta: NDArray) -> StructuralParams:
        return transforms.forward(self.schema, theta).structural

    def log_density(self, theta: NDArray) -> float:
        return self.log_density_and_gradient(theta)[0]

    def log_density_and_gradient(self, theta: NDArray) -> tuple[float, NDArray]:
        comp = self.comp
        post = self.posterior
        shape = self.shape
        n, k, p = shape.n_vars, shape.restricted_horizon, shape.n_lags
        n_exog = shape.n_exog
        theta = np.asarray(theta, dtype=float)
        grad = np.zeros(self.dimension)

        fwd = transforms.forward_irf(comp, theta[:comp.n_irf])
        if fwd.rejected:
            return REJECTED, grad
        b = fwd.impact
        psis = fwd.psis
        intercept = theta[comp.n_irf:comp.n_irf + n]
        ofs = comp.n_irf + n
        exog = theta[ofs:ofs + n * n_exog].reshape(n, n_exog)
        ofs += n * n_exog
        free_lags = theta[ofs:].reshape(p - k, n, n)

        sigma = b @ b.T
        l_sigma = _chol_or_none(sigma)
        if l_sigma is None:
            return REJECTED, grad

        # VAR matrices for restricted horizons: Ãᵢ = Rᵢ B⁻¹
        lags = np.empty((p, n, n))
        resids = []
        for i in range(1, k + 1):
            resid = psis[i - 1].copy()
            for j in range(1, i):
                resid -= lags[j - 1] @ psis[i - j - 1]
            lags[i - 1] = np.linalg.solve(b.T, resid.T).T
            resids.append(resid)
        if p > k:
            lags[k:] = free_lags

        rows = [intercept.reshape(1, n)]
        if n_exog:
            rows.append(exog.T)
        rows.extend(lag.T for lag in lags)
        a_stack = np.concatenate(rows, axis=0)
        a_diff = a_stack - post.phi

        log_det_sigma = 2.0 * float(np.sum(np.log(np.diag(l_sigma))))
        z_s = _solve_lo(l_sigma, post.chol_s)
        c_mat = _solve_lo(l_sigma, a_diff.T).T
        w = _solve_lo(post.chol_omega, c_mat)

        value = (
            self._coef_logdet * log_det_sigma
            - 0.5 * float(np.sum(z_s * z_s))
            - 0.5 * float(np.sum(w * w))
            + fwd.log_jacobian
        )
        if not np.isfinite(value):
            return REJECTED, grad

        # ---- gradient ----
        eye = np.eye(n)
        l_inv = _solve_lo(l_sigma, eye)
        sigma_inv = l_inv.T @ l_inv
        y_mat = _solve_lo_t(l_sigma, z_s)
        t1 = _solve_lo_t(post.chol_omega, w)
        t_mat = _solve_lo_t(l_sigma, t1.T).T   # Ω⁻¹(A−Φ)Σ⁻¹
        u_mat = _solve_lo_t(l_sigma, c_mat.T).T  # (A−Φ)Σ⁻¹

        g_sigma = self._coef_logdet * sigma_inv + 0.5 * (y_mat @ y_mat.T) + 0.5 * (u_mat.T @ t_mat)
        g_sigma = 0.5 * (g_sigma + g_sigma.T)
        b_bar = 2.0 * g_sigma @ b

        a_bar = -t_mat
        c_bar = a_bar[0]
        exog_bar = a_bar[1:1 + n_exog].T if n_exog else np.zeros((n, 0))
        lag_bars = [
            a_bar[1 + n_exog + i * n: 1 + n_exog + (i + 1) * n].T.copy() for i in range(p)
        ]

        psis_bar = np.zeros((k, n, n))
        b_inv = b.T @ sigma_inv
        for i in range(k, 0, -1):
            g_i = lag_bars[i - 1]
            b_bar -= lags[i - 1].T @ g_i @ b_inv.T
            r_bar = g_i @ b_inv.T
            psis_bar[i - 1] += r_bar
            for j in range(1, i):
                lag_bars[j - 1] -= r_bar @ psis[i - j - 1].T
                psis_bar[i - j - 1] -= lags[j - 1].T @ r_bar

        theta_irf = theta[:comp.n_irf]
        grad[:comp.n_irf] = transforms.irf_vjp(comp, theta_irf, fwd, b_bar, psis_bar)
        grad[:comp.n_irf] += transforms.log_jacobian_grad(comp, theta_irf)
        free_grad = [c_bar, exog_bar.ravel()]
        free_grad.extend(lag_bars[i].ravel() for i in range(k, p))
        grad[comp.n_irf:] = np.concatenate(free_grad)
        return value, grad

    def structural_draws(self, draws: NDArray) -> NDArray:
        """Map θ draws (S×dim) to flattened structural parameters (S×dim)."""
        out = np.empty_like(draws)
        for s in range(draws.shape[0]):
            st = transforms.forward(self.schema, draws[s]).structural
            out[s] = flatten_structural(self.comp, st)
        return out


class NonCenteredSvarTarget:
    """Non-centered target for impact-only restrictions (k = 0).

    θ = [impact entries | vec(Z)]; the NIW coefficient part reduces to the
    standard-normal kernel of Z, leaving only the inverse-Wishart factor to
    depend on B.
    """

    def __init__(self, schema: RestrictionSchema, posterior: NIWParams, shape: ModelShape):
        if shape.restricted_horizon != 0:
            raise ValueError("non-centered parameterization requires k = 0")
        if shape != schema.shape:
            raise ValueError("schema shape and model shape disagree")
        if posterior.n_coeffs != shape.n_coeffs or posterior.n_vars != shape.n_vars:
            raise ValueError("posterior dimensions do not match the model shape")
        self.schema = schema
        self.posterior = posterior
        self.shape = shape
        self.comp = transforms.compile_schema(schema)
        n, m = shape.n_vars, shape.n_coeffs
        self.dimension = self.comp.n_irf + m * n
        self._coef_logdet = -0.5 * (posterior.nu + n + 1) + 0.5
        self.parameter_names = list(self.comp.names) + [
            f"Z.{r + 1}.{c + 1}" for r in range(m) for c in range(n)
        ]
        self.structural_names = list(self.comp.names) + self.comp.coeff_names()

    @property
    def preferred_metric(self) -> str:
        return "diag"

    def log_density(self, theta: NDArray) -> float:
        return self.log_density_and_gradient(theta)[0]

    def log_density_and_gradient(self, theta: NDArray) -> tuple[float, NDArray]:
        comp = self.comp
        post = self.posterior
        n = self.shape.n_vars
        m = self.shape.n_coeffs
        theta = np.asarray(theta, dtype=float)
        grad = np.zeros(self.dimension)

        fwd = transforms.forward_irf(comp, theta[:comp.n_irf])
        if fwd.rejected:
            return REJECTED, grad
        b = fwd.impact
        z = theta[comp.n_irf:].reshape(m, n)

        sigma = b @ b.T
        l_sigma = _chol_or_none(sigma)
        if l_sigma is None:
            return REJECTED, grad

        log_det_sigma = 2.0 * float(np.sum(np.log(np.diag(l_sigma))))
        z_s = _solve_lo(l_sigma, post.chol_s)
        value = (
            self._coef_logdet * log_det_sigma
            - 0.5 * float(np.sum(z_s * z_s))
            - 0.5 * float(np.sum(z * z))
            + fwd.log_jacobian
        )
        if not np.isfinite(value):
            return REJECTED, grad

        eye = np.eye(n)
        l_inv = _solve_lo(l_sigma, eye)
        sigma_inv = l_inv.T @ l_inv
        y_mat = _solve_lo_t(l_sigma, z_s)
        g_sigma = self._coef_logdet * sigma_inv + 0.5 * (y_mat @ y_mat.T)
        g_sigma = 0.5 * (g_sigma + g_sigma.T)
        b_bar = 2.0 * g_sigma @ b

        theta_irf = theta[:comp.n_irf]
        grad[:comp.n_irf] = transforms.irf_vjp(
            comp, theta_irf, fwd, b_bar, np.zeros((0, n, n))
        )
        grad[:comp.n_irf] += transforms.log_jacobian_grad(comp, theta_irf)
        grad[comp.n_irf:] = -z.ravel()
        return value, grad

    def structural(self, theta: NDArray) -> StructuralParams:
        fwd = transforms.forward_irf(self.comp, np.asarray(theta[:self.comp.n_irf], dtype=float))
        if fwd.rejected:
            raise OutsideRestrictedSet("det(B) ≤ 0 with every column restricted")
        b = fwd.impact
        m, n = self.shape.n_coeffs, self.shape.n_vars
        z = np.asarray(theta[self.comp.n_irf:], dtype=float).reshape(m, n)
        l_sigma = np.linalg.cholesky(b @ b.T)
        a_stack = self.posterior.phi + self.posterior.chol_omega @ z @ l_sigma.T
        intercept, exog, lags = unstack_coefficients(a_stack, self.shape)
        return StructuralParams(
            intercept=intercept, exog=exog, impact=b,
            irfs=np.zeros((0, n, n)), free_lags=lags,
        )

    def structural_draws(self, draws: NDArray) -> NDArray:
        out = np.empty((draws.shape[0], self.comp.dim))
        for s in range(draws.shape[0]):
            out[s] = flatten_structural(self.comp, self.structural(draws[s]))
        return out


def make_target(schema: RestrictionSchema, posterior: NIWParams, shape: ModelShape,
                parameterization: str = "auto"):
    """Pick the target parameterization: non-centered iff k = 0 (when auto)."""
    if parameterization == "auto":
        parameterization = "noncentered" if shape.restricted_horizon == 0 else "centered"
    if parameterization == "noncentered":
        return NonCenteredSvarTarget(schema, posterior, shape)
    if parameterization == "centered":
        return SvarTarget(schema, posterior, shape)
    raise ValueError(f"unknown parameterization {parameterization!r}")
