"""SVAR/VAR structure: IRF recursion, structural↔reduced-form maps, Jacobians.

The structural parameterization keeps the impact matrix B and the first k
impulse-response matrices as coordinates; lag matrices beyond horizon k stay
in VAR form. The maps here convert between that mixed parameterization and
the reduced form, and expose the two closed-form log-Jacobian terms of the
change of variables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import SingularImpact

DET_GUARD = 1e-12


@dataclass(frozen=True)
class ModelShape:
    """Dimensions of the model: N variables, p lags, k restricted horizons."""

    n_vars: int
    n_lags: int
    restricted_horizon: int = 0
    n_exog: int = 0

    def __post_init__(self):
        if self.n_vars < 1 or self.n_lags < 1:
            raise ValueError("n_vars and n_lags must be positive")
        if not 0 <= self.restricted_horizon <= self.n_lags:
            raise ValueError("restricted horizon must lie in [0, n_lags]")
        if self.n_exog < 0:
            raise ValueError("n_exog must be nonnegative")

    @property
    def n_coeffs(self) -> int:
        """Rows of the stacked coefficient matrix: intercept + exog + lags."""
        return 1 + self.n_exog + self.n_vars * self.n_lags


@dataclass(frozen=True)
class ReducedFormParams:
    """B-form VAR: intercept, exogenous coefficients, lag matrices, Σ."""

    intercept: NDArray  # (N,)
    exog: NDArray       # (N, n_exog)
    lags: NDArray       # (p, N, N)
    sigma: NDArray      # (N, N)


@dataclass(frozen=True)
class StructuralParams:
    """Mixed structural coordinates: (c̃, D̃, B, Ψ₁..Ψ_k, Ã_{k+1..p})."""

    intercept: NDArray  # (N,)
    exog: NDArray       # (N, n_exog)
    impact: NDArray     # (N, N), det > 0
    irfs: NDArray       # (k, N, N)
    free_lags: NDArray  # (p - k, N, N)

    @property
    def n_vars(self) -> int:
        return self.impact.shape[0]

    @property
    def restricted_horizon(self) -> int:
        return self.irfs.shape[0]


def _checked_impact(b: NDArray) -> tuple[float, float]:
    """Sign and log|det| of B, raising when B is singular within guard."""
    sign, logabs = np.linalg.slogdet(b)
    scale = max(float(np.max(np.abs(b))), 1.0)
    if sign == 0.0 or np.exp(logabs) <= DET_GUARD * scale ** b.shape[0]:
        raise SingularImpact("impact matrix is singular within guard")
    return float(sign), float(logabs)


def irf(params: ReducedFormParams, impact: NDArray, max_horizon: int) -> NDArray:
    """Impulse responses Ψ₀..Ψ_H: Ψ₀ = impact, Ψᵢ = Σ_{j≤min(i,p)} Ãⱼ Ψ_{i−j}."""
    if max_horizon < 0:
        raise ValueError("max_horizon must be nonnegative")
    n = impact.shape[0]
    p = params.lags.shape[0]
    psis = np.empty((max_horizon + 1, n, n))
    psis[0] = impact
    for i in range(1, max_horizon + 1):
        acc = np.zeros((n, n))
        for j in range(1, min(i, p) + 1):
            acc += params.lags[j - 1] @ psis[i - j]
        psis[i] = acc
    return psis


def structural_to_reduced(s: StructuralParams) -> ReducedFormParams:
    """Invert the IRF recursion: Ãᵢ = (Ψᵢ − Σ_{j<i} Ãⱼ Ψ_{i−j}) Ψ₀⁻¹ for i ≤ k."""
    _checked_impact(s.impact)
    k = s.restricted_horizon
    n = s.n_vars
    p = k + s.free_lags.shape[0]
    lags = np.empty((p, n, n))
    for i in range(1, k + 1):
        resid = s.irfs[i - 1].copy()
        for j in range(1, i):
            resid -= lags[j - 1] @ s.irfs[i - j - 1]
        # Ã_i B = resid  ⇔  Bᵀ Ãᵢᵀ = residᵀ
        lags[i - 1] = np.linalg.solve(s.impact.T, resid.T).T
    if p > k:
        lags[k:] = s.free_lags
    sigma = s.impact @ s.impact.T
    return ReducedFormParams(
        intercept=np.asarray(s.intercept, dtype=float),
        exog=np.asarray(s.exog, dtype=float),
        lags=lags,
        sigma=sigma,
    )


def reduced_to_structural(rf: ReducedFormParams, impact: NDArray, k: int) -> StructuralParams:
    """Repackage a reduced form plus impact matrix as structural coordinates."""
    psis = irf(rf, impact, k)
    return StructuralParams(
        intercept=rf.intercept,
        exog=rf.exog,
        impact=np.asarray(impact, dtype=float),
        irfs=psis[1:],
        free_lags=rf.lags[k:],
    )


def log_jacobian_irf_map(b: NDArray, shape: ModelShape) -> float:
    """Log-Jacobian of (Ψ₁..Ψ_k) → (Ã₁..Ã_k): −k·N·log|det B|."""
    _, logabs = _checked_impact(b)
    return -shape.restricted_horizon * shape.n_vars * logabs


def log_jacobian_b_to_sigma(b: NDArray) -> float:
    """Log-Jacobian of B → Σ through the LQ/Cholesky route: N·log 2 + log|det B|."""
    _, logabs = _checked_impact(b)
    return b.shape[0] * np.log(2.0) + logabs


def companion_matrix(lags: NDArray) -> NDArray:
    """Companion form of the lag polynomial, (N·p) × (N·p)."""
    p, n, _ = lags.shape
    comp = np.zeros((n * p, n * p))
    comp[:n] = np.concatenate(list(lags), axis=1)
    if p > 1:
        comp[n:, :-n] = np.eye(n * (p - 1))
    return comp


def is_stable(params: ReducedFormParams) -> bool:
    """True iff the companion-matrix spectral radius is below one."""
    eigvals = np.linalg.eigvals(companion_matrix(params.lags))
    return bool(np.max(np.abs(eigvals)) < 1.0)


def stack_coefficients(rf: ReducedFormParams) -> NDArray:
    """Stack (c̃, D̃, Ã₁..Ã_p) into the m×N regression coefficient matrix.

    Row layout matches the design-matrix columns [1 | exog | lag 1 | … | lag p]:
    y_tᵀ = x_tᵀ A + u_tᵀ with A the matrix returned here.
    """
    n = rf.intercept.shape[0]
    rows = [rf.intercept.reshape(1, n)]
    if rf.exog.size:
        rows.append(rf.exog.T)
    for lag in rf.lags:
        rows.append(lag.T)
    return np.concatenate(rows, axis=0)


def unstack_coefficients(a: NDArray, shape: ModelShape) -> tuple[NDArray, NDArray, NDArray]:
    """Inverse of stack_coefficients: (intercept, exog, lags)."""
    n, p, n_exog = shape.n_vars, shape.n_lags, shape.n_exog
    if a.shape != (shape.n_coeffs, n):
        raise ValueError(f"coefficient matrix has shape {a.shape}, expected {(shape.n_coeffs, n)}")
    intercept = a[0]
    exog = a[1:1 + n_exog].T if n_exog else np.zeros((n, 0))
    lags = np.empty((p, n, n))
    for i in range(p):
        start = 1 + n_exog + i * n
        lags[i] = a[start:start + n].T
    return intercept, exog, lags
