"""Set-identified mean-decomposition demo target.

Data are n observations from N(μ, 1) with μ = Σᵢ μᵢ; the individual μᵢ are
unidentified for k ≥ 2 and bounded in [−10, 10] through the logit-interval
transform, giving a posterior that is flat along the (k−1)-dimensional
observationally equivalent manifold. For k = 2 the marginal of each μᵢ has
the closed form Φ(√n(μᵢ+10−x̄)) − Φ(√n(μᵢ−10−x̄)).
"""

from __future__ import annotations

import numpy as np
from numba import njit
from numpy.typing import NDArray
from scipy.special import expit, ndtr

BOUND = 10.0


@njit(cache=True)
def _logp_grad_jit(theta, grad, x_bar, n_obs):
    """In-place gradient of the bounded mean-decomposition posterior."""
    dim = theta.shape[0]
    log2b = np.log(2.0 * BOUND)
    resid = -x_bar
    logp = 0.0
    for j in range(dim):
        t = theta[j]
        sig = 1.0 / (1.0 + np.exp(-t))
        resid += -BOUND + 2.0 * BOUND * sig
        # log(2B·σ(1−σ)) = log 2B − softplus(t) − softplus(−t)
        at = abs(t)
        logp += log2b - (at + 2.0 * np.log1p(np.exp(-at)))
        grad[j] = 1.0 - 2.0 * sig
    for j in range(dim):
        t = theta[j]
        sig = 1.0 / (1.0 + np.exp(-t))
        grad[j] += -n_obs * resid * (2.0 * BOUND * sig * (1.0 - sig))
    return logp - 0.5 * n_obs * resid * resid


@njit(cache=True)
def _leapfrog_batch_diag(theta0, rho0, grad0, eps, n, inv_metric, h0, max_dh,
                         x_bar, n_obs):
    dim = theta0.shape[0]
    thetas = np.empty((n, dim))
    rhos = np.empty((n, dim))
    grads = np.empty((n, dim))
    logps = np.empty(n)
    dhs = np.empty(n)
    theta = theta0.copy()
    rho = rho0.copy()
    grad = grad0.copy()
    n_done = 0
    diverged = False
    for i in range(n):
        rho = rho + 0.5 * eps * grad
        theta = theta + eps * (inv_metric * rho)
        logp = _logp_grad_jit(theta, grad, x_bar, n_obs)
        rho = rho + 0.5 * eps * grad
        ke = 0.0
        for j in range(dim):
            ke += 0.5 * rho[j] * inv_metric[j] * rho[j]
        dh = (-logp + ke) - h0
        thetas[i] = theta
        rhos[i] = rho
        grads[i] = grad
        logps[i] = logp
        dhs[i] = dh
        n_done = i + 1
        if not np.isfinite(dh) or dh > max_dh:
            diverged = True
            break
    return thetas, rhos, grads, logps, dhs, n_done, diverged


@njit(cache=True)
def _leapfrog_batch_dense(theta0, rho0, grad0, eps, n, inv_metric, h0, max_dh,
                          x_bar, n_obs):
    dim = theta0.shape[0]
    thetas = np.empty((n, dim))
    rhos = np.empty((n, dim))
    grads = np.empty((n, dim))
    logps = np.empty(n)
    dhs = np.empty(n)
    theta = theta0.copy()
    rho = rho0.copy()
    grad = grad0.copy()
    n_done = 0
    diverged = False
    for i in range(n):
        rho = rho + 0.5 * eps * grad
        vel = inv_metric @ rho
        theta = theta + eps * vel
        logp = _logp_grad_jit(theta, grad, x_bar, n_obs)
        rho = rho + 0.5 * eps * grad
        vel = inv_metric @ rho
        ke = 0.5 * float(rho @ vel)
        dh = (-logp + ke) - h0
        thetas[i] = theta
        rhos[i] = rho
        grads[i] = grad
        logps[i] = logp
        dhs[i] = dh
        n_done = i + 1
        if not np.isfinite(dh) or dh > max_dh:
            diverged = True
            break
    return thetas, rhos, grads, logps, dhs, n_done, diverged


class UnidentifiedNormalTarget:
    """Posterior over θ with μᵢ = −10 + 20·σ(θᵢ) and N(Σμᵢ, 1/n) likelihood."""

    def __init__(self, n_components: int, x_bar: float, n_obs: int):
        self.dimension = n_components
        self.x_bar = float(x_bar)
        self.n_obs = int(n_obs)
        self.parameter_names = [f"mu{i + 1}" for i in range(n_components)]

    def mu(self, theta: NDArray) -> NDArray:
        return -BOUND + 2.0 * BOUND * expit(theta)

    def log_density_and_gradient(self, theta: NDArray) -> tuple[float, NDArray]:
        sig = expit(theta)
        mu = -BOUND + 2.0 * BOUND * sig
        resid = float(np.sum(mu)) - self.x_bar
        dmu = 2.0 * BOUND * sig * (1.0 - sig)
        # flat prior on the box + interval-transform Jacobian, in softplus
        # form so extreme θ cannot produce log(0)
        log_jac = float(
            theta.size * np.log(2.0 * BOUND)
            - np.sum(np.logaddexp(0.0, theta) + np.logaddexp(0.0, -theta))
        )
        value = -0.5 * self.n_obs * resid * resid + log_jac
        grad = -self.n_obs * resid * dmu + (1.0 - 2.0 * sig)
        return value, grad

    def log_density(self, theta: NDArray) -> float:
        return self.log_density_and_gradient(theta)[0]

    def leapfrog_batch(self, theta, rho, grad, eps, n, inv_metric, h0, max_dh):
        """Compiled stepping kernel consumed by the trajectory builder."""
        inv = np.ascontiguousarray(inv_metric)
        fn = _leapfrog_batch_dense if inv.ndim == 2 else _leapfrog_batch_diag
        return fn(np.ascontiguousarray(theta), np.ascontiguousarray(rho),
                  np.ascontiguousarray(grad), eps, n, inv, h0, max_dh,
                  self.x_bar, float(self.n_obs))


def simulate_observations(n_components: int, n_obs: int, rng: np.random.Generator) -> NDArray:
    """n_obs draws from N(mean, 1) with mean 2 for k = 2, else 10."""
    mean = 2.0 if n_components == 2 else 10.0
    return mean + rng.standard_normal(n_obs)


def analytic_marginal(grid: NDArray, n_components: int, x_bar: float, n_obs: int) -> NDArray:
    """Normalized marginal density of one μᵢ on the grid.

    Exact for k = 2; for larger k the sum of the remaining components is
    treated as Gaussian (their box variance), which is numerically flat over
    the support.
    """
    grid = np.asarray(grid, dtype=float)
    if n_components == 2:
        root_n = np.sqrt(n_obs)
        dens = ndtr(root_n * (grid + BOUND - x_bar)) - ndtr(root_n * (grid - BOUND - x_bar))
    else:
        rest_var = (n_components - 1) * (2.0 * BOUND) ** 2 / 12.0 + 1.0 / n_obs
        dens = np.exp(-0.5 * (x_bar - grid) ** 2 / rest_var)
    dens = np.where((grid >= -BOUND) & (grid <= BOUND), dens, 0.0)
    total = np.trapezoid(dens, grid)
    return dens / total
