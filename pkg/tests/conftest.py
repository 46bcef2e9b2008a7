import numpy as np
import pytest

from svarhmc.bayes import FlatPrior, NIWParams, build_data_matrices, posterior_update
from svarhmc.transforms import Kind, Restriction, RestrictionSchema
from svarhmc.varmodel import ModelShape, ReducedFormParams


def random_spd(rng, n, scale=1.0):
    a = rng.standard_normal((n, n))
    return scale * (a @ a.T + n * np.eye(n))


def simulate_var(rng, intercept, lags, impact, n_obs, burn_in=200):
    """Simulate the B-form VAR with standard-normal structural shocks."""
    n = len(intercept)
    p = lags.shape[0]
    total = n_obs + burn_in + p
    y = np.zeros((total, n))
    for t in range(p, total):
        acc = intercept.copy()
        for i in range(p):
            acc += lags[i] @ y[t - 1 - i]
        y[t] = acc + impact @ rng.standard_normal(n)
    return y[p + burn_in:]


def supply_demand_schema(n_lags=1, k=0):
    """§-style two-variable sign pattern: supply (+,−), demand (+,+)."""
    shape = ModelShape(n_vars=2, n_lags=n_lags, restricted_horizon=k)
    entries = (
        Restriction(0, 0, 0, Kind.POSITIVE),
        Restriction(0, 1, 0, Kind.NEGATIVE),
        Restriction(0, 0, 1, Kind.POSITIVE),
        Restriction(0, 1, 1, Kind.POSITIVE),
    )
    return RestrictionSchema(shape=shape, entries=entries,
                             var_names=("q", "p"), shock_names=("supply", "demand"))


SUPPLY_DEMAND_TRUE = {
    "intercept": np.zeros(2),
    "lags": np.array([[[0.5, 0.1], [0.1, 0.4]]]),
    "impact": np.array([[1.0, 0.5], [-0.8, 0.7]]),
}


@pytest.fixture(scope="session")
def sd_posterior():
    """Flat-prior posterior from a simulated supply/demand dataset (T=200)."""
    rng = np.random.default_rng(2024)
    y = simulate_var(rng, SUPPLY_DEMAND_TRUE["intercept"], SUPPLY_DEMAND_TRUE["lags"],
                     SUPPLY_DEMAND_TRUE["impact"], n_obs=200)
    shape = ModelShape(n_vars=2, n_lags=1, restricted_horizon=0)
    data = build_data_matrices(y, shape)
    post = posterior_update(FlatPrior(n_vars=2, n_coeffs=shape.n_coeffs), data)
    return post, shape, y


def random_niw(rng, n, m, nu=None):
    return NIWParams(
        nu=nu if nu is not None else n + 3 + rng.integers(0, 4),
        omega=random_spd(rng, m, 0.5),
        phi=rng.standard_normal((m, n)),
        s=random_spd(rng, n),
    )


def random_reduced_form(rng, n, p, spectral_radius=0.6):
    lags = rng.standard_normal((p, n, n)) * 0.3
    from svarhmc.varmodel import companion_matrix
    comp = companion_matrix(lags)
    rad = np.max(np.abs(np.linalg.eigvals(comp)))
    if rad >= spectral_radius:
        lags *= spectral_radius / (rad + 1e-9)
    return ReducedFormParams(
        intercept=rng.standard_normal(n), exog=np.zeros((n, 0)),
        lags=lags, sigma=random_spd(rng, n),
    )
