"""Convergence and efficiency statistics: split-R̂, bulk/tail ESS, mESS, ACF.

Rank-normalized variants throughout: draws are replaced by normal scores of
their pooled ranks before computing the classic between/within variance
ratio and the Geyer-truncated autocorrelation sums. All statistics are
deterministic functions of the draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy import stats as sstats
from scipy.special import gammaln, ndtri

from .errors import InsufficientDraws, SingularCovariance


def _as_chains(chains) -> NDArray:
    arr = np.asarray(chains, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"expected (chains, draws) array, got shape {arr.shape}")
    return arr


def _split(chains: NDArray) -> NDArray:
    """Halve every chain: (M, S) → (2M, S//2)."""
    half = chains.shape[1] // 2
    return np.concatenate([chains[:, :half], chains[:, -half:]], axis=0)


def _rank_normalize(chains: NDArray) -> NDArray:
    """Normal scores of pooled ranks (average rank for ties)."""
    flat = chains.ravel()
    ranks = sstats.rankdata(flat, method="average")
    z = ndtri((ranks - 3.0 / 8.0) / (flat.size + 0.25))
    return z.reshape(chains.shape)


def _rhat_classic(chains: NDArray) -> float:
    m, s = chains.shape
    chain_means = chains.mean(axis=1)
    within = np.mean(np.var(chains, axis=1, ddof=1))
    if within == 0.0:
        return np.inf
    between = s * np.var(chain_means, ddof=1) if m > 1 else 0.0
    var_plus = (s - 1) / s * within + between / s
    return float(np.sqrt(var_plus / within))


def split_rhat(chains) -> float:
    """Rank-normalized split-R̂; +inf sentinel for constant chains.

    Floored at exactly 1.0: the classic ratio can dip below one by O(1/n)
    when the between-half variance is negligible, which carries no signal.
    """
    arr = _as_chains(chains)
    if arr.shape[1] < 4:
        raise InsufficientDraws("split-R̂ needs at least 4 draws per chain")
    halves = _split(arr)
    if np.all(halves == halves[:, :1]):
        return np.inf
    return max(_rhat_classic(_rank_normalize(halves)), 1.0)


def _autocovariance_fft(x: NDArray) -> NDArray:
    """Biased autocovariance of one chain at all lags via FFT."""
    n = x.shape[0]
    centered = x - x.mean()
    size = 2 ** int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(centered, size)
    acov = np.fft.irfft(f * np.conjugate(f), size)[:n].real
    return acov / n


def _combined_ess(chains: NDArray) -> float:
    """Geyer initial-monotone-positive-pair ESS over (possibly split) chains."""
    m, s = chains.shape
    if np.all(chains == chains[:, :1]):
        return np.nan
    acovs = np.stack([_autocovariance_fft(c) for c in chains])
    chain_var = acovs[:, 0] * s / (s - 1.0)
    mean_var = np.mean(chain_var)
    var_plus = mean_var * (s - 1.0) / s
    if m > 1:
        var_plus += np.var(chains.mean(axis=1), ddof=1)
    if var_plus == 0.0:
        return np.nan

    rho = np.ones(s)
    rho[1:] = 1.0 - (mean_var - np.mean(acovs[:, 1:], axis=0)) / var_plus

    # Geyer pairs: truncate at the first negative pair sum, enforce monotone
    # decline, then τ = −1 + 2·Σ pairs
    pair_sum = 0.0
    prev_pair = np.inf
    t = 0
    while t + 1 < s:
        pair = rho[t] + rho[t + 1]
        if pair < 0.0:
            break
        pair = min(pair, prev_pair)
        prev_pair = pair
        pair_sum += pair
        t += 2
    tau = -1.0 + 2.0 * pair_sum
    n_total = m * s
    # antithetic chains can push τ below zero; cap the reported inflation
    ess = n_total / max(tau, 1.0 / np.log10(max(n_total, 10)))
    return float(ess)


def ess(chains, mode: str = "bulk") -> float:
    """Effective sample size: bulk (rank-normalized) or tail (quantile indicators)."""
    arr = _as_chains(chains)
    if arr.shape[1] < 8:
        raise InsufficientDraws("ESS needs at least 8 draws per chain")
    if mode == "bulk":
        return _combined_ess(_rank_normalize(_split(arr)))
    if mode == "tail":
        out = []
        for prob in (0.05, 0.95):
            q = np.quantile(arr, prob)
            out.append(_combined_ess(_split((arr <= q).astype(float))))
        return float(np.nanmin(out))
    raise ValueError(f"unknown ESS mode {mode!r}")


def multivariate_ess(draws: NDArray) -> float:
    """Batch-means multivariate ESS: S·(|Λ|/|Σ_mc|)^{1/d}."""
    draws = np.asarray(draws, dtype=float)
    if draws.ndim == 1:
        draws = draws[:, None]
    s, d = draws.shape
    if s <= d:
        raise InsufficientDraws("multivariate ESS needs more draws than dimensions")
    b = int(np.floor(np.sqrt(s)))
    a = s // b
    trimmed = draws[:a * b]
    batch_means = trimmed.reshape(a, b, d).mean(axis=1)
    grand = trimmed.mean(axis=0)
    dev = batch_means - grand
    sigma_mc = b / (a - 1.0) * (dev.T @ dev)
    lam = np.cov(draws, rowvar=False)
    lam = np.atleast_2d(lam)
    sign_l, logdet_l = np.linalg.slogdet(lam)
    sign_m, logdet_m = np.linalg.slogdet(sigma_mc)
    if sign_l <= 0.0 or sign_m <= 0.0 or not np.isfinite(logdet_l) or not np.isfinite(logdet_m):
        raise SingularCovariance("covariance determinant underflowed")
    return float(s * np.exp((logdet_l - logdet_m) / d))


def required_multivariate_ess(d: int, precision: float = 0.05, alpha: float = 0.05) -> float:
    """Minimum mESS for the target precision of a (1−α) confidence region."""
    log_lead = (2.0 / d) * np.log(2.0) + np.log(np.pi) - (2.0 / d) * (
        np.log(d) + gammaln(d / 2.0)
    )
    chi2 = sstats.chi2.ppf(1.0 - alpha, df=d)
    return float(np.exp(log_lead) * chi2 / precision ** 2)


def precision_from_mess(d: int, mess: float, alpha: float = 0.05) -> float:
    """Inverse of required_multivariate_ess in the precision argument."""
    log_lead = (2.0 / d) * np.log(2.0) + np.log(np.pi) - (2.0 / d) * (
        np.log(d) + gammaln(d / 2.0)
    )
    chi2 = sstats.chi2.ppf(1.0 - alpha, df=d)
    return float(np.sqrt(np.exp(log_lead) * chi2 / mess))


def acf(draws: NDArray, max_lag: int) -> NDArray:
    """Biased autocorrelation estimates at lags 0..max_lag (lag 0 = 1)."""
    draws = np.asarray(draws, dtype=float)
    if max_lag >= draws.shape[0]:
        raise ValueError("max_lag must be below the number of draws")
    acov = _autocovariance_fft(draws)
    if acov[0] == 0.0:
        out = np.zeros(max_lag + 1)
        out[0] = 1.0
        return out
    return acov[:max_lag + 1] / acov[0]


@dataclass
class DiagnosticsReport:
    """Per-parameter convergence statistics plus group-level multivariate ESS."""

    names: list[str]
    split_rhats: NDArray
    bulk_ess: NDArray
    tail_ess: NDArray
    n_chains: int
    n_draws: int
    multivariate_ess: float | None = None
    acf_max_lag: int = 0
    acfs: NDArray | None = None

    def to_dict(self) -> dict:
        per_param = {
            name: {
                "split_rhat": _json_float(self.split_rhats[i]),
                "bulk_ess": _json_float(self.bulk_ess[i]),
                "tail_ess": _json_float(self.tail_ess[i]),
            }
            for i, name in enumerate(self.names)
        }
        out = {
            "schema_version": 1,
            "n_chains": self.n_chains,
            "n_draws": self.n_draws,
            "parameters": per_param,
        }
        if self.multivariate_ess is not None:
            out["multivariate_ess"] = _json_float(self.multivariate_ess)
        if self.acfs is not None:
            out["acf"] = {
                name: [float(v) for v in self.acfs[i]] for i, name in enumerate(self.names)
            }
            out["acf_max_lag"] = self.acf_max_lag
        return out


def _json_float(x: float):
    if x is None or not np.isfinite(x):
        return None if x is None or np.isnan(x) else "inf"
    return float(x)


def compute_report(chains_by_param: NDArray, names: list[str],
                   mvess_columns: list[int] | None = None,
                   acf_max_lag: int = 0) -> DiagnosticsReport:
    """Build a report from draws shaped (n_chains, n_draws, n_params)."""
    arr = np.asarray(chains_by_param, dtype=float)
    if arr.ndim != 3:
        raise ValueError("expected draws shaped (chains, draws, params)")
    n_chains, n_draws, n_params = arr.shape
    if len(names) != n_params:
        raise ValueError("one name per parameter required")
    rhats = np.empty(n_params)
    bulk = np.empty(n_params)
    tail = np.empty(n_params)
    for j in range(n_params):
        rhats[j] = split_rhat(arr[:, :, j])
        bulk[j] = ess(arr[:, :, j], "bulk")
        tail[j] = ess(arr[:, :, j], "tail")
    mvess = None
    if mvess_columns:
        pooled = arr[:, :, mvess_columns].reshape(-1, len(mvess_columns))
        mvess = multivariate_ess(pooled)
    acfs = None
    if acf_max_lag > 0:
        acfs = np.stack([acf(arr[0, :, j], acf_max_lag) for j in range(n_params)])
    return DiagnosticsReport(
        names=list(names), split_rhats=rhats, bulk_ess=bulk, tail_ess=tail,
        n_chains=n_chains, n_draws=n_draws, multivariate_ess=mvess,
        acf_max_lag=acf_max_lag, acfs=acfs,
    )


@dataclass
class Verdict:
    passed: bool
    reasons: list[str] = field(default_factory=list)


def convergence_verdict(report: DiagnosticsReport, rhat_threshold: float = 1.01,
                        min_ess_per_chain: float = 100.0) -> Verdict:
    """Pass iff max split-R̂ < threshold and min(bulk, tail) ESS meets the floor."""
    reasons = []
    ess_floor = min_ess_per_chain * report.n_chains
    for i, name in enumerate(report.names):
        if not report.split_rhats[i] < rhat_threshold:
            reasons.append(
                f"{name}: split-R̂ = {report.split_rhats[i]:.4f} ≥ {rhat_threshold}"
            )
        if min(report.bulk_ess[i], report.tail_ess[i]) < ess_floor:
            reasons.append(
                f"{name}: ESS (bulk {report.bulk_ess[i]:.0f}, tail {report.tail_ess[i]:.0f}) "
                f"below {ess_floor:.0f}"
            )
    return Verdict(passed=not reasons, reasons=reasons)


def prefix_curves(chains_by_param: NDArray, names: list[str], stride: int = 1000,
                  ) -> dict:
    """Max-R̂ and min-ESS over parameters on growing prefixes of the chains."""
    arr = np.asarray(chains_by_param, dtype=float)
    n_chains, n_draws, n_params = arr.shape
    points = list(range(stride, n_draws + 1, stride))
    if not points or points[-1] != n_draws:
        points.append(n_draws)
    rows = []
    for end in points:
        prefix = arr[:, :end, :]
        try:
            rhats = [split_rhat(prefix[:, :, j]) for j in range(n_params)]
            bulks = [ess(prefix[:, :, j], "bulk") for j in range(n_params)]
            tails = [ess(prefix[:, :, j], "tail") for j in range(n_params)]
        except InsufficientDraws:
            continue
        rows.append({
            "iterations": end,
            "max_rhat": _json_float(np.max(rhats)),
            "min_bulk_ess": _json_float(np.nanmin(bulks)),
            "min_tail_ess": _json_float(np.nanmin(tails)),
        })
    return {"schema_version": 1, "stride": stride, "parameters": list(names), "points": rows}
