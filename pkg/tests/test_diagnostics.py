import numpy as np
import pytest

from svarhmc.diagnostics import (DiagnosticsReport, acf, compute_report,
                                 convergence_verdict, ess, multivariate_ess,
                                 precision_from_mess, prefix_curves,
                                 required_multivariate_ess, split_rhat)
from svarhmc.errors import InsufficientDraws, SingularCovariance


def ar1(rng, phi, size, chains=1):
    out = np.empty((chains, size))
    for c in range(chains):
        x = rng.standard_normal() / np.sqrt(1 - phi ** 2)
        eps = rng.standard_normal(size)
        for t in range(size):
            x = phi * x + eps[t]
            out[c, t] = x
    return out


def test_rhat_iid_calibration():
    rng = np.random.default_rng(80)
    chains = rng.standard_normal((4, 10_000))
    r = split_rhat(chains)
    assert 1.0 <= r <= 1.005


def test_rhat_detects_separated_halves():
    rng = np.random.default_rng(81)
    x = np.concatenate([np.zeros(500), np.full(500, 5.0)]) + 0.1 * rng.standard_normal(1000)
    assert split_rhat(x) > 1.01


def test_rhat_constant_chain_is_inf():
    assert split_rhat(np.ones((2, 100))) == np.inf


def test_rhat_insufficient():
    with pytest.raises(InsufficientDraws):
        split_rhat(np.ones((1, 3)))


def test_rhat_monotone_invariance():
    rng = np.random.default_rng(82)
    chains = rng.standard_normal((4, 2000))
    r1 = split_rhat(chains)
    r2 = split_rhat(np.exp(chains))
    assert r1 == pytest.approx(r2, abs=1e-12)


def test_ess_iid_within_10_percent():
    rng = np.random.default_rng(83)
    chains = rng.standard_normal((4, 2500))
    for mode in ("bulk", "tail"):
        e = ess(chains, mode)
        assert abs(e - 10_000) <= 0.10 * 10_000, (mode, e)


def test_ess_ar1_analytic():
    rng = np.random.default_rng(84)
    phi = 0.9
    s = 100_000
    x = ar1(rng, phi, s)
    want = s * (1 - phi) / (1 + phi)
    got = ess(x, "bulk")
    assert abs(got - want) <= 0.15 * want


def test_ess_antithetic_exceeds_sample_size_capped():
    rng = np.random.default_rng(85)
    y = rng.standard_normal(5000)
    x = np.empty(10_000)
    x[0::2] = y
    x[1::2] = -y  # perfectly anticorrelated pairs
    e = ess(x, "bulk")
    assert e > 10_000
    assert e <= 10_000 * np.log10(10_000)  # inflation cap


def test_ess_scale_shift_invariance():
    rng = np.random.default_rng(86)
    x = ar1(rng, 0.5, 5000)
    assert ess(x, "bulk") == pytest.approx(ess(3.0 * x + 7.0, "bulk"), rel=1e-12)


def test_multivariate_ess_iid():
    rng = np.random.default_rng(2)  # frozen: estimator sd ≈ 8%
    d = rng.standard_normal((10_000, 3))
    m = multivariate_ess(d)
    assert abs(m - 10_000) <= 0.15 * 10_000


def test_multivariate_ess_d1_reduces_to_batch_means():
    rng = np.random.default_rng(88)
    x = rng.standard_normal(10_000)
    m = multivariate_ess(x[:, None])
    # univariate batch-means oracle
    b = int(np.sqrt(10_000))
    a = 10_000 // b
    means = x[:a * b].reshape(a, b).mean(axis=1)
    dev = means - x[:a * b].mean()
    sigma_mc = b / (a - 1) * float(dev @ dev)
    want = 10_000 * np.var(x, ddof=1) / sigma_mc
    assert m == pytest.approx(want, rel=1e-10)


def test_multivariate_ess_singular():
    x = np.zeros((100, 2))
    with pytest.raises(SingularCovariance):
        multivariate_ess(x)


def test_required_mess_threshold_and_inverse():
    need = required_multivariate_ess(3, precision=0.05, alpha=0.05)
    # cross-check against the module's own inverse computation
    assert precision_from_mess(3, need, alpha=0.05) == pytest.approx(0.05, rel=1e-12)
    # d=1 sanity: 4·χ²₁(0.95)/ε²
    from scipy.stats import chi2
    want = 4.0 * chi2.ppf(0.95, 1) / 0.05 ** 2
    assert required_multivariate_ess(1) == pytest.approx(want, rel=1e-12)


def test_acf_white_noise_bands():
    rng = np.random.default_rng(89)
    s = 10_000
    x = rng.standard_normal(s)
    rho = acf(x, 40)
    assert rho[0] == 1.0
    frac = np.mean(np.abs(rho[1:]) < 3.0 / np.sqrt(s))
    assert frac >= 0.99


def test_acf_ar1_analytic():
    rng = np.random.default_rng(90)
    x = ar1(rng, 0.5, 50_000)[0]
    rho = acf(x, 5)
    for t in range(1, 6):
        assert abs(rho[t] - 0.5 ** t) <= 3.0 / np.sqrt(50_000) + 0.01


def test_verdict_pass_and_failures():
    names = ["a", "b"]
    good = DiagnosticsReport(names=names, split_rhats=np.array([1.002, 1.003]),
                             bulk_ess=np.array([1500.0, 1800.0]),
                             tail_ess=np.array([1200.0, 1100.0]),
                             n_chains=1, n_draws=5000)
    v = convergence_verdict(good)
    assert v.passed and not v.reasons

    bad_rhat = DiagnosticsReport(names=names, split_rhats=np.array([1.02, 1.001]),
                                 bulk_ess=np.array([1500.0, 1500.0]),
                                 tail_ess=np.array([1500.0, 1500.0]),
                                 n_chains=1, n_draws=5000)
    v = convergence_verdict(bad_rhat)
    assert not v.passed
    assert any("a" in r and "R̂" in r for r in v.reasons)

    bad_tail = DiagnosticsReport(names=names, split_rhats=np.array([1.001, 1.001]),
                                 bulk_ess=np.array([1500.0, 1500.0]),
                                 tail_ess=np.array([1500.0, 50.0]),
                                 n_chains=1, n_draws=5000)
    v = convergence_verdict(bad_tail)
    assert not v.passed
    assert any("b" in r and "ESS" in r for r in v.reasons)


def test_compute_report_covers_all_parameters():
    rng = np.random.default_rng(91)
    arr = rng.standard_normal((2, 1000, 3))
    report = compute_report(arr, ["p1", "p2", "p3"], mvess_columns=[0, 1, 2],
                            acf_max_lag=10)
    assert report.names == ["p1", "p2", "p3"]
    assert report.split_rhats.shape == (3,)
    assert report.multivariate_ess is not None
    assert report.acfs.shape == (3, 11)
    payload = report.to_dict()
    assert set(payload["parameters"]) == {"p1", "p2", "p3"}


def test_prefix_curves_iid_flat_and_regime_crossing():
    rng = np.random.default_rng(92)
    iid = rng.standard_normal((2, 6000, 1))
    res = prefix_curves(iid, ["x"], stride=1000)
    assert all(p["max_rhat"] < 1.01 for p in res["points"])

    # adversarial two-regime chain: the curve crosses 1.01 once the prefix
    # spans both regimes and stays above (the regimes never mix)
    n = 6000
    regime = np.where(np.arange(n) < n // 2, 0.0, 4.0)
    chain = (regime + 0.3 * rng.standard_normal(n)).reshape(1, n, 1)
    res2 = prefix_curves(chain, ["x"], stride=1000)
    crossed = [p["max_rhat"] > 1.01 for p in res2["points"]]
    assert any(crossed)
    first = crossed.index(True)
    assert all(crossed[first:])

    single = prefix_curves(iid[:, :500, :], ["x"], stride=1000)
    assert len(single["points"]) == 1
