import numpy as np
import pytest

from svarhmc.errors import LayoutMismatch, OutsideRestrictedSet, SchemaError
from svarhmc.transforms import (Kind, Restriction, RestrictionSchema, check_restrictions,
                                compile_schema, forward, forward_irf, inverse,
                                irf_vjp, log_jacobian_grad, validate, zero_projection)
from svarhmc.varmodel import ModelShape, StructuralParams, irf, structural_to_reduced

from conftest import supply_demand_schema


def all_kinds_schema():
    """N=3, k=1 schema exercising every restriction kind at once."""
    shape = ModelShape(n_vars=3, n_lags=2, restricted_horizon=1)
    entries = (
        Restriction(0, 0, 0, Kind.RANK_DOMINATED),
        Restriction(0, 0, 1, Kind.RANK_DOMINATED),
        Restriction(0, 0, 2, Kind.RANK_DOMINANT),
        Restriction(0, 1, 0, Kind.POSITIVE),
        Restriction(0, 1, 1, Kind.BOUND, bounds=(0.0, 0.025)),
        Restriction(0, 2, 0, Kind.RATIO_BOUND, bounds=(0.2, 0.9), ref=(0, 1, 0)),
        Restriction(0, 2, 1, Kind.ZERO),
        Restriction(0, 2, 2, Kind.NEGATIVE),
        Restriction(1, 0, 0, Kind.NEGATIVE),
        Restriction(1, 1, 1, Kind.ZERO),
    )
    return RestrictionSchema(shape=shape, entries=entries)


def test_validate_supply_demand_ok():
    validate(supply_demand_schema())


def test_validate_horizon_beyond_k():
    shape = ModelShape(n_vars=2, n_lags=2, restricted_horizon=1)
    schema = RestrictionSchema(shape=shape, entries=(Restriction(2, 0, 0, Kind.POSITIVE),))
    with pytest.raises(SchemaError, match="horizon"):
        validate(schema)


def test_validate_two_dominants_in_one_row():
    shape = ModelShape(n_vars=2, n_lags=1, restricted_horizon=0)
    schema = RestrictionSchema(shape=shape, entries=(
        Restriction(0, 0, 0, Kind.RANK_DOMINANT), Restriction(0, 0, 1, Kind.RANK_DOMINANT),
    ))
    with pytest.raises(SchemaError, match="RankDominant"):
        validate(schema)


def test_validate_dominated_without_dominant():
    shape = ModelShape(n_vars=2, n_lags=1, restricted_horizon=0)
    schema = RestrictionSchema(shape=shape, entries=(
        Restriction(0, 0, 0, Kind.RANK_DOMINATED),
    ))
    with pytest.raises(SchemaError):
        validate(schema)


def test_validate_duplicate_cell():
    shape = ModelShape(n_vars=2, n_lags=1, restricted_horizon=0)
    schema = RestrictionSchema(shape=shape, entries=(
        Restriction(0, 0, 0, Kind.POSITIVE), Restriction(0, 0, 0, Kind.NEGATIVE),
    ))
    with pytest.raises(SchemaError, match="duplicate"):
        validate(schema)


def test_validate_ratio_ref_must_be_positive_kind():
    shape = ModelShape(n_vars=2, n_lags=1, restricted_horizon=0)
    schema = RestrictionSchema(shape=shape, entries=(
        Restriction(0, 0, 0, Kind.NEGATIVE),
        Restriction(0, 1, 0, Kind.RATIO_BOUND, bounds=(0.0, 1.0), ref=(0, 0, 0)),
    ))
    with pytest.raises(SchemaError, match="ratio"):
        validate(schema)


def test_validate_all_zero_impact_column():
    shape = ModelShape(n_vars=2, n_lags=1, restricted_horizon=0)
    schema = RestrictionSchema(shape=shape, entries=(
        Restriction(0, 0, 0, Kind.ZERO), Restriction(0, 1, 0, Kind.ZERO),
    ))
    with pytest.raises(SchemaError, match="singular"):
        validate(schema)


def test_forward_supply_demand_jacobian_identity():
    # all-sign schema: |det J| = Π exp(θ_ij) exactly
    schema = supply_demand_schema()
    rng = np.random.default_rng(40)
    comp = compile_schema(schema)
    for _ in range(20):
        theta = rng.normal(size=comp.dim)
        res = forward(schema, theta)
        assert res.log_jacobian == pytest.approx(float(np.sum(theta[:4])), abs=1e-14)
        assert check_restrictions(schema, [res.structural.impact])


def test_forward_bound_midpoint():
    shape = ModelShape(n_vars=1, n_lags=1, restricted_horizon=0)
    schema = RestrictionSchema(shape=shape, entries=(
        Restriction(0, 0, 0, Kind.BOUND, bounds=(0.0, 0.025)),
    ))
    comp = compile_schema(schema)
    fwd = forward_irf(comp, np.zeros(1))
    assert fwd.impact[0, 0] == pytest.approx(0.0125)
    assert fwd.log_jacobian == pytest.approx(np.log(0.025 * 0.25))


def test_forward_ranking_worked_example():
    shape = ModelShape(n_vars=2, n_lags=1, restricted_horizon=0)
    schema = RestrictionSchema(shape=shape, entries=(
        Restriction(0, 0, 0, Kind.RANK_DOMINATED), Restriction(0, 0, 1, Kind.RANK_DOMINANT),
    ))
    comp = compile_schema(schema)
    theta = np.zeros(comp.n_irf)
    theta[comp.slot_index[(0, 0, 1)]] = np.log(2.0)
    fwd = forward_irf(comp, theta)
    assert fwd.impact[0, 1] == pytest.approx(2.0)
    assert fwd.impact[0, 0] == pytest.approx(0.0)
    # |J| = e^{2 ln 2} · 2 · σ(0)(1−σ(0)) = 4 · 2 · ¼ = 2
    assert fwd.log_jacobian == pytest.approx(np.log(2.0))


def _fd_log_jacobian(comp, theta_irf, h=1e-6):
    jac = np.empty((comp.n_irf, comp.n_irf))
    for i in range(comp.n_irf):
        tp = theta_irf.copy(); tp[i] += h
        tm = theta_irf.copy(); tm[i] -= h
        jac[:, i] = (forward_irf(comp, tp).raw_values - forward_irf(comp, tm).raw_values) / (2 * h)
    return np.linalg.slogdet(jac)[1]


@pytest.mark.parametrize("schema_fn", [supply_demand_schema, all_kinds_schema])
def test_jacobian_matches_finite_differences(schema_fn):
    schema = schema_fn()
    comp = compile_schema(schema)
    rng = np.random.default_rng(41)
    for _ in range(25):
        theta = rng.normal(size=comp.n_irf)
        fwd = forward_irf(comp, theta)
        fd = _fd_log_jacobian(comp, theta)
        assert abs(fd - fwd.log_jacobian) <= 1e-4 * max(1.0, abs(fd))


def test_vjp_and_logjac_grad_match_finite_differences():
    schema = all_kinds_schema()
    comp = compile_schema(schema)
    rng = np.random.default_rng(42)
    h = 1e-6
    for _ in range(5):
        theta = rng.normal(size=comp.n_irf)
        fwd = forward_irf(comp, theta)
        b_bar = rng.normal(size=(3, 3))
        p_bar = rng.normal(size=(1, 3, 3))
        got = irf_vjp(comp, theta, fwd, b_bar, p_bar)
        fd = np.empty(comp.n_irf)
        for i in range(comp.n_irf):
            tp = theta.copy(); tp[i] += h
            tm = theta.copy(); tm[i] -= h
            fp = forward_irf(comp, tp)
            fm = forward_irf(comp, tm)
            fd[i] = (np.sum(b_bar * (fp.impact - fm.impact))
                     + np.sum(p_bar * (fp.psis - fm.psis))) / (2 * h)
        assert np.allclose(got, fd, rtol=1e-5, atol=1e-7)
        gj = log_jacobian_grad(comp, theta)
        fdj = np.empty(comp.n_irf)
        for i in range(comp.n_irf):
            tp = theta.copy(); tp[i] += h
            tm = theta.copy(); tm[i] -= h
            fdj[i] = (forward_irf(comp, tp).log_jacobian - forward_irf(comp, tm).log_jacobian) / (2 * h)
        assert np.allclose(gj, fdj, rtol=1e-5, atol=1e-7)


def test_bijectivity_roundtrips():
    schema = all_kinds_schema()
    comp = compile_schema(schema)
    rng = np.random.default_rng(43)
    done = 0
    while done < 25:
        theta = rng.normal(size=comp.dim)
        try:
            res = forward(schema, theta)
        except OutsideRestrictedSet:
            continue  # det < 0 with no free column: not in the map's domain
        theta2 = inverse(schema, res.structural)
        assert np.allclose(theta2, theta, atol=1e-10)
        res2 = forward(schema, theta2)
        assert np.allclose(res2.structural.impact, res.structural.impact, atol=1e-10)
        assert np.allclose(res2.structural.irfs, res.structural.irfs, atol=1e-10)
        done += 1


def test_inverse_outside_restricted_set():
    schema = supply_demand_schema()
    s = StructuralParams(intercept=np.zeros(2), exog=np.zeros((2, 0)),
                         impact=np.array([[-1.0, 0.5], [-0.8, 0.7]]),  # B11 must be > 0
                         irfs=np.zeros((0, 2, 2)), free_lags=np.zeros((1, 2, 2)))
    with pytest.raises(OutsideRestrictedSet):
        inverse(schema, s)


def test_inverse_positive_unit_value():
    shape = ModelShape(n_vars=1, n_lags=1, restricted_horizon=0)
    schema = RestrictionSchema(shape=shape, entries=(Restriction(0, 0, 0, Kind.POSITIVE),))
    s = StructuralParams(intercept=np.zeros(1), exog=np.zeros((1, 0)),
                         impact=np.array([[1.0]]), irfs=np.zeros((0, 1, 1)),
                         free_lags=np.zeros((1, 1, 1)))
    theta = inverse(schema, s)
    assert theta[0] == pytest.approx(0.0)


def test_check_restrictions_sign_flip_detected():
    schema = supply_demand_schema()
    good = np.array([[1.0, 0.5], [-0.8, 0.7]])
    assert check_restrictions(schema, [good])
    flipped = good.copy()
    flipped[:, 0] = -flipped[:, 0]
    assert not check_restrictions(schema, [flipped])


def test_check_restrictions_constructed_table():
    # oil-style table with ratio bound: build a satisfying instance by hand
    shape = ModelShape(n_vars=2, n_lags=1, restricted_horizon=0)
    schema = RestrictionSchema(shape=shape, entries=(
        Restriction(0, 0, 0, Kind.RATIO_BOUND, bounds=(0.0, 0.025), ref=(0, 1, 0)),
        Restriction(0, 1, 0, Kind.POSITIVE),
        Restriction(0, 0, 1, Kind.POSITIVE),
    ))
    b = np.array([[0.02, 1.0], [2.0, 0.3]])  # ratio 0.01 ∈ (0, 0.025)
    assert check_restrictions(schema, [b])
    b_bad = np.array([[0.06, 1.0], [2.0, 0.3]])  # ratio 0.03 > 0.025
    assert not check_restrictions(schema, [b_bad])


def test_constraint_satisfaction_extreme_theta():
    # forward output satisfies check_restrictions for |θ| up to 30
    for schema in (supply_demand_schema(), all_kinds_schema()):
        comp = compile_schema(schema)
        rng = np.random.default_rng(44)
        k = schema.shape.restricted_horizon
        produced = 0
        for _ in range(200):
            theta = rng.uniform(-30.0, 30.0, size=comp.dim)
            try:
                res = forward(schema, theta)
            except OutsideRestrictedSet:
                continue  # no-free-column schema rejects det < 0 draws
            irfs = np.concatenate([res.structural.impact[None], res.structural.irfs])
            assert check_restrictions(schema, irfs[:k + 1])
            assert np.linalg.det(res.structural.impact) > 0
            produced += 1
        assert produced > 50


def test_det_positive_after_flip():
    # free fourth column gets flipped when the raw draw has det < 0
    shape = ModelShape(n_vars=2, n_lags=1, restricted_horizon=0)
    schema = RestrictionSchema(shape=shape, entries=(
        Restriction(0, 0, 0, Kind.POSITIVE), Restriction(0, 1, 0, Kind.POSITIVE),
    ))
    comp = compile_schema(schema)
    assert comp.flip_col == 1
    rng = np.random.default_rng(45)
    flipped_seen = 0
    for _ in range(100):
        theta = rng.normal(size=comp.dim)
        res = forward(schema, theta)
        assert np.linalg.det(res.structural.impact) > 0
        flipped_seen += forward_irf(comp, theta[:comp.n_irf]).flipped
    assert flipped_seen > 10  # both signs occur in the raw draws


def test_rejected_when_no_free_column():
    # det(B) < 0 pinned by restrictions on every column and no free column:
    # forward raises; the target treats it as −inf
    shape = ModelShape(n_vars=2, n_lags=1, restricted_horizon=0)
    schema = RestrictionSchema(shape=shape, entries=(
        Restriction(0, 0, 0, Kind.NEGATIVE), Restriction(0, 1, 0, Kind.POSITIVE),
        Restriction(0, 0, 1, Kind.POSITIVE), Restriction(0, 1, 1, Kind.POSITIVE),
    ))
    comp = compile_schema(schema)
    assert comp.flip_col == -1
    # B = [[-a, b], [c, d]] with a,b,c,d > 0 ⇒ det = −ad − bc < 0 always
    with pytest.raises(OutsideRestrictedSet):
        forward(schema, np.zeros(comp.dim))


def test_zero_projection_slot_counts():
    # B₁₂ = 0 over N=2: three impact slots remain
    shape = ModelShape(n_vars=2, n_lags=1, restricted_horizon=0)
    schema = RestrictionSchema(shape=shape, entries=(Restriction(0, 0, 1, Kind.ZERO),))
    assert zero_projection(schema).n_irf == 3
    # no zeros → all N² slots
    schema2 = RestrictionSchema(shape=shape, entries=())
    assert zero_projection(schema2).n_irf == 4
    # augmented scheme: two rows zeroed except two columns over N=10
    shape10 = ModelShape(n_vars=10, n_lags=1, restricted_horizon=0)
    entries = tuple(
        Restriction(0, i, j, Kind.ZERO)
        for i in (4, 5) for j in range(10) if j not in (6, 9)
    )
    schema10 = RestrictionSchema(shape=shape10, entries=entries)
    assert zero_projection(schema10).n_irf == 100 - 2 * 8


def test_zero_cells_are_exact_zero():
    schema = all_kinds_schema()
    comp = compile_schema(schema)
    rng = np.random.default_rng(46)
    done = 0
    while done < 20:
        try:
            res = forward(schema, rng.normal(size=comp.dim))
        except OutsideRestrictedSet:
            continue
        assert res.structural.impact[2, 1] == 0.0
        assert res.structural.irfs[0, 1, 1] == 0.0
        done += 1


def test_layout_mismatch():
    schema = supply_demand_schema()
    with pytest.raises(LayoutMismatch):
        forward(schema, np.zeros(3))


def test_measure_correctness_exp1():
    """End-to-end change of variables: NUTS on p(θ) = exp(−e^θ)·e^θ maps
    forward to Exp(1), Kolmogorov–Smirnov statistic < 0.01 at 10⁵ draws."""
    from scipy import stats as sstats

    from svarhmc.sampler import SamplerConfig, run_chain

    class LogExpTarget:
        dimension = 1

        def log_density_and_gradient(self, th):
            t = float(th[0])
            return -np.exp(t) + t, np.array([1.0 - np.exp(t)])

    out = run_chain(LogExpTarget(), SamplerConfig(warmup_iters=1000, sampling_iters=100_000,
                                                  seed=11), np.zeros(1))
    alpha = np.exp(out.draws[:, 0])
    ks = sstats.kstest(alpha, "expon").statistic
    assert ks < 0.01
