"""Self-contained No-U-Turn Hamiltonian Monte Carlo.

Multinomial trajectory sampling with biased progressive sub-tree selection,
dual-averaging step-size adaptation toward a target acceptance statistic,
and windowed warmup metric estimation (fast ε-only buffer, expanding metric
windows, final ε-only buffer at 15%/75%/10% of warmup). Chains use
counter-based Philox streams keyed by (seed, chain index), so identical
configuration reproduces bit-identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from . import transforms
from .bayes import NIWParams
from .errors import InitFailed
from .linalg import solve_lower, solve_right_upper
from .transforms import RestrictionSchema
from .varmodel import ModelShape, StructuralParams, unstack_coefficients

MAX_DELTA_H = 1000.0


class TargetDensity(Protocol):
    """Contract the sampler needs: a dimension and a joint value/gradient map.

    Invalid points signal rejection with a −inf value; the gradient is then
    ignored.
    """

    dimension: int

    def log_density_and_gradient(self, theta: NDArray) -> tuple[float, NDArray]: ...


@dataclass
class SamplerConfig:
    warmup_iters: int = 2000
    sampling_iters: int = 1000
    target_accept: float = 0.8
    metric_kind: str = "diag"  # "diag" | "dense"
    max_tree_depth: int = 10
    init_step_size: float = 1.0
    seed: int = 0
    n_chains: int = 1

    def __post_init__(self):
        if self.warmup_iters < 0 or self.sampling_iters <= 0 or self.n_chains <= 0:
            raise ValueError("iteration and chain counts must be positive")
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError("target_accept must lie in (0, 1)")
        if self.metric_kind not in ("diag", "dense"):
            raise ValueError(f"unknown metric kind {self.metric_kind!r}")


@dataclass
class ChainOutput:
    draws: NDArray              # (sampling_iters, dim)
    log_densities: NDArray
    warmup_draws: NDArray       # (warmup_iters, dim), retained separately
    warmup_log_densities: NDArray
    tree_depths: NDArray
    accept_stats: NDArray
    divergences: NDArray        # bool per sampling iteration
    energies: NDArray
    step_size: float
    inv_metric: NDArray
    chain_index: int = 0


class _Metric:
    """Euclidean metric; kinetic energy ½ρᵀM⁻¹ρ with M⁻¹ diagonal or dense."""

    def __init__(self, kind: str, dim: int):
        self.kind = kind
        self.dim = dim
        if kind == "diag":
            self.inv = np.ones(dim)
        else:
            self.inv = np.eye(dim)
        self._factor_momentum()

    def _factor_momentum(self):
        # ρ ~ N(0, M): for dense M⁻¹ = LLᵀ, draw ρ = L⁻ᵀξ.
        if self.kind == "dense":
            self._chol_inv = np.linalg.cholesky(self.inv)

    def set_inverse(self, inv: NDArray):
        self.inv = inv
        self._factor_momentum()

    def sample_momentum(self, rng: np.random.Generator) -> NDArray:
        xi = rng.standard_normal(self.dim)
        if self.kind == "diag":
            return xi / np.sqrt(self.inv)
        return solve_triangular(self._chol_inv.T, xi, lower=False)

    def velocity(self, rho: NDArray) -> NDArray:
        if self.kind == "diag":
            return self.inv * rho
        return self.inv @ rho

    def kinetic(self, rho: NDArray) -> float:
        return 0.5 * float(rho @ self.velocity(rho))

    def estimate(self, draws: NDArray):
        """Window estimate of M⁻¹ ≈ posterior covariance, shrunk toward identity."""
        n = draws.shape[0]
        if n < 5:
            return
        w = n / (n + 5.0)
        floor = 1e-3 * (5.0 / (n + 5.0))
        if self.kind == "diag":
            var = np.var(draws, axis=0, ddof=1)
            self.set_inverse(w * var + floor)
        else:
            cov = np.cov(draws, rowvar=False)
            cov = np.atleast_2d(cov)
            candidate = w * cov + floor * np.eye(self.dim)
            try:
                self.set_inverse(0.5 * (candidate + candidate.T))
            except np.linalg.LinAlgError:
                self.set_inverse(np.diag(np.diag(candidate)))


@dataclass
class _DualAveraging:
    """Nesterov dual averaging of log ε toward the target acceptance rate."""

    log_eps: float
    delta: float
    gamma: float = 0.05
    t0: float = 10.0
    kappa: float = 0.75
    mu: float = field(init=False)
    log_eps_bar: float = field(init=False)
    h_bar: float = 0.0
    count: int = 0

    def __post_init__(self):
        self.mu = math.log(10.0) + self.log_eps
        self.log_eps_bar = self.log_eps

    def update(self, accept_stat: float):
        self.count += 1
        eta = 1.0 / (self.count + self.t0)
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.delta - accept_stat)
        self.log_eps = self.mu - math.sqrt(self.count) / self.gamma * self.h_bar
        w = self.count ** (-self.kappa)
        self.log_eps_bar = w * self.log_eps + (1.0 - w) * self.log_eps_bar

    def restart(self):
        self.mu = math.log(10.0) + self.log_eps_bar
        self.log_eps = self.log_eps_bar
        self.h_bar = 0.0
        self.count = 0


def warmup_windows(warmup: int, init_frac: float = 0.15, term_frac: float = 0.10,
                   base_window: int = 25) -> list[int]:
    """Iteration indices (1-based) at which a metric window closes."""
    if warmup < 20:
        return []
    init_buffer = int(round(init_frac * warmup))
    term_buffer = int(round(term_frac * warmup))
    slow_end = warmup - term_buffer
    ends = []
    start = init_buffer
    size = base_window
    while start + size <= slow_end:
        if start + 3 * size > slow_end:
            size = slow_end - start
        ends.append(start + size)
        start += size
        size *= 2
    if not ends and slow_end > init_buffer:
        ends.append(slow_end)
    return ends


@dataclass
class _State:
    theta: NDArray
    rho: NDArray
    grad: NDArray
    logp: float


@dataclass
class _Tree:
    minus: _State
    plus: _State
    proposal: _State
    log_w: float
    sum_accept: float
    n_leapfrog: int
    divergent: bool
    turning: bool


class NutsKernel:
    """One-chain NUTS transition kernel over a TargetDensity."""

    def __init__(self, target: TargetDensity, metric: _Metric, max_tree_depth: int):
        self.target = target
        self.metric = metric
        self.max_tree_depth = max_tree_depth
        self.step_size = 1.0

    def leapfrog(self, state: _State, eps: float) -> _State:
        """ρ half-step, θ full step with M⁻¹ρ, ρ half-step."""
        rho = state.rho + 0.5 * eps * state.grad
        theta = state.theta + eps * self.metric.velocity(rho)
        logp, grad = self.target.log_density_and_gradient(theta)
        rho = rho + 0.5 * eps * grad
        return _State(theta=theta, rho=rho, grad=grad, logp=logp)

    def _hamiltonian(self, state: _State) -> float:
        return -state.logp + self.metric.kinetic(state.rho)

    def _uturn(self, minus: _State, plus: _State) -> bool:
        span = plus.theta - minus.theta
        return (
            float(span @ self.metric.velocity(minus.rho)) < 0.0
            or float(span @ self.metric.velocity(plus.rho)) < 0.0
        )

    def _step_batch(self, state: _State, direction: int, n: int, h0: float):
        """Run up to n leapfrog steps, stopping early at a divergence.

        Returns (thetas, rhos, grads, logps, dhs, n_done, diverged). Targets
        may provide an accelerated `leapfrog_batch` with the same contract
        (used with a diagonal metric only).
        """
        eps = direction * self.step_size
        fast = getattr(self.target, "leapfrog_batch", None)
        if fast is not None:
            return fast(state.theta, state.rho, state.grad, eps, n,
                        self.metric.inv, h0, MAX_DELTA_H)
        dim = state.theta.shape[0]
        thetas = np.empty((n, dim))
        rhos = np.empty((n, dim))
        grads = np.empty((n, dim))
        logps = np.empty(n)
        dhs = np.empty(n)
        current = state
        n_done = 0
        diverged = False
        for i in range(n):
            current = self.leapfrog(current, eps)
            thetas[i] = current.theta
            rhos[i] = current.rho
            grads[i] = current.grad
            logps[i] = current.logp
            if np.isfinite(current.logp):
                dh = self._hamiltonian(current) - h0
            else:
                dh = np.inf
            dhs[i] = dh
            n_done = i + 1
            if not np.isfinite(dh) or dh > MAX_DELTA_H:
                diverged = True
                break
        return thetas, rhos, grads, logps, dhs, n_done, diverged

    def _build_tree(self, state: _State, direction: int, depth: int, h0: float,
                    rng: np.random.Generator) -> _Tree:
        """Depth-d sub-tree: 2^d leapfrog states, multinomial proposal.

        Equivalent to the recursive doubling construction: the hierarchical
        pairwise proposal rule reduces to a flat multinomial over leaves with
        weights exp(−ΔH), and the merge-level U-turn checks correspond to
        every aligned block of size 2^m, evaluated in build order.
        """
        n = 2 ** depth
        thetas, rhos, grads, logps, dhs, n_done, diverged = self._step_batch(
            state, direction, n, h0)

        if self.metric.kind == "diag":
            vels = rhos[:n_done] * self.metric.inv
        else:
            vels = rhos[:n_done] @ self.metric.inv

        # turning events: an aligned block's check fires when its last leaf
        # completes; divergence fires at the divergent leaf itself
        turn_event = n + 1
        sign = 1.0 if direction > 0 else -1.0
        for m in range(1, depth + 1):
            size = 2 ** m
            if size > n_done:
                break
            starts = np.arange(0, n_done - size + 1, size)
            ends = starts + size - 1
            spans = sign * (thetas[ends] - thetas[starts])
            turned = (
                (np.einsum("ij,ij->i", spans, vels[starts]) < 0.0)
                | (np.einsum("ij,ij->i", spans, vels[ends]) < 0.0)
            )
            if np.any(turned):
                turn_event = min(turn_event, int(ends[np.argmax(turned)]) + 1)
        div_event = n_done if diverged else n + 1
        first_event = min(div_event, turn_event)

        n_leapfrog = min(n_done, first_event)
        finite = np.isfinite(dhs[:n_leapfrog])
        accepts = np.where(finite, np.exp(np.minimum(0.0, -dhs[:n_leapfrog])), 0.0)
        sum_accept = float(np.sum(accepts))

        def _state_at(i):
            return _State(theta=thetas[i], rho=rhos[i], grad=grads[i], logp=logps[i])

        if first_event <= n:
            stopped_div = div_event <= turn_event
            return _Tree(minus=state, plus=state, proposal=state, log_w=-np.inf,
                         sum_accept=sum_accept, n_leapfrog=n_leapfrog,
                         divergent=stopped_div, turning=not stopped_div)

        log_ws = -dhs[:n]
        total = float(logsumexp(log_ws))
        probs = np.exp(log_ws - total)
        pick = int(np.searchsorted(np.cumsum(probs), rng.random()))
        pick = min(pick, n - 1)
        first_state = _state_at(0)
        last_state = _state_at(n - 1)
        minus = first_state if direction > 0 else last_state
        plus = last_state if direction > 0 else first_state
        return _Tree(minus=minus, plus=plus, proposal=_state_at(pick), log_w=total,
                     sum_accept=sum_accept, n_leapfrog=n, divergent=False,
                     turning=False)

    def transition(self, theta: NDArray, logp: float, grad: NDArray,
                   rng: np.random.Generator):
        rho = self.metric.sample_momentum(rng)
        state = _State(theta=theta, rho=rho, grad=grad, logp=logp)
        h0 = self._hamiltonian(state)

        minus = plus = proposal = state
        log_w = 0.0  # weights relative to exp(−h0)
        sum_accept = 0.0
        n_leapfrog = 0
        divergent = False
        depth = 0
        # a cap of 0 still builds the depth-0 sub-tree: one leapfrog + accept test
        while depth < max(1, self.max_tree_depth):
            direction = 1 if rng.random() < 0.5 else -1
            start = plus if direction > 0 else minus
            sub = self._build_tree(start, direction, depth, h0, rng)
            sum_accept += sub.sum_accept
            n_leapfrog += sub.n_leapfrog
            if sub.divergent:
                divergent = True
                break
            if sub.turning:
                break
            # biased progressive sampling: favor the fresh sub-tree
            if math.log(rng.random()) < sub.log_w - log_w:
                proposal = sub.proposal
            log_w = np.logaddexp(log_w, sub.log_w)
            if direction > 0:
                plus = sub.plus
            else:
                minus = sub.minus
            depth += 1
            if self._uturn(minus, plus):
                break

        accept_stat = sum_accept / max(n_leapfrog, 1)
        energy = self._hamiltonian(proposal)
        stats = {"depth": depth, "divergent": divergent,
                 "accept_stat": accept_stat, "energy": energy}
        return proposal.theta, proposal.logp, proposal.grad, stats

    def find_reasonable_step_size(self, theta: NDArray, logp: float, grad: NDArray,
                                  rng: np.random.Generator, init: float = 1.0) -> float:
        """Double/halve ε until the one-step acceptance probability crosses ½."""
        eps = init
        rho = self.metric.sample_momentum(rng)
        state = _State(theta=theta, rho=rho, grad=grad, logp=logp)
        h0 = self._hamiltonian(state)

        def log_accept(eps_try: float) -> float:
            self.step_size = eps_try
            new = self.leapfrog(state, eps_try)
            if not np.isfinite(new.logp):
                return -np.inf
            return min(0.0, h0 - self._hamiltonian(new))

        direction = 1.0 if log_accept(eps) > math.log(0.5) else -1.0
        for _ in range(100):
            if direction * log_accept(eps) <= direction * math.log(0.5):
                break
            eps *= 2.0 ** direction
        self.step_size = eps
        return eps


def chain_rng(seed: int, chain_index: int) -> np.random.Generator:
    """Counter-based Philox stream keyed by (seed, chain index)."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(chain_index,)))
    )


def run_chain(target: TargetDensity, config: SamplerConfig, theta0: NDArray,
              chain_index: int = 0) -> ChainOutput:
    """Run warmup adaptation plus sampling for a single chain."""
    rng = chain_rng(config.seed, chain_index)
    dim = target.dimension
    theta = np.array(theta0, dtype=float)
    if theta.shape != (dim,):
        raise ValueError(f"initial point has shape {theta.shape}, expected ({dim},)")
    logp, grad = target.log_density_and_gradient(theta)
    if not np.isfinite(logp):
        raise ValueError("initial point has non-finite log density")

    metric = _Metric(config.metric_kind, dim)
    kernel = NutsKernel(target, metric, config.max_tree_depth)

    warmup = config.warmup_iters
    warmup_draws = np.empty((warmup, dim))
    warmup_logp = np.empty(warmup)
    if warmup > 0:
        eps0 = kernel.find_reasonable_step_size(theta, logp, grad, rng, config.init_step_size)
        da = _DualAveraging(log_eps=math.log(eps0), delta=config.target_accept)
        windows = warmup_windows(warmup)
        # the final ε-only buffer runs in two stages: a strong pull (γ=0.05)
        # recovering from the last metric change, then a damped polish
        # (γ=0.25) whose small oscillation keeps the frozen smoothed step
        # size from overshooting the target acceptance rate
        polish_at = windows[-1] + (warmup - windows[-1]) // 2 if windows else None
        window_start = 0
        for m in range(warmup):
            kernel.step_size = math.exp(da.log_eps)
            theta, logp, grad, stats = kernel.transition(theta, logp, grad, rng)
            da.update(stats["accept_stat"])
            warmup_draws[m] = theta
            warmup_logp[m] = logp
            if windows and m + 1 == windows[0]:
                metric.estimate(warmup_draws[window_start:m + 1])
                window_start = m + 1
                windows = windows[1:]
                # fresh metric changes the scale; re-tune ε from the smoothed value
                kernel.step_size = math.exp(da.log_eps_bar)
                eps0 = kernel.find_reasonable_step_size(theta, logp, grad, rng,
                                                        kernel.step_size)
                da = _DualAveraging(log_eps=math.log(eps0), delta=config.target_accept)
            elif polish_at is not None and m + 1 == polish_at:
                da = _DualAveraging(log_eps=da.log_eps_bar, delta=config.target_accept,
                                    gamma=0.25)
        kernel.step_size = math.exp(da.log_eps_bar)
    else:
        kernel.step_size = config.init_step_size

    s = config.sampling_iters
    draws = np.empty((s, dim))
    log_densities = np.empty(s)
    depths = np.empty(s, dtype=int)
    accepts = np.empty(s)
    divs = np.zeros(s, dtype=bool)
    energies = np.empty(s)
    for m in range(s):
        theta, logp, grad, stats = kernel.transition(theta, logp, grad, rng)
        draws[m] = theta
        log_densities[m] = logp
        depths[m] = stats["depth"]
        accepts[m] = stats["accept_stat"]
        divs[m] = stats["divergent"]
        energies[m] = stats["energy"]

    return ChainOutput(
        draws=draws, log_densities=log_densities,
        warmup_draws=warmup_draws, warmup_log_densities=warmup_logp,
        tree_depths=depths, accept_stats=accepts, divergences=divs,
        energies=energies, step_size=kernel.step_size,
        inv_metric=np.array(metric.inv, copy=True), chain_index=chain_index,
    )


def run_chains(target: TargetDensity, config: SamplerConfig,
               init: NDArray | Callable[[int, np.random.Generator], NDArray]) -> list[ChainOutput]:
    """Run n_chains chains, each deterministically seeded from (seed, index).

    `init` is either a fixed initial vector shared by all chains or a
    callable (chain_index, rng) → θ₀ drawing a restriction-compatible start;
    the callable consumes the chain's own stream, keeping runs reproducible.
    """
    outputs = []
    for c in range(config.n_chains):
        if callable(init):
            theta0 = init(c, chain_rng(config.seed, c + 10_000))
        else:
            theta0 = np.asarray(init, dtype=float)
        outputs.append(run_chain(target, config, theta0, chain_index=c))
    return outputs


def _irf_factors(lags: NDArray, k: int, n: int) -> NDArray:
    """M_h with Ψ_h = M_h B: M₀ = I, M_h = Σ_{i≤min(h,p)} Ãᵢ M_{h−i}."""
    p = lags.shape[0]
    mats = np.empty((k + 1, n, n))
    mats[0] = np.eye(n)
    for h in range(1, k + 1):
        acc = np.zeros((n, n))
        for i in range(1, min(h, p) + 1):
            acc += lags[i - 1] @ mats[h - i]
        mats[h] = acc
    return mats


def _column_order(comp: transforms.CompiledSchema, n: int) -> list[int]:
    """Restricted columns first, dependency sources before dependents."""
    deps: dict[int, set[int]] = {j: set() for j in range(n)}
    for pos, ref_pos in zip(comp.idx_dominated, comp.dominated_ref):
        deps[comp.slots[int(pos)][2]].add(comp.slots[int(ref_pos)][2])
    for r_pos, ref_pos in zip(comp.idx_ratio, comp.ratio_ref):
        deps[comp.slots[int(r_pos)][2]].add(comp.slots[int(ref_pos)][2])
    restricted = [j for j in range(n) if j not in comp.free_columns]
    ordered: list[int] = []
    remaining = set(restricted)
    while remaining:
        progress = [j for j in sorted(remaining) if not (deps[j] & remaining - {j})]
        if not progress:  # cycles are excluded by validation; break defensively
            progress = [sorted(remaining)[0]]
        for j in progress:
            ordered.append(j)
            remaining.discard(j)
    return ordered + list(comp.free_columns)


def _column_satisfied(comp: transforms.CompiledSchema, col: int, col_vals: NDArray,
                      built: dict[tuple[int, int, int], float]) -> bool:
    """Check column `col` entries given values per horizon (k+1, N) and built cells."""
    schema = comp.schema
    for r in schema.entries:
        if r.col != col:
            continue
        v = col_vals[r.horizon, r.row]
        if r.kind is transforms.Kind.POSITIVE and v <= 0.0:
            return False
        if r.kind is transforms.Kind.NEGATIVE and v >= 0.0:
            return False
        if r.kind is transforms.Kind.BOUND and not r.bounds[0] < v < r.bounds[1]:
            return False
        if r.kind is transforms.Kind.RANK_DOMINANT and v <= 0.0:
            return False
        if r.kind is transforms.Kind.RANK_DOMINATED:
            dom = built.get(_dominant_cell(comp, r))
            if dom is not None and abs(v) >= dom:
                return False
        if r.kind is transforms.Kind.RATIO_BOUND:
            ref = built.get(r.ref) if r.ref[2] != col else col_vals[r.ref[0], r.ref[1]]
            if ref is not None:
                if ref <= 0.0 or not r.bounds[0] < v / ref < r.bounds[1]:
                    return False
    return True


def _dominant_cell(comp: transforms.CompiledSchema, r: transforms.Restriction):
    for pos in comp.idx_dominant:
        cell = comp.slots[int(pos)]
        if cell[0] == r.horizon and cell[1] == r.row:
            return cell
    return None


def initialize(schema: RestrictionSchema, posterior: NIWParams, shape: ModelShape,
               rng: np.random.Generator, parameterization: str = "centered",
               column_tries: int = 100_000, outer_tries: int = 100) -> NDArray:
    """Draw a restriction-compatible starting point.

    Draws (Σ, Ã) from the NIW posterior and constructs an orthogonal matrix
    compatible with the restrictions one column at a time: candidate unit
    vectors are projected onto the null space of the zero-restriction rows
    and orthogonalized against accepted columns, then retried until the
    column's inequality entries hold. Raises InitFailed when the identified
    set appears empty or tiny for every attempted reduced-form draw.
    """
    from .oracle import sample_niw

    comp = transforms.compile_schema(schema)
    n, k = shape.n_vars, shape.restricted_horizon
    for _ in range(outer_tries):
        sigma, a_stack = sample_niw(posterior, rng)
        intercept, exog, lags = unstack_coefficients(a_stack, shape)
        p_chol = np.linalg.cholesky(sigma)
        factors = _irf_factors(lags, k, n)

        q_cols: list[NDArray] = []
        built: dict[tuple[int, int, int], float] = {}
        ok = True
        for col in _column_order(comp, n):
            normals = [
                (factors[h] @ p_chol).T[:, i]
                for (h, i, j) in comp.zero_cells if j == col
            ]
            basis = q_cols + normals
            if basis:
                bmat = np.column_stack(basis)
                u, sv, _ = np.linalg.svd(bmat, full_matrices=False)
                u = u[:, sv > 1e-12 * max(sv[0], 1.0)]
                if u.shape[1] >= n:
                    ok = False  # no direction left; zeros over-constrain this column
                    break
            else:
                u = np.zeros((n, 0))

            accepted = None
            is_restricted = col not in comp.free_columns
            for _ in range(column_tries):
                x = rng.standard_normal(n)
                x -= u @ (u.T @ x)
                norm = np.linalg.norm(x)
                if norm < 1e-10:
                    continue
                q = x / norm
                if not is_restricted:
                    accepted = q
                    break
                col_vals = np.array([factors[h] @ (p_chol @ q) for h in range(k + 1)])
                if _column_satisfied(comp, col, col_vals, built):
                    accepted = q
                    break
                if _column_satisfied(comp, col, -col_vals, built):
                    accepted = -q
                    break
            if accepted is None:
                ok = False
                break
            q_cols.append(accepted)
            vals = np.array([factors[h] @ (p_chol @ accepted) for h in range(k + 1)])
            for h in range(k + 1):
                for i in range(n):
                    built[(h, i, col)] = vals[h, i]

        if not ok:
            continue

        q_mat = np.column_stack(q_cols)
        order = _column_order(comp, n)
        inv_order = np.argsort(np.array(order))
        q_mat = q_mat[:, inv_order]
        b = p_chol @ q_mat
        if np.linalg.slogdet(b)[0] <= 0.0:
            if comp.flip_col >= 0:
                b[:, comp.flip_col] = -b[:, comp.flip_col]
            else:
                continue
        psis = np.array([factors[h] @ b for h in range(1, k + 1)]).reshape(k, n, n)
        if not transforms.check_restrictions(schema, np.concatenate([b[None], psis]) if k else b[None]):
            continue

        structural = StructuralParams(
            intercept=intercept, exog=exog, impact=b, irfs=psis, free_lags=lags[k:],
        )
        if parameterization == "noncentered":
            l_sigma = np.linalg.cholesky(b @ b.T)
            z = solve_right_upper(solve_lower(posterior.chol_omega, a_stack - posterior.phi), l_sigma)
            theta_irf = transforms.inverse(schema, structural)[:comp.n_irf]
            return np.concatenate([theta_irf, z.ravel()])
        return transforms.inverse(schema, structural)

    raise InitFailed(
        f"no restriction-compatible draw found in {outer_tries} reduced-form draws"
    )
