"""Reparameterization toolkit: restriction schemas compiled to bijective maps.

A RestrictionSchema declares per-element restrictions on the impact matrix
and the restricted-horizon IRF matrices. Compilation produces a layout that
maps an unconstrained vector θ onto structural parameters satisfying every
restriction by construction, together with the exact log-Jacobian of the
map and its gradient. Zero restrictions consume no θ positions and are
filled with exact 0.0.

Transform menu (value, per-entry log-Jacobian term):
  Free            α = θ                            0
  Positive        α = e^θ                          θ
  Negative        α = −e^θ                         θ
  Bound(a,b)      α = a+(b−a)σ(θ)                  log(b−a)+logσ+log(1−σ)
  RankDominant    α = e^θ                          N_g·θ + (N_g−1)·log 2
  RankDominated   α = α_dom·(2σ(θ)−1)              logσ+log(1−σ)
  RatioBound      α = ref·(a+(b−a)σ(θ))            log ref+log(b−a)+logσ+log(1−σ)

Ranking groups live in a single (horizon, row); RatioBound references must
resolve to a Positive or RankDominant entry, which keeps the dependency
graph triangular so the Jacobian determinant is the product of diagonals.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy.special import expit

from .errors import LayoutMismatch, OutsideRestrictedSet, SchemaError
from .varmodel import ModelShape, StructuralParams

ZERO_TOL = 1e-12


class Kind(enum.Enum):
    FREE = "free"
    POSITIVE = "positive"
    NEGATIVE = "negative"
    ZERO = "zero"
    BOUND = "bound"
    RANK_DOMINANT = "rank_dominant"
    RANK_DOMINATED = "rank_dominated"
    RATIO_BOUND = "ratio_bound"


@dataclass(frozen=True)
class Restriction:
    """One restricted cell: horizon h (0 = impact), row i, column j."""

    horizon: int
    row: int
    col: int
    kind: Kind
    bounds: tuple[float, float] | None = None   # Bound / RatioBound
    ref: tuple[int, int, int] | None = None     # RatioBound target (h, i, j)
    ref_col: int | None = None                  # RankDominated group column


@dataclass(frozen=True)
class RestrictionSchema:
    """Declarative restriction table over Ψ₀..Ψ_k plus naming metadata."""

    shape: ModelShape
    entries: tuple[Restriction, ...]
    var_names: tuple[str, ...] = ()
    shock_names: tuple[str, ...] = ()
    normalize_det: bool = True  # det(B) > 0 normalization, always on

    def __post_init__(self):
        n = self.shape.n_vars
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.var_names:
            object.__setattr__(self, "var_names", tuple(f"y{i + 1}" for i in range(n)))
        if not self.shock_names:
            object.__setattr__(self, "shock_names", tuple(f"shock{j + 1}" for j in range(n)))


@dataclass(frozen=True)
class TransformResult:
    structural: StructuralParams
    log_jacobian: float


@dataclass
class CompiledSchema:
    """Layout metadata: θ slot order, per-kind index arrays, free blocks."""

    schema: RestrictionSchema
    slots: list[tuple[int, int, int]]            # (h, i, j) per θ position, zeros excluded
    slot_index: dict[tuple[int, int, int], int]
    kinds: list[Kind]
    zero_cells: list[tuple[int, int, int]]
    free_columns: list[int]                      # columns free at every horizon ≤ k
    names: list[str]                             # one per θ position, IRF block only
    # vectorized views
    idx_free: NDArray = field(default_factory=lambda: np.empty(0, dtype=int))
    idx_pos: NDArray = field(default_factory=lambda: np.empty(0, dtype=int))
    idx_neg: NDArray = field(default_factory=lambda: np.empty(0, dtype=int))
    idx_bound: NDArray = field(default_factory=lambda: np.empty(0, dtype=int))
    bound_lo: NDArray = field(default_factory=lambda: np.empty(0))
    bound_hi: NDArray = field(default_factory=lambda: np.empty(0))
    idx_dominant: NDArray = field(default_factory=lambda: np.empty(0, dtype=int))
    group_sizes: NDArray = field(default_factory=lambda: np.empty(0, dtype=int))
    idx_dominated: NDArray = field(default_factory=lambda: np.empty(0, dtype=int))
    dominated_ref: NDArray = field(default_factory=lambda: np.empty(0, dtype=int))
    idx_ratio: NDArray = field(default_factory=lambda: np.empty(0, dtype=int))
    ratio_ref: NDArray = field(default_factory=lambda: np.empty(0, dtype=int))
    ratio_lo: NDArray = field(default_factory=lambda: np.empty(0))
    ratio_hi: NDArray = field(default_factory=lambda: np.empty(0))
    # scatter positions per horizon: (slot_positions, rows, cols)
    horizon_scatter: list[tuple[NDArray, NDArray, NDArray]] = field(default_factory=list)
    flip_slots: NDArray = field(default_factory=lambda: np.empty(0, dtype=int))
    flip_col: int = -1
    # layout sizes, filled by compile_schema (plain attributes: hot-path reads)
    n_irf: int = 0
    n_free_coeffs: int = 0
    dim: int = 0

    def coeff_names(self) -> list[str]:
        """Names for the free coefficient block, in θ order."""
        shape = self.schema.shape
        vn = self.schema.var_names
        out = [f"c.{v}" for v in vn]
        out += [f"D.{v}.x{e + 1}" for v in vn for e in range(shape.n_exog)]
        for lag in range(shape.restricted_horizon + 1, shape.n_lags + 1):
            out += [f"A{lag}.{vi}.{vj}" for vi in vn for vj in vn]
        return out


def validate(schema: RestrictionSchema) -> None:
    """Check schema feasibility; raises SchemaError naming the violated rule."""
    shape = schema.shape
    n, k = shape.n_vars, shape.restricted_horizon
    seen: set[tuple[int, int, int]] = set()
    by_cell: dict[tuple[int, int, int], Restriction] = {}
    for r in schema.entries:
        if r.horizon > k:
            raise SchemaError(
                f"restriction horizon {r.horizon} exceeds k={k} (restricted horizons "
                "must not exceed the declared restricted horizon)"
            )
        if r.horizon < 0:
            raise SchemaError("restriction horizon must be nonnegative")
        if not (0 <= r.row < n and 0 <= r.col < n):
            raise SchemaError(f"cell ({r.row},{r.col}) outside {n}×{n} grid")
        cell = (r.horizon, r.row, r.col)
        if cell in seen:
            raise SchemaError(f"duplicate restriction at horizon {r.horizon}, cell ({r.row},{r.col})")
        seen.add(cell)
        by_cell[cell] = r
        if r.kind in (Kind.BOUND, Kind.RATIO_BOUND):
            if r.bounds is None or not r.bounds[0] < r.bounds[1]:
                raise SchemaError("bounds require a < b")
        if r.kind is Kind.RATIO_BOUND and r.ref is None:
            raise SchemaError("ratio bound requires a reference cell")

    # ranking groups: unique dominant per (horizon, row), dominated need one
    for (h, i), group in _rank_groups(schema).items():
        dominants = [r for r in group if r.kind is Kind.RANK_DOMINANT]
        dominated = [r for r in group if r.kind is Kind.RANK_DOMINATED]
        if len(dominants) > 1:
            raise SchemaError(f"two RankDominant entries in row {i} at horizon {h}")
        if dominated and not dominants:
            raise SchemaError(f"RankDominated entries without a dominant in row {i} at horizon {h}")
        if dominants:
            dom_col = dominants[0].col
            for r in dominated:
                if r.ref_col is not None and r.ref_col != dom_col:
                    raise SchemaError("RankDominated ref_col does not match the group's dominant")

    for r in schema.entries:
        if r.kind is Kind.RATIO_BOUND:
            target = by_cell.get(r.ref)
            if target is None or target.kind not in (Kind.POSITIVE, Kind.RANK_DOMINANT):
                raise SchemaError(
                    "ratio-bound reference must resolve to a Positive or RankDominant entry"
                )
            if r.ref == (r.horizon, r.row, r.col):
                raise SchemaError("ratio bound cannot reference itself")

    # B must stay invertible: forbid all-zero rows/columns at impact
    zero_at_impact = {(r.row, r.col) for r in schema.entries if r.kind is Kind.ZERO and r.horizon == 0}
    for j in range(n):
        if all((i, j) in zero_at_impact for i in range(n)):
            raise SchemaError(f"impact column {j} is entirely zero; B would be singular")
    for i in range(n):
        if all((i, j) in zero_at_impact for j in range(n)):
            raise SchemaError(f"impact row {i} is entirely zero; B would be singular")


def _rank_groups(schema: RestrictionSchema) -> dict[tuple[int, int], list[Restriction]]:
    groups: dict[tuple[int, int], list[Restriction]] = {}
    for r in schema.entries:
        if r.kind in (Kind.RANK_DOMINANT, Kind.RANK_DOMINATED):
            groups.setdefault((r.horizon, r.row), []).append(r)
    return groups


@lru_cache(maxsize=64)
def compile_schema(schema: RestrictionSchema) -> CompiledSchema:
    """Validate and build the θ layout with vectorized per-kind index arrays."""
    validate(schema)
    shape = schema.shape
    n, k = shape.n_vars, shape.restricted_horizon
    by_cell = {(r.horizon, r.row, r.col): r for r in schema.entries}

    slots: list[tuple[int, int, int]] = []
    kinds: list[Kind] = []
    zero_cells: list[tuple[int, int, int]] = []
    names: list[str] = []
    for h in range(k + 1):
        for i in range(n):
            for j in range(n):
                r = by_cell.get((h, i, j))
                kind = r.kind if r is not None else Kind.FREE
                if kind is Kind.ZERO:
                    zero_cells.append((h, i, j))
                    continue
                slots.append((h, i, j))
                kinds.append(kind)
                label = "B" if h == 0 else f"Psi{h}"
                names.append(f"{label}.{schema.var_names[i]}.{schema.shock_names[j]}")
    slot_index = {cell: pos for pos, cell in enumerate(slots)}

    restricted_cols = {r.col for r in schema.entries if r.kind is not Kind.FREE}
    free_columns = [j for j in range(n) if j not in restricted_cols]

    n_free = n + n * shape.n_exog + (shape.n_lags - k) * n * n
    comp = CompiledSchema(
        schema=schema, slots=slots, slot_index=slot_index, kinds=kinds,
        zero_cells=zero_cells, free_columns=free_columns, names=names,
        n_irf=len(slots), n_free_coeffs=n_free, dim=len(slots) + n_free,
    )

    idx_free, idx_pos, idx_neg, idx_bound = [], [], [], []
    bound_lo, bound_hi = [], []
    idx_ratio, ratio_ref, ratio_lo, ratio_hi = [], [], [], []
    dominant_by_group: dict[tuple[int, int], int] = {}
    for pos, (cell, kind) in enumerate(zip(slots, kinds)):
        if kind is Kind.FREE:
            idx_free.append(pos)
        elif kind is Kind.POSITIVE:
            idx_pos.append(pos)
        elif kind is Kind.NEGATIVE:
            idx_neg.append(pos)
        elif kind is Kind.BOUND:
            idx_bound.append(pos)
            lo, hi = by_cell[cell].bounds
            bound_lo.append(lo)
            bound_hi.append(hi)
        elif kind is Kind.RANK_DOMINANT:
            dominant_by_group[(cell[0], cell[1])] = pos
        elif kind is Kind.RATIO_BOUND:
            idx_ratio.append(pos)
            ratio_ref.append(slot_index[by_cell[cell].ref])
            lo, hi = by_cell[cell].bounds
            ratio_lo.append(lo)
            ratio_hi.append(hi)

    idx_dominated, dominated_ref = [], []
    group_sizes: dict[int, int] = {pos: 1 for pos in dominant_by_group.values()}
    for pos, (cell, kind) in enumerate(zip(slots, kinds)):
        if kind is Kind.RANK_DOMINATED:
            dom_pos = dominant_by_group[(cell[0], cell[1])]
            idx_dominated.append(pos)
            dominated_ref.append(dom_pos)
            group_sizes[dom_pos] += 1

    comp.idx_free = np.array(idx_free, dtype=int)
    comp.idx_pos = np.array(idx_pos, dtype=int)
    comp.idx_neg = np.array(idx_neg, dtype=int)
    comp.idx_bound = np.array(idx_bound, dtype=int)
    comp.bound_lo = np.array(bound_lo)
    comp.bound_hi = np.array(bound_hi)
    comp.idx_dominant = np.array(sorted(dominant_by_group.values()), dtype=int)
    comp.group_sizes = np.array([group_sizes[p] for p in comp.idx_dominant], dtype=int)
    comp.idx_dominated = np.array(idx_dominated, dtype=int)
    comp.dominated_ref = np.array(dominated_ref, dtype=int)
    comp.idx_ratio = np.array(idx_ratio, dtype=int)
    comp.ratio_ref = np.array(ratio_ref, dtype=int)
    comp.ratio_lo = np.array(ratio_lo)
    comp.ratio_hi = np.array(ratio_hi)

    scatter = []
    for h in range(k + 1):
        positions = [pos for pos, cell in enumerate(slots) if cell[0] == h]
        rows = np.array([slots[pos][1] for pos in positions], dtype=int)
        cols = np.array([slots[pos][2] for pos in positions], dtype=int)
        scatter.append((np.array(positions, dtype=int), rows, cols))
    comp.horizon_scatter = scatter

    if free_columns:
        comp.flip_col = free_columns[-1]
        comp.flip_slots = np.array(
            [pos for pos, cell in enumerate(slots) if cell[2] == comp.flip_col], dtype=int
        )
    return comp


def _softplus(x: NDArray) -> NDArray:
    return np.logaddexp(0.0, x)


@dataclass
class IrfForward:
    """Forward pass over the restricted IRF block, with VJP workspace."""

    values: NDArray          # per-slot structural values (after any flip)
    raw_values: NDArray      # before flip
    impact: NDArray          # (N, N)
    psis: NDArray            # (k, N, N)
    log_jacobian: float
    flipped: bool
    rejected: bool           # det(B) ≤ 0 with no fully-free column


def forward_irf(comp: CompiledSchema, theta_irf: NDArray) -> IrfForward:
    """Map the IRF block of θ to (B, Ψ₁..Ψ_k) and the schema log-Jacobian."""
    if theta_irf.shape != (comp.n_irf,):
        raise LayoutMismatch(f"expected {comp.n_irf} IRF coordinates, got {theta_irf.shape}")
    shape = comp.schema.shape
    n, k = shape.n_vars, shape.restricted_horizon
    vals = np.empty(comp.n_irf)
    log_jac = 0.0

    vals[comp.idx_free] = theta_irf[comp.idx_free]
    if comp.idx_pos.size:
        t = theta_irf[comp.idx_pos]
        vals[comp.idx_pos] = np.exp(t)
        log_jac += float(np.sum(t))
    if comp.idx_neg.size:
        t = theta_irf[comp.idx_neg]
        vals[comp.idx_neg] = -np.exp(t)
        log_jac += float(np.sum(t))
    if comp.idx_bound.size:
        t = theta_irf[comp.idx_bound]
        vals[comp.idx_bound] = comp.bound_lo + (comp.bound_hi - comp.bound_lo) * expit(t)
        log_jac += float(
            np.sum(np.log(comp.bound_hi - comp.bound_lo) - _softplus(t) - _softplus(-t))
        )
    if comp.idx_dominant.size:
        t = theta_irf[comp.idx_dominant]
        vals[comp.idx_dominant] = np.exp(t)
        log_jac += float(np.sum(comp.group_sizes * t) + np.sum((comp.group_sizes - 1) * np.log(2.0)))
    if comp.idx_dominated.size:
        t = theta_irf[comp.idx_dominated]
        vals[comp.idx_dominated] = vals[comp.dominated_ref] * np.tanh(0.5 * t)
        log_jac += float(np.sum(-_softplus(t) - _softplus(-t)))
    if comp.idx_ratio.size:
        t = theta_irf[comp.idx_ratio]
        ratio = comp.ratio_lo + (comp.ratio_hi - comp.ratio_lo) * expit(t)
        vals[comp.idx_ratio] = vals[comp.ratio_ref] * ratio
        # log ref = θ_ref because references are exponential-transformed
        log_jac += float(
            np.sum(theta_irf[comp.ratio_ref]
                   + np.log(comp.ratio_hi - comp.ratio_lo) - _softplus(t) - _softplus(-t))
        )

    mats = np.zeros((k + 1, n, n))
    for h, (positions, rows, cols) in enumerate(comp.horizon_scatter):
        mats[h, rows, cols] = vals[positions]

    raw_values = vals
    flipped = False
    rejected = False
    sign = np.linalg.slogdet(mats[0])[0]
    if comp.schema.normalize_det and sign <= 0.0:
        if sign < 0.0 and comp.flip_col >= 0:
            vals = vals.copy()
            vals[comp.flip_slots] = -vals[comp.flip_slots]
            mats[:, :, comp.flip_col] = -mats[:, :, comp.flip_col]
            flipped = True
        else:
            rejected = True

    return IrfForward(
        values=vals, raw_values=raw_values, impact=mats[0], psis=mats[1:],
        log_jacobian=log_jac, flipped=flipped, rejected=rejected,
    )


def irf_vjp(comp: CompiledSchema, theta_irf: NDArray, fwd: IrfForward,
            impact_bar: NDArray, psis_bar: NDArray) -> NDArray:
    """Pull cotangents of (B, Ψ₁..Ψ_k) back to the IRF block of θ."""
    k = comp.schema.shape.restricted_horizon
    mats_bar = np.concatenate([impact_bar[None], psis_bar]) if k else impact_bar[None]
    slot_bar = np.empty(comp.n_irf)
    for h, (positions, rows, cols) in enumerate(comp.horizon_scatter):
        slot_bar[positions] = mats_bar[h, rows, cols]
    if fwd.flipped:
        slot_bar[comp.flip_slots] = -slot_bar[comp.flip_slots]

    vals = fwd.raw_values
    theta_bar = np.zeros(comp.n_irf)
    theta_bar[comp.idx_free] = slot_bar[comp.idx_free]
    for idx in (comp.idx_pos, comp.idx_neg):
        if idx.size:
            theta_bar[idx] = slot_bar[idx] * vals[idx]
    if comp.idx_bound.size:
        sig = expit(theta_irf[comp.idx_bound])
        theta_bar[comp.idx_bound] = (
            slot_bar[comp.idx_bound] * (comp.bound_hi - comp.bound_lo) * sig * (1.0 - sig)
        )
    if comp.idx_dominant.size:
        theta_bar[comp.idx_dominant] = slot_bar[comp.idx_dominant] * vals[comp.idx_dominant]
    if comp.idx_dominated.size:
        sig = expit(theta_irf[comp.idx_dominated])
        dom_vals = vals[comp.dominated_ref]
        theta_bar[comp.idx_dominated] = slot_bar[comp.idx_dominated] * dom_vals * 2.0 * sig * (1.0 - sig)
        # dα_i/dθ_dom = α_i
        np.add.at(theta_bar, comp.dominated_ref, slot_bar[comp.idx_dominated] * vals[comp.idx_dominated])
    if comp.idx_ratio.size:
        sig = expit(theta_irf[comp.idx_ratio])
        ref_vals = vals[comp.ratio_ref]
        theta_bar[comp.idx_ratio] = (
            slot_bar[comp.idx_ratio] * ref_vals * (comp.ratio_hi - comp.ratio_lo) * sig * (1.0 - sig)
        )
        # dα/dθ_ref = α
        np.add.at(theta_bar, comp.ratio_ref, slot_bar[comp.idx_ratio] * vals[comp.idx_ratio])
    return theta_bar


def log_jacobian_grad(comp: CompiledSchema, theta_irf: NDArray) -> NDArray:
    """Gradient of the schema log-Jacobian with respect to the IRF block of θ."""
    g = np.zeros(comp.n_irf)
    g[comp.idx_pos] = 1.0
    g[comp.idx_neg] = 1.0
    if comp.idx_bound.size:
        g[comp.idx_bound] = 1.0 - 2.0 * expit(theta_irf[comp.idx_bound])
    if comp.idx_dominant.size:
        g[comp.idx_dominant] = comp.group_sizes.astype(float)
    if comp.idx_dominated.size:
        g[comp.idx_dominated] = 1.0 - 2.0 * expit(theta_irf[comp.idx_dominated])
    if comp.idx_ratio.size:
        g[comp.idx_ratio] = 1.0 - 2.0 * expit(theta_irf[comp.idx_ratio])
        np.add.at(g, comp.ratio_ref, 1.0)
    return g


def _split_free(comp: CompiledSchema, theta_free: NDArray) -> tuple[NDArray, NDArray, NDArray]:
    shape = comp.schema.shape
    n, k, p = shape.n_vars, shape.restricted_horizon, shape.n_lags
    ofs = 0
    intercept = theta_free[ofs:ofs + n]
    ofs += n
    exog = theta_free[ofs:ofs + n * shape.n_exog].reshape(n, shape.n_exog)
    ofs += n * shape.n_exog
    free_lags = theta_free[ofs:].reshape(p - k, n, n)
    return intercept, exog, free_lags


def forward(schema: RestrictionSchema, theta: NDArray) -> TransformResult:
    """Map θ to structural parameters satisfying every schema entry.

    Raises OutsideRestrictedSet when det(B) ≤ 0 and no fully-free column is
    available to flip; samplers treat that region as log-density −∞ instead
    of calling this directly.
    """
    comp = compile_schema(schema)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (comp.dim,):
        raise LayoutMismatch(f"θ has shape {theta.shape}, layout expects ({comp.dim},)")
    fwd = forward_irf(comp, theta[:comp.n_irf])
    if fwd.rejected:
        raise OutsideRestrictedSet("det(B) ≤ 0 with every column restricted")
    intercept, exog, free_lags = _split_free(comp, theta[comp.n_irf:])
    structural = StructuralParams(
        intercept=intercept.copy(), exog=exog.copy(), impact=fwd.impact,
        irfs=fwd.psis, free_lags=free_lags.copy(),
    )
    return TransformResult(structural=structural, log_jacobian=fwd.log_jacobian)


def inverse(schema: RestrictionSchema, s: StructuralParams) -> NDArray:
    """Recover θ from structural parameters strictly inside the restricted set."""
    comp = compile_schema(schema)
    shape = schema.shape
    n, k = shape.n_vars, shape.restricted_horizon
    if s.impact.shape != (n, n) or s.irfs.shape[0] != k:
        raise LayoutMismatch("structural parameters do not match the schema shape")
    mats = np.concatenate([s.impact[None], s.irfs]) if k else s.impact[None]

    for (h, i, j) in comp.zero_cells:
        if abs(mats[h, i, j]) > ZERO_TOL:
            raise OutsideRestrictedSet(f"zero cell ({h},{i},{j}) has value {mats[h, i, j]!r}")

    vals = np.empty(comp.n_irf)
    for h, (positions, rows, cols) in enumerate(comp.horizon_scatter):
        vals[positions] = mats[h, rows, cols]

    theta_irf = np.empty(comp.n_irf)
    theta_irf[comp.idx_free] = vals[comp.idx_free]

    def _log_positive(x: NDArray, what: str) -> NDArray:
        if np.any(x <= 0.0):
            raise OutsideRestrictedSet(f"{what} entry must be strictly positive")
        return np.log(x)

    theta_irf[comp.idx_pos] = _log_positive(vals[comp.idx_pos], "positive")
    theta_irf[comp.idx_neg] = _log_positive(-vals[comp.idx_neg], "negative")
    if comp.idx_bound.size:
        u = (vals[comp.idx_bound] - comp.bound_lo) / (comp.bound_hi - comp.bound_lo)
        if np.any(u <= 0.0) or np.any(u >= 1.0):
            raise OutsideRestrictedSet("bounded entry outside its open interval")
        theta_irf[comp.idx_bound] = np.log(u) - np.log1p(-u)
    theta_irf[comp.idx_dominant] = _log_positive(vals[comp.idx_dominant], "rank-dominant")
    if comp.idx_dominated.size:
        ratio = vals[comp.idx_dominated] / vals[comp.dominated_ref]
        if np.any(np.abs(ratio) >= 1.0):
            raise OutsideRestrictedSet("dominated entry not strictly dominated in absolute value")
        theta_irf[comp.idx_dominated] = 2.0 * np.arctanh(ratio)
    if comp.idx_ratio.size:
        u = (vals[comp.idx_ratio] / vals[comp.ratio_ref] - comp.ratio_lo) / (comp.ratio_hi - comp.ratio_lo)
        if np.any(u <= 0.0) or np.any(u >= 1.0):
            raise OutsideRestrictedSet("ratio-bounded entry outside its open interval")
        theta_irf[comp.idx_ratio] = np.log(u) - np.log1p(-u)

    free = np.concatenate([
        np.asarray(s.intercept, dtype=float).ravel(),
        np.asarray(s.exog, dtype=float).ravel(),
        np.asarray(s.free_lags, dtype=float).ravel(),
    ])
    if free.shape[0] != comp.n_free_coeffs:
        raise LayoutMismatch("free coefficient block does not match the schema shape")
    return np.concatenate([theta_irf, free])


def check_restrictions(schema: RestrictionSchema, irfs) -> bool:
    """True iff every entry's restriction holds (strict inequalities, exact-ish zeros)."""
    comp = compile_schema(schema)
    k = schema.shape.restricted_horizon
    mats = np.asarray(irfs, dtype=float)
    if mats.shape[0] < k + 1:
        raise ValueError(f"need IRFs through horizon {k}, got {mats.shape[0]}")

    for (h, i, j) in comp.zero_cells:
        if abs(mats[h, i, j]) > ZERO_TOL:
            return False
    vals = np.empty(comp.n_irf)
    for h, (positions, rows, cols) in enumerate(comp.horizon_scatter):
        vals[positions] = mats[h, rows, cols]

    if np.any(vals[comp.idx_pos] <= 0.0) or np.any(vals[comp.idx_neg] >= 0.0):
        return False
    if comp.idx_bound.size and (
        np.any(vals[comp.idx_bound] <= comp.bound_lo) or np.any(vals[comp.idx_bound] >= comp.bound_hi)
    ):
        return False
    if np.any(vals[comp.idx_dominant] <= 0.0):
        return False
    if comp.idx_dominated.size and np.any(
        np.abs(vals[comp.idx_dominated]) >= vals[comp.dominated_ref]
    ):
        return False
    if comp.idx_ratio.size:
        ref = vals[comp.ratio_ref]
        if np.any(ref <= 0.0):
            return False
        ratio = vals[comp.idx_ratio] / ref
        if np.any(ratio <= comp.ratio_lo) or np.any(ratio >= comp.ratio_hi):
            return False
    return True


def zero_projection(schema: RestrictionSchema) -> CompiledSchema:
    """The compiled θ layout; Zero cells consume no positions and map to 0.0."""
    return compile_schema(schema)
