"""Run configuration, dataset ingestion, and result-bundle serialization."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from ..bayes import FlatPrior, NIWParams
from ..errors import ConfigError
from ..sampler import SamplerConfig
from ..transforms import RestrictionSchema
from ..varmodel import ModelShape
from .schema_format import parse_schema_text

SCHEMA_VERSION = 1


@dataclass
class Dataset:
    columns: list[str]
    values: NDArray              # (T, N) selected numeric columns
    dates: list[str] | None      # carried through to outputs, unused in math
    exog: NDArray | None = None
    exog_columns: list[str] = field(default_factory=list)


def read_data_csv(path: Path, columns: list[str] | None = None,
                  date_column: str | None = None,
                  exog_columns: list[str] | None = None) -> Dataset:
    """Header CSV; an optional leading date column is carried, not used."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ConfigError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]

    date_idx = None
    if date_column is not None:
        if date_column not in header:
            raise ConfigError(f"{path}: date column {date_column!r} not found")
        date_idx = header.index(date_column)
    else:
        try:
            float(body[0][0])
        except ValueError:
            date_idx = 0

    numeric_cols = [h for i, h in enumerate(header) if i != date_idx]
    selected = columns if columns else [c for c in numeric_cols if c not in (exog_columns or [])]
    for c in list(selected) + list(exog_columns or []):
        if c not in numeric_cols:
            raise ConfigError(f"{path}: column {c!r} not found (have {numeric_cols})")

    def col_values(name: str) -> NDArray:
        idx = header.index(name)
        try:
            return np.array([float(r[idx]) for r in body])
        except ValueError as exc:
            raise ConfigError(f"{path}: column {name!r} has non-numeric entries") from exc

    values = np.column_stack([col_values(c) for c in selected])
    exog = (
        np.column_stack([col_values(c) for c in exog_columns])
        if exog_columns else None
    )
    dates = [r[date_idx] for r in body] if date_idx is not None else None
    return Dataset(columns=list(selected), values=values, dates=dates,
                   exog=exog, exog_columns=list(exog_columns or []))


@dataclass
class RunConfig:
    data: Path
    schema_path: Path
    lags: int
    columns: list[str] | None = None
    date_column: str | None = None
    exog_columns: list[str] = field(default_factory=list)
    prior: dict = field(default_factory=lambda: {"type": "flat"})
    horizon: int = 12
    parameterization: str = "auto"
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    metric: str = "auto"
    out: Path = Path("results")
    config_path: Path | None = None
    schema_text: str = ""

    @classmethod
    def from_file(cls, path: str | Path, overrides: dict | None = None) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
        return cls.from_dict(raw, base_dir=path.parent, config_path=path,
                             overrides=overrides or {})

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path = Path("."), config_path: Path | None = None,
                  overrides: dict | None = None) -> "RunConfig":
        overrides = overrides or {}
        where = config_path or "<config>"

        def need(key):
            if key not in raw:
                raise ConfigError(f"{where}: missing required key {key!r}")
            return raw[key]

        sampler_raw = dict(raw.get("sampler", {}))
        metric = sampler_raw.pop("metric", "auto")
        for k in ("seed", "chains"):
            if k in overrides and overrides[k] is not None:
                sampler_raw["seed" if k == "seed" else "n_chains"] = overrides[k]
        alias = {"warmup": "warmup_iters", "samples": "sampling_iters", "chains": "n_chains"}
        sampler_kwargs = {alias.get(k, k): v for k, v in sampler_raw.items()}
        try:
            sampler = SamplerConfig(**sampler_kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: bad sampler block ({exc})") from exc
        if metric not in ("auto", "diag", "dense"):
            raise ConfigError(f"{where}: metric must be auto|diag|dense")

        lags = int(need("lags"))
        if lags < 1:
            raise ConfigError(f"{where}: lags must be positive")
        out = Path(overrides.get("out") or raw.get("out", "results"))
        cfg = cls(
            data=base_dir / need("data"),
            schema_path=base_dir / need("schema"),
            lags=lags,
            columns=raw.get("columns"),
            date_column=raw.get("date_column"),
            exog_columns=list(raw.get("exog_columns", [])),
            prior=dict(raw.get("prior", {"type": "flat"})),
            horizon=int(raw.get("horizon", 12)),
            parameterization=raw.get("parameterization", "auto"),
            sampler=sampler,
            metric=metric,
            out=out,
            config_path=config_path,
        )
        if cfg.parameterization not in ("auto", "centered", "noncentered"):
            raise ConfigError(f"{where}: parameterization must be auto|centered|noncentered")
        return cfg

    def load_schema(self) -> RestrictionSchema:
        try:
            self.schema_text = Path(self.schema_path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read schema {self.schema_path}: {exc}") from exc
        schema = parse_schema_text(
            self.schema_text, n_lags=self.lags, n_exog=len(self.exog_columns)
        )
        return schema

    def build_prior(self, shape: ModelShape):
        kind = self.prior.get("type", "flat")
        if kind == "flat":
            return FlatPrior(n_vars=shape.n_vars, n_coeffs=shape.n_coeffs)
        if kind == "niw":
            try:
                return NIWParams(
                    nu=float(self.prior["nu"]),
                    omega=np.asarray(self.prior["omega"], dtype=float),
                    phi=np.asarray(self.prior["phi"], dtype=float),
                    s=np.asarray(self.prior["s"], dtype=float),
                )
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"bad NIW prior block: {exc}") from exc
        raise ConfigError(f"unknown prior type {kind!r}")

    def echo(self) -> dict:
        return {
            "data": str(self.data),
            "data_sha256": _sha256(self.data),
            "schema": str(self.schema_path),
            "schema_text": self.schema_text,
            "lags": self.lags,
            "columns": self.columns,
            "date_column": self.date_column,
            "exog_columns": self.exog_columns,
            "prior": self.prior,
            "horizon": self.horizon,
            "parameterization": self.parameterization,
            "metric": self.metric,
            "sampler": {
                "warmup_iters": self.sampler.warmup_iters,
                "sampling_iters": self.sampler.sampling_iters,
                "target_accept": self.sampler.target_accept,
                "max_tree_depth": self.sampler.max_tree_depth,
                "init_step_size": self.sampler.init_step_size,
                "seed": self.sampler.seed,
                "n_chains": self.sampler.n_chains,
            },
        }


def _sha256(path: Path) -> str | None:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError:
        return None


def write_draws_csv(path: Path, names: list[str], per_chain: list[NDArray]):
    """Row-major numeric CSV with a chain column; %.17g keeps bytes stable."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(["chain"] + list(names)) + "\n")
        for c, arr in enumerate(per_chain):
            for row in np.asarray(arr):
                fh.write(str(c) + "," + ",".join(f"{v:.17g}" for v in row) + "\n")


def read_draws_csv(path: Path) -> tuple[list[str], list[NDArray]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "chain":
            raise ConfigError(f"{path}: expected a draws CSV with a leading chain column")
        names = header[1:]
        by_chain: dict[int, list[list[float]]] = {}
        for row in reader:
            if not row:
                continue
            by_chain.setdefault(int(row[0]), []).append([float(v) for v in row[1:]])
    chains = [np.array(by_chain[c]) for c in sorted(by_chain)]
    return names, chains


def write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def irf_quantiles_payload(irfs: NDArray, var_names, shock_names) -> dict:
    """16/50/84 pointwise percentiles of draws shaped (S, H+1, N, N)."""
    qs = np.percentile(irfs, [16, 50, 84], axis=0)
    n_h = irfs.shape[1]
    payload = {
        "schema_version": SCHEMA_VERSION,
        "variables": list(var_names),
        "shocks": list(shock_names),
        "horizons": list(range(n_h)),
        "quantiles": {
            label: qs[i].transpose(1, 2, 0).tolist()  # [var][shock][horizon]
            for i, label in enumerate(("q16", "q50", "q84"))
        },
    }
    return payload
