"""Human-editable text format for restriction schemas.

Grammar (whitespace-separated cells, `#` comments, blank lines ignored):

    vars: <name> <name> ...          # variable (row) names
    shocks: <name> <name> ...        # shock (column) names
    horizon <h>:                     # single horizon table
    horizon <h1>-<h2>:               # same table applied to h1..h2
      <cell> <cell> ...              # one row per variable

Cell codes:
    .            free (no restriction)
    +            strictly positive
    -            strictly negative
    0z           hard zero (exclusion restriction)
    b(a,b)       bounded in the open interval (a, b)
    r>           ranking dominant: positive, larger in |·| than every r< in its row
    r<           ranking dominated by the row's r> entry
    e(v,a,b)     ratio to the same shock's response of variable v in (a, b)

The restricted horizon k of the resulting schema is the largest horizon
mentioned; the VAR lag length is supplied separately (k ≤ p).
"""

from __future__ import annotations

import re

from ..errors import SchemaError
from ..transforms import Kind, Restriction, RestrictionSchema
from ..varmodel import ModelShape

_CALL_RE = re.compile(r"^([be])\(([^)]*)\)$")


def parse_schema_text(text: str, n_lags: int | None = None, n_exog: int = 0) -> RestrictionSchema:
    """Parse the table format; n_lags defaults to max(k, 1)."""
    var_names: list[str] = []
    shock_names: list[str] = []
    tables: list[tuple[int, int, list[list[str]]]] = []
    current: list[list[str]] | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        low = line.lower()
        if low.startswith("vars:"):
            var_names = line.split(":", 1)[1].split()
            current = None
        elif low.startswith("shocks:"):
            shock_names = line.split(":", 1)[1].split()
            current = None
        elif low.startswith("horizon"):
            spec = line[len("horizon"):].strip().rstrip(":").strip()
            m = re.match(r"^(\d+)(?:\s*(?:-|\.\.)\s*(\d+))?$", spec)
            if not m:
                raise SchemaError(f"line {lineno}: cannot parse horizon header {raw!r}")
            h1 = int(m.group(1))
            h2 = int(m.group(2)) if m.group(2) else h1
            if h2 < h1:
                raise SchemaError(f"line {lineno}: empty horizon range {raw!r}")
            current = []
            tables.append((h1, h2, current))
        else:
            if current is None:
                raise SchemaError(f"line {lineno}: cell row outside a horizon table")
            current.append(line.split())

    if not var_names or not shock_names:
        raise SchemaError("schema must declare vars: and shocks:")
    n = len(var_names)
    if len(shock_names) != n:
        raise SchemaError("schema needs as many shocks as variables")

    entries: list[Restriction] = []
    k = 0
    for h1, h2, rows in tables:
        if len(rows) != n:
            raise SchemaError(f"horizon {h1}: expected {n} rows, got {len(rows)}")
        for i, row in enumerate(rows):
            if len(row) != n:
                raise SchemaError(f"horizon {h1}, row {var_names[i]}: expected {n} cells")
        k = max(k, h2)
        for h in range(h1, h2 + 1):
            for i, row in enumerate(rows):
                for j, cell in enumerate(row):
                    r = _parse_cell(cell, h, i, j, var_names)
                    if r is not None:
                        entries.append(r)

    if n_lags is None:
        n_lags = max(k, 1)
    if k > n_lags:
        raise SchemaError(f"restricted horizon {k} exceeds lag length {n_lags}")
    shape = ModelShape(n_vars=n, n_lags=n_lags, restricted_horizon=k, n_exog=n_exog)
    return RestrictionSchema(
        shape=shape, entries=tuple(entries),
        var_names=tuple(var_names), shock_names=tuple(shock_names),
    )


def _parse_cell(cell: str, h: int, i: int, j: int, var_names: list[str]) -> Restriction | None:
    if cell == ".":
        return None
    if cell == "+":
        return Restriction(h, i, j, Kind.POSITIVE)
    if cell == "-":
        return Restriction(h, i, j, Kind.NEGATIVE)
    if cell == "0z":
        return Restriction(h, i, j, Kind.ZERO)
    if cell == "r>":
        return Restriction(h, i, j, Kind.RANK_DOMINANT)
    if cell == "r<":
        return Restriction(h, i, j, Kind.RANK_DOMINATED)
    m = _CALL_RE.match(cell)
    if m:
        head, args = m.group(1), [a.strip() for a in m.group(2).split(",")]
        if head == "b":
            if len(args) != 2:
                raise SchemaError(f"cell {cell!r}: b(a,b) takes two numbers")
            return Restriction(h, i, j, Kind.BOUND, bounds=(float(args[0]), float(args[1])))
        if head == "e":
            if len(args) != 3:
                raise SchemaError(f"cell {cell!r}: e(var,a,b) takes a variable and two numbers")
            if args[0] not in var_names:
                raise SchemaError(f"cell {cell!r}: unknown variable {args[0]!r}")
            ref_row = var_names.index(args[0])
            return Restriction(
                h, i, j, Kind.RATIO_BOUND,
                bounds=(float(args[1]), float(args[2])), ref=(h, ref_row, j),
            )
    raise SchemaError(f"cannot parse cell {cell!r}")


def _format_cell(r: Restriction | None, var_names: tuple[str, ...]) -> str:
    if r is None:
        return "."
    if r.kind is Kind.POSITIVE:
        return "+"
    if r.kind is Kind.NEGATIVE:
        return "-"
    if r.kind is Kind.ZERO:
        return "0z"
    if r.kind is Kind.RANK_DOMINANT:
        return "r>"
    if r.kind is Kind.RANK_DOMINATED:
        return "r<"
    if r.kind is Kind.BOUND:
        return f"b({r.bounds[0]:g},{r.bounds[1]:g})"
    if r.kind is Kind.RATIO_BOUND:
        return f"e({var_names[r.ref[1]]},{r.bounds[0]:g},{r.bounds[1]:g})"
    if r.kind is Kind.FREE:
        return "."
    raise ValueError(f"unknown kind {r.kind}")


def print_schema_text(schema: RestrictionSchema) -> str:
    """Render a schema back to the table format (one table per horizon)."""
    n = schema.shape.n_vars
    k = schema.shape.restricted_horizon
    by_cell = {(r.horizon, r.row, r.col): r for r in schema.entries}
    lines = [
        "vars: " + " ".join(schema.var_names),
        "shocks: " + " ".join(schema.shock_names),
    ]
    # every horizon 0..k is printed (even all-free) so k round-trips
    for h in range(k + 1):
        cells = [
            [_format_cell(by_cell.get((h, i, j)), schema.var_names) for j in range(n)]
            for i in range(n)
        ]
        widths = [max(len(cells[i][j]) for i in range(n)) for j in range(n)]
        lines.append(f"horizon {h}:")
        for i in range(n):
            lines.append("  " + "  ".join(cells[i][j].ljust(widths[j]) for j in range(n)))
    return "\n".join(lines) + "\n"
