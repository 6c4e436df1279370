"""Published single-number signatures of the spin chains and their re-computation.

Each preset row fixes one parameter and draws the others as standard normals.
Rows at L=6 use 4000 realizations and rows at L=8 use 1500. ``scale`` shrinks
every ensemble and widens the tolerances by ``1/sqrt(scale)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from ..ensembles import derive_seed
from ..errors import GinspectraError, ValidationError
from ..spin_ops import ParamSource, SpinChainSpec
from .config import ExperimentConfig
from .runner import run_experiment

TABLE_SEED = 0x5EC7_2A71
ENSEMBLE_SIZE = {6: 4000, 8: 1500}
# (tolerance on <r>, tolerance on -<cos theta>) at full ensemble size
TOLERANCE = {6: (0.02, 0.03), 8: (0.01, 0.03)}


@dataclass(frozen=True)
class TableRow:
    table: str
    model: str
    L: int
    varied: str
    value: float
    mean_r: float
    neg_cos: float

    @property
    def label(self) -> str:
        return f"{self.table} {self.model} L={self.L} {self.varied}={self.value:g}"

    def spec(self) -> SpinChainSpec:
        names = {"H1": ("gamma", "lambda")}.get(self.model, ("gamma", "lambda", "lambda1"))
        src = {n: ParamSource.fixed(self.value) if n == self.varied else ParamSource.gaussian() for n in names}
        return SpinChainSpec(self.model, self.L, gamma=src.get("gamma"), lam=src.get("lambda"),
                             lambda1=src.get("lambda1"))


def _rows(table, model, L, entries):
    return [TableRow(table, model, L, varied, value, r, c) for varied, value, r, c in entries]


PRESETS: list[TableRow] = [
    *_rows("I", "H1", 6, [
        ("gamma", 0.01, 0.479, 0.053), ("gamma", 0.3, 0.600, -0.069), ("gamma", 2.0, 0.633, -0.059),
        ("lambda", 0.01, 0.655, -0.072), ("lambda", 0.5, 0.647, -0.042), ("lambda", 1.0, 0.650, -0.048),
    ]),
    *_rows("II", "H2", 6, [
        ("gamma", 0.01, 0.564, 0.355), ("gamma", 0.5, 0.689, 0.002), ("gamma", 3.0, 0.662, 0.094),
        ("lambda", 0.001, 0.674, -0.018), ("lambda", 0.9, 0.713, 0.040), ("lambda", 3.0, 0.668, -0.153),
        ("lambda1", 0.001, 0.651, 0.009), ("lambda1", 0.5, 0.706, 0.011), ("lambda1", 4.0, 0.679, -0.142),
    ]),
    *_rows("III", "H2", 8, [
        ("gamma", 0.01, 0.559, 0.219), ("gamma", 2.1, 0.714, 0.062),
        ("lambda", 0.01, 0.675, 0.006), ("lambda", 1.2, 0.715, 0.080),
        ("lambda1", 0.001, 0.659, 0.019), ("lambda1", 0.5, 0.704, 0.057),
    ]),
    *_rows("IV", "H3", 8, [
        ("gamma", 0.01, 0.684, 0.004), ("gamma", 2.2, 0.711, 0.068),
        ("lambda", 0.01, 0.675, -0.007), ("lambda", 1.2, 0.707, -0.065),
        ("lambda1", 0.01, 0.662, -0.015), ("lambda1", 0.5, 0.705, -0.062),
    ]),
]


def find_row(table: str, varied: str, value: float) -> TableRow:
    for row in PRESETS:
        if row.table == table and row.varied == varied and math.isclose(row.value, value):
            return row
    raise KeyError(f"no preset row {table} {varied}={value}")


@dataclass
class RowResult:
    row: TableRow
    ensemble_size: int
    tol_r: float
    tol_cos: float
    mean_r: float | None = None
    neg_cos: float | None = None
    status: str = "ok"
    error: str | None = None

    @property
    def delta_r(self):
        return None if self.mean_r is None else abs(self.mean_r - self.row.mean_r)

    @property
    def delta_cos(self):
        return None if self.neg_cos is None else abs(self.neg_cos - self.row.neg_cos)

    @property
    def pass_r(self):
        return self.delta_r is not None and self.delta_r <= self.tol_r

    @property
    def pass_cos(self):
        return self.delta_cos is not None and self.delta_cos <= self.tol_cos


def row_config(row: TableRow, scale: float = 1.0, workers=1, row_number: int = 0) -> ExperimentConfig:
    size = max(1, round(ENSEMBLE_SIZE[row.L] * scale))
    return ExperimentConfig(row.spec(), size, derive_seed(TABLE_SEED, row_number), workers=workers)


def tolerances(row: TableRow, scale: float = 1.0) -> tuple[float, float]:
    widen = 1.0 / math.sqrt(scale) if scale < 1 else 1.0
    tr, tc = TOLERANCE[row.L]
    return tr * widen, tc * widen


def reproduce_tables(scale: float = 1.0, workers=1, rows: list[TableRow] | None = None,
                     progress=None) -> list[RowResult]:
    if not 0 < scale <= 1:
        raise ValidationError(f"scale must lie in (0, 1], got {scale}")
    rows = PRESETS if rows is None else rows
    results = []
    for row in rows:
        cfg = row_config(row, scale, workers, PRESETS.index(row) if row in PRESETS else 0)
        tr, tc = tolerances(row, scale)
        res = RowResult(row, cfg.ensemble_size, tr, tc)
        try:
            summary = run_experiment(cfg)
            res.mean_r = summary.signatures.mean_r
            res.neg_cos = summary.signatures.neg_mean_cos_theta
        except (GinspectraError, ArithmeticError, ValueError) as exc:
            res.status, res.error = "error", str(exc)
        results.append(res)
        if progress is not None:
            progress(res)
    return results


HEADER = ["row", "n", "published_r", "r", "d_r", "tol_r", "pass_r",
          "published_negcos", "negcos", "d_negcos", "tol_negcos", "pass_negcos", "status"]


def _cells(res: RowResult) -> list[str]:
    def f(x):
        return "" if x is None else f"{x:.4f}"
    if res.status == "error":
        return [res.row.label, str(res.ensemble_size), f(res.row.mean_r), "", "", f(res.tol_r), "",
                f(res.row.neg_cos), "", "", f(res.tol_cos), "", "error"]
    return [res.row.label, str(res.ensemble_size), f(res.row.mean_r), f(res.mean_r), f(res.delta_r),
            f(res.tol_r), "pass" if res.pass_r else "FAIL", f(res.row.neg_cos), f(res.neg_cos),
            f(res.delta_cos), f(res.tol_cos), "pass" if res.pass_cos else "FAIL", res.status]


def format_report(results: list[RowResult]) -> str:
    table = [HEADER] + [_cells(r) for r in results]
    widths = [max(len(row[i]) for row in table) for i in range(len(HEADER))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in table)


def write_report_csv(path, results: list[RowResult]):
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for r in results:
            w.writerow(_cells(r))
