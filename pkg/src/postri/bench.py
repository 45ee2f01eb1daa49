"""Experiment harness: dataset ingestion, seeded trial grids, summaries,
and plot-data emission.

Everything written to disk is a pure function of the sweep spec (master
seed included), so re-running a sweep reproduces the output files byte for
byte. Per-trial wall time is kept on the in-memory records for profiling
but deliberately left out of every persisted file to protect that property.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .domain import Dataset, DomainSpec, dedup_remap, true_median
from .errors import DataError
from .expmech import rng_stream, trial_seed
from .hyperparams import SplitPolicy, make_params
from .median import dp_median
from .ri import dp_ri

__all__ = [
    "TrialRecord",
    "SweepSpec",
    "CellSummary",
    "load_dataset",
    "run_trials",
    "summarize",
    "emit",
    "read_trials",
    "write_synthetic_csv",
]

# Fixed column order of trials.csv. wall_time_ms is intentionally absent:
# timing is not reproducible and would break byte-identical re-runs.
TRIALS_HEADER = [
    "trial_id",
    "seed",
    "dataset",
    "technique",
    "split_policy",
    "eps_total",
    "eps1",
    "eps2",
    "beta",
    "median_error",
    "ri_width",
    "covered",
    "covered_numeric",
]

SUMMARY_HEADER = [
    "dataset",
    "technique",
    "split_policy",
    "eps_total",
    "beta",
    "runs",
    "median_error_mean",
    "median_error_std",
    "ri_width_mean",
    "ri_width_std",
    "coverage",
    "coverage_numeric",
]


@dataclass(frozen=True)
class TrialRecord:
    """One end-to-end run of the two-stage release on one dataset."""

    trial_id: int
    seed: int
    dataset: str
    split_policy: str
    eps_total: float
    eps1: float
    eps2: float
    beta: float
    median_error: float
    ri_width: float
    covered: bool
    covered_numeric: bool
    wall_time_ms: float = 0.0
    technique: str = "postri"

    def __post_init__(self):
        if self.median_error < 0 or self.ri_width < 0:
            raise ValueError("median_error and ri_width must be non-negative")


@dataclass(frozen=True)
class SweepSpec:
    """Declarative description of one benchmark sweep over (policy, eps)."""

    dataset: str
    path: str
    column: str
    data_range: tuple[int, int]
    domain_size: int = 10**8
    eps_grid: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0)
    beta: float = 0.01
    runs: int = 100
    split_policies: tuple[str, ...] = ("default",)
    beta_split: float = 0.5
    master_seed: int = 0

    def __post_init__(self):
        if not self.eps_grid or any(e <= 0 for e in self.eps_grid):
            raise DataError("eps_grid must be non-empty with positive entries")
        if self.runs < 1:
            raise DataError(f"runs must be >= 1, got {self.runs}")
        if not 0.0 < self.beta < 1.0:
            raise DataError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.split_policies:
            raise DataError("split_policies must be non-empty")
        for p in self.split_policies:
            SplitPolicy.parse(p)
        object.__setattr__(self, "eps_grid", tuple(float(e) for e in self.eps_grid))
        object.__setattr__(self, "split_policies", tuple(self.split_policies))
        lo, hi = self.data_range
        object.__setattr__(self, "data_range", (int(lo), int(hi)))

    @classmethod
    def from_file(cls, path) -> "SweepSpec":
        try:
            with open(path, encoding="utf-8") as f:
                raw = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise DataError(f"cannot read sweep spec {path}: {e}") from e
        if not isinstance(raw, dict):
            raise DataError("sweep spec must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise DataError(f"unknown sweep spec fields: {sorted(unknown)}")
        missing = {"dataset", "path", "column", "data_range"} - set(raw)
        if missing:
            raise DataError(f"sweep spec missing required fields: {sorted(missing)}")
        try:
            return cls(**raw)
        except (TypeError, ValueError) as e:
            raise DataError(f"invalid sweep spec: {e}") from e

    def to_file(self, path) -> None:
        payload = {f.name: getattr(self, f.name) for f in fields(self)}
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")


@dataclass(frozen=True)
class CellSummary:
    """Per (dataset, technique, policy, eps) aggregate of trial records."""

    dataset: str
    technique: str
    split_policy: str
    eps_total: float
    beta: float
    runs: int
    median_error_mean: float
    median_error_std: float
    ri_width_mean: float
    ri_width_std: float
    coverage: float
    coverage_numeric: float


def _parse_cell(cell: str, where: str) -> int:
    text = cell.strip()
    if not text:
        raise DataError(f"empty cell {where}")
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"non-numeric cell {text!r} {where}") from None
    if not value.is_integer():
        raise DataError(f"non-integer value {text!r} {where}")
    return int(value)


def load_dataset(
    path,
    column: str,
    declared_range: tuple[int, int],
    domain_size: int = 10**8,
) -> tuple[Dataset, DomainSpec]:
    """Read one numeric column of a delimited text file into the domain.

    The first line must be a header; the delimiter is sniffed (comma,
    semicolon, tab, or pipe). Values are shifted by the declared lower
    bound; empty cells, non-numeric cells, and values outside the declared
    range all fail loudly.
    """
    lo, hi = int(declared_range[0]), int(declared_range[1])
    try:
        f = open(path, encoding="utf-8", newline="")
    except OSError as e:
        raise DataError(f"cannot open dataset {path}: {e}") from e
    with f:
        sample = f.read(64 * 1024)
        f.seek(0)
        try:
            dialect = csv.Sniffer().sniff(sample, delimiters=",;\t|")
        except csv.Error:
            dialect = csv.excel
        reader = csv.reader(f, dialect)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"dataset {path} is empty") from None
        if column not in header:
            raise DataError(
                f"column {column!r} not found in {path}; available: {header}"
            )
        idx = header.index(column)
        values = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if idx >= len(row):
                raise DataError(f"row at line {lineno} of {path} is too short")
            values.append(_parse_cell(row[idx], f"at line {lineno} of {path}"))
    if not values:
        raise DataError(f"dataset {path} has no data rows")
    arr = np.asarray(values, dtype=np.int64)
    out_of_range = (arr < lo) | (arr > hi)
    if out_of_range.any():
        raise DataError(
            f"{int(out_of_range.sum())} value(s) in {path} outside the declared "
            f"range [{lo}, {hi}], e.g. {int(arr[out_of_range][0])}"
        )
    dom = DomainSpec(int(domain_size), lo, hi)
    return Dataset.from_values(dom.to_domain(arr), dom), dom


def run_trials(spec: SweepSpec) -> list[TrialRecord]:
    """Execute the full (policy, eps) grid, one pipeline run per trial.

    Each trial owns an independent substream derived from (master seed,
    cell index, trial index); the derived seed is recorded so any single
    trial can be replayed in isolation.
    """
    data, dom = load_dataset(spec.path, spec.column, spec.data_range, spec.domain_size)
    m_true = true_median(data) + dom.original_lower
    exp_data, dmap = dedup_remap(data, dom)

    records: list[TrialRecord] = []
    cells = [(p, e) for p in spec.split_policies for e in spec.eps_grid]
    for cell_idx, (policy_text, eps) in enumerate(cells):
        policy = SplitPolicy.parse(policy_text)
        try:
            params = make_params(
                eps, spec.beta, dmap.expanded_size, policy, spec.beta_split
            )
            for t in range(spec.runs):
                seed = trial_seed(spec.master_seed, cell_idx, t)
                rng = rng_stream(seed)
                t0 = time.perf_counter()
                med = dp_median(
                    exp_data, dmap.expanded_domain, params.eps1, params.beta1,
                    rng, params.delta_u,
                )
                ri = dp_ri(exp_data, dmap.expanded_domain, med.o, dmap, params, rng)
                wall = (time.perf_counter() - t0) * 1e3
                center = dom.to_original(ri.center)
                lower = dom.to_original(ri.lower)
                upper = dom.to_original(ri.upper)
                records.append(
                    TrialRecord(
                        trial_id=t,
                        seed=seed,
                        dataset=spec.dataset,
                        split_policy=policy.label(),
                        eps_total=float(eps),
                        eps1=params.eps1,
                        eps2=params.eps2,
                        beta=spec.beta,
                        median_error=abs(center - m_true),
                        ri_width=float(upper - lower),
                        covered=ri.covered_rank,
                        covered_numeric=bool(lower <= m_true <= upper),
                        wall_time_ms=wall,
                    )
                )
        except Exception as e:
            e.args = (
                f"{e} (cell: dataset={spec.dataset}, policy={policy_text}, "
                f"eps={eps})",
            )
            raise
    return records


def summarize(records: list[TrialRecord]) -> list[CellSummary]:
    """Aggregate records per (dataset, technique, policy, eps, beta) cell."""
    if not records:
        raise DataError("no trial records to summarize")
    cells: dict[tuple, list[TrialRecord]] = {}
    for r in records:
        key = (r.dataset, r.technique, r.split_policy, r.eps_total, r.beta)
        cells.setdefault(key, []).append(r)
    out = []
    for key in sorted(cells):
        rs = cells[key]
        errors = np.array([r.median_error for r in rs])
        widths = np.array([r.ri_width for r in rs])
        out.append(
            CellSummary(
                dataset=key[0],
                technique=key[1],
                split_policy=key[2],
                eps_total=key[3],
                beta=key[4],
                runs=len(rs),
                median_error_mean=float(errors.mean()),
                median_error_std=float(errors.std(ddof=1)) if len(rs) > 1 else 0.0,
                ri_width_mean=float(widths.mean()),
                ri_width_std=float(widths.std(ddof=1)) if len(rs) > 1 else 0.0,
                coverage=float(np.mean([r.covered for r in rs])),
                coverage_numeric=float(np.mean([r.covered_numeric for r in rs])),
            )
        )
    return out


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _record_row(r: TrialRecord) -> list[str]:
    return [_fmt(getattr(r, name)) for name in TRIALS_HEADER]


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in name)


def emit(records: list[TrialRecord], summaries: list[CellSummary], out_dir) -> dict:
    """Write trials.csv/.json, summary.csv/.json, and one fig_<dataset>.csv
    per dataset (eps on the x-axis, mean/std series per split policy).

    Returns a dict mapping logical names to the written paths. All files are
    deterministic functions of the inputs.
    """
    if not records:
        raise DataError("no trial records to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    trials_csv = out / "trials.csv"
    with open(trials_csv, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(TRIALS_HEADER)
        w.writerows(_record_row(r) for r in records)
    paths["trials_csv"] = trials_csv

    trials_json = out / "trials.json"
    with open(trials_json, "w", encoding="utf-8", newline="\n") as f:
        json.dump(
            {"records": [
                {name: getattr(r, name) for name in TRIALS_HEADER} for r in records
            ]},
            f,
            indent=2,
        )
        f.write("\n")
    paths["trials_json"] = trials_json

    summary_csv = out / "summary.csv"
    with open(summary_csv, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for s in summaries:
            w.writerow(_fmt(getattr(s, name)) for name in SUMMARY_HEADER)
    paths["summary_csv"] = summary_csv

    summary_json = out / "summary.json"
    with open(summary_json, "w", encoding="utf-8", newline="\n") as f:
        json.dump(
            {"cells": [
                {name: getattr(s, name) for name in SUMMARY_HEADER}
                for s in summaries
            ]},
            f,
            indent=2,
        )
        f.write("\n")
    paths["summary_json"] = summary_json

    for dataset in sorted({s.dataset for s in summaries}):
        rows = [s for s in summaries if s.dataset == dataset]
        policies = sorted({s.split_policy for s in rows})
        eps_values = sorted({s.eps_total for s in rows})
        header = ["eps"]
        for p in policies:
            tag = _safe_name(p)
            header += [
                f"{tag}_error_mean", f"{tag}_error_std",
                f"{tag}_width_mean", f"{tag}_width_std",
            ]
        fig_path = out / f"fig_{_safe_name(dataset)}.csv"
        with open(fig_path, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(header)
            for eps in eps_values:
                row = [_fmt(float(eps))]
                for p in policies:
                    cell = [s for s in rows
                            if s.split_policy == p and s.eps_total == eps]
                    if cell:
                        s = cell[0]
                        row += [_fmt(s.median_error_mean), _fmt(s.median_error_std),
                                _fmt(s.ri_width_mean), _fmt(s.ri_width_std)]
                    else:
                        row += ["", "", "", ""]
                w.writerow(row)
        paths[f"fig_{dataset}"] = fig_path
    return paths


def read_trials(path) -> list[TrialRecord]:
    """Parse trials.csv back into records (wall_time_ms is not persisted and
    reads back as 0)."""
    try:
        f = open(path, encoding="utf-8", newline="")
    except OSError as e:
        raise DataError(f"cannot open {path}: {e}") from e
    with f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != TRIALS_HEADER:
            raise DataError(f"{path} does not look like a trials.csv file")
        records = []
        for row in reader:
            kv = dict(zip(TRIALS_HEADER, row))
            records.append(
                TrialRecord(
                    trial_id=int(kv["trial_id"]),
                    seed=int(kv["seed"]),
                    dataset=kv["dataset"],
                    technique=kv["technique"],
                    split_policy=kv["split_policy"],
                    eps_total=float(kv["eps_total"]),
                    eps1=float(kv["eps1"]),
                    eps2=float(kv["eps2"]),
                    beta=float(kv["beta"]),
                    median_error=float(kv["median_error"]),
                    ri_width=float(kv["ri_width"]),
                    covered=kv["covered"] == "true",
                    covered_numeric=kv["covered_numeric"] == "true",
                )
            )
    return records


def write_synthetic_csv(
    path, kind: str, n: int, data_range: tuple[int, int], seed: int,
    column: str = "value",
) -> None:
    """Materialize a synthetic integer dataset as a one-column CSV.

    kind "uniform" draws uniformly over the declared range; "skewed" draws
    an exponential clipped to the range (long right tail, dense left mass).
    """
    lo, hi = int(data_range[0]), int(data_range[1])
    rng = rng_stream(seed, 0xDA7A)
    if kind == "uniform":
        vals = rng.integers(lo, hi + 1, size=n)
    elif kind == "skewed":
        raw = rng.exponential(scale=(hi - lo) / 8.0, size=n)
        vals = lo + np.minimum(raw.astype(np.int64), hi - lo)
    else:
        raise ValueError(f"unknown synthetic kind {kind!r}")
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([column])
        w.writerows([[int(v)] for v in vals])
