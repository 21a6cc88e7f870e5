# src/experiments/report.py

"""
Experiment reports
Per-statistic records, KS results and covariance matrices, with JSON and
CSV export. `passed` is derived from the records, never stored.
"""

import io
import json
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, computed_field
from scipy import stats

from src import __version__
from src.experiments.config import ExperimentConfig


class StatRecord(BaseModel):
    """One scalar comparison: |estimate − target| ≤ tolerance"""

    name: str
    estimate: float
    target: float
    standard_error: Optional[float] = None
    tolerance: float
    passed: bool

    @classmethod
    def compare(cls, name: str, estimate: float, target: float, tolerance: float,
                standard_error: Optional[float] = None) -> "StatRecord":
        estimate, target = float(estimate), float(target)
        ok = bool(np.isfinite(estimate) and abs(estimate - target) <= tolerance)
        return cls(name=name, estimate=estimate, target=target, standard_error=standard_error,
                   tolerance=float(tolerance), passed=ok)

    @classmethod
    def mean(cls, name: str, sample: np.ndarray, target: float, n_se: float) -> "StatRecord":
        """Sample mean within n_se standard errors of the target"""
        sample = np.asarray(sample, dtype=float)
        se = float(np.std(sample, ddof=1) / np.sqrt(sample.size))
        return cls.compare(name, np.mean(sample), target, n_se * se, standard_error=se)

    @classmethod
    def variance(cls, name: str, sample: np.ndarray, target: float, n_se: float) -> "StatRecord":
        """Sample variance within n_se standard errors (SE from the squared deviations)"""
        sample = np.asarray(sample, dtype=float)
        sq = (sample - sample.mean()) ** 2
        se = float(np.std(sq, ddof=1) / np.sqrt(sample.size))
        return cls.compare(name, np.var(sample, ddof=1), target, n_se * se, standard_error=se)

    @classmethod
    def check(cls, name: str, ok: bool, estimate: float = float("nan"),
              target: float = float("nan")) -> "StatRecord":
        """Boolean outcome (trend tests, exact certifications)"""
        return cls(name=name, estimate=float(estimate), target=float(target),
                   tolerance=0.0, passed=bool(ok))


class KSRecord(BaseModel):
    name: str
    statistic: float
    pvalue: float
    alpha: float
    passed: bool

    @classmethod
    def normal(cls, name: str, sample: np.ndarray, loc: float, scale: float, alpha: float) -> "KSRecord":
        """One-sample KS against N(loc, scale²)"""
        res = stats.kstest(np.asarray(sample, dtype=float), "norm", args=(loc, scale))
        return cls(name=name, statistic=float(res.statistic), pvalue=float(res.pvalue),
                   alpha=alpha, passed=bool(res.pvalue > alpha))


class MatrixRecord(BaseModel):
    """Empirical matrix next to its target"""

    name: str
    labels: List[str]
    estimate: List[List[float]]
    target: List[List[float]]

    def long_frame(self) -> pd.DataFrame:
        rows = []
        for i, row_label in enumerate(self.labels):
            for j, col_label in enumerate(self.labels):
                rows.append({"row": row_label, "col": col_label,
                             "estimate": self.estimate[i][j], "target": self.target[i][j]})
        return pd.DataFrame(rows, columns=["row", "col", "estimate", "target"])


class ExperimentReport(BaseModel):
    config: ExperimentConfig
    version: str = __version__
    stats: List[StatRecord] = []
    ks: List[KSRecord] = []
    covariances: List[MatrixRecord] = []
    notes: List[str] = []
    wall_clock: float = 0.0

    @computed_field
    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.stats) and all(r.passed for r in self.ks)

    def failures(self) -> List[str]:
        return [r.name for r in self.stats if not r.passed] + [r.name for r in self.ks if not r.passed]

    # ---------- serialization ----------

    def payload(self) -> dict:
        """Deterministic content: everything except the wall-clock"""
        return self.model_dump(mode="json", exclude={"wall_clock"})

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    def stats_frame(self) -> pd.DataFrame:
        rows = [r.model_dump() for r in self.stats]
        rows += [{"name": r.name, "estimate": r.statistic, "target": r.alpha, "standard_error": None,
                  "tolerance": r.alpha, "passed": r.passed, "pvalue": r.pvalue} for r in self.ks]
        columns = ["name", "estimate", "target", "standard_error", "tolerance", "passed", "pvalue"]
        return pd.DataFrame(rows, columns=columns)

    def summary(self) -> str:
        status = "PASS" if self.passed else f"FAIL ({', '.join(self.failures())})"
        return (f"{self.config.experiment_id.value}: {len(self.stats)} statistics, "
                f"{len(self.ks)} KS tests, {self.wall_clock:.1f}s: {status}")


# =====================================================================
# FILE OUTPUT
# =====================================================================

def provenance_line(seed: Optional[int]) -> str:
    return f"# seed={seed if seed is not None else 'none'}, version={__version__}\n"


def frame_to_csv(frame: pd.DataFrame, seed: Optional[int]) -> str:
    """CSV text with a provenance comment above the header row"""
    buffer = io.StringIO()
    buffer.write(provenance_line(seed))
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    logger.debug(f"wrote {path}")
    return path


def write_report(report: ExperimentReport, output_dir: Path, fmt: str = "json") -> List[Path]:
    """
    Write a report as JSON, or as CSV (one statistics file plus one
    long-format file per covariance matrix). Files hold the deterministic
    payload only; the wall-clock goes to the log.
    """
    output_dir = Path(output_dir)
    stem = report.config.experiment_id.value
    seed = report.config.seed
    if fmt == "json":
        return [write_text(output_dir / f"{stem}.json", json.dumps(report.payload(), indent=2) + "\n")]
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    paths = [write_text(output_dir / f"{stem}_stats.csv", frame_to_csv(report.stats_frame(), seed))]
    for matrix in report.covariances:
        paths.append(write_text(output_dir / f"{stem}_{matrix.name}.csv",
                                frame_to_csv(matrix.long_frame(), seed)))
    return paths


def matrix_labels(prefix: str, values: Sequence) -> List[str]:
    return [f"{prefix}={v:g}" if isinstance(v, float) else f"{prefix}={v}" for v in values]
