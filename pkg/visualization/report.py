"""
Result files: table.csv (relative efficiencies), risk.csv (analytic
curves) and manifest.json (what produced them).

Numbers are written with format_value so +inf and NaN appear as the
literal strings Inf and NA, and tables are read back as strings so
values pass through untouched.
"""
import json
import logging
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from utils.errors import MalformedTable
from utils.helpers import VERSION, format_value, parse_value

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ["delta2", "estimator", "tuning", "mse", "rel_eff", "design"]
RISK_COLUMNS = ["delta2", "estimator", "tuning", "adb_factor", "adqr"]


# ------------------------------------------------------------------ #
#  Efficiency tables                                                    #
# ------------------------------------------------------------------ #

def table_frame(table) -> pd.DataFrame:
    """EfficiencyTable rows as a string-valued frame in table order."""
    records = [
        {
            "delta2": format_value(row.delta2),
            "estimator": row.estimator.estimator_id.value,
            "tuning": row.estimator.tuning,
            "mse": format_value(row.mse),
            "rel_eff": format_value(row.rel_eff),
            "design": row.design,
        }
        for row in table
    ]
    return pd.DataFrame.from_records(records, columns=TABLE_COLUMNS)


def _write_frame(frame: pd.DataFrame, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    logger.info("wrote %s (%d rows)", path, len(frame))


def write_table(table, path) -> Path:
    path = Path(path)
    _write_frame(table_frame(table), path)
    return path


def read_table(path, required=TABLE_COLUMNS) -> pd.DataFrame:
    """Load a result CSV as strings; MalformedTable on anything unexpected."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError as exc:
        raise MalformedTable(f"{path} does not exist") from exc
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise MalformedTable(f"cannot parse {path}: {exc}") from exc
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise MalformedTable(f"{path} lacks column(s) {', '.join(missing)}")
    if frame.empty:
        raise MalformedTable(f"{path} has no data rows")
    return frame


def numeric_column(frame: pd.DataFrame, column: str) -> np.ndarray:
    """Parse a string column, honouring the Inf / NA sentinels."""
    try:
        return np.array([parse_value(v) for v in frame[column]], dtype=float)
    except ValueError as exc:
        raise MalformedTable(f"non-numeric entry in column {column!r}: {exc}") from exc


# ------------------------------------------------------------------ #
#  Analytic risk tables                                                 #
# ------------------------------------------------------------------ #

def risk_frame(rows) -> pd.DataFrame:
    """rows: iterable of (delta2, RiskReport)."""
    records = [
        {
            "delta2": format_value(delta2),
            "estimator": report.estimator_id.value,
            "tuning": ";".join(f"{k}={v:g}" for k, v in report.tuning.items()),
            "adb_factor": format_value(report.adb_factor),
            "adqr": format_value(report.adqr),
        }
        for delta2, report in rows
    ]
    return pd.DataFrame.from_records(records, columns=RISK_COLUMNS)


def write_risk_table(rows, path) -> Path:
    path = Path(path)
    _write_frame(risk_frame(rows), path)
    return path


def write_dominance(report, path) -> Path:
    """Dominance regions and boundaries as JSON."""
    path = Path(path)
    payload = {
        "re_lse_boundary": format_value(report.re_lse_boundary),
        "pte_lse_crossover": format_value(report.pte_lse_crossover),
        "stein_condition": report.stein_condition,
        "comparisons": [
            {
                "first": c.first,
                "second": c.second,
                "regions": [
                    {"from": format_value(lo), "to": format_value(hi), "better": winner}
                    for lo, hi, winner in c.regions
                ],
            }
            for c in report.comparisons
        ],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    logger.info("wrote %s", path)
    return path


# ------------------------------------------------------------------ #
#  Manifest                                                             #
# ------------------------------------------------------------------ #

@dataclass
class RunManifest:
    """Enough to re-run a simulation and get the same table.csv."""
    configs: list
    decisions: dict
    seed: int
    preset: str | None = None
    version: str = VERSION
    wall_time_s: float = 0.0
    created: str = field(default_factory=lambda: time.strftime("%Y-%m-%dT%H:%M:%S%z"))
    platform: dict = field(default_factory=lambda: {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "pandas": pd.__version__,
    })

    @classmethod
    def for_run(cls, configs, preset=None, wall_time_s=0.0):
        first = configs[0]
        decisions = {
            "lambda_rule": (f"{first.folds}-fold CV, minimum pooled out-of-fold squared error, "
                            f"ties to the larger lambda, {first.n_lambda} log-spaced values "
                            "from lambda_max down to 1e-3 lambda_max"),
            "kappa_rule": ("plugin: n*p / max(L_n - p, 1e-6) on the X'X scale"
                           if first.kappa is None else f"fixed: {first.kappa:g}"),
            "delta2_mapping": first.delta2_mapping.value,
            "design": ("drawn once per design from stream 0" if first.fixed_design
                       else "redrawn every replication from stream (seed, rep)"),
            "alasso_pilot": "least squares on standardized data, gamma=1",
            "scad_a": 3.7,
        }
        if any(cfg.k is None for cfg in configs):
            decisions["k_default"] = "k = p (every coefficient carries signal)"
        return cls(configs=[cfg.to_dict() for cfg in configs], decisions=decisions,
                   seed=first.seed, preset=preset, wall_time_s=round(wall_time_s, 3))

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(self), indent=2, default=str) + "\n", encoding="utf-8")
        logger.info("wrote %s", path)
        return path

    @classmethod
    def read(cls, path):
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
            return cls(**payload)
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise MalformedTable(f"cannot read manifest {path}: {exc}") from exc
