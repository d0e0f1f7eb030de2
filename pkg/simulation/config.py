"""
Experiment configuration: estimator selections, the SimConfig value
object and the named presets for each benchmark table and figure.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

from environment.data import EstimatorId
from environment.design import Delta2Mapping
from utils.errors import DomainError, InconsistentConfig, RequiresP3
from utils.helpers import DEFAULT_DELTA2_GRID

STEIN_FAMILY = (EstimatorId.S, EstimatorId.SPLUS, EstimatorId.IPT)
PENALIZED = (EstimatorId.LASSO, EstimatorId.ALASSO, EstimatorId.SCAD, EstimatorId.EN)

DEFAULT_PTE_ALPHA = 0.05
DEFAULT_IPT_ALPHA = 0.10
DEFAULT_EN_MIX = 0.5


@dataclass(frozen=True)
class EstimatorSpec:
    """One estimator column of a table: identity plus its fixed tuning value."""
    estimator_id: EstimatorId
    alpha: float | None = None
    mix: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "estimator_id", EstimatorId(self.estimator_id))
        eid = self.estimator_id
        if eid in (EstimatorId.PTE, EstimatorId.IPT):
            if self.alpha is None or not (0.0 < self.alpha < 1.0):
                raise DomainError(f"{eid.value} needs a test level in (0, 1), got {self.alpha}")
        elif self.alpha is not None:
            raise InconsistentConfig(f"{eid.value} takes no test level")
        if eid is EstimatorId.EN:
            if self.mix is None or not (0.0 < self.mix <= 1.0):
                raise DomainError(f"EN needs a mix in (0, 1], got {self.mix}")
        elif self.mix is not None:
            raise InconsistentConfig(f"{eid.value} takes no mix")

    @property
    def tuning(self) -> str:
        """Tuning column of the CSV: 'alpha=0.05', 'mix=0.25' or ''."""
        if self.alpha is not None:
            return f"alpha={self.alpha:g}"
        if self.mix is not None:
            return f"mix={self.mix:g}"
        return ""

    @property
    def label(self) -> str:
        """Short series name: PTE(0.15), EN25, S+, ..."""
        if self.mix is not None:
            return f"EN{round(100 * self.mix):d}"
        if self.alpha is not None:
            return f"{self.estimator_id.value}({self.alpha:g})"
        return self.estimator_id.value

    @classmethod
    def parse(cls, token: str) -> EstimatorSpec:
        """
        Parse one --estimators token. Accepted forms (case-insensitive):
        lse, re, pte[:alpha], pt[:alpha], ipt[:alpha], s, s+, rr, lasso/l,
        alasso/al, scad, en[:mix], en25, en50, en75.
        """
        raw = token.strip()
        name, _, value = raw.lower().partition(":")
        try:
            number = float(value) if value else None
        except ValueError as exc:
            raise DomainError(f"bad tuning value in estimator {raw!r}") from exc
        if name in ("pte", "pt"):
            return cls(EstimatorId.PTE, alpha=DEFAULT_PTE_ALPHA if number is None else number)
        if name == "ipt":
            return cls(EstimatorId.IPT, alpha=DEFAULT_IPT_ALPHA if number is None else number)
        if name.startswith("en"):
            suffix = name[2:]
            if suffix:
                if number is not None or not suffix.isdigit():
                    raise DomainError(f"unknown estimator {raw!r}")
                return cls(EstimatorId.EN, mix=int(suffix) / 100.0)
            return cls(EstimatorId.EN, mix=DEFAULT_EN_MIX if number is None else number)
        if number is not None:
            raise DomainError(f"estimator {raw!r} takes no tuning value")
        aliases = {
            "lse": EstimatorId.LSE, "re": EstimatorId.RE, "s": EstimatorId.S,
            "s+": EstimatorId.SPLUS, "splus": EstimatorId.SPLUS, "rr": EstimatorId.RR,
            "lasso": EstimatorId.LASSO, "l": EstimatorId.LASSO,
            "alasso": EstimatorId.ALASSO, "al": EstimatorId.ALASSO, "scad": EstimatorId.SCAD,
        }
        if name not in aliases:
            raise DomainError(f"unknown estimator {raw!r}")
        return cls(aliases[name])


def parse_estimators(text: str) -> tuple:
    specs = tuple(EstimatorSpec.parse(t) for t in text.split(",") if t.strip())
    if not specs:
        raise DomainError("empty estimator list")
    return specs


def parse_kappa(text: str) -> float | None:
    """'plugin' -> None (data-driven), 'fixed:<v>' -> v."""
    text = text.strip().lower()
    if text == "plugin":
        return None
    kind, _, value = text.partition(":")
    if kind != "fixed" or not value:
        raise DomainError(f"--kappa must be 'plugin' or 'fixed:<value>', got {text!r}")
    try:
        kappa = float(value)
    except ValueError as exc:
        raise DomainError(f"bad ridge parameter {value!r}") from exc
    if not (kappa >= 0.0 and math.isfinite(kappa)):
        raise DomainError(f"fixed ridge parameter must be finite and >= 0, got {kappa}")
    return kappa


def _specs(*tokens) -> tuple:
    return tuple(EstimatorSpec.parse(t) for t in tokens)


TABLE_1_ESTIMATORS = _specs("lse", "re", "pte:0.05", "pte:0.15", "pte:0.20", "pte:0.25",
                            "ipt:0.10", "s", "s+", "rr", "en25", "en50", "en75")
PENALTY_ESTIMATORS = _specs("lse", "lasso", "alasso", "scad")
P_SWEEP_ESTIMATORS = _specs("lse", "s", "s+", "lasso", "alasso", "en25", "en50", "en75")
FIGURE_ESTIMATORS = _specs("lse", "re", "pte:0.15", "s", "s+", "rr", "en50")


@dataclass(frozen=True)
class SimConfig:
    """
    One simulation design and everything needed to reproduce it.

    k = None means every coefficient carries signal (k = p). kappa = None
    selects the plug-in ridge rule; a number fixes the ridge parameter.
    """
    n: int = 100
    p: int = 10
    k: int | None = None
    r: float = 0.0
    delta2_grid: tuple = DEFAULT_DELTA2_GRID
    reps: int = 2000
    sigma: float = 5.0
    seed: int = 1
    estimators: tuple = TABLE_1_ESTIMATORS
    fixed_design: bool = False
    delta2_mapping: Delta2Mapping = Delta2Mapping.NONCENTRALITY
    kappa: float | None = None
    folds: int = 10
    n_lambda: int = 50
    notes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "delta2_grid", tuple(float(d) for d in self.delta2_grid))
        object.__setattr__(self, "delta2_mapping", Delta2Mapping(self.delta2_mapping))
        specs = tuple(self.estimators)
        if not any(s.estimator_id is EstimatorId.LSE for s in specs):
            # relative efficiency needs the LSE baseline in every cell
            specs = (EstimatorSpec(EstimatorId.LSE),) + specs
        object.__setattr__(self, "estimators", specs)

        if self.p < 1 or self.n <= self.p:
            raise DomainError(f"need n > p >= 1, got n={self.n}, p={self.p}")
        if self.k is not None and not (0 <= self.k <= self.p):
            raise DomainError(f"k must lie in [0, p={self.p}], got {self.k}")
        if not (0.0 <= self.r < 1.0):
            raise DomainError(f"r must lie in [0, 1), got {self.r}")
        if self.reps < 1:
            raise DomainError(f"reps must be >= 1, got {self.reps}")
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be > 0, got {self.sigma}")
        if self.seed < 0:
            raise DomainError(f"seed must be >= 0, got {self.seed}")
        if not self.delta2_grid or any(d < 0 or not math.isfinite(d) for d in self.delta2_grid):
            raise DomainError("delta2 grid must be non-empty, finite and >= 0")
        if len(set(specs)) != len(specs):
            raise InconsistentConfig("duplicate estimator in the selection")
        if self.p < 3 and any(s.estimator_id in STEIN_FAMILY for s in specs):
            raise RequiresP3(self.p)
        if self.kappa is not None and not (self.kappa >= 0.0 and math.isfinite(self.kappa)):
            raise DomainError(f"fixed ridge parameter must be finite and >= 0, got {self.kappa}")
        if self.folds < 2 or self.n_lambda < 2:
            raise DomainError("folds and n_lambda must both be >= 2")

        if self.signal_count == 0 and any(d > 0 for d in self.delta2_grid):
            raise InconsistentConfig("k = 0 cannot carry delta2 > 0")

    @property
    def signal_count(self) -> int:
        return self.p if self.k is None else self.k

    @property
    def design_label(self) -> str:
        return f"n={self.n};p={self.p};k={self.signal_count};r={self.r:g}"

    def with_overrides(self, **overrides) -> SimConfig:
        """Copy with the given fields replaced; None values are ignored."""
        changes = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **changes) if changes else self

    def to_dict(self) -> dict:
        out = asdict(self)
        out["k"] = self.signal_count
        out["k_defaulted"] = self.k is None
        out["delta2_grid"] = list(self.delta2_grid)
        out["delta2_mapping"] = self.delta2_mapping.value
        out["estimators"] = [{"estimator": s.estimator_id.value, "tuning": s.tuning}
                             for s in self.estimators]
        out["notes"] = list(self.notes)
        return out


# ------------------------------------------------------------------ #
#  Presets                                                              #
# ------------------------------------------------------------------ #

@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    configs: tuple
    x_axis: str = "delta2"


P_SWEEP = (10, 15, 20, 25, 30, 40, 50, 60, 70, 80, 90, 95)
SHRINKAGE_SIGNALS = 2


def _shrinkage_preset(name: str, r: float, estimators: tuple, what: str) -> Preset:
    cfg = SimConfig(p=10, k=SHRINKAGE_SIGNALS, r=r, estimators=estimators,
                    delta2_mapping=Delta2Mapping.TABULATED)
    return Preset(name, f"{what}, n=100, p=10, k={SHRINKAGE_SIGNALS}, r={r:g}", (cfg,))


def _penalty_preset(name: str, p: int, r: float) -> Preset:
    configs = tuple(
        SimConfig(p=p, k=k, r=r, estimators=PENALTY_ESTIMATORS,
                  delta2_mapping=Delta2Mapping.PARTITIONED)
        for k in range(1, 6)
    )
    return Preset(name, f"LASSO, aLASSO and SCAD, n=100, p={p}, r={r:g}, k=1..5", configs)


def _p_sweep_preset(name: str, ks: tuple, x_axis: str) -> Preset:
    configs = tuple(
        SimConfig(p=p, k=k, r=0.2, delta2_grid=(0.0,), estimators=P_SWEEP_ESTIMATORS,
                  delta2_mapping=Delta2Mapping.PARTITIONED)
        for k in ks for p in P_SWEEP
    )
    return Preset(name, f"penalty and Stein-type estimators at delta2=0, r=0.2, k in {ks}",
                  configs, x_axis)


def _build_presets() -> dict:
    presets = [
        _shrinkage_preset("table1", 0.0, TABLE_1_ESTIMATORS, "pretest, Stein, ridge and EN"),
        _shrinkage_preset("table2", 0.2, TABLE_1_ESTIMATORS, "pretest, Stein, ridge and EN"),
        _shrinkage_preset("table3", 0.9, TABLE_1_ESTIMATORS, "pretest, Stein, ridge and EN"),
        _penalty_preset("table4", 10, 0.2),
        _penalty_preset("table5", 10, 0.9),
        _penalty_preset("table6", 20, 0.2),
        _penalty_preset("table7", 20, 0.9),
        _penalty_preset("table8", 30, 0.2),
        _penalty_preset("table9", 30, 0.9),
        _p_sweep_preset("table10", (0, 1, 3, 5), "delta2"),
        _shrinkage_preset("fig1", 0.0, FIGURE_ESTIMATORS, "relative-efficiency curves"),
        _shrinkage_preset("fig2", 0.2, FIGURE_ESTIMATORS, "relative-efficiency curves"),
        _shrinkage_preset("fig3", 0.9, FIGURE_ESTIMATORS, "relative-efficiency curves"),
        _p_sweep_preset("fig4", (1,), "p"),
    ]
    return {preset.name: preset for preset in presets}


PRESETS = _build_presets()


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
