"""Patient and cohort data types plus derived-feature computation.

Everything downstream (scales, learner, explainer, pipeline) consumes the
types defined here. Missingness is always explicit: a `FeatureVector` stores
`None` for an absent value, never NaN and never a sentinel number.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ConfigError, MissingMeasurement, ParseError, SchemaError

#: Feature schema consumed by the risk model, in serving order.
MODEL_FEATURES: tuple[str, ...] = ("bmi", "mean_dbp", "age", "mean_sbp", "weight", "bsa")

#: Label column of cohort files: chronic T2DM within five years of observation.
LABEL_COLUMN = "t2dm_5y"

#: Cells read as an explicit missing value.
MISSING_CELLS = frozenset({"", "NA"})


class Sex(str, Enum):
    M = "M"
    F = "F"


class TriState(str, Enum):
    """Survey answer that must never be silently coerced to 'no'."""

    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class RawPatient:
    """Measurements and survey answers as captured, before derivation."""

    sex: Sex
    age: int
    height: float | None = None  # cm
    weight: float | None = None  # kg
    waist: float | None = None  # cm
    mean_sbp: float | None = None  # mmHg
    mean_dbp: float | None = None  # mmHg
    ah_therapy: TriState = TriState.UNKNOWN
    physical_activity: TriState = TriState.UNKNOWN
    high_glucose_history: TriState = TriState.UNKNOWN
    dm_heredity: TriState = TriState.UNKNOWN
    anamnesis: str | None = None

    def __post_init__(self):
        for name in ("height", "weight", "waist", "mean_sbp", "mean_dbp"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be > 0 when present, got {value}")


@dataclass(frozen=True)
class FeatureVector:
    """Ordered feature map with explicit per-feature missingness."""

    schema: tuple[str, ...]
    values: tuple[float | None, ...]

    def __post_init__(self):
        if len(self.schema) != len(self.values):
            raise ValueError("schema and values lengths differ")
        if len(set(self.schema)) != len(self.schema):
            raise ValueError("duplicate feature names in schema")
        for name, value in zip(self.schema, self.values):
            if value is not None and math.isnan(value):
                raise ValueError(f"NaN stored for feature {name}; use None for missing")

    @classmethod
    def from_mapping(cls, schema: Sequence[str], mapping: Mapping[str, float | None]) -> "FeatureVector":
        return cls(tuple(schema), tuple(mapping.get(name) for name in schema))

    def get(self, name: str) -> float | None:
        try:
            return self.values[self.schema.index(name)]
        except ValueError:
            raise KeyError(name) from None

    def is_missing(self, name: str) -> bool:
        return self.get(name) is None

    def as_dict(self) -> dict[str, float | None]:
        return dict(zip(self.schema, self.values))

    def to_array(self) -> np.ndarray:
        """Dense float64 view with NaN marking missing (model-facing only)."""
        return np.array([math.nan if v is None else v for v in self.values], dtype=np.float64)

    def replace(self, name: str, value: float | None) -> "FeatureVector":
        idx = self.schema.index(name)
        values = list(self.values)
        values[idx] = value
        return FeatureVector(self.schema, tuple(values))


@dataclass(frozen=True)
class PatientCase:
    """One case flowing through the three stages."""

    case_id: str
    raw: RawPatient
    features: FeatureVector
    observed_outcome: int | None = None  # retrospective label, when known

    def __post_init__(self):
        if self.observed_outcome is not None and self.observed_outcome not in (0, 1):
            raise ValueError("observed_outcome must be 0, 1 or None")


# ---------------------------------------------------------------------------
# Derived features
# ---------------------------------------------------------------------------

def bsa_du_bois(weight_kg: float, height_cm: float) -> float:
    return 0.007184 * weight_kg**0.425 * height_cm**0.725


def bsa_mosteller(weight_kg: float, height_cm: float) -> float:
    return math.sqrt(weight_kg * height_cm / 3600.0)


BSA_FORMULAS: dict[str, Callable[[float, float], float]] = {
    "du_bois": bsa_du_bois,
    "mosteller": bsa_mosteller,
}


def derive_features(raw: RawPatient, bsa_formula: str = "du_bois") -> FeatureVector:
    """Compute the model feature vector from raw measurements.

    BMI and BSA are derived; age, weight and the two pressures are copied
    through. All six inputs must be present.

    Raises:
        MissingMeasurement: when a required input is absent.
        ConfigError: unknown BSA formula name.
    """
    if bsa_formula not in BSA_FORMULAS:
        raise ConfigError(f"unknown BSA formula: {bsa_formula}")
    for name in ("height", "weight", "mean_sbp", "mean_dbp"):
        if getattr(raw, name) is None:
            raise MissingMeasurement(name)
    height_m = raw.height / 100.0
    bmi = raw.weight / (height_m * height_m)
    bsa = BSA_FORMULAS[bsa_formula](raw.weight, raw.height)
    return FeatureVector.from_mapping(
        MODEL_FEATURES,
        {
            "bmi": bmi,
            "mean_dbp": raw.mean_dbp,
            "age": float(raw.age),
            "mean_sbp": raw.mean_sbp,
            "weight": raw.weight,
            "bsa": bsa,
        },
    )


def derive_available_features(raw: RawPatient, bsa_formula: str = "du_bois") -> FeatureVector:
    """Lenient variant for case intake: absent inputs yield missing features.

    Applicability gating downstream decides what to do with the gaps; this
    never raises for missing measurements.
    """
    if bsa_formula not in BSA_FORMULAS:
        raise ConfigError(f"unknown BSA formula: {bsa_formula}")
    values: dict[str, float | None] = {
        "age": float(raw.age),
        "weight": raw.weight,
        "mean_sbp": raw.mean_sbp,
        "mean_dbp": raw.mean_dbp,
        "bmi": None,
        "bsa": None,
    }
    if raw.height is not None and raw.weight is not None:
        height_m = raw.height / 100.0
        values["bmi"] = raw.weight / (height_m * height_m)
        values["bsa"] = BSA_FORMULAS[bsa_formula](raw.weight, raw.height)
    return FeatureVector.from_mapping(MODEL_FEATURES, values)


# ---------------------------------------------------------------------------
# Inclusion criteria
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InclusionCriterion:
    """One study-entry rule checked against a case."""

    rule_id: str
    check: Callable[[PatientCase], bool]
    description: str = ""


def _age_in_range(case: PatientCase) -> bool:
    return 18 <= case.raw.age <= 90


def _no_baseline_hyperglycemia(case: PatientCase) -> bool:
    # Survey flag stands in for baseline glucose labs: an explicit "yes"
    # disqualifies; "unknown" passes (no disqualifying measurement on record).
    return case.raw.high_glucose_history is not TriState.YES


DEFAULT_INCLUSION_CRITERIA: tuple[InclusionCriterion, ...] = (
    InclusionCriterion("age_range", _age_in_range, "age between 18 and 90 years"),
    InclusionCriterion(
        "no_baseline_hyperglycemia",
        _no_baseline_hyperglycemia,
        "no high-glucose finding at the start of observation",
    ),
)


@dataclass(frozen=True)
class ValidationReport:
    accepted: bool
    violations: tuple[str, ...]


def validate_inclusion(
    case: PatientCase,
    criteria: Sequence[InclusionCriterion] = DEFAULT_INCLUSION_CRITERIA,
) -> ValidationReport:
    """Check a case against entry criteria; conjunction semantics.

    Violations are data, not errors: the report lists every failed rule id.
    """
    violations = tuple(c.rule_id for c in criteria if not c.check(case))
    return ValidationReport(accepted=not violations, violations=violations)


# ---------------------------------------------------------------------------
# Cohorts
# ---------------------------------------------------------------------------

@dataclass
class CohortDataset:
    """Labeled feature table. Treat as immutable once constructed.

    `values` is float64 with NaN encoding missing cells; this NaN is an
    internal array encoding only -- row access converts back to explicit
    `None` missingness.
    """

    schema: tuple[str, ...]
    values: np.ndarray  # (n, d) float64, NaN = missing
    labels: np.ndarray  # (n,) int8 in {0, 1}

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int8)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.schema):
            raise ValueError("values shape does not match schema")
        if self.labels.shape != (self.values.shape[0],):
            raise ValueError("labels length does not match rows")
        if not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be 0/1")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def prevalence(self) -> float:
        if self.n_rows == 0:
            return 0.0
        return float(self.labels.mean())

    def row(self, i: int) -> FeatureVector:
        vals = tuple(None if math.isnan(v) else float(v) for v in self.values[i])
        return FeatureVector(self.schema, vals)

    def rows(self) -> Iterator[tuple[FeatureVector, int]]:
        for i in range(self.n_rows):
            yield self.row(i), int(self.labels[i])

    def subset(self, indices: np.ndarray) -> "CohortDataset":
        return CohortDataset(self.schema, self.values[indices].copy(), self.labels[indices].copy())


def load_cohort(source: str | Path, features: Sequence[str] | None = None) -> CohortDataset:
    """Parse a delimiter-separated cohort file.

    The header must name every requested feature plus the label column
    `t2dm_5y`; extra columns are permitted and ignored. Empty cells and `NA`
    become explicit missing values.
    """
    wanted = tuple(features) if features is not None else MODEL_FEATURES
    path = Path(source)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty document: no header row") from None
        seen: set[str] = set()
        for col in header:
            if col in seen:
                raise SchemaError(f"duplicate column: {col}")
            seen.add(col)
        if LABEL_COLUMN not in seen:
            raise SchemaError(f"missing label column: {LABEL_COLUMN}")
        for col in wanted:
            if col not in seen:
                raise SchemaError(f"unknown column requested or absent from header: {col}")
        col_index = {name: header.index(name) for name in wanted}
        label_index = header.index(LABEL_COLUMN)

        rows: list[list[float]] = []
        labels: list[int] = []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise ParseError(f"expected {len(header)} cells, got {len(record)}", line=lineno)
            row: list[float] = []
            for name in wanted:
                cell = record[col_index[name]].strip()
                if cell in MISSING_CELLS:
                    row.append(math.nan)
                    continue
                try:
                    row.append(float(cell))
                except ValueError:
                    raise ParseError(f"non-numeric cell for {name}: {cell!r}", line=lineno) from None
            label_cell = record[label_index].strip()
            if label_cell not in ("0", "1"):
                raise ParseError(f"label must be 0 or 1, got {label_cell!r}", line=lineno)
            labels.append(int(label_cell))
            rows.append(row)
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(wanted))
    return CohortDataset(wanted, values, np.array(labels, dtype=np.int8))


def save_cohort(dataset: CohortDataset, destination: str | Path) -> None:
    """Write a cohort back out in the load_cohort format (missing -> NA)."""
    path = Path(destination)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dataset.schema) + [LABEL_COLUMN])
        for i in range(dataset.n_rows):
            cells = ["NA" if math.isnan(v) else repr(float(v)) for v in dataset.values[i]]
            cells.append(str(int(dataset.labels[i])))
            writer.writerow(cells)


# ---------------------------------------------------------------------------
# Synthetic cohort generator
# ---------------------------------------------------------------------------

#: Centering/scale constants for the planted risk score (fixed, not empirical,
#: so the risk function is a pure function of the row).
_RISK_STANDARDIZATION: dict[str, tuple[float, float]] = {
    "bmi": (27.5, 4.5),
    "mean_dbp": (79.0, 10.0),
    "age": (55.0, 14.0),
    "mean_sbp": (130.0, 16.0),
    "weight": (82.0, 16.0),
    "bsa": (1.95, 0.2),
}

#: Positive weights -> risk monotone non-decreasing in every feature.
DEFAULT_RISK_WEIGHTS: dict[str, float] = {
    "bmi": 1.7,
    "mean_dbp": 0.5,
    "age": 0.9,
    "mean_sbp": 0.7,
    "weight": 0.35,
    "bsa": 0.25,
}


@dataclass(frozen=True)
class GeneratorConfig:
    """Desk-scale cohort simulation parameters."""

    n: int
    positive_rate: float
    risk_weights: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_RISK_WEIGHTS))
    risk_sharpness: float = 2.2  # slope applied to the standardized risk score

    def __post_init__(self):
        if self.n <= 0:
            raise ConfigError(f"n must be positive, got {self.n}")
        if not 0.0 < self.positive_rate < 1.0:
            raise ConfigError(f"positive rate must lie in (0,1), got {self.positive_rate}")
        unknown = set(self.risk_weights) - set(MODEL_FEATURES)
        if unknown:
            raise ConfigError(f"risk weights for unknown features: {sorted(unknown)}")
        if any(w < 0 for w in self.risk_weights.values()):
            raise ConfigError("risk weights must be non-negative (monotone plant)")


def planted_risk_score(config: GeneratorConfig, values: np.ndarray, schema: Sequence[str]) -> np.ndarray:
    """The generator's ground-truth monotone risk score for given rows."""
    z = np.zeros(values.shape[0])
    for j, name in enumerate(schema):
        w = config.risk_weights.get(name, 0.0)
        if w == 0.0:
            continue
        center, scale = _RISK_STANDARDIZATION[name]
        z += w * (values[:, j] - center) / scale
    return z


def simulate_cohort(config: GeneratorConfig, seed: int) -> CohortDataset:
    """Draw a synthetic cohort with a planted monotone risk function.

    Labels are a weighted sample without replacement of exactly
    round(n * positive_rate) rows, with selection keys monotone in the
    planted risk, so the realized prevalence matches the config while label
    noise keeps the learning problem non-trivial. Deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    n = config.n

    age = np.clip(np.round(rng.normal(55.0, 14.0, size=n)), 18, 90)
    height = np.clip(rng.normal(170.0, 9.0, size=n), 145.0, 200.0)
    weight = np.clip(rng.normal(82.0, 16.0, size=n), 45.0, 160.0)
    bmi = weight / (height / 100.0) ** 2
    bsa = 0.007184 * weight**0.425 * height**0.725
    mean_sbp = np.clip(rng.normal(122.0, 13.0, size=n) + 0.18 * (age - 50.0), 90.0, 210.0)
    mean_dbp = np.clip(rng.normal(66.0, 8.0, size=n) + 0.10 * mean_sbp, 50.0, 130.0)

    columns = {
        "bmi": bmi,
        "mean_dbp": mean_dbp,
        "age": age,
        "mean_sbp": mean_sbp,
        "weight": weight,
        "bsa": bsa,
    }
    values = np.column_stack([columns[name] for name in MODEL_FEATURES])

    z = planted_risk_score(config, values, MODEL_FEATURES)
    base = math.log(config.positive_rate / (1.0 - config.positive_rate))
    p = 1.0 / (1.0 + np.exp(-(base + config.risk_sharpness * z)))

    # Efraimidis-Spirakis keys: top-m selection is monotone in p but noisy.
    u = rng.random(n)
    keys = np.log(u) / p
    m = int(round(n * config.positive_rate))
    positives = np.argsort(keys, kind="stable")[::-1][:m]
    labels = np.zeros(n, dtype=np.int8)
    labels[positives] = 1
    return CohortDataset(MODEL_FEATURES, values, labels)
