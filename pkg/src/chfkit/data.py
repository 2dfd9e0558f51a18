"""CHF experiment table ingestion and dataset preparation.

Reads delimited text tables of critical-heat-flux measurements (one row
per experiment), canonicalizes units to SI, derives missing fields where
physics allows, screens rows against a configurable parameter envelope,
and provides the seeded shuffle / z-score / 80-10-10 split machinery for
model training.

The file schema is a comma-delimited header
``D_mm,L_m,P_kPa,G_kg_m2s,x_e,dh_sub_kJ_kg,T_in_C,chf_kW_m2`` with ``.``
decimals and blank cells for missing values.  Internally everything is
SI: m, Pa, kg/(m^2 s), J/kg, K, W/m^2.

Derivations for blank cells:

* inlet temperature from pressure and subcooling (saturation tables),
* subcooling from pressure and inlet temperature,
* exit quality from the heat balance using the measured CHF.

A row whose blanks cannot be derived is rejected.  Envelope violations
reject the row in strict mode and merely flag it otherwise; either way
the report carries the file line number and a reason.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import fluid
from .correlations import InletConditions, heat_balance_quality
from .mlp import Scaler

__all__ = [
    "ChfRecord",
    "DatasetSplit",
    "IngestError",
    "IngestReport",
    "TABLE1_ENVELOPE",
    "MODEL_FEATURES",
    "CSV_HEADER",
    "ingest",
    "write_records",
    "shuffle",
    "split",
    "feature_matrix",
    "fit_scaler",
    "envelope_violations",
]

CSV_HEADER = "D_mm,L_m,P_kPa,G_kg_m2s,x_e,dh_sub_kJ_kg,T_in_C,chf_kW_m2"
_COLUMNS = CSV_HEADER.split(",")

# Training-data parameter ranges (SI), after Table 1 of the NRC CHF
# database study this pipeline is built around.
TABLE1_ENVELOPE: dict[str, tuple[float, float]] = {
    "diameter": (2.0e-3, 16.0e-3),
    "heated_length": (0.05, 20.0),
    "pressure": (100.0e3, 20_000.0e3),
    "mass_flux": (8.0, 7964.0),
    "exit_quality": (-0.5, 0.99),
    "inlet_subcooling": (-1211.0e3, 1644.0e3),
    "measured_chf": (50.0e3, 16_339.0e3),
}

# Inputs of the CHF regression models, in order.
MODEL_FEATURES = (
    "diameter", "heated_length", "pressure", "mass_flux", "inlet_subcooling",
)


class IngestError(ValueError):
    """Table cannot be read at all (structure, not per-row content)."""


@dataclass(frozen=True)
class ChfRecord:
    """One CHF experiment in SI units.

    ``inlet_temperature`` may be None when neither measured nor
    derivable; every other field is mandatory.  Envelope screening is a
    pipeline concern (see envelope_violations), not a type invariant,
    so records outside the training ranges can still be represented.
    """

    diameter: float
    heated_length: float
    pressure: float
    mass_flux: float
    exit_quality: float
    inlet_subcooling: float
    measured_chf: float
    inlet_temperature: float | None = None

    def __post_init__(self) -> None:
        for name in ("diameter", "heated_length", "pressure", "mass_flux",
                     "exit_quality", "inlet_subcooling", "measured_chf"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.inlet_temperature is not None and not math.isfinite(self.inlet_temperature):
            raise ValueError(f"inlet_temperature must be finite, got {self.inlet_temperature!r}")


@dataclass(frozen=True)
class IngestReport:
    """Per-row outcomes of an ingest pass.

    Row numbers are file line numbers (the header is line 1, so the
    first data row is line 2).
    """

    n_rows: int
    rejected: tuple[tuple[int, str], ...] = ()
    flagged: tuple[tuple[int, str], ...] = ()


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[ChfRecord, ...]
    validation: tuple[ChfRecord, ...]
    test: tuple[ChfRecord, ...]
    seed: int
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)


def envelope_violations(
    r: ChfRecord, envelope: dict[str, tuple[float, float]] | None = None
) -> list[str]:
    """Names of fields outside the envelope, with the offending values."""
    env = TABLE1_ENVELOPE if envelope is None else envelope
    out = []
    for name, (lo, hi) in env.items():
        v = getattr(r, name)
        if v is None:
            continue
        if not lo <= v <= hi:
            out.append(f"{name}={v:g} outside [{lo:g}, {hi:g}]")
    return out


def _parse_cell(text: str, column: str, line_no: int) -> float | None:
    text = text.strip()
    if not text:
        return None
    try:
        return float(text)
    except ValueError:
        raise IngestError(
            f"line {line_no}: unparseable numeric {text!r} in column {column!r}"
        ) from None


def _build_record(values: dict[str, float | None], line_no: int) -> ChfRecord:
    """SI conversion plus derivation of blank derivable fields.

    Raises ValueError with a human-readable reason when the row is
    underdetermined or a derivation fails; the caller turns that into a
    rejection entry.
    """
    required = ("D_mm", "L_m", "P_kPa", "G_kg_m2s", "chf_kW_m2")
    for col in required:
        if values[col] is None:
            raise ValueError(f"column {col!r} is blank and not derivable")

    d = values["D_mm"] * 1e-3
    length = values["L_m"]
    p = values["P_kPa"] * 1e3
    g = values["G_kg_m2s"]
    chf = values["chf_kW_m2"] * 1e3
    x_e = values["x_e"]
    dh = None if values["dh_sub_kJ_kg"] is None else values["dh_sub_kJ_kg"] * 1e3
    t_in = None if values["T_in_C"] is None else values["T_in_C"] + 273.15

    if dh is None and t_in is None:
        raise ValueError("both dh_sub_kJ_kg and T_in_C are blank; need one")
    if dh is None:
        dh = fluid.subcooling_from_inlet_temp(p, t_in)
    elif t_in is None:
        # negative subcooling (two-phase inlet) has no single temperature
        t_in = fluid.inlet_temp_from_subcooling(p, dh) if dh >= 0.0 else None

    if x_e is None:
        c = InletConditions(diameter=d, heated_length=length, pressure=p,
                            mass_flux=g, inlet_subcooling=dh)
        x_e = heat_balance_quality(chf, c)

    return ChfRecord(
        diameter=d, heated_length=length, pressure=p, mass_flux=g,
        exit_quality=x_e, inlet_subcooling=dh, measured_chf=chf,
        inlet_temperature=t_in,
    )


def ingest(
    path: str,
    envelope: dict[str, tuple[float, float]] | None = None,
    strict: bool = True,
) -> tuple[list[ChfRecord], IngestReport]:
    """Read a CHF table; returns accepted records and a per-row report.

    Structural problems (missing columns, unparseable numbers, empty
    file) raise IngestError.  Rows that cannot be completed (blank
    underivable fields, failed derivations) are always rejected.  Rows
    violating the envelope are rejected when ``strict`` and flagged
    (kept) otherwise.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise IngestError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    missing = [c for c in _COLUMNS if c not in header]
    if missing:
        raise IngestError(f"{path}: missing column(s) {missing}")
    if len(lines) < 2:
        raise IngestError(f"{path}: no data rows")
    col_pos = {c: header.index(c) for c in _COLUMNS}

    records: list[ChfRecord] = []
    rejected: list[tuple[int, str]] = []
    flagged: list[tuple[int, str]] = []
    n_rows = 0
    for i, line in enumerate(lines[1:]):
        line_no = i + 2
        n_rows += 1
        cells = line.split(",")
        if len(cells) != len(header):
            raise IngestError(
                f"line {line_no}: expected {len(header)} fields, got {len(cells)}"
            )
        values = {
            c: _parse_cell(cells[col_pos[c]], c, line_no) for c in _COLUMNS
        }
        try:
            rec = _build_record(values, line_no)
        except (ValueError, fluid.FluidRangeError) as e:
            rejected.append((line_no, str(e)))
            continue
        problems = envelope_violations(rec, envelope)
        if problems:
            if strict:
                rejected.append((line_no, "; ".join(problems)))
                continue
            flagged.append((line_no, "; ".join(problems)))
        records.append(rec)
    return records, IngestReport(
        n_rows=n_rows, rejected=tuple(rejected), flagged=tuple(flagged)
    )


def write_records(records: Sequence[ChfRecord], path: str) -> None:
    """Export to the file schema; re-ingesting reproduces the SI values
    to better than 1e-12 relative (shortest round-trip decimals)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            t_in = "" if r.inlet_temperature is None else repr(r.inlet_temperature - 273.15)
            fh.write(",".join([
                repr(r.diameter * 1e3),
                repr(r.heated_length),
                repr(r.pressure / 1e3),
                repr(r.mass_flux),
                repr(r.exit_quality),
                repr(r.inlet_subcooling / 1e3),
                t_in,
                repr(r.measured_chf / 1e3),
            ]) + "\n")


def shuffle(records: Sequence[ChfRecord], seed: int) -> list[ChfRecord]:
    """Seeded uniform permutation; deterministic for a given seed."""
    order = np.random.default_rng(seed).permutation(len(records))
    return [records[i] for i in order]


def split(records: Sequence[ChfRecord], seed: int) -> DatasetSplit:
    """Shuffle and partition 80/10/10.

    Validation and test sizes are the nearest integer to 10% of the
    input (so the historical 24,579-row database yields 2,458 test
    rows); all remainder rows go to train.  Partitions are contiguous
    slices of the shuffled order: train, then validation, then test.
    """
    n = len(records)
    if n < 10:
        raise ValueError(f"need at least 10 records to split, got {n}")
    mixed = shuffle(records, seed)
    n_val = int(n * 0.1 + 0.5)
    n_test = n_val
    n_train = n - n_val - n_test
    return DatasetSplit(
        train=tuple(mixed[:n_train]),
        validation=tuple(mixed[n_train:n_train + n_val]),
        test=tuple(mixed[n_train + n_val:]),
        seed=seed,
    )


def feature_matrix(
    records: Sequence[ChfRecord], features: Sequence[str] = MODEL_FEATURES
) -> np.ndarray:
    """(n, d) array of the named ChfRecord fields, in order."""
    for f in features:
        if f not in ChfRecord.__dataclass_fields__:
            raise ValueError(f"unknown feature {f!r}")
    out = np.empty((len(records), len(features)), dtype=np.float64)
    for i, r in enumerate(records):
        for j, f in enumerate(features):
            v = getattr(r, f)
            if v is None:
                raise ValueError(
                    f"record {i} has no value for feature {f!r}"
                )
            out[i, j] = v
    return out


def fit_scaler(
    records: Sequence[ChfRecord], features: Sequence[str] = MODEL_FEATURES
) -> Scaler:
    """Z-score scaler over the named features (population convention).

    Fit this on the training partition only: statistics taken from rows
    later used for validation or testing leak target-adjacent
    information into the model.
    """
    if len(records) < 2:
        raise ValueError(f"need at least 2 records to fit a scaler, got {len(records)}")
    return Scaler.fit(feature_matrix(records, features))
