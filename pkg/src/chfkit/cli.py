"""Command-line surface tying the pipeline together.

Subcommands cover the full workflow: ``prepare`` (ingest, split,
residual generation), ``train``/``tune``, ``predict``, ``simulate``
(channel DNBR), ``evaluate`` (error metrics and plots data),
``hullcheck`` (interpolation-domain verdicts) and ``verify-model``.

Runs are driven by a plain-text ``key=value`` config file; command-line
``key=value`` arguments and the ``--seed``/``--strict`` flags override
it.  Every command writes ``manifest.json`` into its output directory
echoing the resolved configuration together with SHA-256 hashes of all
files read and written, and nothing time-dependent, so a rerun with the
same inputs is byte-identical.

Exit status is nonzero only for configuration, format, and I/O
problems (including a diverged training run).  Per-record scientific
failures - an unsolvable heat balance, a channel case with no critical
condition - are recorded in the outputs as data, and the run continues.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .channel import BracketError, ChannelCase, find_critical_power, solve_channel
from .correlations import InletConditions, NoCriticalConditionError
from .data import (
    MODEL_FEATURES,
    TABLE1_ENVELOPE,
    ChfRecord,
    IngestError,
    feature_matrix,
    ingest,
    split,
    write_records,
)
from .evaluation import (
    compute_report,
    kde,
    parity_series,
    relative_errors,
    write_kde_csv,
    write_parity_csv,
    write_report_csv,
    write_report_text,
)
from .fluid import FluidRangeError
from .hybrid import (
    PREDICTOR_KINDS,
    ChfPredictor,
    build_residual_dataset,
    predict,
)
from .validity import classify_batch, fit_pca, write_projection_csv, write_verdicts_csv
from .mlp import (
    ACTIVATIONS,
    ModelFormatError,
    ModelValidationError,
    Scaler,
    SearchSpace,
    TrainConfig,
    TrainingDivergedError,
    forward_batch,
    init_mlp,
    load_model,
    save_model,
    train,
    tune,
)

__all__ = ["ConfigError", "main", "parse_config_text"]

CASE_HEADER = "D_mm,L_m,P_kPa,G_kg_m2s,dh_sub_kJ_kg,q_wall_kW_m2,n_axial"

# Paper-table reference architecture used when none is configured.
DEFAULT_HIDDEN = "44,64,41,26,67,10,17"

HULL_FEATURES_DEFAULT = (
    "diameter,heated_length,pressure,mass_flux,exit_quality,"
    "inlet_subcooling,inlet_temperature"
)


class ConfigError(ValueError):
    """Bad or missing configuration; reported with nonzero exit status."""


# ---------------------------------------------------------------------------
# Config file handling
# ---------------------------------------------------------------------------

# every key any command understands; typos fail fast instead of being
# silently ignored
_ALL_KEYS = frozenset({
    "outdir", "seed", "strict",
    "data", "base",
    "mode", "hidden", "activation", "epochs", "batch_size", "lr0", "decay",
    "train_csv", "val_csv",
    "budget_epochs", "n_configs", "rung0_epochs",
    "depths", "width_min", "width_max", "batch_sizes", "lr_min", "lr_max",
    "tune_activations",
    "kind", "model",
    "cases", "critical_power", "bracket_lo_kW_m2", "bracket_hi_kW_m2",
    "pred_csv", "pred_col", "truth_csv", "truth_col", "trim_quantile",
    "kde_lo_pct", "kde_hi_pct",
    "query_csv", "hull_features",
    "envelope_D_mm", "envelope_L_m", "envelope_P_kPa", "envelope_G_kg_m2s",
    "envelope_x_e", "envelope_dh_sub_kJ_kg", "envelope_chf_kW_m2",
})

# config envelope keys carry the file-column units; conversion factors
# mirror ingestion
_ENVELOPE_KEYS = {
    "envelope_D_mm": ("diameter", 1e-3),
    "envelope_L_m": ("heated_length", 1.0),
    "envelope_P_kPa": ("pressure", 1e3),
    "envelope_G_kg_m2s": ("mass_flux", 1.0),
    "envelope_x_e": ("exit_quality", 1.0),
    "envelope_dh_sub_kJ_kg": ("inlet_subcooling", 1e3),
    "envelope_chf_kW_m2": ("measured_chf", 1e3),
}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse `key=value` lines; '#' starts a comment, blanks are skipped.

    Duplicate keys are an error: a config that quietly shadows itself is
    not auditable.
    """
    out: dict[str, str] = {}
    for i, raw_line in enumerate(text.split("\n"), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {i}: expected key=value, got {raw_line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in out:
            raise ConfigError(f"config line {i}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def load_config(path: str | None, overrides: list[str]) -> dict[str, str]:
    cfg: dict[str, str] = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                cfg = parse_config_text(fh.read())
        except OSError as e:
            raise ConfigError(f"cannot read config file {path!r}: {e}") from None
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        cfg[key.strip()] = value.strip()
    unknown = sorted(set(cfg) - _ALL_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    return cfg


_REQUIRED = object()


class _Config:
    """Typed access to raw config strings, recording what was resolved."""

    def __init__(self, raw: dict[str, str]):
        self._raw = raw
        self.resolved: dict[str, str] = {}

    def _text(self, key: str, default) -> str:
        if key in self._raw:
            text = self._raw[key]
        elif default is _REQUIRED:
            raise ConfigError(f"missing required config key {key!r}")
        else:
            text = default
        self.resolved[key] = text
        return text

    def has(self, key: str) -> bool:
        return key in self._raw

    def str_(self, key: str, default=_REQUIRED) -> str:
        return self._text(key, default)

    def choice(self, key: str, choices, default=_REQUIRED) -> str:
        v = self._text(key, default)
        if v not in choices:
            raise ConfigError(f"config key {key!r}: expected one of {sorted(choices)}, got {v!r}")
        return v

    def int_(self, key: str, default=_REQUIRED) -> int:
        v = self._text(key, default)
        try:
            return int(v)
        except ValueError:
            raise ConfigError(f"config key {key!r}: not an integer: {v!r}") from None

    def float_(self, key: str, default=_REQUIRED) -> float:
        v = self._text(key, default)
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"config key {key!r}: not a number: {v!r}") from None

    def bool_(self, key: str, default=_REQUIRED) -> bool:
        v = self._text(key, default).lower()
        if v in ("true", "1", "yes"):
            return True
        if v in ("false", "0", "no"):
            return False
        raise ConfigError(f"config key {key!r}: not a boolean: {v!r}")

    def ints(self, key: str, default=_REQUIRED) -> tuple[int, ...]:
        v = self._text(key, default)
        try:
            return tuple(int(p) for p in v.split(","))
        except ValueError:
            raise ConfigError(f"config key {key!r}: not a comma list of integers: {v!r}") from None

    def names(self, key: str, default=_REQUIRED) -> tuple[str, ...]:
        return tuple(p.strip() for p in self._text(key, default).split(","))

    def path_in(self, key: str, default=_REQUIRED) -> str:
        v = self._text(key, default)
        if not os.path.isfile(v):
            raise ConfigError(f"config key {key!r}: no such file: {v}")
        return v

    def outdir(self) -> str:
        d = self._text("outdir", ".")
        os.makedirs(d, exist_ok=True)
        return d

    def envelope(self) -> dict[str, tuple[float, float]]:
        env = dict(TABLE1_ENVELOPE)
        for key, (field, factor) in _ENVELOPE_KEYS.items():
            if key not in self._raw:
                continue  # keep the default range
            parts = self._text(key, _REQUIRED).split(",")
            if len(parts) != 2:
                raise ConfigError(f"config key {key!r}: expected 'lo,hi'")
            try:
                lo, hi = (float(p) * factor for p in parts)
            except ValueError:
                raise ConfigError(f"config key {key!r}: not numeric: {parts}") from None
            env[field] = (lo, hi)
        return env


# ---------------------------------------------------------------------------
# Manifest plumbing
# ---------------------------------------------------------------------------

def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(outdir: str, command: str, cfg: _Config,
                    inputs: list[str], outputs: list[str],
                    counts: dict) -> str:
    manifest = {
        "command": command,
        "version": __version__,
        "config": dict(sorted(cfg.resolved.items())),
        "inputs": {p: _sha256(p) for p in inputs},
        "outputs": {os.path.basename(p): _sha256(p) for p in outputs},
        "counts": counts,
    }
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _out(outdir: str, name: str) -> str:
    return os.path.join(outdir, name)


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

_FEATURE_HEADER = ("diameter_m,heated_length_m,pressure_Pa,"
                   "mass_flux_kg_m2s,inlet_subcooling_J_kg")


def _ingest_with_lines(path: str, envelope, strict: bool):
    """Ingest plus the original file line number of every kept record."""
    records, report = ingest(path, envelope=envelope, strict=strict)
    dropped = {line for line, _ in report.rejected}
    kept_lines = [ln for ln in range(2, report.n_rows + 2) if ln not in dropped]
    return records, report, kept_lines


def _write_feature_csv(path: str, feature_rows, extra_header: str,
                       extra_rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{_FEATURE_HEADER},{extra_header}\n")
        for feats, extra in zip(feature_rows, extra_rows):
            cells = [repr(float(v)) for v in feats] + [repr(float(v)) for v in extra]
            fh.write(",".join(cells) + "\n")


def _csv_safe(message: str) -> str:
    # failure text goes into one CSV cell; keep the delimiter out of it
    return str(message).replace(",", ";").replace("\n", " ")


def _read_columns(path: str, columns: tuple[str, ...]) -> list[list[float | None]]:
    """Read named float columns from a CSV; blank cells become None."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    except OSError as e:
        raise ConfigError(f"cannot read {path!r}: {e}") from None
    if not lines:
        raise ConfigError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    missing = [c for c in columns if c not in header]
    if missing:
        raise ConfigError(f"{path}: missing column(s) {missing}")
    idx = [header.index(c) for c in columns]
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise ConfigError(f"{path} line {i}: expected {len(header)} fields, "
                              f"got {len(cells)}")
        row = []
        for c, j in zip(columns, idx):
            text = cells[j].strip()
            if not text:
                row.append(None)
                continue
            try:
                row.append(float(text))
            except ValueError:
                raise ConfigError(f"{path} line {i}: column {c!r} is not "
                                  f"numeric: {text!r}") from None
        rows.append(row)
    return rows


def _training_matrices(path: str, mode: str,
                       min_rows: int = 2) -> tuple[np.ndarray, np.ndarray]:
    target = "residual_W_m2" if mode == "residual" else "target_W_m2"
    cols = tuple(_FEATURE_HEADER.split(",")) + (target,)
    rows = _read_columns(path, cols)
    if any(None in row for row in rows):
        raise ConfigError(f"{path}: blank cells are not allowed in training data")
    arr = np.array(rows, dtype=float)
    if arr.shape[0] < min_rows:
        raise ConfigError(f"{path}: need at least {min_rows} training rows")
    return arr[:, :-1], arr[:, -1]


def _load_predictor(cfg: _Config) -> tuple[ChfPredictor, list[str]]:
    kind = cfg.choice("kind", PREDICTOR_KINDS)
    inputs = []
    model = None
    if kind in ("pure_ml", "hybrid_biasi", "hybrid_bowring"):
        path = cfg.path_in("model")
        model = load_model(path)
        inputs.append(path)
    try:
        return ChfPredictor(kind=kind, model=model), inputs
    except ValueError as e:
        raise ConfigError(f"predictor/model mismatch: {e}") from None


def _fit_scalers(x: np.ndarray, y: np.ndarray) -> tuple[Scaler, Scaler]:
    return Scaler.fit(x), Scaler.fit(y.reshape(-1, 1))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_prepare(cfg: _Config) -> None:
    data_path = cfg.path_in("data")
    outdir = cfg.outdir()
    seed = cfg.int_("seed", "0")
    strict = cfg.bool_("strict", "true")
    base = cfg.choice("base", ("none", "biasi", "bowring"), "none")
    envelope = cfg.envelope()

    records, report, _ = _ingest_with_lines(data_path, envelope, strict)
    if not records:
        raise ConfigError(f"{data_path}: no usable rows after ingestion")
    parts = split(records, seed)
    splits = (("train", parts.train), ("val", parts.validation),
              ("test", parts.test))

    outputs = []
    counts: dict = {
        "rows_read": report.n_rows,
        "rows_rejected": len(report.rejected),
        "rows_flagged": len(report.flagged),
        "split_sizes": {name: len(recs) for name, recs in splits},
    }

    for name, recs in splits:
        path = _out(outdir, f"{name}.csv")
        write_records(recs, path)
        outputs.append(path)
        pure = _out(outdir, f"pure_{name}.csv")
        _write_feature_csv(
            pure,
            [(r.diameter, r.heated_length, r.pressure, r.mass_flux,
              r.inlet_subcooling) for r in recs],
            "target_W_m2", [(r.measured_chf,) for r in recs])
        outputs.append(pure)

    scaler = Scaler.fit(feature_matrix(parts.train, MODEL_FEATURES))
    scaler_path = _out(outdir, "scaler.csv")
    with open(scaler_path, "w", encoding="utf-8") as fh:
        fh.write("feature,mean,std\n")
        for name, mu, sd in zip(MODEL_FEATURES, scaler.mean, scaler.std):
            fh.write(f"{name},{mu!r},{sd!r}\n")
    outputs.append(scaler_path)

    if base != "none":
        failures = []
        n_failed = 0
        for name, recs in splits:
            rr, rep = build_residual_dataset(recs, base)
            n_failed += rep.n_failed
            failures.extend((name, i, msg) for i, msg in rep.failures)
            path = _out(outdir, f"residual_{name}.csv")
            _write_feature_csv(
                path, [r.features for r in rr],
                "base_chf_W_m2,measured_chf_W_m2,residual_W_m2",
                [(r.base_chf, r.measured_chf, r.residual) for r in rr],
            )
            outputs.append(path)
        fail_path = _out(outdir, "hbm_failures.csv")
        with open(fail_path, "w", encoding="utf-8") as fh:
            fh.write("split,row,reason\n")
            for name, i, msg in failures:
                fh.write(f"{name},{i},{_csv_safe(msg)}\n")
        outputs.append(fail_path)
        counts["hbm_failures"] = n_failed

    _write_manifest(outdir, "prepare", cfg, [data_path], outputs, counts)


def cmd_train(cfg: _Config) -> None:
    outdir = cfg.outdir()
    mode = cfg.choice("mode", ("direct", "residual"), "direct")
    base = cfg.choice("base", ("none", "biasi", "bowring"), "none")
    if mode == "residual" and base == "none":
        raise ConfigError("mode=residual requires base=biasi or base=bowring")
    if mode == "direct" and base != "none":
        raise ConfigError("mode=direct requires base=none")
    train_path = cfg.path_in("train_csv")
    seed = cfg.int_("seed", "0")
    hidden = cfg.ints("hidden", DEFAULT_HIDDEN)
    activation = cfg.choice("activation", tuple(ACTIVATIONS), "tanh")
    schedule = TrainConfig(
        epochs=cfg.int_("epochs", "500"),
        batch_size=cfg.int_("batch_size", "32"),
        lr0=cfg.float_("lr0", "0.001"),
        decay_rate=cfg.float_("decay", "0.99"),
        seed=seed,
    )

    x, y = _training_matrices(train_path, mode)
    in_scaler, out_scaler = _fit_scalers(x, y)
    net = init_mlp(x.shape[1], hidden, activation, seed=seed,
                   input_scaler=in_scaler, output_scaler=out_scaler,
                   mode=mode, base_model=base, feature_names=MODEL_FEATURES)
    x_std = in_scaler.transform(x)
    y_std = out_scaler.transform(y.reshape(-1, 1))[:, 0]
    fitted, trace = train(net, x_std, y_std, schedule)

    model_path = _out(outdir, "model.chfmlp")
    save_model(fitted, model_path)
    trace_path = _out(outdir, "loss_trace.csv")
    with open(trace_path, "w", encoding="utf-8") as fh:
        fh.write("epoch,loss\n")
        for i, loss in enumerate(trace):
            fh.write(f"{i},{loss!r}\n")

    inputs = [train_path]
    counts: dict = {"epochs": schedule.epochs,
                    "final_loss": repr(trace[-1]),
                    "initial_loss": repr(trace[0])}
    if cfg.has("val_csv"):
        val_path = cfg.path_in("val_csv")
        inputs.append(val_path)
        xv, yv = _training_matrices(val_path, mode, min_rows=1)
        pv = forward_batch(fitted, xv)
        counts["val_mse_W2_m4"] = repr(float(np.mean((pv - yv) ** 2)))
    _write_manifest(outdir, "train", cfg, inputs,
                    [model_path, trace_path], counts)


def cmd_tune(cfg: _Config) -> None:
    outdir = cfg.outdir()
    mode = cfg.choice("mode", ("direct", "residual"), "direct")
    train_path = cfg.path_in("train_csv")
    seed = cfg.int_("seed", "0")
    budget = cfg.int_("budget_epochs")
    space = SearchSpace(
        depths=cfg.ints("depths", "4,5,6,7,8"),
        width_range=(cfg.int_("width_min", "10"), cfg.int_("width_max", "70")),
        batch_sizes=cfg.ints("batch_sizes", "8,16,32,64"),
        lr_range=(cfg.float_("lr_min", "0.0001"), cfg.float_("lr_max", "0.01")),
        activations=cfg.names("tune_activations",
                              "elu,relu,softplus,sigmoid,tanh"),
    )
    for act in space.activations:
        if act not in ACTIVATIONS:
            raise ConfigError(f"config key 'tune_activations': unknown activation {act!r}")
    x, y = _training_matrices(train_path, mode)
    in_scaler, out_scaler = _fit_scalers(x, y)
    x_std = in_scaler.transform(x)
    y_std = out_scaler.transform(y.reshape(-1, 1))[:, 0]
    try:
        result = tune(space, x_std, y_std, budget,
                      n_configs=cfg.int_("n_configs", "16"),
                      rung0_epochs=cfg.int_("rung0_epochs", "10"),
                      decay_rate=cfg.float_("decay", "0.99"),
                      seed=seed)
    except ValueError as e:
        raise ConfigError(str(e)) from None

    winner_path = _out(outdir, "tune_winner.json")
    with open(winner_path, "w", encoding="utf-8") as fh:
        json.dump({
            "hidden": ",".join(str(w) for w in result.candidate.hidden_widths),
            "activation": result.candidate.activation,
            "batch_size": result.candidate.batch_size,
            "lr0": repr(result.candidate.lr0),
            "val_mse_std": repr(result.score),
            "epochs_trained": result.epochs_trained,
            "rungs": [{"epochs": ep, "scores": [repr(s) for s in scores]}
                      for ep, scores in result.rungs],
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(outdir, "tune", cfg, [train_path], [winner_path],
                    {"epochs_trained": result.epochs_trained,
                     "n_rungs": len(result.rungs)})


def cmd_predict(cfg: _Config) -> None:
    outdir = cfg.outdir()
    data_path = cfg.path_in("data")
    strict = cfg.bool_("strict", "false")
    predictor, extra_inputs = _load_predictor(cfg)
    records, report, lines = _ingest_with_lines(data_path, cfg.envelope(), strict)

    out_path = _out(outdir, "predictions.csv")
    n_failed = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("row,chf_pred_kW_m2,base_chf_kW_m2,ml_residual_kW_m2,"
                 "measured_chf_kW_m2,status\n")
        for rec, line_no in zip(records, lines):
            c = InletConditions(
                diameter=rec.diameter, heated_length=rec.heated_length,
                pressure=rec.pressure, mass_flux=rec.mass_flux,
                inlet_subcooling=rec.inlet_subcooling,
            )
            try:
                p = predict(predictor, c)
            except (NoCriticalConditionError, FluidRangeError, ValueError) as e:
                n_failed += 1
                fh.write(f"{line_no},,,,{rec.measured_chf / 1e3!r},"
                         f"failed: {_csv_safe(e)}\n")
                continue
            base = "" if p.base_chf is None else repr(p.base_chf / 1e3)
            resid = "" if p.ml_residual is None else repr(p.ml_residual / 1e3)
            fh.write(f"{line_no},{p.value / 1e3!r},{base},{resid},"
                     f"{rec.measured_chf / 1e3!r},ok\n")

    _write_manifest(outdir, "predict", cfg, [data_path, *extra_inputs],
                    [out_path],
                    {"rows_read": report.n_rows,
                     "rows_rejected": len(report.rejected),
                     "rows_flagged": len(report.flagged),
                     "predicted": len(records) - n_failed,
                     "failed": n_failed})


def _parse_cases(path: str) -> list[tuple[int, ChannelCase | str]]:
    """Channel cases from the batch file; bad rows come back as messages."""
    rows = _read_columns(path, tuple(CASE_HEADER.split(",")))
    out: list[tuple[int, ChannelCase | str]] = []
    for i, row in enumerate(rows):
        d, length, p_kpa, g, dh, q, n_axial = row
        if None in (d, length, p_kpa, g, dh, q):
            out.append((i, "blank cell in required column"))
            continue
        try:
            out.append((i, ChannelCase(
                diameter=d * 1e-3, heated_length=length, pressure=p_kpa * 1e3,
                mass_flux=g, inlet_subcooling=dh * 1e3,
                wall_heat_flux=q * 1e3,
                n_axial=60 if n_axial is None else int(n_axial),
            )))
        except ValueError as e:
            out.append((i, str(e)))
    return out


def cmd_simulate(cfg: _Config) -> None:
    outdir = cfg.outdir()
    cases_path = cfg.path_in("cases")
    predictor, extra_inputs = _load_predictor(cfg)
    critical = cfg.bool_("critical_power", "false")
    if critical:
        bracket = (cfg.float_("bracket_lo_kW_m2") * 1e3,
                   cfg.float_("bracket_hi_kW_m2") * 1e3)

    outputs = []
    n_failed = 0
    summary_path = _out(outdir, "summary.csv")
    cp_rows = []
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write("case,min_dnbr,limiting_node,n_flagged,status\n")
        for i, case in _parse_cases(cases_path):
            if isinstance(case, str):
                n_failed += 1
                fh.write(f"{i},,,,failed: {_csv_safe(case)}\n")
                continue
            try:
                profile = solve_channel(case, predictor)
            except FluidRangeError as e:
                n_failed += 1
                fh.write(f"{i},,,,failed: {_csv_safe(e)}\n")
                continue
            prof_path = _out(outdir, f"profile_{i}.csv")
            with open(prof_path, "w", encoding="utf-8") as pf:
                pf.write("z_m,enthalpy_J_kg,quality,dnbr,chf_kW_m2,flagged\n")
                flagged = set(profile.flagged_nodes)
                for j in range(len(profile.heights)):
                    pf.write(f"{profile.heights[j]!r},{profile.enthalpies[j]!r},"
                             f"{profile.qualities[j]!r},{profile.dnbr[j]!r},"
                             f"{profile.chf_local[j] / 1e3!r},{int(j in flagged)}\n")
            outputs.append(prof_path)
            fh.write(f"{i},{profile.min_dnbr!r},{profile.min_dnbr_node},"
                     f"{len(profile.flagged_nodes)},ok\n")
            if critical:
                try:
                    r = find_critical_power(case, predictor, bracket)
                    cp_rows.append(f"{i},{r.wall_heat_flux / 1e3!r},"
                                   f"{r.limiting_node},{r.min_dnbr!r},"
                                   f"{r.iterations},ok")
                except (BracketError, NoCriticalConditionError,
                        FluidRangeError) as e:
                    n_failed += 1
                    cp_rows.append(f"{i},,,,,failed: {_csv_safe(e)}")
    outputs.append(summary_path)

    if critical:
        cp_path = _out(outdir, "critical_power.csv")
        with open(cp_path, "w", encoding="utf-8") as fh:
            fh.write("case,critical_flux_kW_m2,limiting_node,min_dnbr,"
                     "iterations,status\n")
            for row in cp_rows:
                fh.write(row + "\n")
        outputs.append(cp_path)

    _write_manifest(outdir, "simulate", cfg, [cases_path, *extra_inputs],
                    outputs, {"failed": n_failed})


def cmd_evaluate(cfg: _Config) -> None:
    outdir = cfg.outdir()
    pred_path = cfg.path_in("pred_csv")
    pred_col = cfg.str_("pred_col", "chf_pred_kW_m2")
    truth_path = cfg.str_("truth_csv", pred_path)
    truth_col = cfg.str_("truth_col", "measured_chf_kW_m2")
    trim = cfg.float_("trim_quantile", "0.995")

    preds = [r[0] for r in _read_columns(pred_path, (pred_col,))]
    truths = [r[0] for r in _read_columns(truth_path, (truth_col,))]
    if len(preds) != len(truths):
        raise ConfigError(
            f"prediction and truth files disagree on length: "
            f"{len(preds)} vs {len(truths)} rows"
        )
    pairs = [(p, t) for p, t in zip(preds, truths) if p is not None and t is not None]
    n_missing = len(preds) - len(pairs)
    if not pairs:
        raise ConfigError("no rows with both a prediction and a truth value")
    # columns carry kW/m2; metrics are scale-free, parity export is not
    pred = np.array([p for p, _ in pairs]) * 1e3
    truth = np.array([t for _, t in pairs]) * 1e3

    try:
        report = compute_report(pred, truth, trim_quantile=trim)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    report_csv = _out(outdir, "report.csv")
    report_txt = _out(outdir, "report.txt")
    parity_path = _out(outdir, "parity.csv")
    write_report_csv(report, report_csv)
    write_report_text(report, report_txt)
    write_parity_csv(parity_series(pred, truth), parity_path)
    outputs = [report_csv, report_txt, parity_path]

    counts: dict = {"rows": len(preds), "rows_missing_values": n_missing}
    errors, _ = relative_errors(pred, truth)
    window = None
    if cfg.has("kde_lo_pct") or cfg.has("kde_hi_pct"):
        window = (cfg.float_("kde_lo_pct"), cfg.float_("kde_hi_pct"))
    try:
        series = kde(errors, window=window)
        kde_path = _out(outdir, "kde.csv")
        write_kde_csv(series, kde_path)
        outputs.append(kde_path)
        counts["kde_bandwidth_pct"] = repr(series.bandwidth)
    except ValueError as e:
        counts["kde"] = f"skipped: {e}"

    _write_manifest(outdir, "evaluate", cfg,
                    [pred_path] + ([truth_path] if truth_path != pred_path else []),
                    outputs, counts)


def cmd_hullcheck(cfg: _Config) -> None:
    outdir = cfg.outdir()
    train_path = cfg.path_in("train_csv")
    query_path = cfg.path_in("query_csv")
    strict = cfg.bool_("strict", "false")
    features = cfg.names("hull_features", HULL_FEATURES_DEFAULT)
    for f in features:
        if f not in ChfRecord.__dataclass_fields__:
            raise ConfigError(f"config key 'hull_features': unknown field {f!r}")

    envelope = cfg.envelope()
    train_recs, _, _ = _ingest_with_lines(train_path, envelope, strict)
    query_recs, _, _ = _ingest_with_lines(query_path, envelope, strict)
    if not train_recs or not query_recs:
        raise ConfigError("hullcheck needs nonempty train and query sets")
    if "inlet_temperature" in features:
        if any(r.inlet_temperature is None for r in train_recs + query_recs):
            raise ConfigError(
                "some rows have no inlet temperature (two-phase inlet); "
                "set hull_features without inlet_temperature"
            )
    x_train = feature_matrix(train_recs, features)
    x_query = feature_matrix(query_recs, features)

    verdicts, summary = classify_batch(x_train, x_query)
    verdict_path = _out(outdir, "verdicts.csv")
    write_verdicts_csv(verdicts, verdict_path)

    # projection of standardized features onto the two leading components
    mean = x_train.mean(axis=0)
    std = x_train.std(axis=0)
    std = np.where(std > 0.0, std, 1.0)
    pca = fit_pca((x_train - mean) / std)
    proj_path = _out(outdir, "projection.csv")
    stacked = np.vstack([(x_train - mean) / std, (x_query - mean) / std])
    labels = ["train"] * len(train_recs) + ["query"] * len(query_recs)
    write_projection_csv(pca, stacked, labels, proj_path)

    _write_manifest(outdir, "hullcheck", cfg, [train_path, query_path],
                    [verdict_path, proj_path],
                    {"n_inside": summary.n_inside,
                     "n_outside": summary.n_outside})


def cmd_verify_model(cfg: _Config) -> None:
    outdir = cfg.outdir()
    path = cfg.path_in("model")
    model = load_model(path)
    arch = " -> ".join(
        [str(model.n_inputs)] + [str(l.weights.shape[0]) for l in model.layers]
    )
    acts = ",".join(l.activation for l in model.layers)
    n_params = sum(l.weights.size + l.bias.size for l in model.layers)
    print(f"model: {path}")
    print(f"mode: {model.mode}  base: {model.base_model}")
    print(f"architecture: {arch}  activations: {acts}")
    print(f"parameters: {n_params}")
    print("format: OK")
    _write_manifest(outdir, "verify-model", cfg, [path], [],
                    {"parameters": n_params, "architecture": arch})


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "prepare": (cmd_prepare, "ingest a CHF table, split it, build residuals"),
    "train": (cmd_train, "train an MLP on prepared data"),
    "tune": (cmd_tune, "successive-halving hyperparameter search"),
    "predict": (cmd_predict, "predict CHF for a table of conditions"),
    "simulate": (cmd_simulate, "axial DNBR profiles for channel cases"),
    "evaluate": (cmd_evaluate, "error metrics, parity and KDE exports"),
    "hullcheck": (cmd_hullcheck, "interpolation-domain verdicts"),
    "verify-model": (cmd_verify_model, "validate a saved model file"),
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="chfkit",
        description="critical heat flux prediction toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, help_text) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--strict", action="store_true",
                       help="reject envelope violations instead of flagging")
        p.add_argument("overrides", nargs="*", metavar="key=value",
                       help="inline config overrides")
    args = parser.parse_args(argv)

    try:
        raw = load_config(args.config, args.overrides)
        if args.seed is not None:
            raw["seed"] = str(args.seed)
        if args.strict:
            raw["strict"] = "true"
        _COMMANDS[args.command][0](_Config(raw))
    except (ConfigError, IngestError, ModelFormatError, ModelValidationError,
            TrainingDivergedError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
