"""Experiment harness: stream preparation, (epsilon x window x method x
trial) sweeps, and CSV report emission.

Runs are fully deterministic: every trial derives its own RNG seed from the
base seed and a stable hash of (method, epsilon, window, trial), so adding
methods or reordering sweeps never shifts another trial's noise stream, and
re-running a sweep reproduces the raw CSV byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import math
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from .baselines import (
    BaselineConfig,
    baseline_laplace_smooth,
    baseline_lbd,
    baseline_sw_direct,
    baseline_sw_filter,
    baseline_sw_moving,
)
from .detection import DetectionConfig, default_detection_config, detect_period
from .exceptions import IngestionError, PeriodDetectionError
from .mechanisms import split_budget, sw_params, sw_perturb_series
from .recovery import EmConfig, cpr_recover, phase_groups, reconstruct_template
from .signal import cosine_distance, normalize, resample_linear, tile_crop

__all__ = [
    "METHODS",
    "StreamSpec",
    "ExperimentConfig",
    "TrialReport",
    "derive_seed",
    "load_csv_column",
    "build_periodic_stream",
    "prepare_stream",
    "run_detection_trials",
    "run_reconstruction_sweep",
    "emit_report",
    "load_experiment_config",
    "run_experiment",
]

METHODS = ("cpr", "laplace", "sw", "sw_moving", "sw_filter", "lbd")

WAVEFORMS = ("sine", "square", "sawtooth", "segment")


@dataclass(frozen=True)
class StreamSpec:
    """Where the evaluation stream comes from.

    ``synthetic_waveform`` tiles one base cycle (a named waveform, or the
    first ``period`` values of a CSV column for kind="segment") ``repeats``
    times, crops to ``length`` and adds uniform jitter.  ``csv_column``
    uses a CSV column as-is; ``period`` is then optional ground truth.
    """

    source: str = "synthetic_waveform"
    kind: str = "sine"
    period: Optional[int] = None
    length: Optional[int] = None
    repeats: Optional[int] = None
    jitter: float = 0.0
    csv_path: Optional[str] = None
    column: Optional[str] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.source not in ("synthetic_waveform", "csv_column"):
            raise ValueError(f"unknown stream source {self.source!r}")
        if self.source == "csv_column":
            if not self.csv_path or not self.column:
                raise ValueError("csv_column streams need csv_path and column")
            return
        if self.kind not in WAVEFORMS:
            raise ValueError(f"unknown waveform kind {self.kind!r}")
        if self.period is None or self.period < 2:
            raise ValueError("synthetic streams need period >= 2")
        if self.length is None or self.length < 3 * self.period:
            raise ValueError("synthetic streams need length >= 3 * period")
        if not 0.0 <= self.jitter < 0.5:
            raise ValueError("jitter must lie in [0, 0.5)")
        if self.repeats is not None and self.repeats * self.period < self.length:
            raise ValueError("repeats * period must cover length")
        if self.kind == "segment" and (not self.csv_path or not self.column):
            raise ValueError("segment streams need csv_path and column")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.source == "csv_column":
            return f"{Path(self.csv_path).stem}:{self.column}"
        return f"{self.kind}_T{self.period}"


@dataclass(frozen=True)
class ExperimentConfig:
    epsilons: tuple[float, ...]
    windows: tuple[int, ...]
    trials: int
    methods: tuple[str, ...] = METHODS
    base_seed: int = 0
    tol_t: int = 0
    detection: Optional[DetectionConfig] = None
    em: EmConfig = field(default_factory=EmConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)

    def __post_init__(self):
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        object.__setattr__(self, "windows", tuple(int(w) for w in self.windows))
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.epsilons or any(e <= 0 for e in self.epsilons):
            raise ValueError("epsilons must be a non-empty list of positive reals")
        if not self.windows or any(w < 1 for w in self.windows):
            raise ValueError("windows must be a non-empty list of positive integers")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        unknown = set(self.methods) - set(METHODS)
        if not self.methods or unknown:
            raise ValueError(f"methods must be a non-empty subset of {METHODS}, got {unknown or 'none'}")
        if self.tol_t < 0:
            raise ValueError("tol_t must be non-negative")


@dataclass(frozen=True)
class TrialReport:
    """One sweep row.  ``wall_time_ms`` stays in memory only; writing it to
    the raw CSV would break byte-level reproducibility between runs."""

    stream: str
    method: str
    epsilon: float
    w: int
    trial: int
    t_hat: Optional[int]
    detected_correctly: Optional[bool]
    cosine_distance: Optional[float]
    wall_time_ms: float


def derive_seed(base_seed: int, method: str, epsilon: float, w: int, trial: int) -> int:
    """Stable 64-bit per-trial seed; independent of sweep order."""
    digest = hashlib.blake2b(digest_size=8)
    digest.update(method.encode())
    digest.update(struct.pack("<dqq", float(epsilon), int(w), int(trial)))
    return (int(base_seed) ^ int.from_bytes(digest.digest(), "little")) & 0xFFFFFFFFFFFFFFFF


def load_csv_column(path, column: str) -> np.ndarray:
    """Ordered numeric values of one named CSV column.

    Parse problems raise IngestionError naming the offending data row
    (1-based).
    """
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise IngestionError(f"{path}: no column named {column!r}")
        values = []
        for row_index, row in enumerate(reader, start=1):
            cell = row.get(column)
            if cell is None or cell == "":
                raise IngestionError(f"{path}: empty cell in column {column!r} at row {row_index}")
            try:
                value = float(cell)
            except ValueError as exc:
                raise IngestionError(
                    f"{path}: cannot parse {cell!r} in column {column!r} at row {row_index}"
                ) from exc
            if not math.isfinite(value):
                raise IngestionError(f"{path}: non-finite value in column {column!r} at row {row_index}")
            values.append(value)
    if not values:
        raise IngestionError(f"{path}: column {column!r} has no rows")
    return np.asarray(values, dtype=np.float64)


def _base_cycle(spec: StreamSpec) -> np.ndarray:
    t = np.arange(spec.period, dtype=np.float64)
    if spec.kind == "sine":
        return 0.5 + 0.5 * np.sin(2.0 * np.pi * t / spec.period)
    if spec.kind == "square":
        return np.where(t < spec.period / 2.0, 1.0, 0.0)
    if spec.kind == "sawtooth":
        return t / (spec.period - 1)
    column = load_csv_column(spec.csv_path, spec.column)
    if column.size < spec.period:
        raise IngestionError(
            f"{spec.csv_path}: column {spec.column!r} has {column.size} rows, need {spec.period}"
        )
    return column[: spec.period]


def build_periodic_stream(spec: StreamSpec, rng) -> tuple[np.ndarray, int]:
    """Tile one base cycle, crop, jitter, clamp to the cycle's value range."""
    if spec.source != "synthetic_waveform":
        raise ValueError("build_periodic_stream only handles synthetic specs")
    base = _base_cycle(spec)
    repeats = spec.repeats if spec.repeats is not None else -(-spec.length // spec.period)
    stream = np.tile(base, repeats)[: spec.length].copy()
    if spec.jitter > 0:
        gen = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
        stream += gen.uniform(-spec.jitter, spec.jitter, size=stream.size)
        stream = np.clip(stream, base.min(), base.max())
    return stream, spec.period


def prepare_stream(spec: StreamSpec, rng) -> tuple[np.ndarray, Optional[int]]:
    """Evaluation stream plus its true period when known."""
    if spec.source == "csv_column":
        return load_csv_column(spec.csv_path, spec.column), spec.period
    return build_periodic_stream(spec, rng)


def _stream_and_detection(spec: StreamSpec, config: ExperimentConfig):
    stream_rng = np.random.default_rng(derive_seed(config.base_seed, "stream", 0.0, 0, 0))
    raw, t_true = prepare_stream(spec, stream_rng)
    unit = normalize(raw)
    det = config.detection if config.detection is not None else default_detection_config(unit.size)
    return raw, unit, t_true, det


def run_detection_trials(spec: StreamSpec, config: ExperimentConfig) -> list[TrialReport]:
    """Period-detection accuracy sweep over every (epsilon, window, trial).

    Detection failures count as incorrect trials; the sweep never aborts.
    """
    _, unit, t_true, det = _stream_and_detection(spec, config)
    reports = []
    for eps in config.epsilons:
        for w in config.windows:
            budget = split_budget(eps, w)
            for trial in range(config.trials):
                rng = np.random.default_rng(derive_seed(config.base_seed, "cpr", eps, w, trial))
                started = time.perf_counter()
                privatized = sw_perturb_series(unit, budget, rng)
                try:
                    t_hat = detect_period(privatized, det)
                except PeriodDetectionError:
                    t_hat = None
                elapsed_ms = (time.perf_counter() - started) * 1e3
                correct = None
                if t_true is not None:
                    correct = t_hat is not None and abs(t_hat - t_true) <= config.tol_t
                reports.append(
                    TrialReport(
                        stream=spec.label,
                        method="cpr",
                        epsilon=eps,
                        w=w,
                        trial=trial,
                        t_hat=t_hat,
                        detected_correctly=correct,
                        cosine_distance=None,
                        wall_time_ms=elapsed_ms,
                    )
                )
    return reports


def _run_method(method, raw, unit, eps, w, config: ExperimentConfig, det, rng):
    """One reconstruction; returns (series, t_hat)."""
    if method == "cpr":
        budget = split_budget(eps, w)
        params = sw_params(budget.eps0)
        privatized = sw_perturb_series(unit, budget, rng)
        try:
            return cpr_recover(privatized, params, det, config.em)
        except PeriodDetectionError:
            # Nothing periodic found: degrade to the period-1 recovery (a
            # single decoded level tiled out) so the trial still yields a
            # reconstruction and a distance.
            template = reconstruct_template(phase_groups(privatized, 1), params, config.em)
            return tile_crop(template, privatized.size), None
    if method == "sw":
        return baseline_sw_direct(raw, eps, w, rng), None
    if method == "sw_moving":
        return baseline_sw_moving(raw, eps, w, config.baseline, rng), None
    if method == "sw_filter":
        return baseline_sw_filter(raw, eps, w, config.baseline, rng), None
    if method == "laplace":
        return baseline_laplace_smooth(raw, eps, w, config.baseline, rng), None
    if method == "lbd":
        return baseline_lbd(raw, eps, w, config.baseline, rng), None
    raise ValueError(f"unknown method {method!r}")


def run_reconstruction_sweep(spec: StreamSpec, config: ExperimentConfig) -> list[TrialReport]:
    """Reconstruction-error sweep at the first configured window size.

    Every method is resampled onto the stream's own length before the
    cosine distance against the normalized truth is taken.
    """
    raw, unit, t_true, det = _stream_and_detection(spec, config)
    w = config.windows[0]
    n = unit.size
    truth = resample_linear(unit, n)
    reports = []
    for method in config.methods:
        for eps in config.epsilons:
            for trial in range(config.trials):
                rng = np.random.default_rng(derive_seed(config.base_seed, method, eps, w, trial))
                started = time.perf_counter()
                recon, t_hat = _run_method(method, raw, unit, eps, w, config, det, rng)
                distance = cosine_distance(resample_linear(recon, n), truth)
                elapsed_ms = (time.perf_counter() - started) * 1e3
                correct = None
                if method == "cpr" and t_true is not None:
                    correct = t_hat is not None and abs(t_hat - t_true) <= config.tol_t
                reports.append(
                    TrialReport(
                        stream=spec.label,
                        method=method,
                        epsilon=eps,
                        w=w,
                        trial=trial,
                        t_hat=t_hat,
                        detected_correctly=correct,
                        cosine_distance=distance,
                        wall_time_ms=elapsed_ms,
                    )
                )
    return reports


RAW_HEADER = ("stream", "method", "epsilon", "w", "trial", "t_hat", "detected_correctly", "cosine_distance")


def _sorted_reports(reports: Sequence[TrialReport]) -> list[TrialReport]:
    return sorted(reports, key=lambda r: (r.stream, r.method, r.epsilon, r.w, r.trial))


def emit_report(reports: Sequence[TrialReport], out_path, mode: str = "raw") -> Path:
    """Write reports as CSV: one row per trial (``raw``), a detection
    accuracy table (``accuracy_table``) or a mean-distance table
    (``distance_table``)."""
    if not reports:
        raise ValueError("no reports to emit")
    rows = _sorted_reports(reports)
    out_path = Path(out_path)
    epsilons = sorted({r.epsilon for r in rows})
    with open(out_path, "w", newline="\n") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        if mode == "raw":
            writer.writerow(RAW_HEADER)
            for r in rows:
                writer.writerow(
                    [
                        r.stream,
                        r.method,
                        repr(r.epsilon),
                        r.w,
                        r.trial,
                        "" if r.t_hat is None else r.t_hat,
                        "" if r.detected_correctly is None else str(r.detected_correctly).lower(),
                        "" if r.cosine_distance is None else repr(r.cosine_distance),
                    ]
                )
        elif mode == "accuracy_table":
            writer.writerow(["stream", "w"] + [f"eps={e:g}" for e in epsilons])
            keys = sorted({(r.stream, r.w) for r in rows})
            for stream, w in keys:
                cells = []
                for eps in epsilons:
                    bucket = [r for r in rows if r.stream == stream and r.w == w and r.epsilon == eps]
                    hits = sum(1 for r in bucket if r.detected_correctly)
                    cells.append(str(round(100.0 * hits / len(bucket))) if bucket else "")
                writer.writerow([stream, w] + cells)
        elif mode == "distance_table":
            writer.writerow(["method"] + [f"eps={e:g}" for e in epsilons])
            for method in sorted({r.method for r in rows}):
                cells = []
                for eps in epsilons:
                    dists = [
                        r.cosine_distance
                        for r in rows
                        if r.method == method and r.epsilon == eps and r.cosine_distance is not None
                    ]
                    cells.append(f"{float(np.mean(dists)):.4f}" if dists else "")
                writer.writerow([method] + cells)
        else:
            raise ValueError(f"unknown report mode {mode!r}")
    return out_path


def _section(data: dict, key: str) -> dict:
    value = data.get(key) or {}
    if not isinstance(value, dict):
        raise ValueError(f"config section {key!r} must be a mapping")
    return value


def load_experiment_config(path) -> tuple[StreamSpec, ExperimentConfig]:
    """Parse a YAML config file into (StreamSpec, ExperimentConfig).

    Top-level keys mirror ExperimentConfig fields; ``stream``,
    ``detection``, ``em`` and ``baseline`` are nested sections.  A missing
    detection section means scale/period defaults derived from the stream
    length at run time.
    """
    try:
        with open(path) as handle:
            data = yaml.safe_load(handle)
    except OSError as exc:
        raise IngestionError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise IngestionError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise IngestionError(f"{path}: config must be a mapping")

    known = {"stream", "detection", "em", "baseline", "epsilons", "windows", "trials",
             "methods", "base_seed", "tol_t"}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")

    spec = StreamSpec(**_section(data, "stream"))
    detection_section = _section(data, "detection")
    detection = DetectionConfig(**detection_section) if detection_section else None
    em = EmConfig(**_section(data, "em")) if _section(data, "em") else EmConfig()
    baseline = BaselineConfig(**_section(data, "baseline")) if _section(data, "baseline") else BaselineConfig()

    missing = [key for key in ("epsilons", "windows", "trials") if key not in data]
    if missing:
        raise ValueError(f"config is missing required keys: {missing}")
    config = ExperimentConfig(
        epsilons=data["epsilons"],
        windows=data["windows"],
        trials=data["trials"],
        methods=tuple(data.get("methods", METHODS)),
        base_seed=int(data.get("base_seed", 0)),
        tol_t=int(data.get("tol_t", 0)),
        detection=detection,
        em=em,
        baseline=baseline,
    )
    return spec, config


def run_experiment(
    spec: StreamSpec,
    config: ExperimentConfig,
    outdir,
    sweeps: Sequence[str] = ("detection", "reconstruction"),
) -> dict[str, Path]:
    """Run the requested sweeps and write their raw + table CSVs."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    if "detection" in sweeps:
        reports = run_detection_trials(spec, config)
        written["detection_raw"] = emit_report(reports, outdir / "detection_raw.csv", "raw")
        written["detection_accuracy"] = emit_report(
            reports, outdir / "detection_accuracy.csv", "accuracy_table"
        )
    if "reconstruction" in sweeps:
        reports = run_reconstruction_sweep(spec, config)
        written["reconstruction_raw"] = emit_report(reports, outdir / "reconstruction_raw.csv", "raw")
        written["reconstruction_distance"] = emit_report(
            reports, outdir / "reconstruction_distance.csv", "distance_table"
        )
    return written
